#include "nez/conditions.hpp"

#include <algorithm>

namespace nez {

std::set<std::string> collect_conditions(const Grammar& g)
{
    std::set<std::string> out;
    for (const auto& p : g.productions())
        visit(*p.body, [&](const Expr& e) {
            if (is_condition_op(e.op))
                out.insert(e.name);
        });
    return out;
}

ConditionEliminator::ConditionEliminator(const Grammar& g) : g_(g)
{
    for (const auto& p : g.productions())
        deps_[p.name];
    // Dependency sets only grow, so iterate to the least fixpoint.
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : g.productions()) {
            auto d = free_conditions(*p.body);
            auto& cur = deps_[p.name];
            if (d.size() != cur.size()) {
                cur = std::move(d);
                changed = true;
            }
        }
    }
}

std::set<std::string> ConditionEliminator::free_conditions(const Expr& e) const
{
    std::set<std::string> out;
    switch (e.op) {
    case Op::IfCond:
        out.insert(e.name);
        return out;
    case Op::OnCond:
        out = free_conditions(e.operand());
        out.erase(e.name);
        return out;
    default:
        break;
    }
    if (calls_production(e.op)) {
        auto it = deps_.find(e.callee());
        if (it != deps_.end())
            out = it->second;
    }
    for (const auto& k : e.kids) {
        auto sub = free_conditions(*k);
        out.insert(sub.begin(), sub.end());
    }
    return out;
}

const std::set<std::string>& ConditionEliminator::dependencies(std::string_view name) const
{
    static const std::set<std::string> none;
    auto it = deps_.find(std::string(name));
    return it == deps_.end() ? none : it->second;
}

ConditionAssignment ConditionEliminator::restrict_to(std::string_view production, const ConditionAssignment& x) const
{
    ConditionAssignment r;
    for (const auto& c : dependencies(production)) {
        auto it = x.find(c);
        r[c] = it != x.end() && it->second;
    }
    return r;
}

std::string ConditionEliminator::instance_name(std::string_view production, const ConditionAssignment& x)
{
    auto r = restrict_to(production, x);
    auto key = std::make_pair(std::string(production), r);
    if (auto it = instance_index_.find(key); it != instance_index_.end())
        return instances_[it->second].name;

    std::string name(production);
    bool any_true = false;
    for (const auto& [c, v] : r) {
        if (v) {
            name += "__" + c;
            any_true = true;
        }
    }
    if (any_true && (g_.contains(name) || used_names_.count(name))) {
        std::string base = name;
        for (int n = 2; g_.contains(name) || used_names_.count(name); ++n)
            name = base + "_" + std::to_string(n);
    }
    used_names_.insert(name);
    instance_index_.emplace(std::move(key), instances_.size());
    instances_.push_back({std::string(production), std::move(r), name});
    return name;
}

ExprPtr ConditionEliminator::convert(const ExprPtr& e, const ConditionAssignment& x)
{
    switch (e->op) {
    case Op::NonTerminal:
        return pe::ref(instance_name(e->name, x));
    case Op::Exists:
    case Op::ExistsValue:
    case Op::Match:
    case Op::Local:
        // Table names must stay defined; the all-false instance keeps the
        // production's own name.
        instance_name(e->name, {});
        break;
    default:
        break;
    }
    switch (e->op) {
    case Op::SymbolDef:
        instance_name(e->name, {});
        return pe::symbol(e->name, instance_name(e->callee(), x));
    case Op::Is:
        instance_name(e->name, {});
        return pe::is(e->name, instance_name(e->callee(), x));
    case Op::Isa:
        instance_name(e->name, {});
        return pe::isa(e->name, instance_name(e->callee(), x));
    case Op::IfCond: {
        auto it = x.find(e->name);
        bool value = it != x.end() && it->second;
        return value == e->polarity ? pe::empty() : pe::fail();
    }
    case Op::OnCond: {
        auto inner = x;
        inner[e->name] = e->polarity;
        return convert(e->kids.front(), inner);
    }
    default:
        break;
    }
    if (e->kids.empty())
        return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    for (const auto& k : e->kids)
        kids.push_back(convert(k, x));
    return with_kids(*e, std::move(kids));
}

namespace {

ExprPtr rename_calls(const ExprPtr& e, const std::map<std::string, std::string>& renames)
{
    return transform(e, [&](const ExprPtr& n) -> ExprPtr {
        if (!calls_production(n->op))
            return n;
        auto it = renames.find(n->callee());
        if (it == renames.end())
            return n;
        switch (n->op) {
        case Op::NonTerminal:
            return pe::ref(it->second);
        case Op::SymbolDef:
            return pe::symbol(n->name, it->second);
        case Op::Is:
            return pe::is(n->name, it->second);
        default:
            return pe::isa(n->name, it->second);
        }
    });
}

} // namespace

Grammar ConditionEliminator::eliminate()
{
    if (collect_conditions(g_).empty())
        return g_;

    std::vector<ExprPtr> bodies;
    instance_name(g_.start(), {});
    for (std::size_t i = 0; i < instances_.size(); ++i) {
        // convert may append to instances_, so copy what we need first.
        auto production = instances_[i].production;
        auto assignment = instances_[i].assignment;
        bodies.push_back(simplify_constants(convert(g_.body(production), assignment)));
    }

    // Unify instances of the same production whose bodies became identical.
    // Renaming can make further bodies equal, hence the outer loop.
    std::vector<bool> alive(instances_.size(), true);
    for (bool changed = true; changed;) {
        changed = false;
        std::map<std::string, std::string> renames;
        for (std::size_t i = 0; i < instances_.size(); ++i) {
            if (!alive[i] || renames.count(instances_[i].name))
                continue;
            std::vector<std::size_t> group{i};
            for (std::size_t j = i + 1; j < instances_.size(); ++j)
                if (alive[j] && !renames.count(instances_[j].name) &&
                    instances_[j].production == instances_[i].production && equal(bodies[i], bodies[j]))
                    group.push_back(j);
            // The instance named after the production survives so that symbol
            // table names keep resolving.
            std::size_t keep = group.front();
            for (auto k : group)
                if (instances_[k].name == instances_[k].production)
                    keep = k;
            for (auto k : group) {
                if (k == keep)
                    continue;
                renames[instances_[k].name] = instances_[keep].name;
                alive[k] = false;
            }
        }
        if (renames.empty())
            break;
        changed = true;
        for (std::size_t i = 0; i < instances_.size(); ++i)
            if (alive[i])
                bodies[i] = rename_calls(bodies[i], renames);
    }

    Grammar out;
    for (std::size_t i = 0; i < instances_.size(); ++i)
        if (alive[i])
            out.add(instances_[i].name, bodies[i]);
    out.set_start(instances_.front().name);
    return out;
}

ExprPtr f_convert(const Grammar& g, const ExprPtr& e, const ConditionAssignment& x)
{
    ConditionEliminator el(g);
    return el.convert(e, x);
}

Grammar eliminate_conditions(const Grammar& g)
{
    ConditionEliminator el(g);
    return el.eliminate();
}

ExprPtr simplify_constants(const ExprPtr& e)
{
    return transform(e, [](const ExprPtr& n) -> ExprPtr {
        switch (n->op) {
        case Op::Sequence:
            for (const auto& k : n->kids)
                if (k->is_fail())
                    return pe::fail();
            return n;
        case Op::Choice: {
            std::vector<ExprPtr> alts;
            for (const auto& k : n->kids) {
                if (k->is_fail())
                    continue;
                alts.push_back(k);
                if (k->op == Op::Empty)
                    break;  // later alternatives are unreachable
            }
            if (alts.size() == n->kids.size())
                return n;
            return pe::choice(std::move(alts));
        }
        case Op::Not:
            if (n->operand().is_fail())
                return pe::empty();
            return n;
        case Op::And:
            if (n->operand().op == Op::Empty)
                return pe::empty();
            if (n->operand().is_fail())
                return pe::fail();
            return n;
        case Op::Repetition:
        case Op::Option:
            if (n->operand().is_fail())
                return pe::empty();
            return n;
        case Op::OneOrMore:
        case Op::New:
        case Op::LeftFold:
        case Op::Link:
        case Op::Block:
        case Op::Local:
        case Op::OnCond:
            if (n->operand().is_fail())
                return pe::fail();
            return n;
        default:
            return n;
        }
    });
}

bool ConditionStore::get(std::string_view name) const
{
    auto it = values_.find(name);
    return it != values_.end() && it->second;
}

bool ConditionStore::set(std::string_view name, bool value)
{
    auto it = values_.find(name);
    if (it == values_.end()) {
        values_.emplace(std::string(name), value);
        return false;
    }
    return std::exchange(it->second, value);
}

} // namespace nez
