#include "nez/grammar.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "nez/error.hpp"

namespace nez {

// ---------------------------------------------------------------------------
// Grammar

void Grammar::add(std::string name, ExprPtr body)
{
    if (index_.count(name))
        throw DuplicateProduction("duplicate production '" + name + "'");
    if (productions_.empty() && start_.empty())
        start_ = name;
    index_.emplace(name, productions_.size());
    productions_.push_back({std::move(name), std::move(body)});
}

void Grammar::set_body(std::string_view name, ExprPtr body)
{
    productions_.at(index_of(name)).body = std::move(body);
}

void Grammar::set_start(std::string name)
{
    if (!contains(name))
        throw GrammarError("start production '" + name + "' is not defined");
    start_ = std::move(name);
}

bool Grammar::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const Expr* Grammar::find(std::string_view name) const
{
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : productions_[it->second].body.get();
}

const ExprPtr& Grammar::body(std::string_view name) const { return productions_[index_of(name)].body; }

std::size_t Grammar::index_of(std::string_view name) const
{
    auto it = index_.find(std::string(name));
    if (it == index_.end())
        throw GrammarError("undefined production '" + std::string(name) + "'");
    return it->second;
}

std::set<std::string> Grammar::tags() const
{
    std::set<std::string> out;
    for (const auto& p : productions_)
        visit(*p.body, [&](const Expr& e) {
            if (e.op == Op::Tag)
                out.insert(e.name);
        });
    return out;
}

bool operator==(const Grammar& a, const Grammar& b)
{
    if (a.start_ != b.start_ || a.productions_.size() != b.productions_.size())
        return false;
    for (std::size_t i = 0; i < a.productions_.size(); ++i) {
        const auto& pa = a.productions_[i];
        const auto& pb = b.productions_[i];
        if (pa.name != pb.name || !equal(pa.body, pb.body))
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Facts

GrammarFacts::GrammarFacts(const Grammar& g)
{
    for (const auto& p : g.productions())
        nullable_[p.name] = false;
    // Least fixpoint; nullability only ever flips false -> true.
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : g.productions()) {
            if (nullable_[p.name])
                continue;
            if (nullable(*p.body)) {
                nullable_[p.name] = true;
                changed = true;
            }
        }
    }
}

bool GrammarFacts::nullable(std::string_view production) const
{
    auto it = nullable_.find(std::string(production));
    return it != nullable_.end() && it->second;
}

bool GrammarFacts::nullable(const Expr& e) const
{
    switch (e.op) {
    case Op::Char:
    case Op::Class:
    case Op::Any:
        return false;
    case Op::NonTerminal:
    case Op::SymbolDef:
    case Op::Is:
    case Op::Isa:
        return nullable(e.callee());
    case Op::Sequence:
        return std::all_of(e.kids.begin(), e.kids.end(), [&](const ExprPtr& k) { return nullable(*k); });
    case Op::Choice:
        return std::any_of(e.kids.begin(), e.kids.end(), [&](const ExprPtr& k) { return nullable(*k); });
    case Op::OneOrMore:
    case Op::New:
    case Op::LeftFold:
    case Op::Link:
    case Op::Block:
    case Op::Local:
    case Op::OnCond:
        return nullable(e.operand());
    case Op::Not:
        // !'' never succeeds, so it cannot succeed without consuming either.
        return !e.is_fail();
    default:
        // Empty, loops, options, predicates, tags, replace, symbol tests,
        // match (the stored symbol may be empty), conditions.
        return true;
    }
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::UndefinedNonterminal:
        return "undefined-nonterminal";
    case ErrorKind::LeftRecursion:
        return "left-recursion";
    case ErrorKind::EmptyRepetitionBody:
        return "empty-repetition-body";
    }
    return "?";
}

std::string ValidationReport::to_string() const
{
    std::ostringstream out;
    for (const auto& e : errors)
        out << "error: " << e.production << ": " << nez::to_string(e.kind) << ": " << e.message << '\n';
    for (const auto& w : warnings)
        out << "warning: " << w.production << ": " << w.message << '\n';
    return out.str();
}

namespace {

void leftmost_calls(const Expr& e, const GrammarFacts& facts, std::set<std::string>& out)
{
    switch (e.op) {
    case Op::NonTerminal:
    case Op::SymbolDef:
    case Op::Is:
    case Op::Isa:
        out.insert(e.callee());
        return;
    case Op::Sequence:
        for (const auto& k : e.kids) {
            leftmost_calls(*k, facts, out);
            if (!facts.nullable(*k))
                return;
        }
        return;
    default:
        for (const auto& k : e.kids)
            leftmost_calls(*k, facts, out);
    }
}

/// Tarjan's strongly connected components over the left-call graph.
class LeftRecursionFinder {
public:
    LeftRecursionFinder(const Grammar& g, const GrammarFacts& facts) : g_(g)
    {
        for (const auto& p : g.productions()) {
            std::set<std::string> calls;
            leftmost_calls(*p.body, facts, calls);
            auto& adj = edges_[p.name];
            for (const auto& c : calls)
                if (g.contains(c))
                    adj.push_back(c);
        }
    }

    std::vector<std::vector<std::string>> cycles()
    {
        for (const auto& p : g_.productions())
            if (!index_.count(p.name))
                strongconnect(p.name);
        return std::move(cycles_);
    }

private:
    void strongconnect(const std::string& v)
    {
        index_[v] = low_[v] = counter_++;
        stack_.push_back(v);
        on_stack_.insert(v);
        for (const auto& w : edges_[v]) {
            if (!index_.count(w)) {
                strongconnect(w);
                low_[v] = std::min(low_[v], low_[w]);
            } else if (on_stack_.count(w)) {
                low_[v] = std::min(low_[v], index_[w]);
            }
        }
        if (low_[v] != index_[v])
            return;
        std::vector<std::string> scc;
        std::string w;
        do {
            w = stack_.back();
            stack_.pop_back();
            on_stack_.erase(w);
            scc.push_back(w);
        } while (w != v);
        const auto& adj = edges_[v];
        bool self_loop = std::find(adj.begin(), adj.end(), v) != adj.end();
        if (scc.size() > 1 || self_loop) {
            std::sort(scc.begin(), scc.end(),
                      [&](const auto& a, const auto& b) { return g_.index_of(a) < g_.index_of(b); });
            cycles_.push_back(std::move(scc));
        }
    }

    const Grammar& g_;
    std::unordered_map<std::string, std::vector<std::string>> edges_;
    std::unordered_map<std::string, int> index_, low_;
    std::vector<std::string> stack_;
    std::set<std::string> on_stack_;
    std::vector<std::vector<std::string>> cycles_;
    int counter_ = 0;
};

} // namespace

ValidationReport validate(const Grammar& g)
{
    ValidationReport report;
    if (g.empty()) {
        report.errors.push_back({"", ErrorKind::UndefinedNonterminal, "grammar has no productions"});
        return report;
    }

    for (const auto& p : g.productions()) {
        std::set<std::string> seen;
        visit(*p.body, [&](const Expr& e) {
            for (const auto* name : {&e.name, &e.callee()}) {
                if (references_production(e.op) && !g.contains(*name) && seen.insert(*name).second)
                    report.errors.push_back({p.name, ErrorKind::UndefinedNonterminal,
                                             "reference to undefined nonterminal '" + *name + "'"});
            }
        });
    }

    GrammarFacts facts(g);
    for (auto& cycle : LeftRecursionFinder(g, facts).cycles()) {
        std::string path;
        for (const auto& name : cycle)
            path += name + " -> ";
        path += cycle.front();
        report.errors.push_back({cycle.front(), ErrorKind::LeftRecursion, "left-recursive cycle " + path});
    }

    for (const auto& p : g.productions()) {
        visit(*p.body, [&](const Expr& e) {
            if ((e.op == Op::Repetition || e.op == Op::OneOrMore) && facts.nullable(e.operand()))
                report.errors.push_back({p.name, ErrorKind::EmptyRepetitionBody,
                                         "repetition body may succeed without consuming input"});
        });
    }

    if (report.errors.empty()) {
        auto live = reachable(g);
        std::set<std::string> live_set(live.begin(), live.end());
        for (const auto& p : g.productions())
            if (!live_set.count(p.name))
                report.warnings.push_back({p.name, "unreachable from start production '" + g.start() + "'"});
    }
    return report;
}

void require_valid(const Grammar& g)
{
    auto report = validate(g);
    if (!report.ok())
        throw GrammarError(report.to_string());
}

// ---------------------------------------------------------------------------
// Transformations

namespace {

std::string fresh_name(const Grammar& g, const std::set<std::string>& taken, const std::string& base)
{
    for (std::size_t n = 0;; ++n) {
        std::string candidate = base + std::to_string(n);
        if (!g.contains(candidate) && !taken.count(candidate))
            return candidate;
    }
}

} // namespace

Grammar desugar(const Grammar& g, DesugarMode mode)
{
    GrammarFacts facts(g);
    Grammar out;
    std::vector<Production> extra;
    std::set<std::string> taken;

    for (const auto& p : g.productions())
        visit(*p.body, [&](const Expr& e) {
            if ((e.op == Op::Repetition || e.op == Op::OneOrMore) && facts.nullable(e.operand()))
                throw EmptyRepetitionBody("production '" + p.name +
                                          "': repetition body may succeed without consuming input");
        });

    for (const auto& p : g.productions()) {
        auto body = transform(p.body, [&](const ExprPtr& e) -> ExprPtr {
            switch (e->op) {
            case Op::Option:
                return pe::choice({e->kids[0], pe::empty()});
            case Op::OneOrMore:
            case Op::Repetition: {
                ExprPtr loop;
                if (mode == DesugarMode::Full) {
                    auto name = fresh_name(g, taken, p.name + "__rep");
                    taken.insert(name);
                    extra.push_back({name, pe::choice({pe::seq({e->kids[0], pe::ref(name)}), pe::empty()})});
                    loop = pe::ref(name);
                } else {
                    loop = e->op == Op::Repetition ? e : pe::star(e->kids[0]);
                }
                return e->op == Op::OneOrMore ? pe::seq({e->kids[0], loop}) : loop;
            }
            default:
                return e;
            }
        });
        out.add(p.name, std::move(body));
    }
    for (auto& p : extra)
        out.add(std::move(p.name), std::move(p.body));
    out.set_start(g.start());
    return out;
}

ExprPtr strip_ast_ops(const ExprPtr& e)
{
    return transform(e, [](const ExprPtr& x) -> ExprPtr {
        switch (x->op) {
        case Op::New:
        case Op::LeftFold:
        case Op::Link:
            return x->kids[0];
        case Op::Tag:
        case Op::Replace:
            return pe::empty();
        default:
            return x;
        }
    });
}

Grammar strip_ast_ops(const Grammar& g)
{
    Grammar out;
    for (const auto& p : g.productions())
        out.add(p.name, strip_ast_ops(p.body));
    if (!g.empty())
        out.set_start(g.start());
    return out;
}

std::unordered_map<std::string, std::size_t> reference_counts(const Grammar& g)
{
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& p : g.productions())
        visit(*p.body, [&](const Expr& e) {
            if (calls_production(e.op))
                ++counts[e.callee()];
        });
    return counts;
}

std::vector<std::string> reachable(const Grammar& g)
{
    std::vector<std::string> order;
    if (g.empty())
        return order;
    std::set<std::string> seen{g.start()};
    order.push_back(g.start());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Expr* body = g.find(order[i]);
        if (!body)
            continue;
        visit(*body, [&](const Expr& e) {
            if (calls_production(e.op) && g.contains(e.callee()) && seen.insert(e.callee()).second)
                order.push_back(e.callee());
        });
    }
    return order;
}

std::unordered_map<std::string, bool> transitive_property(const Grammar& g, bool (*local)(const Expr&))
{
    std::unordered_map<std::string, bool> has;
    std::unordered_map<std::string, std::vector<std::string>> callers;
    std::vector<std::string> work;
    for (const auto& p : g.productions()) {
        bool direct = false;
        visit(*p.body, [&](const Expr& e) {
            direct = direct || local(e);
            if (calls_production(e.op))
                callers[e.callee()].push_back(p.name);
        });
        has[p.name] = direct;
        if (direct)
            work.push_back(p.name);
    }
    while (!work.empty()) {
        auto name = std::move(work.back());
        work.pop_back();
        for (const auto& caller : callers[name]) {
            if (!has[caller]) {
                has[caller] = true;
                work.push_back(caller);
            }
        }
    }
    return has;
}

} // namespace nez
