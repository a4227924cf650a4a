#include "nez/expression.hpp"

#include <array>

namespace nez {

std::string_view op_name(Op op) noexcept
{
    static constexpr std::array<std::string_view, 27> names{
        "empty",   "char",   "class",  "any",    "nonterminal", "sequence",     "choice",
        "star",    "plus",   "option", "and",    "not",         "new",          "leftfold",
        "link",    "tag",    "replace", "symbol", "exists",     "exists-value", "match",
        "is",      "isa",    "block",  "local",  "if",          "on",
    };
    return names[static_cast<std::size_t>(op)];
}

bool Expr::is_fail() const noexcept
{
    return op == Op::Not && kids.size() == 1 && kids[0]->op == Op::Empty;
}

bool operator==(const Expr& a, const Expr& b)
{
    if (&a == &b)
        return true;
    if (a.op != b.op || a.byte != b.byte || a.polarity != b.polarity || a.set != b.set ||
        a.name != b.name || a.label != b.label || a.text != b.text || a.kids.size() != b.kids.size())
        return false;
    for (std::size_t i = 0; i < a.kids.size(); ++i)
        if (!(*a.kids[i] == *b.kids[i]))
            return false;
    return true;
}

bool equal(const ExprPtr& a, const ExprPtr& b)
{
    if (!a || !b)
        return a == b;
    return *a == *b;
}

namespace {

std::shared_ptr<Expr> make(Op op)
{
    auto e = std::make_shared<Expr>();
    e->op = op;
    return e;
}

ExprPtr unary(Op op, ExprPtr kid)
{
    auto e = make(op);
    e->kids.push_back(std::move(kid));
    return e;
}

ExprPtr named(Op op, std::string name)
{
    auto e = make(op);
    e->name = std::move(name);
    return e;
}

} // namespace

namespace pe {

ExprPtr empty()
{
    static const ExprPtr e = make(Op::Empty);
    return e;
}

ExprPtr fail() { return not_(empty()); }

ExprPtr chr(std::uint8_t c)
{
    auto e = make(Op::Char);
    e->byte = c;
    return e;
}

ExprPtr cls(const CharSet& set)
{
    auto e = make(Op::Class);
    e->set = set;
    return e;
}

ExprPtr range(std::uint8_t lo, std::uint8_t hi)
{
    CharSet s;
    for (unsigned c = lo; c <= hi; ++c)
        s.set(c);
    return cls(s);
}

ExprPtr any() { return make(Op::Any); }

ExprPtr lit(std::string_view bytes)
{
    std::vector<ExprPtr> items;
    items.reserve(bytes.size());
    for (char c : bytes)
        items.push_back(chr(static_cast<std::uint8_t>(c)));
    return seq(std::move(items));
}

ExprPtr ref(std::string name) { return named(Op::NonTerminal, std::move(name)); }

ExprPtr seq(std::vector<ExprPtr> items)
{
    std::vector<ExprPtr> flat;
    flat.reserve(items.size());
    for (auto& item : items) {
        if (item->op == Op::Empty)
            continue;
        if (item->op == Op::Sequence)
            flat.insert(flat.end(), item->kids.begin(), item->kids.end());
        else
            flat.push_back(std::move(item));
    }
    if (flat.empty())
        return empty();
    if (flat.size() == 1)
        return flat.front();
    auto e = make(Op::Sequence);
    e->kids = std::move(flat);
    return e;
}

ExprPtr choice(std::vector<ExprPtr> items)
{
    std::vector<ExprPtr> flat;
    flat.reserve(items.size());
    for (auto& item : items) {
        if (item->op == Op::Choice)
            flat.insert(flat.end(), item->kids.begin(), item->kids.end());
        else
            flat.push_back(std::move(item));
    }
    if (flat.empty())
        return fail();
    if (flat.size() == 1)
        return flat.front();
    auto e = make(Op::Choice);
    e->kids = std::move(flat);
    return e;
}

ExprPtr star(ExprPtr e) { return unary(Op::Repetition, std::move(e)); }
ExprPtr plus(ExprPtr e) { return unary(Op::OneOrMore, std::move(e)); }
ExprPtr opt(ExprPtr e) { return unary(Op::Option, std::move(e)); }
ExprPtr and_(ExprPtr e) { return unary(Op::And, std::move(e)); }
ExprPtr not_(ExprPtr e) { return unary(Op::Not, std::move(e)); }
ExprPtr node(ExprPtr e) { return unary(Op::New, std::move(e)); }

ExprPtr fold(ExprPtr body, std::optional<std::string> label)
{
    auto e = make(Op::LeftFold);
    e->label = std::move(label);
    e->kids.push_back(std::move(body));
    return e;
}

ExprPtr link(ExprPtr body, std::optional<std::string> label)
{
    auto e = make(Op::Link);
    e->label = std::move(label);
    e->kids.push_back(std::move(body));
    return e;
}

ExprPtr tag(std::string name) { return named(Op::Tag, std::move(name)); }

ExprPtr replace(std::string text)
{
    auto e = make(Op::Replace);
    e->text = std::move(text);
    return e;
}

ExprPtr symbol(std::string table, std::string callee)
{
    auto e = make(Op::SymbolDef);
    e->name = std::move(table);
    if (callee != e->name)
        e->text = std::move(callee);
    return e;
}

ExprPtr exists(std::string table) { return named(Op::Exists, std::move(table)); }

ExprPtr exists(std::string table, std::string value)
{
    auto e = make(Op::ExistsValue);
    e->name = std::move(table);
    e->text = std::move(value);
    return e;
}

ExprPtr match(std::string table) { return named(Op::Match, std::move(table)); }
ExprPtr is(std::string table, std::string callee)
{
    auto e = make(Op::Is);
    e->name = std::move(table);
    if (callee != e->name)
        e->text = std::move(callee);
    return e;
}

ExprPtr isa(std::string table, std::string callee)
{
    auto e = make(Op::Isa);
    e->name = std::move(table);
    if (callee != e->name)
        e->text = std::move(callee);
    return e;
}
ExprPtr block(ExprPtr e) { return unary(Op::Block, std::move(e)); }

ExprPtr local(std::string table, ExprPtr body)
{
    auto e = make(Op::Local);
    e->name = std::move(table);
    e->kids.push_back(std::move(body));
    return e;
}

ExprPtr if_(std::string cond, bool polarity)
{
    auto e = make(Op::IfCond);
    e->name = std::move(cond);
    e->polarity = polarity;
    return e;
}

ExprPtr on(std::string cond, bool polarity, ExprPtr body)
{
    auto e = make(Op::OnCond);
    e->name = std::move(cond);
    e->polarity = polarity;
    e->kids.push_back(std::move(body));
    return e;
}

} // namespace pe

ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids)
{
    if (e.op == Op::Sequence)
        return pe::seq(std::move(kids));
    if (e.op == Op::Choice)
        return pe::choice(std::move(kids));
    auto copy = std::make_shared<Expr>(e);
    copy->kids = std::move(kids);
    return copy;
}

ExprPtr transform(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f)
{
    if (e->kids.empty())
        return f(e);
    std::vector<ExprPtr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const auto& k : e->kids) {
        kids.push_back(transform(k, f));
        changed = changed || kids.back() != k;
    }
    return f(changed ? with_kids(*e, std::move(kids)) : e);
}

void visit(const Expr& e, const std::function<void(const Expr&)>& f)
{
    f(e);
    for (const auto& k : e.kids)
        visit(*k, f);
}

bool references_production(Op op) noexcept
{
    switch (op) {
    case Op::NonTerminal:
    case Op::SymbolDef:
    case Op::Exists:
    case Op::ExistsValue:
    case Op::Match:
    case Op::Is:
    case Op::Isa:
    case Op::Local:
        return true;
    default:
        return false;
    }
}

bool calls_production(Op op) noexcept
{
    return op == Op::NonTerminal || op == Op::SymbolDef || op == Op::Is || op == Op::Isa;
}

bool is_ast_op(Op op) noexcept
{
    switch (op) {
    case Op::New:
    case Op::LeftFold:
    case Op::Link:
    case Op::Tag:
    case Op::Replace:
        return true;
    default:
        return false;
    }
}

bool is_symbol_op(Op op) noexcept
{
    switch (op) {
    case Op::SymbolDef:
    case Op::Exists:
    case Op::ExistsValue:
    case Op::Match:
    case Op::Is:
    case Op::Isa:
    case Op::Block:
    case Op::Local:
        return true;
    default:
        return false;
    }
}

bool is_condition_op(Op op) noexcept { return op == Op::IfCond || op == Op::OnCond; }

} // namespace nez
