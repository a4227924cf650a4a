#pragma once

#include <bitset>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nez {

using CharSet = std::bitset<256>;

enum class Op : std::uint8_t {
    // PEG
    Empty,
    Char,
    Class,
    Any,
    NonTerminal,
    Sequence,
    Choice,
    Repetition,
    OneOrMore,
    Option,
    And,
    Not,
    // AST construction
    New,
    LeftFold,
    Link,
    Tag,
    Replace,
    // symbol table
    SymbolDef,
    Exists,
    ExistsValue,
    Match,
    Is,
    Isa,
    Block,
    Local,
    // parsing conditions
    IfCond,
    OnCond,
};

std::string_view op_name(Op op) noexcept;

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// One node of a parsing expression. Nodes are immutable once built and are
/// shared freely between grammars; build them with the factories in `pe`.
///
/// Payload usage by operator:
///   Char                      byte
///   Class                     set
///   NonTerminal, SymbolDef, Exists, ExistsValue, Match, Is, Isa, Local
///                             name (a production name)
///   Tag                       name (tag name)
///   IfCond, OnCond            name (condition name) + polarity
///   LeftFold, Link            label (optional)
///   Replace, ExistsValue      text
///   SymbolDef, Is, Isa        text (optional callee: the production that is
///                             parsed when it differs from the table name)
///   everything with operands  kids
class Expr {
public:
    Op op = Op::Empty;
    std::uint8_t byte = 0;
    bool polarity = true;
    CharSet set;
    std::string name;
    std::optional<std::string> label;
    std::string text;
    std::vector<ExprPtr> kids;

    const Expr& operand() const { return *kids.front(); }

    /// Production evaluated by NonTerminal, SymbolDef, Is and Isa.
    const std::string& callee() const noexcept
    {
        bool own = op == Op::SymbolDef || op == Op::Is || op == Op::Isa;
        return own && !text.empty() ? text : name;
    }

    bool is_fail() const noexcept;
};

bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
bool equal(const ExprPtr& a, const ExprPtr& b);

/// Factories. `seq` and `choice` normalize: nested lists are flattened,
/// Empty is dropped from sequences, singletons collapse to their element.
namespace pe {

ExprPtr empty();
ExprPtr fail();  // !'' , the canonical always-failing expression
ExprPtr chr(std::uint8_t c);
ExprPtr cls(const CharSet& set);
ExprPtr range(std::uint8_t lo, std::uint8_t hi);
ExprPtr any();
ExprPtr lit(std::string_view bytes);
ExprPtr ref(std::string name);
ExprPtr seq(std::vector<ExprPtr> items);
ExprPtr choice(std::vector<ExprPtr> items);
ExprPtr star(ExprPtr e);
ExprPtr plus(ExprPtr e);
ExprPtr opt(ExprPtr e);
ExprPtr and_(ExprPtr e);
ExprPtr not_(ExprPtr e);
ExprPtr node(ExprPtr e);
ExprPtr fold(ExprPtr e, std::optional<std::string> label = std::nullopt);
ExprPtr link(ExprPtr e, std::optional<std::string> label = std::nullopt);
ExprPtr tag(std::string name);
ExprPtr replace(std::string text);
ExprPtr symbol(std::string table, std::string callee = {});
ExprPtr exists(std::string table);
ExprPtr exists(std::string table, std::string value);
ExprPtr match(std::string table);
ExprPtr is(std::string table, std::string callee = {});
ExprPtr isa(std::string table, std::string callee = {});
ExprPtr block(ExprPtr e);
ExprPtr local(std::string table, ExprPtr e);
ExprPtr if_(std::string cond, bool polarity = true);
ExprPtr on(std::string cond, bool polarity, ExprPtr e);

} // namespace pe

/// Rebuild `e` with new operands, keeping every other attribute. Sequences and
/// choices are renormalized.
ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids);

/// Bottom-up rewrite: `f` sees each node after its operands were rewritten and
/// returns a replacement (or the node itself).
ExprPtr transform(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f);

/// Pre-order visit of every node.
void visit(const Expr& e, const std::function<void(const Expr&)>& f);

/// Operators whose `name` refers to a production.
bool references_production(Op op) noexcept;
/// Operators that evaluate the production named by `callee()`.
bool calls_production(Op op) noexcept;
bool is_ast_op(Op op) noexcept;
bool is_symbol_op(Op op) noexcept;
bool is_condition_op(Op op) noexcept;

} // namespace nez
