#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nez/expression.hpp"

namespace nez {

struct Production {
    std::string name;
    ExprPtr body;
};

/// Named productions plus a start symbol. The input alphabet is fixed to
/// bytes 0..255; the tag set is derived from the bodies.
class Grammar {
public:
    /// Appends a production. The first production added becomes the start
    /// symbol unless `set_start` says otherwise.
    void add(std::string name, ExprPtr body);

    /// Replaces the body of an existing production.
    void set_body(std::string_view name, ExprPtr body);

    void set_start(std::string name);

    const std::string& start() const noexcept { return start_; }
    const std::vector<Production>& productions() const noexcept { return productions_; }
    std::size_t size() const noexcept { return productions_.size(); }
    bool empty() const noexcept { return productions_.empty(); }

    bool contains(std::string_view name) const;
    const Expr* find(std::string_view name) const;
    const ExprPtr& body(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    std::set<std::string> tags() const;

    friend bool operator==(const Grammar& a, const Grammar& b);
    friend bool operator!=(const Grammar& a, const Grammar& b) { return !(a == b); }

private:
    std::vector<Production> productions_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string start_;
};

enum class ErrorKind { UndefinedNonterminal, LeftRecursion, EmptyRepetitionBody };

std::string_view to_string(ErrorKind kind) noexcept;

struct ValidationError {
    std::string production;
    ErrorKind kind;
    std::string message;
};

struct ValidationWarning {
    std::string production;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationError> errors;
    std::vector<ValidationWarning> warnings;

    bool ok() const noexcept { return errors.empty(); }
    std::string to_string() const;
};

ValidationReport validate(const Grammar& g);

/// Throws GrammarError carrying the report text if `g` does not validate.
void require_valid(const Grammar& g);

/// Per-production facts shared by validation, desugaring and compilation.
class GrammarFacts {
public:
    explicit GrammarFacts(const Grammar& g);

    /// True if `e` may succeed without consuming input.
    bool nullable(const Expr& e) const;
    bool nullable(std::string_view production) const;

private:
    std::unordered_map<std::string, bool> nullable_;
};

enum class DesugarMode {
    /// Option and OneOrMore removed; Repetition stays a native loop.
    Native,
    /// Additionally every Repetition becomes a fresh right-recursive production.
    Full,
};

/// e? becomes e / '', e+ becomes e e*, and in Full mode e* becomes A' with
/// A' = e A' / ''. Throws EmptyRepetitionBody for loops whose body may succeed
/// without consuming input.
Grammar desugar(const Grammar& g, DesugarMode mode = DesugarMode::Native);

/// Removes every AST construction operator; recognition is unchanged.
Grammar strip_ast_ops(const Grammar& g);
ExprPtr strip_ast_ops(const ExprPtr& e);

/// Counts how many times each production is referenced from production bodies.
std::unordered_map<std::string, std::size_t> reference_counts(const Grammar& g);

/// Productions reachable from the start symbol, in discovery order.
std::vector<std::string> reachable(const Grammar& g);

/// Closure of a per-expression predicate over nonterminal references: a
/// production has the property if its body contains a node for which `local`
/// holds, or references a production that has it.
std::unordered_map<std::string, bool> transitive_property(const Grammar& g,
                                                           bool (*local)(const Expr&));

} // namespace nez
