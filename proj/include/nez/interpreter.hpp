#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "nez/grammar.hpp"
#include "nez/result.hpp"

namespace nez::interp {

struct Options {
    /// Overrides the grammar's start production.
    std::string start;
    /// Maximum evaluation steps; default_step_budget(|input|) when unset.
    std::optional<std::uint64_t> step_budget;
    /// Maximum nesting of evaluations, guarding the native stack.
    std::size_t depth_limit = 10000;
    /// Nonterminal calls and their outcome are written here when set.
    std::ostream* trace = nullptr;
};

/// Evaluates the grammar directly, following the operational semantics
/// rule by rule. Conditions are evaluated dynamically (all start false).
/// The grammar must be valid; throws StepBudgetExceeded when a budget runs
/// out and AstError subclasses when the tree operations are inconsistent.
ParseResult parse(const Grammar& g, std::string_view input, const Options& opts = {});

/// Recognition only: evaluates strip_ast_ops(g) with tree logging off.
ParseResult match(const Grammar& g, std::string_view input, const Options& opts = {});

} // namespace nez::interp
