#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>

#include "nez/error.hpp"
#include "nez/grammar.hpp"

namespace nez {

struct SourceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Line/column (both 1-based) of a byte offset; \r\n counts as one newline.
SourceSpan locate(std::string_view text, std::size_t start, std::size_t end);

class SyntaxError : public GrammarError {
public:
    SyntaxError(SourceSpan span, std::set<std::string> expected, const std::string& message);

    const SourceSpan& span() const noexcept { return span_; }
    const std::set<std::string>& expected() const noexcept { return expected_; }

private:
    SourceSpan span_;
    std::set<std::string> expected_;
};

/// Parses `.nez` grammar text. The first production is the start symbol.
Grammar parse_grammar(std::string_view text);

/// Parses a single parsing expression (no productions).
ExprPtr parse_expression(std::string_view text);

/// Canonical text: one `Name = expr` line per production, start production
/// first, parentheses only where operator precedence requires them.
std::string format_grammar(const Grammar& g);
std::string format_expression(const Expr& e);

/// Quotes bytes as a grammar literal, e.g. "a'b" -> 'a\'b'.
std::string quote_literal(std::string_view bytes, char quote = '\'');

/// Character class text such as [0-9A-Z_].
std::string format_class(const CharSet& set);

} // namespace nez
