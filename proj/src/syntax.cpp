#include "nez/syntax.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

namespace nez {

SourceSpan locate(std::string_view text, std::size_t start, std::size_t end)
{
    start = std::min(start, text.size());
    end = std::clamp(end, start, text.size());
    SourceSpan span{start, end, 1, 1};
    for (std::size_t i = 0; i < start; ++i) {
        if (text[i] == '\n') {
            ++span.line;
            span.column = 1;
        } else if (text[i] != '\r') {
            ++span.column;
        }
    }
    return span;
}

namespace {

std::string describe(const SourceSpan& span, const std::set<std::string>& expected, const std::string& message)
{
    std::string out = std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message;
    if (!expected.empty()) {
        out += ", expected {";
        bool first = true;
        for (const auto& e : expected) {
            out += first ? "" : ", ";
            out += e;
            first = false;
        }
        out += "}";
    }
    return out;
}

} // namespace

SyntaxError::SyntaxError(SourceSpan span, std::set<std::string> expected, const std::string& message)
    : GrammarError(describe(span, expected, message)), span_(span), expected_(std::move(expected))
{
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr int max_nesting = 256;

bool ident_start(char c) noexcept
{
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool ident_char(char c) noexcept { return ident_start(c) || (c >= '0' && c <= '9'); }

int hex_value(char c) noexcept
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

class GrammarReader {
public:
    explicit GrammarReader(std::string_view src) : src_(src) {}

    Grammar grammar()
    {
        Grammar g;
        skip();
        while (!eof()) {
            std::size_t at = pos_;
            if (!ident_start(peek()))
                fail({"production name"}, "unexpected character");
            auto name = identifier();
            skip();
            expect('=');
            skip();
            auto body = expression();
            skip();
            if (peek() == ';') {
                ++pos_;
                skip();
            }
            if (g.contains(name)) {
                auto span = locate(src_, at, at + name.size());
                throw DuplicateProduction(std::to_string(span.line) + ":" + std::to_string(span.column) +
                                          ": duplicate production '" + name + "'");
            }
            g.add(std::move(name), std::move(body));
            if (!eof() && !(ident_start(peek()) && defines_production(pos_)))
                fail({"'/'", "production", "end of input"}, "unexpected input");
        }
        if (g.empty())
            fail({"production"}, "grammar has no productions");
        return g;
    }

    ExprPtr lone_expression()
    {
        skip();
        auto e = expression();
        skip();
        if (!eof())
            fail({"'/'", "end of input"}, "unexpected input");
        return e;
    }

private:
    bool eof() const noexcept { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const noexcept
    {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    [[noreturn]] void fail(std::set<std::string> expected, const std::string& message) const
    {
        fail_at(pos_, std::move(expected), message);
    }

    [[noreturn]] void fail_at(std::size_t at, std::set<std::string> expected, const std::string& message) const
    {
        throw SyntaxError(locate(src_, at, at + (at < src_.size() ? 1 : 0)), std::move(expected), message);
    }

    void expect(char c)
    {
        if (peek() != c || eof())
            fail({std::string("'") + c + "'"}, eof() ? "unexpected end of input" : "unexpected character");
        ++pos_;
    }

    void skip()
    {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
                ++pos_;
            } else if (c == '/' && peek(1) == '/') {
                while (!eof() && peek() != '\n')
                    ++pos_;
            } else if (c == '/' && peek(1) == '*') {
                std::size_t at = pos_;
                auto close = src_.find("*/", pos_ + 2);
                if (close == std::string_view::npos)
                    fail_at(at, {"'*/'"}, "unterminated comment");
                pos_ = close + 2;
            } else {
                return;
            }
        }
    }

    std::string identifier()
    {
        std::size_t start = pos_;
        while (!eof() && ident_char(peek()))
            ++pos_;
        return std::string(src_.substr(start, pos_ - start));
    }

    std::string required_identifier(const char* what)
    {
        if (!ident_start(peek()))
            fail({what}, eof() ? "unexpected end of input" : "unexpected character");
        return identifier();
    }

    /// True if an identifier at `at` is followed by '=', i.e. starts the
    /// next production rather than continuing a sequence.
    bool defines_production(std::size_t at)
    {
        std::size_t saved = pos_;
        pos_ = at;
        identifier();
        skip();
        bool result = peek() == '=';
        pos_ = saved;
        return result;
    }

    bool starts_term(char c) const noexcept
    {
        switch (c) {
        case '\'':
        case '[':
        case '.':
        case '(':
        case '&':
        case '!':
        case '{':
        case '$':
        case '#':
        case '`':
        case '<':
            return true;
        default:
            return ident_start(c);
        }
    }

    ExprPtr expression()
    {
        if (++depth_ > max_nesting)
            fail({}, "expression nesting too deep");
        std::vector<ExprPtr> alternatives{sequence()};
        skip();
        while (peek() == '/' && !eof()) {
            ++pos_;
            skip();
            alternatives.push_back(sequence());
            skip();
        }
        --depth_;
        return pe::choice(std::move(alternatives));
    }

    ExprPtr sequence()
    {
        std::vector<ExprPtr> items;
        for (;;) {
            skip();
            if (eof() || !starts_term(peek()))
                break;
            if (ident_start(peek()) && defines_production(pos_))
                break;
            items.push_back(prefixed());
        }
        if (items.empty())
            fail({"expression"}, eof() ? "unexpected end of input" : "unexpected character");
        return pe::seq(std::move(items));
    }

    ExprPtr prefixed()
    {
        char c = peek();
        if (c == '&' || c == '!') {
            ++pos_;
            skip();
            if (++depth_ > max_nesting)
                fail({}, "expression nesting too deep");
            auto operand = prefixed();
            --depth_;
            return c == '&' ? pe::and_(std::move(operand)) : pe::not_(std::move(operand));
        }
        auto e = primary();
        for (;;) {
            std::size_t saved = pos_;
            skip();
            char s = peek();
            if (eof() || (s != '*' && s != '+' && s != '?')) {
                pos_ = saved;
                return e;
            }
            ++pos_;
            e = s == '*' ? pe::star(std::move(e)) : s == '+' ? pe::plus(std::move(e)) : pe::opt(std::move(e));
        }
    }

    std::uint8_t escape()
    {
        std::size_t at = pos_;
        ++pos_; // backslash
        if (eof())
            fail_at(at, {"escape sequence"}, "unexpected end of input");
        char c = src_[pos_++];
        switch (c) {
        case 'n':
            return '\n';
        case 'r':
            return '\r';
        case 't':
            return '\t';
        case '\\':
        case '\'':
        case '"':
        case '`':
        case '[':
        case ']':
        case '-':
            return static_cast<std::uint8_t>(c);
        case 'x': {
            int hi = hex_value(peek());
            int lo = hex_value(peek(1));
            if (hi < 0 || lo < 0)
                fail_at(at, {"two hex digits"}, "malformed \\x escape");
            pos_ += 2;
            return static_cast<std::uint8_t>(hi * 16 + lo);
        }
        default:
            fail_at(at, {"\\n", "\\r", "\\t", "\\\\", "\\'", "\\xHH"}, "unknown escape");
        }
    }

    std::string quoted(char quote)
    {
        std::size_t at = pos_;
        ++pos_;
        std::string bytes;
        for (;;) {
            if (eof())
                fail_at(at, {std::string("closing ") + quote}, "unterminated literal");
            char c = peek();
            if (c == quote) {
                ++pos_;
                return bytes;
            }
            if (c == '\\')
                bytes.push_back(static_cast<char>(escape()));
            else
                bytes.push_back(src_[pos_++]);
        }
    }

    ExprPtr char_class()
    {
        std::size_t at = pos_;
        ++pos_;
        CharSet set;
        auto next = [&]() -> std::uint8_t {
            if (eof())
                fail_at(at, {"']'"}, "unterminated character class");
            if (peek() == '\\')
                return escape();
            return static_cast<std::uint8_t>(src_[pos_++]);
        };
        while (peek() != ']' || eof()) {
            std::size_t item = pos_;
            std::uint8_t lo = next();
            if (peek() == '-' && peek(1) != ']' && pos_ + 1 < src_.size()) {
                ++pos_;
                std::uint8_t hi = next();
                if (hi < lo)
                    fail_at(item, {}, "character range is reversed");
                for (unsigned b = lo; b <= hi; ++b)
                    set.set(b);
            } else {
                set.set(lo);
            }
        }
        ++pos_;
        return pe::cls(set);
    }

    ExprPtr primary()
    {
        char c = peek();
        switch (c) {
        case '\'':
            return pe::lit(quoted('\''));
        case '`':
            return pe::replace(quoted('`'));
        case '[':
            return char_class();
        case '.':
            ++pos_;
            return pe::any();
        case '(': {
            ++pos_;
            skip();
            auto e = expression();
            skip();
            expect(')');
            return e;
        }
        case '{': {
            ++pos_;
            bool folding = peek() == '$';
            std::optional<std::string> label;
            if (folding) {
                ++pos_;
                if (ident_start(peek()))
                    label = identifier();
            }
            skip();
            auto body = peek() == '}' ? pe::empty() : expression();
            skip();
            expect('}');
            return folding ? pe::fold(std::move(body), std::move(label)) : pe::node(std::move(body));
        }
        case '$': {
            ++pos_;
            std::optional<std::string> label;
            if (ident_start(peek()))
                label = identifier();
            skip();
            expect('(');
            skip();
            auto body = expression();
            skip();
            expect(')');
            return pe::link(std::move(body), std::move(label));
        }
        case '#':
            ++pos_;
            return pe::tag(required_identifier("tag name"));
        case '<':
            return angle();
        default:
            if (ident_start(c))
                return pe::ref(identifier());
            fail({"expression"}, eof() ? "unexpected end of input" : "unexpected character");
        }
    }

    ExprPtr angle()
    {
        std::size_t at = pos_;
        ++pos_;
        skip();
        static const std::set<std::string> keywords{"block", "exists", "if", "is", "isa",
                                                    "local", "match", "on", "symbol"};
        if (!ident_start(peek()))
            fail(keywords, "unexpected character");
        std::size_t kw_at = pos_;
        auto kw = identifier();
        skip();
        ExprPtr e;
        if (kw == "match") {
            e = pe::match(required_identifier("nonterminal"));
        } else if (kw == "symbol" || kw == "is" || kw == "isa") {
            auto name = required_identifier("nonterminal");
            skip();
            std::string callee = ident_start(peek()) ? identifier() : name;
            e = kw == "symbol" ? pe::symbol(name, callee) : kw == "is" ? pe::is(name, callee) : pe::isa(name, callee);
        } else if (kw == "exists") {
            auto name = required_identifier("nonterminal");
            skip();
            e = peek() == '\'' ? pe::exists(name, quoted('\'')) : pe::exists(name);
        } else if (kw == "block") {
            e = pe::block(expression());
        } else if (kw == "local") {
            auto name = required_identifier("nonterminal");
            skip();
            e = pe::local(name, expression());
        } else if (kw == "if" || kw == "on") {
            bool polarity = true;
            if (peek() == '!') {
                polarity = false;
                ++pos_;
                skip();
            }
            auto name = required_identifier("condition name");
            if (kw == "if") {
                e = pe::if_(name, polarity);
            } else {
                skip();
                e = pe::on(name, polarity, expression());
            }
        } else {
            fail_at(kw_at, keywords, "unknown operator <" + kw + ">");
        }
        skip();
        if (peek() != '>' || eof())
            fail({"'>'"}, "unclosed <" + kw + "> started at offset " + std::to_string(at));
        ++pos_;
        return e;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace

Grammar parse_grammar(std::string_view text) { return GrammarReader(text).grammar(); }

ExprPtr parse_expression(std::string_view text) { return GrammarReader(text).lone_expression(); }

// ---------------------------------------------------------------------------
// Formatting

namespace {

void append_byte(std::string& out, std::uint8_t c, char quote, bool in_class)
{
    switch (c) {
    case '\n':
        out += "\\n";
        return;
    case '\r':
        out += "\\r";
        return;
    case '\t':
        out += "\\t";
        return;
    case '\\':
        out += "\\\\";
        return;
    default:
        break;
    }
    if (c == static_cast<std::uint8_t>(quote) || (in_class && (c == ']' || c == '-' || c == '['))) {
        out += '\\';
        out += static_cast<char>(c);
    } else if (c >= 0x20 && c < 0x7f) {
        out += static_cast<char>(c);
    } else {
        char buf[5];
        std::snprintf(buf, sizeof buf, "\\x%02X", c);
        out += buf;
    }
}

bool all_chars(const Expr& e)
{
    return e.op == Op::Sequence &&
           std::all_of(e.kids.begin(), e.kids.end(), [](const ExprPtr& k) { return k->op == Op::Char; });
}

int precedence(const Expr& e)
{
    switch (e.op) {
    case Op::Choice:
        return 1;
    case Op::Sequence:
        return all_chars(e) ? 5 : 2;
    case Op::And:
    case Op::Not:
        return 3;
    case Op::Repetition:
    case Op::OneOrMore:
    case Op::Option:
        return 4;
    default:
        return 5;
    }
}

void emit(std::string& out, const Expr& e, int min_prec);

void emit_raw(std::string& out, const Expr& e)
{
    switch (e.op) {
    case Op::Empty:
        out += "''";
        break;
    case Op::Char:
        out += quote_literal(std::string(1, static_cast<char>(e.byte)));
        break;
    case Op::Class:
        out += format_class(e.set);
        break;
    case Op::Any:
        out += '.';
        break;
    case Op::NonTerminal:
        out += e.name;
        break;
    case Op::Sequence: {
        bool first = true;
        for (std::size_t i = 0; i < e.kids.size();) {
            if (!first)
                out += ' ';
            first = false;
            if (e.kids[i]->op == Op::Char) {
                std::string run;
                for (; i < e.kids.size() && e.kids[i]->op == Op::Char; ++i)
                    run.push_back(static_cast<char>(e.kids[i]->byte));
                out += quote_literal(run);
            } else {
                emit(out, *e.kids[i], 3);
                ++i;
            }
        }
        break;
    }
    case Op::Choice:
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
            if (i)
                out += " / ";
            emit(out, *e.kids[i], 2);
        }
        break;
    case Op::Repetition:
    case Op::OneOrMore:
    case Op::Option:
        emit(out, e.operand(), 4);
        out += e.op == Op::Repetition ? '*' : e.op == Op::OneOrMore ? '+' : '?';
        break;
    case Op::And:
    case Op::Not:
        out += e.op == Op::And ? '&' : '!';
        emit(out, e.operand(), 3);
        break;
    case Op::New:
        if (e.operand().op == Op::Empty) {
            out += "{ }";
        } else {
            out += "{ ";
            emit(out, e.operand(), 1);
            out += " }";
        }
        break;
    case Op::LeftFold:
        out += "{$";
        if (e.label)
            out += *e.label;
        if (e.operand().op != Op::Empty) {
            out += ' ';
            emit(out, e.operand(), 1);
        }
        out += " }";
        break;
    case Op::Link:
        out += '$';
        if (e.label)
            out += *e.label;
        out += '(';
        emit(out, e.operand(), 1);
        out += ')';
        break;
    case Op::Tag:
        out += '#';
        out += e.name;
        break;
    case Op::Replace:
        out += quote_literal(e.text, '`');
        break;
    case Op::SymbolDef:
        out += "<symbol " + e.name + (e.text.empty() ? "" : " " + e.text) + ">";
        break;
    case Op::Exists:
        out += "<exists " + e.name + ">";
        break;
    case Op::ExistsValue:
        out += "<exists " + e.name + " " + quote_literal(e.text) + ">";
        break;
    case Op::Match:
        out += "<match " + e.name + ">";
        break;
    case Op::Is:
        out += "<is " + e.name + (e.text.empty() ? "" : " " + e.text) + ">";
        break;
    case Op::Isa:
        out += "<isa " + e.name + (e.text.empty() ? "" : " " + e.text) + ">";
        break;
    case Op::Block:
        out += "<block ";
        emit(out, e.operand(), 1);
        out += '>';
        break;
    case Op::Local:
        out += "<local " + e.name + " ";
        emit(out, e.operand(), 1);
        out += '>';
        break;
    case Op::IfCond:
        out += std::string("<if ") + (e.polarity ? "" : "!") + e.name + ">";
        break;
    case Op::OnCond:
        out += std::string("<on ") + (e.polarity ? "" : "!") + e.name + " ";
        emit(out, e.operand(), 1);
        out += '>';
        break;
    }
}

void emit(std::string& out, const Expr& e, int min_prec)
{
    if (precedence(e) < min_prec) {
        out += '(';
        emit_raw(out, e);
        out += ')';
    } else {
        emit_raw(out, e);
    }
}

} // namespace

std::string quote_literal(std::string_view bytes, char quote)
{
    std::string out(1, quote);
    for (char c : bytes)
        append_byte(out, static_cast<std::uint8_t>(c), quote, false);
    out += quote;
    return out;
}

std::string format_class(const CharSet& set)
{
    std::string out = "[";
    for (unsigned c = 0; c < 256;) {
        if (!set.test(c)) {
            ++c;
            continue;
        }
        unsigned end = c;
        while (end + 1 < 256 && set.test(end + 1))
            ++end;
        append_byte(out, static_cast<std::uint8_t>(c), ']', true);
        if (end >= c + 2) {
            out += '-';
            append_byte(out, static_cast<std::uint8_t>(end), ']', true);
        } else if (end == c + 1) {
            append_byte(out, static_cast<std::uint8_t>(end), ']', true);
        }
        c = end + 1;
    }
    out += ']';
    return out;
}

std::string format_expression(const Expr& e)
{
    std::string out;
    emit(out, e, 1);
    return out;
}

std::string format_grammar(const Grammar& g)
{
    std::string out;
    auto line = [&](const Production& p) {
        out += p.name;
        out += " = ";
        out += format_expression(*p.body);
        out += '\n';
    };
    for (const auto& p : g.productions())
        if (p.name == g.start())
            line(p);
    for (const auto& p : g.productions())
        if (p.name != g.start())
            line(p);
    return out;
}

} // namespace nez
