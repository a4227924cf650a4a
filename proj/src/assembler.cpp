#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "nez/error.hpp"
#include "nez/syntax.hpp"
#include "nez/vm.hpp"

namespace nez::vm {

// ---------------------------------------------------------------------------
// Disassembly

namespace {

std::string target_label(std::int32_t offset) { return ".L" + std::to_string(offset); }

std::string optional_label(const Program& p, std::int32_t idx)
{
    return idx < 0 ? std::string() : " " + p.strings[static_cast<std::size_t>(idx)];
}

} // namespace

std::string disassemble(const Program& p)
{
    std::set<std::int32_t> targets;
    for (const auto& ins : p.code) {
        switch (ins.op) {
        case Opcode::Alt:
        case Opcode::Jump:
            targets.insert(ins.a);
            break;
        case Opcode::Call:
            if (!p.production_at(ins.a))
                targets.insert(ins.a);
            break;
        case Opcode::Lookup:
        case Opcode::TLookup:
            targets.insert(ins.b);
            break;
        default:
            break;
        }
    }

    std::ostringstream out;
    out << ".entry " << p.entry << '\n';
    for (std::size_t i = 0; i < p.classes.size(); ++i)
        out << ".class " << i << ' ' << format_class(p.classes[i]) << '\n';
    for (std::size_t i = 0; i < p.strings.size(); ++i)
        out << ".string " << i << ' ' << quote_literal(p.strings[i]) << '\n';
    for (std::size_t i = 0; i < p.names.size(); ++i)
        out << ".name " << i << ' ' << p.names[i] << '\n';
    for (std::size_t i = 0; i < p.memo_points.size(); ++i)
        out << ".memo " << i << ' ' << p.memo_points[i] << '\n';

    for (std::size_t i = 0; i < p.code.size(); ++i) {
        auto at = static_cast<std::int32_t>(i);
        if (const auto* prod = p.production_at(at))
            out << prod->name << ":\n";
        if (targets.count(at))
            out << target_label(at) << ":\n";
        const auto& ins = p.code[i];
        out << "    " << opcode_name(ins.op);
        switch (ins.op) {
        case Opcode::Alt:
        case Opcode::Jump:
            out << ' ' << target_label(ins.a);
            break;
        case Opcode::Call: {
            const auto* prod = p.production_at(ins.a);
            out << ' ' << (prod ? prod->name : target_label(ins.a));
            break;
        }
        case Opcode::Byte:
            out << ' ' << ins.a << "  # " << quote_literal(std::string(1, static_cast<char>(ins.a)));
            break;
        case Opcode::Set:
            out << ' ' << format_class(p.classes[static_cast<std::size_t>(ins.a)]);
            break;
        case Opcode::Str:
        case Opcode::TReplace:
            out << ' ' << quote_literal(p.strings[static_cast<std::size_t>(ins.a)]);
            break;
        case Opcode::TTag:
            out << ' ' << p.strings[static_cast<std::size_t>(ins.a)];
            break;
        case Opcode::TLeftFold:
        case Opcode::TLink:
            out << optional_label(p, ins.a);
            break;
        case Opcode::SMask:
        case Opcode::Symbol:
        case Opcode::Exists:
        case Opcode::Match:
        case Opcode::Is:
        case Opcode::Isa:
            out << ' ' << p.names[static_cast<std::size_t>(ins.a)];
            break;
        case Opcode::IsDef:
            out << ' ' << p.names[static_cast<std::size_t>(ins.a)] << ' '
                << quote_literal(p.strings[static_cast<std::size_t>(ins.b)]);
            break;
        case Opcode::Lookup:
        case Opcode::TLookup:
            out << ' ' << ins.a << ' ' << target_label(ins.b) << "  # "
                << p.memo_points[static_cast<std::size_t>(ins.a)];
            break;
        case Opcode::Memo:
        case Opcode::TMemo:
        case Opcode::MemoFail:
            out << ' ' << ins.a;
            break;
        default:
            break;
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string> tokens;
};

// Splits on whitespace; quoted literals and classes stay single tokens and
// '#' outside them starts a comment.
std::vector<std::string> tokenize(std::string_view text, std::size_t line)
{
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#')
            break;
        std::size_t start = i;
        if (c == '\'' || c == '[') {
            char close = c == '\'' ? '\'' : ']';
            ++i;
            while (i < text.size() && text[i] != close)
                i += text[i] == '\\' ? 2 : 1;
            if (i >= text.size())
                throw AsmSyntaxError(line, "unterminated operand");
            ++i;
        } else {
            while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r')
                ++i;
        }
        tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

bool is_label_def(const std::string& tok) { return tok.size() > 1 && tok.back() == ':'; }

class Assembler {
public:
    Program run(std::string_view text)
    {
        std::vector<Line> lines;
        std::size_t number = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos)
                end = text.size();
            ++number;
            auto tokens = tokenize(text.substr(start, end - start), number);
            if (!tokens.empty())
                lines.push_back({number, std::move(tokens)});
            start = end + 1;
        }

        // Pass 1: directives, label offsets.
        std::int32_t offset = 0;
        for (auto& line : lines) {
            auto& t = line.tokens;
            if (t[0][0] == '.' && !is_label_def(t[0])) {
                directive(line);
                t.clear();
                continue;
            }
            while (!t.empty() && is_label_def(t[0])) {
                auto name = t[0].substr(0, t[0].size() - 1);
                if (!labels_.emplace(name, offset).second)
                    throw AsmSyntaxError(line.number, "duplicate label '" + name + "'");
                if (name[0] != '.')
                    p_.productions.push_back({name, offset});
                t.erase(t.begin());
            }
            if (!t.empty())
                ++offset;
        }

        // Pass 2: instructions.
        for (const auto& line : lines)
            if (!line.tokens.empty())
                p_.code.push_back(instruction(line));

        if (entry_)
            p_.entry = *entry_;
        try {
            verify(p_);
        } catch (const MachineTrap& e) {
            throw AsmSyntaxError(number, e.what());
        }
        return std::move(p_);
    }

private:
    [[noreturn]] static void fail(const Line& line, const std::string& msg) { throw AsmSyntaxError(line.number, msg); }

    static std::int32_t integer(const Line& line, const std::string& tok)
    {
        std::int32_t v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            fail(line, "expected a number, found '" + tok + "'");
        return v;
    }

    static std::string literal(const Line& line, const std::string& tok)
    {
        if (tok.empty() || tok[0] != '\'')
            fail(line, "expected a quoted literal, found '" + tok + "'");
        ExprPtr e;
        try {
            e = parse_expression(tok);
        } catch (const SyntaxError& err) {
            fail(line, err.what());
        }
        std::string out;
        if (e->op == Op::Char) {
            out.push_back(static_cast<char>(e->byte));
        } else if (e->op == Op::Sequence) {
            for (const auto& k : e->kids)
                out.push_back(static_cast<char>(k->byte));
        } else if (e->op != Op::Empty) {
            fail(line, "malformed literal '" + tok + "'");
        }
        return out;
    }

    static CharSet char_class(const Line& line, const std::string& tok)
    {
        if (tok.empty() || tok[0] != '[')
            fail(line, "expected a character class, found '" + tok + "'");
        ExprPtr e;
        try {
            e = parse_expression(tok);
        } catch (const SyntaxError& err) {
            fail(line, err.what());
        }
        if (e->op == Op::Class)
            return e->set;
        if (e->op == Op::Char) {
            CharSet s;
            s.set(e->byte);
            return s;
        }
        fail(line, "malformed class '" + tok + "'");
    }

    template <typename T>
    static std::int32_t intern(std::vector<T>& pool, const T& value)
    {
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool[i] == value)
                return static_cast<std::int32_t>(i);
        pool.push_back(value);
        return static_cast<std::int32_t>(pool.size() - 1);
    }

    template <typename T>
    static void declare(const Line& line, std::vector<T>& pool, std::int32_t idx, T value)
    {
        if (idx != static_cast<std::int32_t>(pool.size()))
            fail(line, "pool entries must be declared in order");
        pool.push_back(std::move(value));
    }

    void directive(const Line& line)
    {
        const auto& t = line.tokens;
        auto want = [&](std::size_t n) {
            if (t.size() != n)
                fail(line, "wrong number of operands for " + t[0]);
        };
        if (t[0] == ".entry") {
            want(2);
            entry_ = integer(line, t[1]);
        } else if (t[0] == ".memo") {
            want(3);
            declare(line, p_.memo_points, integer(line, t[1]), t[2]);
        } else if (t[0] == ".class") {
            want(3);
            declare(line, p_.classes, integer(line, t[1]), char_class(line, t[2]));
        } else if (t[0] == ".string") {
            want(3);
            declare(line, p_.strings, integer(line, t[1]), literal(line, t[2]));
        } else if (t[0] == ".name") {
            want(3);
            declare(line, p_.names, integer(line, t[1]), t[2]);
        } else {
            fail(line, "unknown directive " + t[0]);
        }
    }

    std::int32_t target(const Line& line, const std::string& tok) const
    {
        auto it = labels_.find(tok);
        if (it == labels_.end())
            fail(line, "undefined label '" + tok + "'");
        return it->second;
    }

    std::int32_t memo_id(const Line& line, const std::string& tok) const
    {
        auto id = integer(line, tok);
        if (id < 0 || static_cast<std::size_t>(id) >= p_.memo_points.size())
            fail(line, "undeclared memo point " + tok);
        return id;
    }

    Instruction instruction(const Line& line)
    {
        const auto& t = line.tokens;
        auto op = opcode_from_name(t[0]);
        if (!op)
            fail(line, "unknown instruction '" + t[0] + "'");
        auto want = [&](std::size_t lo, std::size_t hi) {
            if (t.size() < lo + 1 || t.size() > hi + 1)
                fail(line, "wrong number of operands for " + t[0]);
        };
        Instruction ins{*op};
        switch (*op) {
        case Opcode::Alt:
        case Opcode::Jump:
        case Opcode::Call:
            want(1, 1);
            ins.a = target(line, t[1]);
            break;
        case Opcode::Byte:
            want(1, 1);
            if (t[1][0] == '\'') {
                auto s = literal(line, t[1]);
                if (s.size() != 1)
                    fail(line, "byte operand must be a single character");
                ins.a = static_cast<std::uint8_t>(s[0]);
            } else {
                ins.a = integer(line, t[1]);
                if (ins.a < 0 || ins.a > 255)
                    fail(line, "byte operand out of range");
            }
            break;
        case Opcode::Set:
            want(1, 1);
            ins.a = intern(p_.classes, char_class(line, t[1]));
            break;
        case Opcode::Str:
        case Opcode::TReplace:
            want(1, 1);
            ins.a = intern(p_.strings, literal(line, t[1]));
            break;
        case Opcode::TTag:
            want(1, 1);
            ins.a = intern(p_.strings, t[1]);
            break;
        case Opcode::TLeftFold:
        case Opcode::TLink:
            want(0, 1);
            ins.a = t.size() > 1 ? intern(p_.strings, t[1]) : -1;
            break;
        case Opcode::SMask:
        case Opcode::Symbol:
        case Opcode::Exists:
        case Opcode::Match:
        case Opcode::Is:
        case Opcode::Isa:
            want(1, 1);
            ins.a = intern(p_.names, t[1]);
            break;
        case Opcode::IsDef:
            want(2, 2);
            ins.a = intern(p_.names, t[1]);
            ins.b = intern(p_.strings, literal(line, t[2]));
            break;
        case Opcode::Lookup:
        case Opcode::TLookup:
            want(2, 2);
            ins.a = memo_id(line, t[1]);
            ins.b = target(line, t[2]);
            break;
        case Opcode::Memo:
        case Opcode::TMemo:
        case Opcode::MemoFail:
            want(1, 1);
            ins.a = memo_id(line, t[1]);
            break;
        default:
            want(0, 0);
            break;
        }
        return ins;
    }

    Program p_;
    std::map<std::string, std::int32_t> labels_;
    std::optional<std::int32_t> entry_;
};

} // namespace

Program assemble(std::string_view text) { return Assembler().run(text); }

} // namespace nez::vm
