#include "nez/ast.hpp"

#include <cstdio>

#include "nez/error.hpp"

namespace nez {

std::size_t Tree::node_count() const
{
    std::size_t n = 1;
    for (const auto& c : children)
        n += c.node.node_count();
    return n;
}

bool operator==(const Tree& a, const Tree& b)
{
    return a.tag == b.tag && a.start == b.start && a.end == b.end && a.value == b.value &&
           a.replaced == b.replaced && a.children == b.children;
}

bool operator==(const TreeChild& a, const TreeChild& b) { return a.label == b.label && a.node == b.node; }

// ---------------------------------------------------------------------------
// Rendering

namespace {

void quote_value(std::string& out, std::string_view value)
{
    out += '\'';
    for (char ch : value) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
        case '\n':
            out += "\\n";
            break;
        case '\r':
            out += "\\r";
            break;
        case '\t':
            out += "\\t";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\'':
            out += "\\'";
            break;
        default:
            if (c >= 0x20 && c < 0x7f) {
                out += ch;
            } else {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\x%02X", c);
                out += buf;
            }
        }
    }
    out += '\'';
}

void head(std::string& out, const Tree& t)
{
    out += '#';
    if (t.tag)
        out += *t.tag;
    out += '[';
}

void compact(std::string& out, const Tree& t)
{
    head(out, t);
    if (t.leaf()) {
        quote_value(out, t.value);
    } else {
        for (std::size_t i = 0; i < t.children.size(); ++i) {
            if (i)
                out += ' ';
            if (t.children[i].label)
                out += *t.children[i].label + ": ";
            compact(out, t.children[i].node);
        }
    }
    out += ']';
}

bool inline_node(const Tree& t)
{
    return t.leaf() || (t.children.size() == 1 && inline_node(t.children[0].node));
}

void pretty(std::string& out, const Tree& t, std::size_t indent)
{
    if (inline_node(t)) {
        compact(out, t);
        return;
    }
    head(out, t);
    out += '\n';
    for (const auto& c : t.children) {
        out.append(indent + 2, ' ');
        if (c.label)
            out += *c.label + ": ";
        pretty(out, c.node, indent + 2);
        out += '\n';
    }
    out.append(indent, ' ');
    out += ']';
}

} // namespace

std::string to_sexp(const Tree& t)
{
    std::string out;
    compact(out, t);
    return out;
}

std::string to_pretty_sexp(const Tree& t)
{
    std::string out;
    pretty(out, t, 0);
    return out;
}

nlohmann::json to_json(const Tree& t)
{
    nlohmann::json j;
    j["tag"] = t.tag ? nlohmann::json(*t.tag) : nlohmann::json(nullptr);
    if (t.leaf())
        j["value"] = t.value;
    auto children = nlohmann::json::array();
    for (const auto& c : t.children) {
        auto child = to_json(c.node);
        if (c.label)
            child["label"] = *c.label;
        children.push_back(std::move(child));
    }
    j["children"] = std::move(children);
    return j;
}

// ---------------------------------------------------------------------------
// Log

AstLog::Mark AstLog::checkpoint()
{
    marks_.push_back({records_.size(), next_serial_});
    return {marks_.size() - 1, records_.size(), next_serial_++};
}

void AstLog::check_top(const Mark& m, const char* op) const
{
    if (marks_.empty() || m.depth != marks_.size() - 1 || marks_.back().serial != m.serial)
        throw StaleMark(std::string("ast log ") + op + ": mark is not the innermost open checkpoint");
}

void AstLog::rollback(const Mark& m)
{
    check_top(m, "rollback");
    records_.resize(m.size);
    marks_.pop_back();
}

void AstLog::commit_scope(const Mark& m)
{
    check_top(m, "commit");
    marks_.pop_back();
}

void AstLog::clear()
{
    records_.clear();
    marks_.clear();
}

std::optional<Tree> AstLog::build(std::string_view input) const
{
    std::vector<Tree> open;
    std::vector<std::optional<Tree>> saved;
    std::optional<Tree> left;

    auto label_of = [](const Record& r) -> std::optional<std::string> {
        return r.labeled ? std::optional<std::string>(std::string(r.text)) : std::nullopt;
    };

    for (const auto& r : records_) {
        switch (r.kind) {
        case Kind::New:
            open.emplace_back();
            open.back().start = r.pos;
            break;
        case Kind::Fold: {
            if (!left)
                throw FoldWithoutLeft("left-fold at offset " + std::to_string(r.pos) + " has no left-hand node");
            Tree t;
            t.start = r.pos;
            t.children.push_back({label_of(r), std::move(*left)});
            left.reset();
            open.push_back(std::move(t));
            break;
        }
        case Kind::Capture: {
            if (open.empty())
                throw AstError("capture without an open node");
            Tree t = std::move(open.back());
            open.pop_back();
            t.end = std::max(r.pos, t.start);
            if (!t.replaced && t.end <= input.size())
                t.value = std::string(input.substr(t.start, t.end - t.start));
            left = std::move(t);
            break;
        }
        case Kind::Tag:
            if (!open.empty())
                open.back().tag = std::string(r.text);
            break;
        case Kind::Replace:
            if (!open.empty()) {
                open.back().value = std::string(r.text);
                open.back().replaced = true;
            }
            break;
        case Kind::Push:
            saved.push_back(std::move(left));
            left.reset();
            break;
        case Kind::Link:
            if (left && !open.empty()) {
                open.back().children.push_back({label_of(r), std::move(*left)});
                left.reset();
            }
            break;
        case Kind::Pop:
            if (saved.empty())
                throw AstError("link scope closed without a matching push");
            left = std::move(saved.back());
            saved.pop_back();
            break;
        }
    }
    if (!open.empty() || !saved.empty())
        throw AstError("unbalanced AST log");
    return left;
}

Tree AstLog::commit(std::string_view input) const
{
    auto tree = build(input);
    if (!tree)
        throw CommitWithoutRoot("AST log produced no node");
    return std::move(*tree);
}

} // namespace nez
