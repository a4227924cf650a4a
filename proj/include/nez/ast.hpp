#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace nez {

struct TreeChild;

/// A common-tree AST node: a tag, the span of input it captured, its text
/// (the captured substring unless a replace operator overrode it) and an
/// ordered list of optionally labeled children.
struct Tree {
    std::optional<std::string> tag;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string value;
    bool replaced = false;
    std::vector<TreeChild> children;

    bool leaf() const noexcept { return children.empty(); }
    std::size_t node_count() const;
};

struct TreeChild {
    std::optional<std::string> label;
    Tree node;
};

bool operator==(const Tree& a, const Tree& b);
inline bool operator!=(const Tree& a, const Tree& b) { return !(a == b); }
bool operator==(const TreeChild& a, const TreeChild& b);

/// Single-line form: #Add[left: #Int['1'] right: #Int['2']]
std::string to_sexp(const Tree& t);

/// Indented form, two spaces per level. A node stays on one line when it is
/// a leaf or has exactly one child that itself stays on one line.
std::string to_pretty_sexp(const Tree& t);

/// {"tag": ..., "value": ... (leaves only), "children": [{"label": ..., ...}]}
nlohmann::json to_json(const Tree& t);

/// Transactional log of AST operations. Parsers append records as they go,
/// truncate on backtracking, and replay the surviving records into a tree
/// once parsing succeeds.
///
/// Replay keeps a stack of open nodes and a "left" register holding the most
/// recently finished node:
///   New         opens a node at pos
///   Fold        opens a node at pos whose first child is the left node
///   Capture     closes the innermost open node at pos; it becomes left
///   Tag/Replace set the tag/text of the innermost open node (last wins)
///   Push        saves left and clears it
///   Link        appends left (if any) to the innermost open node
///   Pop         restores the left saved by the matching Push
///
/// Strings passed to the op_* functions are referenced, not copied, and must
/// outlive the log (they normally live in a Grammar or Program).
class AstLog {
public:
    enum class Kind : std::uint8_t { New, Fold, Capture, Tag, Replace, Push, Link, Pop };

    struct Record {
        Kind kind;
        bool labeled = false;
        std::size_t pos = 0;
        std::string_view text;  // tag, replacement or label

        friend bool operator==(const Record&, const Record&) = default;
    };

    struct Mark {
        std::size_t depth = 0;
        std::size_t size = 0;
        std::uint64_t serial = 0;
    };

    void op_new(std::size_t pos) { records_.push_back({Kind::New, false, pos, {}}); }
    void op_fold(std::size_t pos, std::optional<std::string_view> label = std::nullopt)
    {
        records_.push_back({Kind::Fold, label.has_value(), pos, label.value_or(std::string_view{})});
    }
    void op_capture(std::size_t pos) { records_.push_back({Kind::Capture, false, pos, {}}); }
    void op_tag(std::string_view tag) { records_.push_back({Kind::Tag, false, 0, tag}); }
    void op_replace(std::string_view text) { records_.push_back({Kind::Replace, false, 0, text}); }
    void op_push() { records_.push_back({Kind::Push, false, 0, {}}); }
    void op_link(std::optional<std::string_view> label = std::nullopt)
    {
        records_.push_back({Kind::Link, label.has_value(), 0, label.value_or(std::string_view{})});
    }
    void op_pop() { records_.push_back({Kind::Pop, false, 0, {}}); }

    void append(std::span<const Record> records) { records_.insert(records_.end(), records.begin(), records.end()); }

    Mark checkpoint();
    /// Truncates to `m` and closes it; StaleMark unless `m` is innermost.
    void rollback(const Mark& m);
    /// Closes `m`, keeping the records logged since.
    void commit_scope(const Mark& m);

    /// Replays the whole log. Throws CommitWithoutRoot if no top-level node
    /// was produced, FoldWithoutLeft if a fold had no left node.
    Tree commit(std::string_view input) const;

    /// Like commit, but an empty result is not an error.
    std::optional<Tree> build(std::string_view input) const;

    std::size_t size() const noexcept { return records_.size(); }
    std::size_t open_checkpoints() const noexcept { return marks_.size(); }
    const std::vector<Record>& records() const noexcept { return records_; }
    void clear();

private:
    void check_top(const Mark& m, const char* op) const;

    std::vector<Record> records_;
    struct OpenMark {
        std::size_t size;
        std::uint64_t serial;
    };
    std::vector<OpenMark> marks_;
    std::uint64_t next_serial_ = 1;
};

} // namespace nez
