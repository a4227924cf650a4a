#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nez {

/// One [A, x] entry. A mask entry hides every earlier entry of the same table
/// name until it is truncated away.
struct SymbolEntry {
    std::string table;
    std::string value;
    bool mask = false;
};

/// The parser-global symbol table: an append-only sequence of entries with a
/// LIFO stack of checkpoints. Removing entries only ever happens by truncating
/// back to a checkpoint, so backtracking and scope exit are O(1) per entry.
class SymbolTable {
public:
    struct Mark {
        std::size_t depth = 0;
        std::size_t size = 0;
        std::uint64_t serial = 0;
    };

    void add(std::string_view table, std::string_view value);

    /// Hides every current entry of `table`. Only meaningful inside an open
    /// checkpoint; the mask disappears when that checkpoint is rolled back.
    void mask(std::string_view table);

    /// Most recent visible value for `table`.
    std::optional<std::string_view> top(std::string_view table) const;
    std::size_t count(std::string_view table) const;
    bool contains(std::string_view table, std::string_view value) const;

    Mark checkpoint();
    /// Truncates to `m` and closes it. Throws StaleMark unless `m` is the
    /// innermost open checkpoint.
    void rollback(const Mark& m);
    /// Closes `m`, keeping everything added since.
    void commit_scope(const Mark& m);

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t open_checkpoints() const noexcept { return marks_.size(); }
    const std::vector<SymbolEntry>& entries() const noexcept { return entries_; }

    void clear();

private:
    void check_top(const Mark& m, const char* op) const;

    std::vector<SymbolEntry> entries_;
    struct OpenMark {
        std::size_t size;
        std::uint64_t serial;
    };
    std::vector<OpenMark> marks_;
    std::uint64_t next_serial_ = 1;
};

} // namespace nez
