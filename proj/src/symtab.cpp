#include "nez/symtab.hpp"

#include "nez/error.hpp"

namespace nez {

void SymbolTable::add(std::string_view table, std::string_view value)
{
    entries_.push_back({std::string(table), std::string(value), false});
}

void SymbolTable::mask(std::string_view table) { entries_.push_back({std::string(table), {}, true}); }

std::optional<std::string_view> SymbolTable::top(std::string_view table) const
{
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->table != table)
            continue;
        if (it->mask)
            return std::nullopt;
        return std::string_view(it->value);
    }
    return std::nullopt;
}

std::size_t SymbolTable::count(std::string_view table) const
{
    std::size_t n = 0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->table != table)
            continue;
        if (it->mask)
            break;
        ++n;
    }
    return n;
}

bool SymbolTable::contains(std::string_view table, std::string_view value) const
{
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->table != table)
            continue;
        if (it->mask)
            return false;
        if (it->value == value)
            return true;
    }
    return false;
}

SymbolTable::Mark SymbolTable::checkpoint()
{
    marks_.push_back({entries_.size(), next_serial_});
    return {marks_.size() - 1, entries_.size(), next_serial_++};
}

void SymbolTable::check_top(const Mark& m, const char* op) const
{
    if (marks_.empty() || m.depth != marks_.size() - 1 || marks_.back().serial != m.serial)
        throw StaleMark(std::string("symbol table ") + op + ": mark is not the innermost open checkpoint");
}

void SymbolTable::rollback(const Mark& m)
{
    check_top(m, "rollback");
    entries_.resize(m.size);
    marks_.pop_back();
}

void SymbolTable::commit_scope(const Mark& m)
{
    check_top(m, "commit");
    marks_.pop_back();
}

void SymbolTable::clear()
{
    entries_.clear();
    marks_.clear();
}

} // namespace nez
