#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "nez/ast.hpp"

namespace nez {

/// Greatest offset at which a terminal failed, and what was expected there.
struct FarthestFailure {
    std::size_t offset = 0;
    std::set<std::string> expected;

    void record(std::size_t at, const std::string& what)
    {
        if (at > offset) {
            offset = at;
            expected.clear();
        }
        if (at == offset)
            expected.insert(what);
    }
};

struct ParseResult {
    bool success = false;
    std::size_t consumed = 0;
    std::optional<Tree> tree;  // parse mode only; empty if no node was built
    FarthestFailure farthest;
    std::uint64_t steps = 0;   // evaluation steps or executed instructions
};

/// Default step budget for an input of `n` bytes.
inline std::uint64_t default_step_budget(std::size_t n) { return 256ull * n + 65536ull; }

} // namespace nez
