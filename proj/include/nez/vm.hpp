#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nez/ast.hpp"
#include "nez/grammar.hpp"
#include "nez/result.hpp"

namespace nez::vm {

enum class Opcode : std::uint8_t {
    Nop, Fail, Alt, Succ, Jump, Call, Ret, Pos, Back, Skip,
    Byte, Any, Set, Str,
    TPush, TPop, TLeftFold, TNew, TLink, TCapture, TTag, TReplace, TStart, TCommit, TAbort,
    SOpen, SClose, SMask, Symbol, Exists, IsDef, Match, Is, Isa,
    Lookup, Memo, MemoFail, TLookup, TMemo,
    Exit,
};

std::string_view opcode_name(Opcode op) noexcept;
std::optional<Opcode> opcode_from_name(std::string_view name) noexcept;

/// Operand use:
///   alt, jump, call          a = code offset
///   byte                     a = byte value
///   set                      a = class pool index
///   str, ttag, treplace      a = string pool index
///   tleftfold, tlink         a = label string index, or -1 for no label
///   smask, symbol, exists, match, is, isa
///                            a = name pool index
///   isdef                    a = name index, b = string index
///   lookup, tlookup          a = memo id, b = code offset taken on a hit
///   memo, tmemo, memofail    a = memo id
struct Instruction {
    Opcode op = Opcode::Nop;
    std::int32_t a = 0;
    std::int32_t b = 0;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct ProductionEntry {
    std::string name;
    std::int32_t offset = 0;

    friend bool operator==(const ProductionEntry&, const ProductionEntry&) = default;
};

/// A compiled grammar. code[entry] is a stub that calls the start production
/// and exits.
struct Program {
    std::vector<Instruction> code;
    std::vector<CharSet> classes;
    std::vector<std::string> strings;
    std::vector<std::string> names;
    std::vector<ProductionEntry> productions;  // by ascending offset
    std::vector<std::string> memo_points;       // memo id -> production
    std::int32_t entry = 0;

    const ProductionEntry* production_at(std::int32_t offset) const;
    const ProductionEntry* find_production(std::string_view name) const;

    friend bool operator==(const Program&, const Program&) = default;
};

/// Compiles a condition-free grammar. Option and OneOrMore are desugared,
/// repetition stays a native loop. Productions referenced at least twice
/// that do not (transitively) use symbol operators get a memo point.
/// Throws UnsupportedConstruct if conditions remain, GrammarError if the
/// grammar does not validate.
Program compile(const Grammar& g);

/// Fixed-capacity packrat cache keyed by (position, memo id). Colliding
/// stores overwrite; lookups verify the full key.
class MemoTable {
public:
    struct Result {
        bool failed = false;
        std::size_t end = 0;
        std::span<const AstLog::Record> records;
    };

    explicit MemoTable(std::size_t slots = 4096);

    std::optional<Result> lookup(std::size_t pos, std::int32_t id) const;
    void store(std::size_t pos, std::int32_t id, bool failed, std::size_t end,
               std::span<const AstLog::Record> records = {});

    std::size_t capacity() const noexcept { return slots_.size(); }
    void clear();

private:
    struct Slot {
        bool used = false;
        std::size_t pos = 0;
        std::int32_t id = 0;
        bool failed = false;
        std::size_t end = 0;
        std::vector<AstLog::Record> records;
    };

    std::size_t slot_of(std::size_t pos, std::int32_t id) const noexcept;

    std::vector<Slot> slots_;
};

inline std::optional<MemoTable::Result> memo_lookup(const MemoTable& m, std::size_t pos, std::int32_t id)
{
    return m.lookup(pos, id);
}

inline void memo_store(MemoTable& m, std::size_t pos, std::int32_t id, bool failed, std::size_t end,
                       std::span<const AstLog::Record> records = {})
{
    m.store(pos, id, failed, end, records);
}

struct RunOptions {
    bool memo = true;
    /// false runs in match mode: tree instructions only manage their frames.
    bool build_tree = true;
    /// Collects per-(position, production) body counts and rewind checks.
    bool instrument = false;
    /// Executed-instruction budget; 1024 * |input| + 2^20 when unset.
    std::optional<std::uint64_t> step_budget;
    std::size_t memo_slots = 4096;
    /// Starts at this production instead of the program entry.
    std::string start;
    std::ostream* trace = nullptr;
};

struct Stats {
    std::uint64_t instructions = 0;
    std::uint64_t memo_hits = 0;
    std::uint64_t memo_misses = 0;
    std::uint64_t rewinds = 0;
    /// Rewinds after which the machine state did not equal the frame's
    /// snapshot. Always zero unless the machine itself is broken.
    std::uint64_t rewind_violations = 0;
    /// Times each production body started executing at each position.
    std::map<std::pair<std::size_t, std::string>, std::uint64_t> body_executions;

    std::uint64_t executions(std::size_t pos, const std::string& production) const;
};

/// Runs `p` on `input`. Throws MachineTrap on malformed programs and
/// StepBudgetExceeded when the budget runs out.
ParseResult run(const Program& p, std::string_view input, const RunOptions& opts = {}, Stats* stats = nullptr);

inline ParseResult parse(const Program& p, std::string_view input, RunOptions opts = {}, Stats* stats = nullptr)
{
    opts.build_tree = true;
    return run(p, input, opts, stats);
}

inline ParseResult match(const Program& p, std::string_view input, RunOptions opts = {}, Stats* stats = nullptr)
{
    opts.build_tree = false;
    return run(p, input, opts, stats);
}

/// Text form: directives, labels and one instruction per line.
std::string disassemble(const Program& p);

/// Inverse of disassemble. Throws AsmSyntaxError with the offending line.
Program assemble(std::string_view text);

/// Checks operand ranges and jump targets; throws MachineTrap.
void verify(const Program& p);

} // namespace nez::vm
