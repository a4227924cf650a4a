#include <ostream>

#include "nez/error.hpp"
#include "nez/symtab.hpp"
#include "nez/syntax.hpp"
#include "nez/vm.hpp"

namespace nez::vm {

// ---------------------------------------------------------------------------
// Memo table

MemoTable::MemoTable(std::size_t slots) : slots_(std::max<std::size_t>(slots, 1)) {}

std::size_t MemoTable::slot_of(std::size_t pos, std::int32_t id) const noexcept
{
    constexpr std::uint64_t p1 = 0x9E3779B97F4A7C15ull;
    constexpr std::uint64_t p2 = 0xC2B2AE3D27D4EB4Full;
    auto h = (static_cast<std::uint64_t>(pos) * p1) ^ (static_cast<std::uint64_t>(id) * p2);
    return static_cast<std::size_t>((h ^ (h >> 29)) % slots_.size());
}

std::optional<MemoTable::Result> MemoTable::lookup(std::size_t pos, std::int32_t id) const
{
    const auto& s = slots_[slot_of(pos, id)];
    if (!s.used || s.pos != pos || s.id != id)
        return std::nullopt;
    return Result{s.failed, s.end, s.records};
}

void MemoTable::store(std::size_t pos, std::int32_t id, bool failed, std::size_t end,
                      std::span<const AstLog::Record> records)
{
    auto& s = slots_[slot_of(pos, id)];
    s.used = true;
    s.pos = pos;
    s.id = id;
    s.failed = failed;
    s.end = end;
    s.records.assign(records.begin(), records.end());
}

void MemoTable::clear()
{
    for (auto& s : slots_)
        s = Slot{};
}

std::uint64_t Stats::executions(std::size_t pos, const std::string& production) const
{
    auto it = body_executions.find({pos, production});
    return it == body_executions.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Verification

void verify(const Program& p)
{
    auto n = static_cast<std::int32_t>(p.code.size());
    auto in = [](std::int32_t i, std::size_t size) { return i >= 0 && static_cast<std::size_t>(i) < size; };
    auto trap = [](std::size_t at, const std::string& msg) {
        throw MachineTrap("instruction " + std::to_string(at) + ": " + msg);
    };
    if (!in(p.entry, p.code.size()))
        throw MachineTrap("entry offset out of range");
    for (const auto& prod : p.productions)
        if (!in(prod.offset, p.code.size()))
            throw MachineTrap("production '" + prod.name + "' offset out of range");
    for (std::size_t i = 0; i < p.code.size(); ++i) {
        const auto& ins = p.code[i];
        if (static_cast<std::size_t>(ins.op) > static_cast<std::size_t>(Opcode::Exit))
            trap(i, "bad opcode");
        switch (ins.op) {
        case Opcode::Alt:
        case Opcode::Jump:
        case Opcode::Call:
            if (ins.a < 0 || ins.a >= n)
                trap(i, "jump target out of range");
            break;
        case Opcode::Byte:
            if (ins.a < 0 || ins.a > 255)
                trap(i, "byte operand out of range");
            break;
        case Opcode::Set:
            if (!in(ins.a, p.classes.size()))
                trap(i, "class index out of range");
            break;
        case Opcode::Str:
        case Opcode::TTag:
        case Opcode::TReplace:
            if (!in(ins.a, p.strings.size()))
                trap(i, "string index out of range");
            break;
        case Opcode::TLeftFold:
        case Opcode::TLink:
            if (ins.a != -1 && !in(ins.a, p.strings.size()))
                trap(i, "label index out of range");
            break;
        case Opcode::SMask:
        case Opcode::Symbol:
        case Opcode::Exists:
        case Opcode::Match:
        case Opcode::Is:
        case Opcode::Isa:
            if (!in(ins.a, p.names.size()))
                trap(i, "name index out of range");
            break;
        case Opcode::IsDef:
            if (!in(ins.a, p.names.size()) || !in(ins.b, p.strings.size()))
                trap(i, "operand index out of range");
            break;
        case Opcode::Lookup:
        case Opcode::TLookup:
            if (!in(ins.a, p.memo_points.size()) || ins.b < 0 || ins.b >= n)
                trap(i, "memo operand out of range");
            break;
        case Opcode::Memo:
        case Opcode::TMemo:
        case Opcode::MemoFail:
            if (!in(ins.a, p.memo_points.size()))
                trap(i, "memo id out of range");
            break;
        default:
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Machine

namespace {

enum class FrameKind : std::uint8_t { Alt, Return, Pos, Sym, Log };

struct Frame {
    FrameKind kind;
    std::int32_t target = 0;
    std::size_t pos = 0;
    SymbolTable::Mark sym{};
    AstLog::Mark log{};
};

class Machine {
public:
    Machine(const Program& p, std::string_view input, const RunOptions& opts, Stats* stats)
        : p_(p), input_(input), opts_(opts), stats_(stats), memo_(opts.memo_slots),
          budget_(opts.step_budget.value_or(1024ull * input.size() + (1ull << 20)))
    {
        if (stats_ && opts_.instrument) {
            // Map each memo id and production entry to its name for counting.
            production_of_.assign(p_.code.size(), nullptr);
            for (const auto& prod : p_.productions)
                production_of_[static_cast<std::size_t>(prod.offset)] = &prod.name;
            memoized_.assign(p_.code.size(), false);
            for (const auto& prod : p_.productions) {
                const auto& first = p_.code[static_cast<std::size_t>(prod.offset)];
                memoized_[static_cast<std::size_t>(prod.offset)] =
                    first.op == Opcode::Lookup || first.op == Opcode::TLookup;
            }
        }
    }

    ParseResult run()
    {
        std::int32_t pc = p_.entry;
        if (!opts_.start.empty()) {
            auto* prod = p_.find_production(opts_.start);
            if (!prod)
                throw GrammarError("start production '" + opts_.start + "' is not defined");
            // Return into the entry stub's exit.
            frames_.push_back({FrameKind::Return, p_.entry + 1});
            enter(prod->offset);
            pc = prod->offset;
        }
        ParseResult r;
        bool ok = execute(pc);
        r.success = ok;
        r.consumed = ok ? pos_ : 0;
        r.farthest = std::move(farthest_);
        r.steps = steps_;
        if (stats_)
            stats_->instructions += steps_;
        if (ok && opts_.build_tree)
            r.tree = log_.build(input_);
        return r;
    }

private:
    [[noreturn]] void trap(std::int32_t pc, const std::string& msg) const
    {
        throw MachineTrap("at " + std::to_string(pc) + " (" +
                          std::string(opcode_name(p_.code[static_cast<std::size_t>(pc)].op)) + "): " + msg);
    }

    Frame& top(std::int32_t pc, FrameKind kind)
    {
        if (frames_.empty() || frames_.back().kind != kind)
            trap(pc, "unexpected stack frame");
        return frames_.back();
    }

    void enter(std::int32_t target)
    {
        if (!stats_ || !opts_.instrument)
            return;
        auto t = static_cast<std::size_t>(target);
        if (production_of_[t] && !memoized_[t])
            ++stats_->body_executions[{pos_, *production_of_[t]}];
    }

    void enter_memoized(std::int32_t memo_id)
    {
        if (stats_ && opts_.instrument)
            ++stats_->body_executions[{pos_, p_.memo_points[static_cast<std::size_t>(memo_id)]}];
    }

    // Unwinds to the innermost Alt frame. Returns its target, or -1 when the
    // whole parse failed.
    std::int32_t fail()
    {
        while (!frames_.empty()) {
            Frame f = frames_.back();
            frames_.pop_back();
            switch (f.kind) {
            case FrameKind::Alt:
                pos_ = f.pos;
                symtab_.rollback(f.sym);
                if (stats_) {
                    ++stats_->rewinds;
                    if (opts_.instrument &&
                        (symtab_.size() != f.sym.size || symtab_.open_checkpoints() != f.sym.depth))
                        ++stats_->rewind_violations;
                }
                return f.target;
            case FrameKind::Sym:
                symtab_.rollback(f.sym);
                break;
            case FrameKind::Log:
                log_.rollback(f.log);
                if (stats_ && opts_.instrument && log_.size() != f.log.size)
                    ++stats_->rewind_violations;
                break;
            case FrameKind::Return:
            case FrameKind::Pos:
                break;
            }
        }
        return -1;
    }

    std::int32_t expect(const std::string& what, std::size_t at)
    {
        farthest_.record(at, what);
        return fail();
    }

    std::optional<std::string_view> label(std::int32_t idx) const
    {
        if (idx < 0)
            return std::nullopt;
        return std::string_view(p_.strings[static_cast<std::size_t>(idx)]);
    }

    const std::string& name(std::int32_t idx) const { return p_.names[static_cast<std::size_t>(idx)]; }
    const std::string& str(std::int32_t idx) const { return p_.strings[static_cast<std::size_t>(idx)]; }

    bool execute(std::int32_t pc)
    {
        const bool logging = opts_.build_tree;
        const std::size_t n = input_.size();
        for (;;) {
            if (pc < 0)
                return false;
            if (static_cast<std::size_t>(pc) >= p_.code.size())
                throw MachineTrap("program counter out of range: " + std::to_string(pc));
            if (++steps_ > budget_)
                throw StepBudgetExceeded("instruction budget of " + std::to_string(budget_) +
                                         " exhausted at offset " + std::to_string(pos_));
            const Instruction& ins = p_.code[static_cast<std::size_t>(pc)];
            if (opts_.trace)
                *opts_.trace << pc << '\t' << opcode_name(ins.op) << '\t' << ins.a << '\t' << pos_ << '\n';
            switch (ins.op) {
            case Opcode::Nop:
                ++pc;
                break;
            case Opcode::Fail:
                pc = fail();
                break;
            case Opcode::Alt:
                frames_.push_back({FrameKind::Alt, ins.a, pos_, symtab_.checkpoint()});
                ++pc;
                break;
            case Opcode::Succ: {
                auto& f = top(pc, FrameKind::Alt);
                symtab_.commit_scope(f.sym);
                frames_.pop_back();
                ++pc;
                break;
            }
            case Opcode::Jump:
                pc = ins.a;
                break;
            case Opcode::Call:
                frames_.push_back({FrameKind::Return, pc + 1});
                enter(ins.a);
                pc = ins.a;
                break;
            case Opcode::Ret:
                pc = top(pc, FrameKind::Return).target;
                frames_.pop_back();
                break;
            case Opcode::Pos:
                frames_.push_back({FrameKind::Pos, 0, pos_});
                ++pc;
                break;
            case Opcode::Back:
                pos_ = top(pc, FrameKind::Pos).pos;
                frames_.pop_back();
                ++pc;
                break;
            case Opcode::Skip: {
                auto& f = top(pc, FrameKind::Alt);
                if (pos_ == f.pos) {
                    pc = fail();
                } else {
                    symtab_.commit_scope(f.sym);
                    frames_.pop_back();
                    ++pc;
                }
                break;
            }
            case Opcode::Byte:
                if (pos_ < n && static_cast<std::uint8_t>(input_[pos_]) == ins.a) {
                    ++pos_;
                    ++pc;
                } else {
                    pc = expect(quote_literal(std::string(1, static_cast<char>(ins.a))), pos_);
                }
                break;
            case Opcode::Any:
                if (pos_ < n) {
                    ++pos_;
                    ++pc;
                } else {
                    pc = expect("any character", pos_);
                }
                break;
            case Opcode::Set: {
                const auto& set = p_.classes[static_cast<std::size_t>(ins.a)];
                if (pos_ < n && set.test(static_cast<std::uint8_t>(input_[pos_]))) {
                    ++pos_;
                    ++pc;
                } else {
                    pc = expect(format_class(set), pos_);
                }
                break;
            }
            case Opcode::Str: {
                const auto& s = str(ins.a);
                std::size_t i = 0;
                while (i < s.size() && pos_ + i < n && input_[pos_ + i] == s[i])
                    ++i;
                if (i == s.size()) {
                    pos_ += i;
                    ++pc;
                } else {
                    pc = expect(quote_literal(std::string(1, s[i])), pos_ + i);
                }
                break;
            }
            case Opcode::TPush:
                if (logging)
                    log_.op_push();
                ++pc;
                break;
            case Opcode::TPop:
                if (logging)
                    log_.op_pop();
                ++pc;
                break;
            case Opcode::TLeftFold:
                if (logging)
                    log_.op_fold(pos_, label(ins.a));
                ++pc;
                break;
            case Opcode::TNew:
                if (logging)
                    log_.op_new(pos_);
                ++pc;
                break;
            case Opcode::TLink:
                if (logging)
                    log_.op_link(label(ins.a));
                ++pc;
                break;
            case Opcode::TCapture:
                if (logging)
                    log_.op_capture(pos_);
                ++pc;
                break;
            case Opcode::TTag:
                if (logging)
                    log_.op_tag(str(ins.a));
                ++pc;
                break;
            case Opcode::TReplace:
                if (logging)
                    log_.op_replace(str(ins.a));
                ++pc;
                break;
            case Opcode::TStart:
                frames_.push_back({FrameKind::Log, 0, pos_, {}, log_.checkpoint()});
                ++pc;
                break;
            case Opcode::TCommit:
                log_.commit_scope(top(pc, FrameKind::Log).log);
                frames_.pop_back();
                ++pc;
                break;
            case Opcode::TAbort:
                log_.rollback(top(pc, FrameKind::Log).log);
                frames_.pop_back();
                ++pc;
                break;
            case Opcode::SOpen:
                frames_.push_back({FrameKind::Sym, 0, pos_, symtab_.checkpoint()});
                ++pc;
                break;
            case Opcode::SClose:
                symtab_.rollback(top(pc, FrameKind::Sym).sym);
                frames_.pop_back();
                ++pc;
                break;
            case Opcode::SMask:
                symtab_.mask(name(ins.a));
                ++pc;
                break;
            case Opcode::Symbol: {
                auto start = top(pc, FrameKind::Pos).pos;
                frames_.pop_back();
                symtab_.add(name(ins.a), input_.substr(start, pos_ - start));
                ++pc;
                break;
            }
            case Opcode::Exists:
                pc = symtab_.count(name(ins.a)) > 0 ? pc + 1 : fail();
                break;
            case Opcode::IsDef:
                pc = symtab_.contains(name(ins.a), str(ins.b)) ? pc + 1 : fail();
                break;
            case Opcode::Match: {
                auto t = symtab_.top(name(ins.a));
                if (!t) {
                    pc = fail();
                } else if (input_.substr(pos_).starts_with(*t)) {
                    pos_ += t->size();
                    ++pc;
                } else {
                    pc = expect(quote_literal(*t), pos_);
                }
                break;
            }
            case Opcode::Is:
            case Opcode::Isa: {
                auto start = top(pc, FrameKind::Pos).pos;
                frames_.pop_back();
                auto text = input_.substr(start, pos_ - start);
                bool ok;
                if (ins.op == Opcode::Is) {
                    auto t = symtab_.top(name(ins.a));
                    ok = t && *t == text;
                } else {
                    ok = symtab_.contains(name(ins.a), text);
                }
                pc = ok ? pc + 1 : fail();
                break;
            }
            case Opcode::Lookup:
            case Opcode::TLookup: {
                std::optional<MemoTable::Result> hit;
                if (opts_.memo)
                    hit = memo_.lookup(pos_, ins.a);
                if (!hit) {
                    if (stats_)
                        ++stats_->memo_misses;
                    enter_memoized(ins.a);
                    ++pc;
                    break;
                }
                if (stats_)
                    ++stats_->memo_hits;
                if (hit->failed) {
                    pc = fail();
                    break;
                }
                pos_ = hit->end;
                if (logging && ins.op == Opcode::TLookup)
                    log_.append(hit->records);
                pc = ins.b;
                break;
            }
            case Opcode::Memo:
            case Opcode::TMemo: {
                auto& f = top(pc, FrameKind::Alt);
                if (opts_.memo) {
                    std::span<const AstLog::Record> segment;
                    if (ins.op == Opcode::TMemo) {
                        if (frames_.size() < 2 || frames_[frames_.size() - 2].kind != FrameKind::Log)
                            trap(pc, "tmemo without an enclosing tstart");
                        auto from = frames_[frames_.size() - 2].log.size;
                        segment = std::span(log_.records()).subspan(from);
                    }
                    memo_.store(f.pos, ins.a, false, pos_, segment);
                }
                symtab_.commit_scope(f.sym);
                frames_.pop_back();
                ++pc;
                break;
            }
            case Opcode::MemoFail:
                if (opts_.memo)
                    memo_.store(pos_, ins.a, true, pos_);
                ++pc;
                break;
            case Opcode::Exit:
                return true;
            }
        }
    }

    const Program& p_;
    std::string_view input_;
    const RunOptions& opts_;
    Stats* stats_;
    MemoTable memo_;
    std::uint64_t budget_;
    std::uint64_t steps_ = 0;
    std::size_t pos_ = 0;
    std::vector<Frame> frames_;
    SymbolTable symtab_;
    AstLog log_;
    FarthestFailure farthest_;
    std::vector<const std::string*> production_of_;
    std::vector<bool> memoized_;
};

} // namespace

ParseResult run(const Program& p, std::string_view input, const RunOptions& opts, Stats* stats)
{
    verify(p);
    Machine m(p, input, opts, stats);
    return m.run();
}

} // namespace nez::vm
