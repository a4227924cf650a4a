#include <algorithm>
#include <array>
#include <unordered_map>

#include "nez/conditions.hpp"
#include "nez/error.hpp"
#include "nez/vm.hpp"

namespace nez::vm {

namespace {

constexpr std::array<std::string_view, 40> opcode_names{
    "nop",      "fail",     "alt",       "succ",   "jump",     "call",     "ret",      "pos",
    "back",     "skip",     "byte",      "any",    "set",      "str",      "tpush",    "tpop",
    "tleftfold", "tnew",    "tlink",     "tcapture", "ttag",   "treplace", "tstart",   "tcommit",
    "tabort",   "sopen",    "sclose",    "smask",  "symbol",   "exists",   "isdef",    "match",
    "is",       "isa",      "lookup",    "memo",   "memofail", "tlookup",  "tmemo",    "exit",
};

bool ast_op(const Expr& e) { return is_ast_op(e.op); }
bool symbol_op(const Expr& e) { return is_symbol_op(e.op); }

class Compiler {
public:
    explicit Compiler(const Grammar& g)
        : g_(g), builds_tree_(transitive_property(g, ast_op)), symbolic_(transitive_property(g, symbol_op))
    {
        auto refs = reference_counts(g);
        for (const auto& prod : g.productions()) {
            auto it = refs.find(prod.name);
            if (it != refs.end() && it->second >= 2 && !symbolic_.at(prod.name)) {
                memo_ids_[prod.name] = static_cast<std::int32_t>(p_.memo_points.size());
                p_.memo_points.push_back(prod.name);
            }
        }
    }

    Program run()
    {
        call(g_.start());
        emit(Opcode::Exit);
        for (const auto& prod : g_.productions()) {
            p_.productions.push_back({prod.name, here()});
            production(prod);
        }
        for (auto [at, name] : calls_) {
            auto* entry = p_.find_production(name);
            p_.code[at].a = entry->offset;
        }
        p_.entry = 0;
        return std::move(p_);
    }

private:
    std::int32_t here() const { return static_cast<std::int32_t>(p_.code.size()); }

    std::size_t emit(Opcode op, std::int32_t a = 0, std::int32_t b = 0)
    {
        p_.code.push_back({op, a, b});
        return p_.code.size() - 1;
    }

    void patch(std::size_t at) { p_.code[at].a = here(); }
    void patch_b(std::size_t at) { p_.code[at].b = here(); }

    template <typename T>
    static std::int32_t intern(std::vector<T>& pool, const T& value)
    {
        auto it = std::find(pool.begin(), pool.end(), value);
        if (it != pool.end())
            return static_cast<std::int32_t>(it - pool.begin());
        pool.push_back(value);
        return static_cast<std::int32_t>(pool.size() - 1);
    }

    std::int32_t string(const std::string& s) { return intern(p_.strings, s); }
    std::int32_t name(const std::string& s) { return intern(p_.names, s); }
    std::int32_t label(const std::optional<std::string>& l) { return l ? string(*l) : -1; }

    void call(const std::string& production)
    {
        calls_.emplace_back(emit(Opcode::Call), production);
    }

    bool has_ast(const Expr& e) const
    {
        if (is_ast_op(e.op))
            return true;
        if (calls_production(e.op) && builds_tree_.at(e.callee()))
            return true;
        return std::any_of(e.kids.begin(), e.kids.end(), [&](const ExprPtr& k) { return has_ast(*k); });
    }

    void production(const Production& prod)
    {
        auto memo = memo_ids_.find(prod.name);
        if (memo == memo_ids_.end()) {
            expr(*prod.body);
            emit(Opcode::Ret);
            return;
        }
        std::int32_t id = memo->second;
        if (builds_tree_.at(prod.name)) {
            auto lookup = emit(Opcode::TLookup, id);
            emit(Opcode::TStart);
            auto alt = emit(Opcode::Alt);
            expr(*prod.body);
            emit(Opcode::TMemo, id);
            emit(Opcode::TCommit);
            patch_b(lookup);
            emit(Opcode::Ret);
            patch(alt);
            emit(Opcode::TAbort);
        } else {
            auto lookup = emit(Opcode::Lookup, id);
            auto alt = emit(Opcode::Alt);
            expr(*prod.body);
            emit(Opcode::Memo, id);
            patch_b(lookup);
            emit(Opcode::Ret);
            patch(alt);
        }
        emit(Opcode::MemoFail, id);
        emit(Opcode::Fail);
    }

    void chars(const std::string& run)
    {
        if (run.size() == 1)
            emit(Opcode::Byte, static_cast<std::uint8_t>(run[0]));
        else
            emit(Opcode::Str, string(run));
    }

    void expr(const Expr& e)
    {
        switch (e.op) {
        case Op::Empty:
            emit(Opcode::Nop);
            return;
        case Op::Char:
            emit(Opcode::Byte, e.byte);
            return;
        case Op::Class:
            emit(Opcode::Set, intern(p_.classes, e.set));
            return;
        case Op::Any:
            emit(Opcode::Any);
            return;
        case Op::NonTerminal:
            call(e.name);
            return;
        case Op::Sequence:
            for (std::size_t i = 0; i < e.kids.size();) {
                if (e.kids[i]->op == Op::Char) {
                    std::string run;
                    for (; i < e.kids.size() && e.kids[i]->op == Op::Char; ++i)
                        run.push_back(static_cast<char>(e.kids[i]->byte));
                    chars(run);
                } else {
                    expr(*e.kids[i++]);
                }
            }
            return;
        case Op::Choice: {
            std::vector<std::size_t> to_end;
            for (std::size_t i = 0; i + 1 < e.kids.size(); ++i) {
                bool tree = has_ast(*e.kids[i]);
                if (tree)
                    emit(Opcode::TStart);
                auto alt = emit(Opcode::Alt);
                expr(*e.kids[i]);
                emit(Opcode::Succ);
                if (tree)
                    emit(Opcode::TCommit);
                to_end.push_back(emit(Opcode::Jump));
                patch(alt);
                if (tree)
                    emit(Opcode::TAbort);
            }
            expr(*e.kids.back());
            for (auto at : to_end)
                patch(at);
            return;
        }
        case Op::Repetition: {
            bool tree = has_ast(e.operand());
            auto top = here();
            if (tree)
                emit(Opcode::TStart);
            auto alt = emit(Opcode::Alt);
            expr(e.operand());
            emit(Opcode::Skip);
            if (tree)
                emit(Opcode::TCommit);
            emit(Opcode::Jump, top);
            patch(alt);
            if (tree)
                emit(Opcode::TAbort);
            return;
        }
        case Op::OneOrMore:
        case Op::Option:
            throw UnsupportedConstruct(std::string("internal: ") + std::string(op_name(e.op)) +
                                       " must be desugared before compilation");
        case Op::And:
            emit(Opcode::Pos);
            expr(e.operand());
            emit(Opcode::Back);
            return;
        case Op::Not: {
            bool tree = has_ast(e.operand());
            if (tree)
                emit(Opcode::TStart);
            auto alt = emit(Opcode::Alt);
            expr(e.operand());
            emit(Opcode::Succ);
            emit(Opcode::Fail);
            patch(alt);
            if (tree)
                emit(Opcode::TAbort);
            return;
        }
        case Op::New:
            emit(Opcode::TNew);
            expr(e.operand());
            emit(Opcode::TCapture);
            return;
        case Op::LeftFold:
            emit(Opcode::TLeftFold, label(e.label));
            expr(e.operand());
            emit(Opcode::TCapture);
            return;
        case Op::Link:
            emit(Opcode::TPush);
            expr(e.operand());
            emit(Opcode::TLink, label(e.label));
            emit(Opcode::TPop);
            return;
        case Op::Tag:
            emit(Opcode::TTag, string(e.name));
            return;
        case Op::Replace:
            emit(Opcode::TReplace, string(e.text));
            return;
        case Op::SymbolDef:
        case Op::Is:
        case Op::Isa: {
            emit(Opcode::Pos);
            call(e.callee());
            auto op = e.op == Op::SymbolDef ? Opcode::Symbol : e.op == Op::Is ? Opcode::Is : Opcode::Isa;
            emit(op, name(e.name));
            return;
        }
        case Op::Exists:
            emit(Opcode::Exists, name(e.name));
            return;
        case Op::ExistsValue: {
            auto n = name(e.name);
            emit(Opcode::IsDef, n, string(e.text));
            return;
        }
        case Op::Match:
            emit(Opcode::Match, name(e.name));
            return;
        case Op::Block:
            emit(Opcode::SOpen);
            expr(e.operand());
            emit(Opcode::SClose);
            return;
        case Op::Local:
            emit(Opcode::SOpen);
            emit(Opcode::SMask, name(e.name));
            expr(e.operand());
            emit(Opcode::SClose);
            return;
        case Op::IfCond:
        case Op::OnCond:
            throw UnsupportedConstruct("parsing conditions must be eliminated before compilation");
        }
    }

    const Grammar& g_;
    Program p_;
    std::unordered_map<std::string, bool> builds_tree_;
    std::unordered_map<std::string, bool> symbolic_;
    std::unordered_map<std::string, std::int32_t> memo_ids_;
    std::vector<std::pair<std::size_t, std::string>> calls_;
};

} // namespace

std::string_view opcode_name(Opcode op) noexcept { return opcode_names[static_cast<std::size_t>(op)]; }

std::optional<Opcode> opcode_from_name(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < opcode_names.size(); ++i)
        if (opcode_names[i] == name)
            return static_cast<Opcode>(i);
    return std::nullopt;
}

const ProductionEntry* Program::production_at(std::int32_t offset) const
{
    for (const auto& p : productions)
        if (p.offset == offset)
            return &p;
    return nullptr;
}

const ProductionEntry* Program::find_production(std::string_view name) const
{
    for (const auto& p : productions)
        if (p.name == name)
            return &p;
    return nullptr;
}

Program compile(const Grammar& g)
{
    auto conditions = collect_conditions(g);
    if (!conditions.empty())
        throw UnsupportedConstruct("parsing condition '" + *conditions.begin() +
                                   "' must be eliminated before compilation");
    require_valid(g);
    auto d = desugar(g, DesugarMode::Native);
    return Compiler(d).run();
}

} // namespace nez::vm
