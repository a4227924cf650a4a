#include "nez/interpreter.hpp"

#include <ostream>
#include <unordered_map>

#include "nez/conditions.hpp"
#include "nez/error.hpp"
#include "nez/symtab.hpp"
#include "nez/syntax.hpp"

namespace nez::interp {

namespace {

class Evaluator {
public:
    Evaluator(const Grammar& g, std::string_view input, const Options& opts, bool logging)
        : input_(input), opts_(opts), logging_(logging),
          budget_(opts.step_budget.value_or(default_step_budget(input.size())))
    {
        for (const auto& p : g.productions())
            bodies_.emplace(p.name, p.body.get());
    }

    ParseResult run(const std::string& start)
    {
        ParseResult r;
        auto it = bodies_.find(start);
        if (it == bodies_.end())
            throw GrammarError("start production '" + start + "' is not defined");
        r.success = call(start);
        r.consumed = r.success ? pos_ : 0;
        r.farthest = std::move(farthest_);
        r.steps = steps_;
        if (r.success && logging_)
            r.tree = log_.build(input_);
        return r;
    }

private:
    struct Snapshot {
        std::size_t pos;
        SymbolTable::Mark sym;
        AstLog::Mark log;
    };

    Snapshot save() { return {pos_, symtab_.checkpoint(), log_.checkpoint()}; }

    // Marks are released in reverse order of creation.
    void restore(const Snapshot& s)
    {
        log_.rollback(s.log);
        symtab_.rollback(s.sym);
        pos_ = s.pos;
    }

    void keep(const Snapshot& s)
    {
        log_.commit_scope(s.log);
        symtab_.commit_scope(s.sym);
    }

    bool call(const std::string& name)
    {
        auto it = bodies_.find(name);
        if (it == bodies_.end())
            throw GrammarError("reference to undefined nonterminal '" + name + "'");
        if (!opts_.trace)
            return eval(*it->second);
        *opts_.trace << "call " << name << " @" << pos_ << '\n';
        bool ok = eval(*it->second);
        *opts_.trace << (ok ? "ok   " : "fail ") << name << " @" << pos_ << '\n';
        return ok;
    }

    bool expect(const std::string& what)
    {
        farthest_.record(pos_, what);
        return false;
    }

    std::string_view span_from(std::size_t start) const { return input_.substr(start, pos_ - start); }

    bool eval(const Expr& e)
    {
        if (++steps_ > budget_)
            throw StepBudgetExceeded("step budget of " + std::to_string(budget_) + " exhausted at offset " +
                                     std::to_string(pos_));
        if (++depth_ > opts_.depth_limit)
            throw StepBudgetExceeded("evaluation nesting exceeds " + std::to_string(opts_.depth_limit) +
                                     " at offset " + std::to_string(pos_));
        bool ok = step(e);
        --depth_;
        return ok;
    }

    bool step(const Expr& e)
    {
        switch (e.op) {
        case Op::Empty:
            return true;
        case Op::Char:
            if (pos_ < input_.size() && static_cast<std::uint8_t>(input_[pos_]) == e.byte) {
                ++pos_;
                return true;
            }
            return expect(quote_literal(std::string(1, static_cast<char>(e.byte))));
        case Op::Class:
            if (pos_ < input_.size() && e.set.test(static_cast<std::uint8_t>(input_[pos_]))) {
                ++pos_;
                return true;
            }
            return expect(format_class(e.set));
        case Op::Any:
            if (pos_ < input_.size()) {
                ++pos_;
                return true;
            }
            return expect("any character");
        case Op::NonTerminal:
            return call(e.name);
        case Op::Sequence:
            for (const auto& k : e.kids)
                if (!eval(*k))
                    return false;
            return true;
        case Op::Choice:
            for (const auto& k : e.kids) {
                auto s = save();
                if (eval(*k)) {
                    keep(s);
                    return true;
                }
                restore(s);
            }
            return false;
        case Op::Repetition:
            repeat(e.operand());
            return true;
        case Op::OneOrMore:
            if (!eval(e.operand()))
                return false;
            repeat(e.operand());
            return true;
        case Op::Option: {
            auto s = save();
            if (eval(e.operand()))
                keep(s);
            else
                restore(s);
            return true;
        }
        case Op::And: {
            // Only the position is restored; table and tree effects persist.
            std::size_t at = pos_;
            bool ok = eval(e.operand());
            pos_ = at;
            return ok;
        }
        case Op::Not: {
            auto s = save();
            bool ok = eval(e.operand());
            restore(s);
            return !ok;
        }
        case Op::New:
            if (logging_)
                log_.op_new(pos_);
            if (!eval(e.operand()))
                return false;
            if (logging_)
                log_.op_capture(pos_);
            return true;
        case Op::LeftFold:
            if (logging_)
                log_.op_fold(pos_, label_of(e));
            if (!eval(e.operand()))
                return false;
            if (logging_)
                log_.op_capture(pos_);
            return true;
        case Op::Link:
            if (logging_)
                log_.op_push();
            if (!eval(e.operand()))
                return false;
            if (logging_) {
                log_.op_link(label_of(e));
                log_.op_pop();
            }
            return true;
        case Op::Tag:
            if (logging_)
                log_.op_tag(e.name);
            return true;
        case Op::Replace:
            if (logging_)
                log_.op_replace(e.text);
            return true;
        case Op::SymbolDef: {
            std::size_t start = pos_;
            if (!call(e.callee()))
                return false;
            symtab_.add(e.name, span_from(start));
            return true;
        }
        case Op::Exists:
            return symtab_.count(e.name) > 0;
        case Op::ExistsValue:
            return symtab_.contains(e.name, e.text);
        case Op::Match: {
            auto top = symtab_.top(e.name);
            if (!top)
                return false;
            if (input_.substr(pos_).starts_with(*top)) {
                pos_ += top->size();
                return true;
            }
            return expect(quote_literal(*top));
        }
        case Op::Is:
        case Op::Isa: {
            std::size_t start = pos_;
            if (!call(e.callee()))
                return false;
            auto text = span_from(start);
            if (e.op == Op::Is) {
                auto top = symtab_.top(e.name);
                return top && *top == text;
            }
            return symtab_.contains(e.name, text);
        }
        case Op::Block: {
            auto m = symtab_.checkpoint();
            bool ok = eval(e.operand());
            symtab_.rollback(m);
            return ok;
        }
        case Op::Local: {
            auto m = symtab_.checkpoint();
            symtab_.mask(e.name);
            bool ok = eval(e.operand());
            symtab_.rollback(m);
            return ok;
        }
        case Op::IfCond:
            return conditions_.get(e.name) == e.polarity;
        case Op::OnCond: {
            bool previous = conditions_.set(e.name, e.polarity);
            bool ok = eval(e.operand());
            conditions_.restore(e.name, previous);
            return ok;
        }
        }
        return false;
    }

    // Stops at the first iteration that fails or makes no progress; that
    // iteration's effects are undone.
    void repeat(const Expr& body)
    {
        for (;;) {
            auto s = save();
            if (eval(body) && pos_ > s.pos) {
                keep(s);
                continue;
            }
            restore(s);
            return;
        }
    }

    static std::optional<std::string_view> label_of(const Expr& e)
    {
        return e.label ? std::optional<std::string_view>(*e.label) : std::nullopt;
    }

    std::string_view input_;
    const Options& opts_;
    bool logging_;
    std::uint64_t budget_;
    std::uint64_t steps_ = 0;
    std::size_t depth_ = 0;
    std::size_t pos_ = 0;
    std::unordered_map<std::string, const Expr*> bodies_;
    SymbolTable symtab_;
    AstLog log_;
    ConditionStore conditions_;
    FarthestFailure farthest_;
};

} // namespace

ParseResult parse(const Grammar& g, std::string_view input, const Options& opts)
{
    Evaluator ev(g, input, opts, true);
    return ev.run(opts.start.empty() ? g.start() : opts.start);
}

ParseResult match(const Grammar& g, std::string_view input, const Options& opts)
{
    auto stripped = strip_ast_ops(g);
    Evaluator ev(stripped, input, opts, false);
    return ev.run(opts.start.empty() ? g.start() : opts.start);
}

} // namespace nez::interp
