// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nez/conditions.hpp"
#include "nez/error.hpp"
#include "nez/interpreter.hpp"
#include "nez/symtab.hpp"
#include "nez/syntax.hpp"
#include "nez/vm.hpp"
#include "support/corpus.hpp"
#include "support/outcome.hpp"
#include "support/random_grammar.hpp"

using namespace nez;
using namespace nez::testing;

namespace {

// Pinned tolerances.
constexpr double kExampleSeconds = 1.0;
constexpr std::size_t kRandomGrammars = 3000;
constexpr std::size_t kInputsPerGrammar = 4;
constexpr std::size_t kMinRandomCases = 1000;
constexpr double kEquivalenceSeconds = 60.0;
constexpr double kMaxDoublingRatio = 2.2;
constexpr std::size_t kLinearBase = 8 * 1024;
constexpr double kLinearSeconds = 30.0;
constexpr std::size_t kStateSequences = 10000;
constexpr std::uint64_t kSeed = 0x6e657a2d61636365ull;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures.size() < 8)
            failures.push_back(what);
        else if (!ok)
            failures.push_back({});
    }

    bool ok() const { return failures.empty(); }
};

std::string show(const Outcome& o)
{
    std::ostringstream s;
    s << o;
    return s.str();
}

std::string quoted(const std::string& s) { return quote_literal(s); }

/// Does the outcome satisfy a hand-derived manifest expectation?
bool meets(const Outcome& o, const CorpusCase& c, bool with_tree)
{
    if (!o.error.empty() || o.success != c.accept)
        return false;
    if (!c.accept)
        return true;
    if (c.consumed && o.consumed != *c.consumed)
        return false;
    if (with_tree && c.check_tree && o.tree != c.tree)
        return false;
    return true;
}

int report(int id, const std::string& title, const Check& c, const std::string& detail)
{
    std::cout << (c.ok() ? "PASS" : "FAIL") << " [" << id << "] " << title << " (" << detail << ")\n";
    for (const auto& f : c.failures)
        if (!f.empty())
            std::cout << "    " << f << '\n';
    if (c.failures.size() > 8)
        std::cout << "    ... " << c.failures.size() - 8 << " more\n";
    return c.ok() ? 0 : 1;
}

bool has_condition_ops(const Grammar& g)
{
    bool found = false;
    for (const auto& p : g.productions())
        visit(*p.body, [&](const Expr& e) { found = found || is_condition_op(e.op); });
    return found;
}

// 1 ------------------------------------------------------------------------

int worked_examples()
{
    static const std::vector<std::string> files{
        "math.nez", "typedef.nez", "typedef_decls.nez", "name_match.nez", "name_is.nez", "xml_scoped.nez",
        "xml_unscoped.nez", "list.nez", "binary.nez", "fold.nez", "fold_labeled.nez", "capture.nez",
        "spacing.nez", "ifstmt.nez"};
    Check c;
    auto t0 = Clock::now();
    std::size_t cases = 0;
    for (const auto& file : files) {
        const auto& cg = corpus_grammar(file);
        auto program = vm::compile(eliminate_conditions(cg.grammar));
        for (const auto& k : cg.cases) {
            ++cases;
            auto i = interp_parse(cg.grammar, k.input);
            auto v = vm_parse(program, k.input);
            c.expect(meets(i, k, true), file + " interp " + quoted(k.input) + ": " + show(i));
            c.expect(meets(v, k, true), file + " vm " + quoted(k.input) + ": " + show(v));
        }
    }

    // Symbol-table examples stated directly in terms of a single production.
    auto tg = corpus_grammar("typedef.nez").grammar;
    tg.add("Prog", parse_expression("TypeDef S* TypeName"));
    tg.set_start("Prog");
    c.expect(interp::match(tg, "typedef int uint; uint").consumed == 22, "typedef: uint after typedef");
    tg.set_start("TypeName");
    c.expect(!interp::match(tg, "uint").success, "typedef: uint without typedef");
    c.expect(!interp::match(parse_grammar("S = 'a'"), "bx").success, "'a' against bx");

    double secs = seconds_since(t0);
    c.expect(secs < kExampleSeconds, "took " + std::to_string(secs) + " s");
    return report(1, "worked examples", c, std::to_string(cases) + " corpus cases, " + std::to_string(secs) + " s");
}

// 2 ------------------------------------------------------------------------

int engine_equivalence()
{
    Check c;
    auto t0 = Clock::now();
    GrammarGenerator gen(kSeed);
    std::size_t compared = 0;
    std::size_t skipped = 0;

    auto compare = [&](const Grammar& g, const std::string& input, const std::string& label) {
        auto eliminated = eliminate_conditions(g);
        auto program = vm::compile(eliminated);
        auto oracle = interp_parse(g, input);
        auto flat = interp_parse(eliminated, input);
        auto on = vm_parse(program, input, true);
        auto off = vm_parse(program, input, false);
        if (oracle.budget() || flat.budget() || on.budget() || off.budget()) {
            ++skipped;
            return;
        }
        ++compared;
        bool same = oracle == flat && oracle == on && oracle == off;
        c.expect(same, label + " on " + quoted(input) + ": interp " + show(oracle) + " / eliminated " + show(flat) +
                           " / vm " + show(on) + " / vm-nomemo " + show(off));
    };

    for (std::size_t i = 0; i < kRandomGrammars; ++i) {
        auto g = gen.grammar();
        for (std::size_t k = 0; k < kInputsPerGrammar; ++k)
            compare(g, gen.input(), "random grammar #" + std::to_string(i) + " {" + format_grammar(g) + "}");
    }
    std::size_t random_compared = compared;
    for (const auto& cg : corpus())
        for (const auto& k : cg.cases)
            compare(cg.grammar, k.input, cg.file);

    double secs = seconds_since(t0);
    c.expect(random_compared >= kMinRandomCases, "only " + std::to_string(random_compared) + " random cases compared");
    c.expect(secs < kEquivalenceSeconds, "took " + std::to_string(secs) + " s");
    return report(2, "vm/interpreter equivalence", c,
                  std::to_string(random_compared) + " random + " + std::to_string(compared - random_compared) +
                      " corpus cases, " + std::to_string(skipped) + " skipped on step budget, " +
                      std::to_string(secs) + " s");
}

// 3 ------------------------------------------------------------------------

int ast_independence()
{
    Check c;
    std::size_t cases = 0;
    for (const auto& cg : corpus()) {
        auto program = vm::compile(eliminate_conditions(cg.grammar));
        for (const auto& k : cg.cases) {
            ++cases;
            auto ip = interp_parse(cg.grammar, k.input);
            auto im = interp_match(cg.grammar, k.input);
            auto vp = vm_parse(program, k.input);
            auto vmm = vm_match(program, k.input);
            auto agree = [](const Outcome& p, const Outcome& m) {
                return p.error == m.error && p.success == m.success && p.consumed == m.consumed;
            };
            c.expect(agree(ip, im), cg.file + " interp " + quoted(k.input) + ": " + show(ip) + " vs " + show(im));
            c.expect(agree(vp, vmm), cg.file + " vm " + quoted(k.input) + ": " + show(vp) + " vs " + show(vmm));
        }
    }
    return report(3, "match equals parse", c, std::to_string(cases) + " corpus cases, both engines");
}

// 4 ------------------------------------------------------------------------

int condition_elimination()
{
    Check c;
    std::size_t grammars = 0;
    std::size_t cases = 0;
    auto check_grammar = [&](const Grammar& g, const std::vector<std::string>& inputs, const std::string& label) {
        auto conditions = collect_conditions(g);
        if (conditions.empty())
            return;
        ++grammars;
        auto e = eliminate_conditions(g);
        c.expect(!has_condition_ops(e), label + ": condition operators survive");
        c.expect(eliminate_conditions(e) == e, label + ": elimination is not idempotent");
        if (conditions.size() == 1)
            c.expect(e.size() <= 2 * g.size(), label + ": " + std::to_string(g.size()) + " -> " +
                                                    std::to_string(e.size()) + " productions");
        std::size_t bound = g.size() << conditions.size();
        c.expect(e.size() <= bound, label + ": exceeds 2^k bound");
        auto program = vm::compile(e);
        for (const auto& in : inputs) {
            auto dyn = interp_parse(g, in);
            if (dyn.budget())
                continue;
            ++cases;
            auto stat = interp_parse(e, in);
            auto machine = vm_parse(program, in);
            c.expect(dyn == stat && dyn == machine, label + " on " + quoted(in) + ": dynamic " + show(dyn) +
                                                        " / eliminated " + show(stat) + " / vm " + show(machine));
        }
    };

    for (const auto& cg : corpus()) {
        std::vector<std::string> inputs;
        for (const auto& k : cg.cases)
            inputs.push_back(k.input);
        check_grammar(cg.grammar, inputs, cg.file);
    }
    GrammarGenerator gen(kSeed + 4);
    for (int i = 0; i < 300; ++i) {
        auto g = gen.grammar();
        std::vector<std::string> inputs{gen.input(), gen.input(), gen.input()};
        check_grammar(g, inputs, "random {" + format_grammar(g) + "}");
    }
    return report(4, "condition elimination", c,
                  std::to_string(grammars) + " grammars with conditions, " + std::to_string(cases) + " cases");
}

// 5 ------------------------------------------------------------------------

int memoization()
{
    Check c;
    std::size_t cases = 0;
    for (const auto& cg : corpus()) {
        auto program = vm::compile(eliminate_conditions(cg.grammar));
        for (const auto& k : cg.cases) {
            ++cases;
            auto on = vm_parse(program, k.input, true);
            auto off = vm_parse(program, k.input, false);
            c.expect(on == off, cg.file + " " + quoted(k.input) + ": " + show(on) + " vs " + show(off));
        }
    }

    auto program = vm::compile(corpus_grammar("backtrack.nez").grammar);
    vm::RunOptions o;
    o.instrument = true;
    vm::Stats with;
    vm::match(program, "aax", o, &with);
    o.memo = false;
    vm::Stats without;
    vm::match(program, "aax", o, &without);
    auto a_on = with.executions(0, "A");
    auto a_off = without.executions(0, "A");
    c.expect(a_off >= 2, "A at 0 without memo ran " + std::to_string(a_off) + " times");
    c.expect(a_on == 1, "A at 0 with memo ran " + std::to_string(a_on) + " times");
    c.expect(with.rewind_violations == 0 && without.rewind_violations == 0, "rewind snapshot mismatch");
    return report(5, "memoization transparency and effect", c,
                  std::to_string(cases) + " corpus cases; A at 0: " + std::to_string(a_off) + " -> " +
                      std::to_string(a_on) + " body executions");
}

// 6 ------------------------------------------------------------------------

/// Random arithmetic over digits, + and * with nested parentheses; every
/// prefix of the nesting forces the backtracking grammar to retry operands.
std::string expression_text(std::size_t target, std::mt19937_64& rng)
{
    std::string out;
    std::function<void(std::size_t, int)> term = [&](std::size_t budget, int depth) {
        std::uniform_int_distribution<int> d(0, 9);
        if (budget < 6 || depth > 40) {
            out += static_cast<char>('0' + d(rng));
            return;
        }
        if (d(rng) < 4) {
            out += '(';
            term(budget - 2, depth + 1);
            out += ')';
            return;
        }
        std::size_t left = std::uniform_int_distribution<std::size_t>(1, budget - 2)(rng);
        term(left, depth + 1);
        out += d(rng) < 5 ? '+' : '*';
        term(budget - left - 1, depth + 1);
    };
    while (out.size() < target) {
        if (!out.empty())
            out += '+';
        term(std::min<std::size_t>(256, target - out.size() + 1), 0);
    }
    return out;
}

int linear_time()
{
    Check c;
    auto t0 = Clock::now();
    auto program = vm::compile(corpus_grammar("expr.nez").grammar);
    std::mt19937_64 rng(kSeed + 6);
    std::vector<std::uint64_t> counts;
    std::ostringstream detail;
    for (std::size_t n = kLinearBase; n <= 8 * kLinearBase; n *= 2) {
        auto text = expression_text(n, rng);
        vm::Stats stats;
        ParseResult r;
        try {
            r = vm::match(program, text, {}, &stats);
        } catch (const Error& e) {
            c.expect(false, "size " + std::to_string(n) + ": " + e.what());
            break;
        }
        c.expect(r.success && r.consumed == text.size(), "size " + std::to_string(text.size()) + " not accepted");
        counts.push_back(stats.instructions);
        detail << (counts.size() > 1 ? ", " : "") << text.size() << "B:" << stats.instructions;
    }
    for (std::size_t i = 1; i < counts.size(); ++i) {
        double ratio = static_cast<double>(counts[i]) / static_cast<double>(counts[i - 1]);
        detail << (i == 1 ? "; ratios " : " ") << ratio;
        c.expect(ratio <= kMaxDoublingRatio, "doubling ratio " + std::to_string(ratio));
    }
    double secs = seconds_since(t0);
    c.expect(secs < kLinearSeconds, "took " + std::to_string(secs) + " s");
    return report(6, "linear time with memoization", c, detail.str() + "; " + std::to_string(secs) + " s");
}

// 7 ------------------------------------------------------------------------

struct TableView {
    std::vector<std::string> rows;
    friend bool operator==(const TableView&, const TableView&) = default;
};

TableView observe(const SymbolTable& t)
{
    TableView v;
    for (const char* name : {"A", "B", "C"}) {
        auto top = t.top(name);
        std::string row = std::string(name) + ":" + (top ? std::string(*top) : "-") + ":" + std::to_string(t.count(name));
        for (const char* x : {"", "x", "y", "z"})
            row += t.contains(name, x) ? "1" : "0";
        v.rows.push_back(row);
    }
    return v;
}

int state_restoration()
{
    Check c;
    std::mt19937_64 rng(kSeed + 7);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    static const char* names[] = {"A", "B", "C"};
    static const char* values[] = {"", "x", "y", "z"};
    static const char* texts[] = {"T", "U", "lab"};
    std::size_t stale_checks = 0;

    for (std::size_t seq = 0; seq < kStateSequences; ++seq) {
        SymbolTable t;
        auto empty = observe(t);
        std::vector<std::pair<SymbolTable::Mark, TableView>> marks;
        std::vector<SymbolTable::Mark> consumed;
        marks.push_back({t.checkpoint(), observe(t)});

        AstLog log;
        std::vector<std::pair<AstLog::Mark, std::vector<AstLog::Record>>> log_marks;
        std::vector<AstLog::Mark> log_consumed;
        log_marks.push_back({log.checkpoint(), log.records()});

        std::size_t steps = 1 + pick(40);
        for (std::size_t s = 0; s < steps; ++s) {
            switch (pick(12)) {
            case 0:
            case 1: t.add(names[pick(3)], values[pick(4)]); break;
            case 2: t.mask(names[pick(3)]); break;
            case 3: marks.push_back({t.checkpoint(), observe(t)}); break;
            case 4:
                if (marks.size() > 1) {
                    t.rollback(marks.back().first);
                    c.expect(observe(t) == marks.back().second, "symtab rollback did not restore its snapshot");
                    consumed.push_back(marks.back().first);
                    marks.pop_back();
                }
                break;
            case 5:
                if (marks.size() > 1) {
                    t.commit_scope(marks.back().first);
                    consumed.push_back(marks.back().first);
                    marks.pop_back();
                }
                break;
            case 6: {
                // A mark that is consumed or not innermost must be refused.
                std::optional<SymbolTable::Mark> bad;
                if (!consumed.empty() && pick(2))
                    bad = consumed[pick(consumed.size())];
                else if (marks.size() > 1)
                    bad = marks[pick(marks.size() - 1)].first;
                if (bad) {
                    ++stale_checks;
                    bool threw = false;
                    try {
                        pick(2) ? t.rollback(*bad) : t.commit_scope(*bad);
                    } catch (const StaleMark&) {
                        threw = true;
                    }
                    c.expect(threw, "symtab accepted a stale mark");
                }
                break;
            }
            case 7:
                switch (pick(8)) {
                case 0: log.op_new(pick(10)); break;
                case 1: log.op_fold(pick(10), pick(2) ? std::optional<std::string_view>(texts[2]) : std::nullopt); break;
                case 2: log.op_capture(pick(10)); break;
                case 3: log.op_tag(texts[pick(2)]); break;
                case 4: log.op_replace(texts[pick(2)]); break;
                case 5: log.op_push(); break;
                case 6: log.op_link(); break;
                default: log.op_pop(); break;
                }
                break;
            case 8: log_marks.push_back({log.checkpoint(), log.records()}); break;
            case 9:
                if (log_marks.size() > 1) {
                    log.rollback(log_marks.back().first);
                    c.expect(log.records() == log_marks.back().second, "ast log rollback did not restore its snapshot");
                    log_consumed.push_back(log_marks.back().first);
                    log_marks.pop_back();
                }
                break;
            case 10:
                if (log_marks.size() > 1) {
                    log.commit_scope(log_marks.back().first);
                    log_consumed.push_back(log_marks.back().first);
                    log_marks.pop_back();
                }
                break;
            default: {
                std::optional<AstLog::Mark> bad;
                if (!log_consumed.empty() && pick(2))
                    bad = log_consumed[pick(log_consumed.size())];
                else if (log_marks.size() > 1)
                    bad = log_marks[pick(log_marks.size() - 1)].first;
                if (bad) {
                    ++stale_checks;
                    bool threw = false;
                    try {
                        pick(2) ? log.rollback(*bad) : log.commit_scope(*bad);
                    } catch (const StaleMark&) {
                        threw = true;
                    }
                    c.expect(threw, "ast log accepted a stale mark");
                }
                break;
            }
            }
        }

        while (marks.size() > 1) {
            t.rollback(marks.back().first);
            marks.pop_back();
        }
        t.rollback(marks.back().first);
        c.expect(observe(t) == empty && t.size() == 0, "symtab not empty after rollback to the initial mark");

        while (log_marks.size() > 1) {
            log.rollback(log_marks.back().first);
            log_marks.pop_back();
        }
        log.rollback(log_marks.back().first);
        c.expect(log.size() == 0 && !log.build(""), "ast log not empty after rollback to the initial mark");
        bool no_root = false;
        try {
            log.commit("");
        } catch (const CommitWithoutRoot&) {
            no_root = true;
        }
        c.expect(no_root, "empty log committed a tree");
    }
    return report(7, "state restoration", c,
                  std::to_string(kStateSequences) + " sequences, " + std::to_string(stale_checks) +
                      " stale-mark probes");
}

// 8 ------------------------------------------------------------------------

int syntax_round_trip()
{
    Check c;
    for (const auto& cg : corpus()) {
        auto text = format_grammar(cg.grammar);
        Grammar again;
        try {
            again = parse_grammar(text);
        } catch (const Error& e) {
            c.expect(false, cg.file + ": formatted text does not parse: " + e.what());
            continue;
        }
        again.set_start(cg.grammar.start());
        c.expect(again == cg.grammar, cg.file + ": parse(format(g)) != g");
    }

    // Precedence: suffix 4 > prefix 3 > sequence 2 > choice 1.
    auto a = pe::chr('a');
    auto b = pe::chr('b');
    auto cc = pe::chr('c');
    struct Case {
        const char* text;
        ExprPtr expected;
    };
    std::vector<Case> table{
        {"'a' 'b' / 'c'", pe::choice({pe::seq({a, b}), cc})},
        {"'a' ('b' / 'c')", pe::seq({a, pe::choice({b, cc})})},
        {"!'a'*", pe::not_(pe::star(a))},
        {"&'a'+", pe::and_(pe::plus(a))},
        {"!'a' 'b'", pe::seq({pe::not_(a), b})},
        {"'a' 'b'?", pe::seq({a, pe::opt(b)})},
        {"!'a' / 'b'", pe::choice({pe::not_(a), b})},
        {"('a' / 'b')*", pe::star(pe::choice({a, b}))},
        {"!('a' 'b')", pe::not_(pe::seq({a, b}))},
        {"(!'a')?", pe::opt(pe::not_(a))},
    };
    for (const auto& k : table) {
        auto e = parse_expression(k.text);
        c.expect(*e == *k.expected, std::string("precedence: ") + k.text);
        auto text = format_expression(*e);
        c.expect(*parse_expression(text) == *e, std::string("format: ") + k.text + " -> " + text);
    }
    return report(8, "grammar syntax round-trip", c,
                  std::to_string(corpus().size()) + " corpus grammars, " + std::to_string(table.size()) +
                      " precedence cases");
}

} // namespace

int main()
{
    int failed = 0;
    std::vector<int (*)()> criteria{worked_examples,  engine_equivalence, ast_independence, condition_elimination,
                                    memoization,     linear_time,        state_restoration, syntax_round_trip};
    for (auto criterion : criteria) {
        try {
            failed += criterion();
        } catch (const std::exception& e) {
            std::cout << "FAIL criterion aborted: " << e.what() << '\n';
            ++failed;
        }
        std::cout.flush();
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
    return failed;
}
