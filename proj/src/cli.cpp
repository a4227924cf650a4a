#include "nez/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "nez/conditions.hpp"
#include "nez/error.hpp"
#include "nez/interpreter.hpp"
#include "nez/syntax.hpp"
#include "nez/vm.hpp"

namespace nez::cli {

namespace {

struct Config {
    std::string command;
    std::string grammar_path;
    std::vector<std::string> inputs;
    std::vector<std::string> texts;
    std::string engine = "vm";
    std::string format = "sexp";
    bool strict = false;
    bool no_memo = false;
    bool desugar_full = false;
    bool trace = false;
    bool pretty = false;
    std::string start;
    int iters = 10;
    int warmup = 2;
};

struct Input {
    std::string name;
    std::string bytes;
};

/// Thrown to abort a command with an exit status after the message was printed.
struct Abort {
    int code;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

class Runner {
public:
    Runner(const Config& cfg, std::istream& in, std::ostream& out, std::ostream& err)
        : cfg_(cfg), in_(in), out_(out), err_(err)
    {
    }

    int run()
    {
        try {
            load_grammar();
            if (cfg_.command == "check")
                return check();
            if (cfg_.command == "eliminate") {
                out_ << format_grammar(eliminated());
                return Success;
            }
            if (cfg_.command == "compile") {
                out_ << vm::disassemble(program());
                return Success;
            }
            auto inputs = read_inputs();
            if (cfg_.command == "bench")
                return bench(inputs);
            int worst = Success;
            for (const auto& input : inputs)
                worst = std::max(worst, parse_one(input));
            return worst;
        } catch (const Abort& a) {
            return a.code;
        }
    }

private:
    [[noreturn]] void grammar_failure(const std::string& msg)
    {
        err_ << cfg_.grammar_path << ": " << msg << '\n';
        throw Abort{GrammarFailure};
    }

    void load_grammar()
    {
        std::string text;
        if (!read_file(cfg_.grammar_path, text))
            grammar_failure("cannot read grammar file");
        try {
            grammar_ = parse_grammar(text);
        } catch (const SyntaxError& e) {
            err_ << cfg_.grammar_path << ':' << e.what() << '\n';
            throw Abort{GrammarFailure};
        } catch (const GrammarError& e) {
            err_ << cfg_.grammar_path << ':' << e.what() << '\n';
            throw Abort{GrammarFailure};
        }
        if (!cfg_.start.empty()) {
            if (!grammar_.contains(cfg_.start))
                grammar_failure("start production '" + cfg_.start + "' is not defined");
            grammar_.set_start(cfg_.start);
        }
        report_ = validate(grammar_);
        if (!report_.ok() && cfg_.command != "check") {
            err_ << cfg_.grammar_path << ": invalid grammar\n" << report_.to_string();
            throw Abort{GrammarFailure};
        }
        if (report_.ok() && cfg_.desugar_full) {
            try {
                grammar_ = desugar(grammar_, DesugarMode::Full);
            } catch (const GrammarError& e) {
                grammar_failure(e.what());
            }
        }
    }

    const Grammar& eliminated()
    {
        if (!eliminated_)
            eliminated_ = eliminate_conditions(grammar_);
        return *eliminated_;
    }

    const vm::Program& program()
    {
        if (!program_) {
            try {
                program_ = vm::compile(eliminated());
            } catch (const GrammarError& e) {
                grammar_failure(e.what());
            }
        }
        return *program_;
    }

    static bool read_file(const std::string& path, std::string& out)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            return false;
        out.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        return true;
    }

    std::vector<Input> read_inputs()
    {
        std::vector<Input> inputs;
        for (const auto& path : cfg_.inputs) {
            if (path == "-") {
                inputs.push_back({"<stdin>", std::string(std::istreambuf_iterator<char>(in_), {})});
                continue;
            }
            Input input{path, {}};
            if (!read_file(path, input.bytes)) {
                err_ << path << ": cannot read input file\n";
                throw Abort{InputFailure};
            }
            inputs.push_back(std::move(input));
        }
        for (const auto& t : cfg_.texts)
            inputs.push_back({"<text>", t});
        if (inputs.empty())
            inputs.push_back({"<stdin>", std::string(std::istreambuf_iterator<char>(in_), {})});
        return inputs;
    }

    ParseResult execute(const std::string& input, bool tree)
    {
        if (cfg_.engine == "interp") {
            interp::Options o;
            o.trace = cfg_.trace ? &err_ : nullptr;
            return tree ? interp::parse(grammar_, input, o) : interp::match(grammar_, input, o);
        }
        vm::RunOptions o;
        o.memo = !cfg_.no_memo;
        o.build_tree = tree;
        o.trace = cfg_.trace ? &err_ : nullptr;
        return vm::run(program(), input, o);
    }

    void print_tree(const std::optional<Tree>& tree)
    {
        if (cfg_.format == "json") {
            out_ << (tree ? to_json(*tree) : nlohmann::json(nullptr))
                        .dump(cfg_.pretty ? 2 : -1, ' ', false, nlohmann::json::error_handler_t::replace)
                 << '\n';
        } else if (!tree) {
            out_ << "()\n";
        } else {
            out_ << (cfg_.pretty ? to_pretty_sexp(*tree) : to_sexp(*tree)) << '\n';
        }
    }

    void parse_error(const Input& input, std::size_t offset, const std::set<std::string>& expected)
    {
        auto span = locate(input.bytes, offset, offset);
        err_ << input.name << ':' << span.line << ':' << span.column << ": parse error, expected {";
        bool first = true;
        for (const auto& e : expected) {
            err_ << (first ? "" : ", ") << e;
            first = false;
        }
        err_ << "}\n";
    }

    int parse_one(const Input& input)
    {
        bool tree = cfg_.command == "parse";
        ParseResult r;
        try {
            r = execute(input.bytes, tree);
        } catch (const StepBudgetExceeded& e) {
            err_ << input.name << ": " << e.what() << '\n';
            return InputFailure;
        } catch (const Error& e) {
            err_ << input.name << ": " << e.what() << '\n';
            return GrammarFailure;
        }
        if (!r.success) {
            parse_error(input, r.farthest.offset, r.farthest.expected);
            return InputFailure;
        }
        if (cfg_.strict && r.consumed < input.bytes.size()) {
            if (r.farthest.offset >= r.consumed && !r.farthest.expected.empty())
                parse_error(input, r.farthest.offset, r.farthest.expected);
            else
                parse_error(input, r.consumed, {"end of input"});
            return InputFailure;
        }
        if (tree)
            print_tree(r.tree);
        else
            out_ << r.consumed << '\n';
        return Success;
    }

    int check()
    {
        if (!report_.ok()) {
            out_ << report_.to_string();
            return GrammarFailure;
        }
        for (const auto& w : report_.warnings)
            out_ << "warning: " << w.production << ": " << w.message << '\n';
        auto conditions = collect_conditions(grammar_);
        if (!conditions.empty()) {
            out_ << "conditions:";
            for (const auto& c : conditions)
                out_ << ' ' << c;
            out_ << "\nproductions: " << grammar_.size() << " -> " << eliminated().size()
                 << " after elimination\n";
        }
        try {
            program();
        } catch (const Abort&) {
            return GrammarFailure;
        }
        out_ << "ok\n";
        return Success;
    }

    int bench(const std::vector<Input>& inputs)
    {
        auto t0 = Clock::now();
        if (cfg_.engine == "vm")
            program();
        err_ << "setup_ms," << ms_since(t0) << '\n';
        out_ << "file,bytes,engine,memo,iters,mean_ms,min_ms\n";
        int worst = Success;
        for (const auto& input : inputs) {
            double total = 0;
            double best = 0;
            bool ok = true;
            try {
                for (int i = 0; i < cfg_.warmup; ++i)
                    execute(input.bytes, true);
                for (int i = 0; i < cfg_.iters; ++i) {
                    auto t = Clock::now();
                    auto r = execute(input.bytes, true);
                    double ms = ms_since(t);
                    ok = ok && r.success;
                    total += ms;
                    best = i == 0 ? ms : std::min(best, ms);
                }
            } catch (const Error& e) {
                err_ << input.name << ": " << e.what() << '\n';
                worst = std::max<int>(worst, InputFailure);
                continue;
            }
            if (!ok) {
                err_ << input.name << ": parse failed\n";
                worst = std::max<int>(worst, InputFailure);
            }
            out_ << input.name << ',' << input.bytes.size() << ',' << cfg_.engine << ','
                 << (cfg_.no_memo || cfg_.engine == "interp" ? "off" : "on") << ',' << cfg_.iters << ','
                 << (cfg_.iters > 0 ? total / cfg_.iters : 0.0) << ',' << best << '\n';
        }
        return worst;
    }

    const Config& cfg_;
    std::istream& in_;
    std::ostream& out_;
    std::ostream& err_;
    Grammar grammar_;
    ValidationReport report_;
    std::optional<Grammar> eliminated_;
    std::optional<vm::Program> program_;
};

} // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    Config cfg;
    CLI::App app{"Nez grammar toolkit: parse, match, eliminate conditions, compile, benchmark", "nez"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub, bool inputs) {
        sub->add_option("grammar", cfg.grammar_path, "Grammar file (.nez)")->required();
        sub->add_option("--start", cfg.start, "Start production (default: first)");
        sub->add_flag("--desugar-full", cfg.desugar_full, "Rewrite repetitions into recursive productions");
        if (!inputs)
            return;
        sub->add_option("inputs", cfg.inputs, "Input files, '-' for stdin");
        sub->add_option("-t,--text", cfg.texts, "Inline input text");
        sub->add_option("--engine", cfg.engine, "vm or interp")->check(CLI::IsMember({"vm", "interp"}));
        sub->add_flag("--no-memo", cfg.no_memo, "Disable packrat memoization");
        sub->add_flag("--trace", cfg.trace, "Trace execution to stderr");
    };

    auto* parse = app.add_subcommand("parse", "Parse inputs and print their ASTs");
    common(parse, true);
    parse->add_option("--format", cfg.format, "sexp or json")->check(CLI::IsMember({"sexp", "json"}));
    parse->add_flag("--pretty", cfg.pretty, "Indented output");
    parse->add_flag("--strict", cfg.strict, "Require the whole input to be consumed");

    auto* match = app.add_subcommand("match", "Recognize inputs and print consumed lengths");
    common(match, true);
    match->add_flag("--strict", cfg.strict, "Require the whole input to be consumed");

    auto* eliminate = app.add_subcommand("eliminate", "Print the grammar with parsing conditions eliminated");
    common(eliminate, false);

    auto* compile = app.add_subcommand("compile", "Print the compiled bytecode");
    common(compile, false);

    auto* bench = app.add_subcommand("bench", "Time parsing of input files (CSV)");
    common(bench, true);
    bench->add_option("--iters", cfg.iters, "Timed iterations")->check(CLI::PositiveNumber);
    bench->add_option("--warmup", cfg.warmup, "Untimed warmup iterations")->check(CLI::NonNegativeNumber);

    auto* check = app.add_subcommand("check", "Validate a grammar");
    common(check, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? Success : GrammarFailure;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    return Runner(cfg, in, out, err).run();
}

} // namespace nez::cli
