#pragma once

// Loads tests/corpus: the .nez grammars plus manifest.json with hand-derived
// expectations for each input.

#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nez/grammar.hpp"
#include "nez/syntax.hpp"

#ifndef NEZ_CORPUS_DIR
#error "NEZ_CORPUS_DIR must point at tests/corpus"
#endif

namespace nez::testing {

struct CorpusCase {
    std::string input;
    bool accept = false;
    std::optional<std::size_t> consumed;
    bool check_tree = false;
    std::optional<std::string> tree;  // sexp; nullopt with check_tree means "no tree"
};

struct CorpusGrammar {
    std::string file;
    std::string text;
    Grammar grammar;
    std::vector<std::string> conditions;
    std::vector<CorpusCase> cases;
};

inline std::string corpus_path(const std::string& file) { return std::string(NEZ_CORPUS_DIR) + "/" + file; }

inline std::string read_text(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot read " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline const std::vector<CorpusGrammar>& corpus()
{
    static const std::vector<CorpusGrammar> all = [] {
        std::vector<CorpusGrammar> out;
        auto manifest = nlohmann::json::parse(read_text(corpus_path("manifest.json")));
        for (const auto& g : manifest.at("grammars")) {
            CorpusGrammar cg;
            cg.file = g.at("file").get<std::string>();
            cg.text = read_text(corpus_path(cg.file));
            cg.grammar = parse_grammar(cg.text);
            if (g.contains("start"))
                cg.grammar.set_start(g.at("start").get<std::string>());
            if (g.contains("conditions"))
                cg.conditions = g.at("conditions").get<std::vector<std::string>>();
            for (const auto& c : g.at("cases")) {
                CorpusCase cc;
                cc.input = c.at("input").get<std::string>();
                cc.accept = c.at("accept").get<bool>();
                if (c.contains("consumed"))
                    cc.consumed = c.at("consumed").get<std::size_t>();
                if (c.contains("tree")) {
                    cc.check_tree = true;
                    if (!c.at("tree").is_null())
                        cc.tree = c.at("tree").get<std::string>();
                }
                cg.cases.push_back(std::move(cc));
            }
            out.push_back(std::move(cg));
        }
        return out;
    }();
    return all;
}

inline const CorpusGrammar& corpus_grammar(const std::string& file)
{
    for (const auto& g : corpus())
        if (g.file == file)
            return g;
    throw std::runtime_error("no corpus grammar " + file);
}

} // namespace nez::testing
