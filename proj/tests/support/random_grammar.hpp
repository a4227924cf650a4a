#pragma once

// Seeded generator of small valid grammars over the alphabet "abc", drawing
// from every operator (PEG, AST, symbol and condition), plus matching inputs.

#include <random>
#include <string>
#include <vector>

#include "nez/error.hpp"
#include "nez/grammar.hpp"

namespace nez::testing {

class GrammarGenerator {
public:
    explicit GrammarGenerator(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    /// A grammar that validates and desugars. Tries until one does.
    Grammar grammar()
    {
        for (;;) {
            Grammar g = candidate();
            if (!validate(g).ok())
                continue;
            try {
                desugar(g);
            } catch (const GrammarError&) {
                continue;
            }
            return g;
        }
    }

    /// Mostly alphabet bytes, occasionally anything; lengths skewed short.
    std::string input()
    {
        std::size_t max = pick(3) == 0 ? 256 : 12;
        std::size_t n = pick(max + 1);
        std::string s;
        for (std::size_t i = 0; i < n; ++i)
            s += pick(10) == 0 ? static_cast<char>(pick(256)) : "abc"[pick(3)];
        return s;
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    bool coin(unsigned percent) { return pick(100) < percent; }

    std::string prod() { return "P" + std::to_string(pick(count_)); }

    Grammar candidate()
    {
        count_ = 1 + pick(6);
        Grammar g;
        for (std::size_t i = 0; i < count_; ++i) {
            auto body = expr(3);
            // Wrapping the start in a loop or a node makes longer matches and
            // non-empty trees common.
            if (i == 0 && coin(40))
                body = pe::star(pe::node(body));
            else if (i == 0 && coin(30))
                body = pe::node(pe::seq({body, pe::star(pe::link(expr(2)))}));
            g.add("P" + std::to_string(i), body);
        }
        return g;
    }

    char letter() { return "abc"[pick(3)]; }

    ExprPtr leaf()
    {
        // Weights: terminals dominate so that grammars consume input.
        static const std::discrete_distribution<int> weights{
            8, 3, 2, 2, 1,  // char, class, any, literal, empty
            5,              // nonterminal
            2, 1,           // tag, replace
            1, 1, 1, 1      // exists, match, if, symbol
        };
        auto dist = weights;
        switch (dist(rng_)) {
        case 0: return pe::chr(static_cast<std::uint8_t>(letter()));
        case 1: {
            CharSet s;
            for (char c : std::string("abc"))
                if (coin(50))
                    s.set(static_cast<unsigned char>(c));
            return pe::cls(s);
        }
        case 2: return pe::any();
        case 3: return pe::lit(std::string{letter(), letter()});
        case 4: return pe::empty();
        case 5: return pe::ref(prod());
        case 6: return pe::tag(pick(2) ? "A" : "B");
        case 7: return pe::replace(pick(2) ? "r" : "");
        case 8: return coin(50) ? pe::exists(prod()) : pe::exists(prod(), std::string(1, letter()));
        case 9: return pe::match(prod());
        case 10: return pe::if_(pick(2) ? "c" : "d", coin(50));
        default: return pe::symbol(prod());
        }
    }

    ExprPtr expr(int depth)
    {
        if (depth <= 0 || coin(25))
            return leaf();
        auto sub = [&] { return expr(depth - 1); };
        static const std::discrete_distribution<int> weights{
            4, 2, 4,     // seq2, seq3, choice
            3, 2, 1,     // star, plus, option
            1, 1,        // and, not
            3, 1, 3,     // node, fold, link
            1, 1, 1, 1   // block, local, is/isa, on
        };
        auto dist = weights;
        switch (dist(rng_)) {
        case 0: return pe::seq({sub(), sub()});
        case 1: return pe::seq({sub(), sub(), sub()});
        case 2: return pe::choice({sub(), sub()});
        case 3: return pe::star(sub());
        case 4: return pe::plus(sub());
        case 5: return pe::opt(sub());
        case 6: return pe::and_(sub());
        case 7: return pe::not_(sub());
        case 8: return pe::node(sub());
        case 9: return pe::fold(sub(), coin(50) ? std::optional<std::string>("l") : std::nullopt);
        case 10: return pe::link(sub(), coin(50) ? std::optional<std::string>("k") : std::nullopt);
        case 11: return pe::block(sub());
        case 12: return pe::local(prod(), sub());
        case 13: return pick(2) ? pe::is(prod()) : pe::isa(prod());
        default: return pe::on(pick(2) ? "c" : "d", coin(50), sub());
        }
    }

    std::mt19937_64 rng_;
    std::size_t count_ = 1;
};

} // namespace nez::testing
