#include <doctest.h>

#include "nez/ast.hpp"
#include "nez/error.hpp"
#include "nez/interpreter.hpp"
#include "nez/syntax.hpp"
#include "support/corpus.hpp"

using namespace nez;

namespace {

std::string parse_sexp(const Grammar& g, std::string_view input)
{
    auto r = interp::parse(g, input);
    REQUIRE(r.success);
    REQUIRE(r.tree);
    return to_sexp(*r.tree);
}

std::string trim_lines(const std::string& s)
{
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto nl = s.find('\n', i);
        auto line = s.substr(i, nl == std::string::npos ? std::string::npos : nl - i);
        auto b = line.find_first_not_of(' ');
        auto e = line.find_last_not_of(' ');
        if (b != std::string::npos)
            out += line.substr(b, e - b + 1) + "\n";
        if (nl == std::string::npos)
            break;
        i = nl + 1;
    }
    return out;
}

} // namespace

TEST_CASE("capture excludes input consumed outside the node")
{
    const auto& g = testing::corpus_grammar("capture.nez").grammar;
    CHECK(parse_sexp(g, "0L") == "#Values[#Long['0'] #Int['0']]");
}

TEST_CASE("empty capture and whole-match capture")
{
    AstLog log;
    log.op_new(3);
    log.op_capture(3);
    auto t = log.commit("abcdef");
    CHECK(t.start == 3);
    CHECK(t.end == 3);
    CHECK(t.value.empty());

    CHECK(parse_sexp(parse_grammar("A = { 'ab' }"), "ab") == "#['ab']");
}

TEST_CASE("tag and replace")
{
    CHECK(parse_sexp(parse_grammar("Int = { NUM #Int }\nNUM = [0-9]+"), "42") == "#Int['42']");
    CHECK(parse_sexp(parse_grammar("DefaultValue = { `0` #Int }"), "") == "#Int['0']");
    CHECK(parse_sexp(parse_grammar("A = { 'x' #A #B }"), "x") == "#B['x']");

    AstLog log;
    log.op_new(0);
    log.op_replace("r1");
    log.op_replace("r2");
    log.op_capture(1);
    auto t = log.commit("x");
    CHECK(t.value == "r2");
    CHECK(t.replaced);
}

TEST_CASE("link: flattened, nested and dropped")
{
    CHECK(parse_sexp(testing::corpus_grammar("list.nez").grammar, "1+2+3") == "#Add[#Int['1'] #Int['2'] #Int['3']]");
    CHECK(parse_sexp(testing::corpus_grammar("binary.nez").grammar, "1+2+3") ==
          "#Add[#Int['1'] #Add[#Int['2'] #Int['3']]]");
    auto dropped = parse_grammar("L = { $(I) '+' I #Add }\nI = { [0-9] #Int }");
    CHECK(parse_sexp(dropped, "1+2") == "#Add[#Int['1']]");
}

TEST_CASE("fold: left-associative and labeled")
{
    CHECK(parse_sexp(testing::corpus_grammar("fold.nez").grammar, "1+2+3") ==
          "#Add[#Add[#Int['1'] #Int['2']] #Int['3']]");
    CHECK(parse_sexp(testing::corpus_grammar("fold.nez").grammar, "1") == "#Int['1']");
    CHECK(parse_sexp(testing::corpus_grammar("math.nez").grammar, "1+2*3") ==
          "#Add[left: #Int['1'] right: #Mul[left: #Int['2'] right: #Int['3']]]");
}

TEST_CASE("fold without a left node")
{
    AstLog log;
    log.op_fold(0);
    log.op_capture(1);
    CHECK_THROWS_AS(log.commit("x"), FoldWithoutLeft);
}

TEST_CASE("rollback discards later records")
{
    AstLog a;
    a.op_new(0);
    a.op_tag("T");
    auto m = a.checkpoint();
    a.op_tag("U");
    a.op_push();
    a.op_new(0);
    a.op_capture(1);
    a.op_link("x");
    a.op_pop();
    a.rollback(m);
    a.op_capture(2);

    AstLog b;
    b.op_new(0);
    b.op_tag("T");
    b.op_capture(2);
    CHECK(a.commit("ab") == b.commit("ab"));
}

TEST_CASE("failed alternative leaves no node")
{
    auto g = parse_grammar("S = { 'a' #First 'x' } / { 'a' #Second }");
    CHECK(parse_sexp(g, "ab") == "#Second['a']");
}

TEST_CASE("empty log has no root")
{
    AstLog log;
    CHECK_THROWS_AS(log.commit(""), CommitWithoutRoot);
    CHECK_FALSE(log.build(""));
}

TEST_CASE("marks are LIFO")
{
    AstLog log;
    auto a = log.checkpoint();
    auto b = log.checkpoint();
    CHECK_THROWS_AS(log.rollback(a), StaleMark);
    log.commit_scope(b);
    log.rollback(a);
    CHECK_THROWS_AS(log.rollback(a), StaleMark);
}

TEST_CASE("pretty form reproduces the If example")
{
    const auto& g = testing::corpus_grammar("ifstmt.nez").grammar;
    auto r = interp::parse(g, "if (a > b) return a; else return b;");
    REQUIRE(r.tree);
    const char* expected = R"(
  #If[
    #GreaterThan[
      #Variable['a']
      #Variable['b']
    ]
    #Return[#Variable['a']]
    #Return[#Variable['b']]
  ]
)";
    CHECK(trim_lines(to_pretty_sexp(*r.tree)) == trim_lines(expected));
}

TEST_CASE("json form")
{
    auto r = interp::parse(testing::corpus_grammar("fold_labeled.nez").grammar, "1+2");
    REQUIRE(r.tree);
    auto j = to_json(*r.tree);
    CHECK(j["tag"] == "Add");
    CHECK_FALSE(j.contains("value"));
    REQUIRE(j["children"].size() == 2);
    CHECK(j["children"][0]["label"] == "left");
    CHECK(j["children"][0]["tag"] == "Int");
    CHECK(j["children"][0]["value"] == "1");
    CHECK(j["children"][1]["label"] == "right");
}

TEST_CASE("values are quoted and escaped")
{
    AstLog log;
    log.op_new(0);
    log.op_capture(4);
    CHECK(to_sexp(log.commit("a'\n\\")) == R"(#['a\'\n\\'])");
}
