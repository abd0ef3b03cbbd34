#include <catch2/catch_amalgamated.hpp>

#include "ingtag/pos_tagger.hpp"
#include "ingtag/tokenizer.hpp"

using namespace ingtag;

static std::vector<std::string> tag_words(const std::string& raw) {
    return pos_tag(tokenize(raw));
}

TEST_CASE("numerals and fractions tag CD") {
    CHECK(tag_words("1 garlic clove") == std::vector<std::string>{"CD", "NN", "NN"});
    CHECK(pos_tag_one("1/2") == "CD");
    CHECK(pos_tag_one("1.5") == "CD");
    CHECK(pos_tag_one("12") == "CD");
}

TEST_CASE("punctuation tags itself") {
    CHECK(tag_words(",") == std::vector<std::string>{","});
    CHECK(pos_tag_one("(") == "(");
    CHECK(pos_tag_one(")") == ")");
    CHECK(pos_tag_one(";") == ":");
}

TEST_CASE("suffix rules") {
    CHECK(pos_tag_one("freshly") == "RB");
    CHECK(pos_tag_one("chopped") == "VBN");
    CHECK(pos_tag_one("boiling") == "VBG");
    CHECK(pos_tag_one("simmering") == "VBG");
}

TEST_CASE("lexicon wins over suffix rules and default") {
    CHECK(pos_tag_one("fresh") == "JJ");
    CHECK(pos_tag_one("large") == "JJ");
    CHECK(pos_tag_one("the") == "DT");
    CHECK(pos_tag_one("of") == "IN");
    CHECK(pos_tag_one("and") == "CC");
    CHECK(pos_tag_one("cups") == "NNS");
    CHECK(pos_tag_one("ground") == "VBN");  // irregular participle, no -ed
}

TEST_CASE("unknown alphabetic tokens default to NN") {
    CHECK(pos_tag_one("garlic") == "NN");
    CHECK(pos_tag_one("zucchini") == "NN");
}

TEST_CASE("tagger is total and deterministic") {
    auto toks = tokenize("1 (8 ounce) package cream cheese, softened");
    auto a = pos_tag(toks);
    auto b = pos_tag(toks);
    REQUIRE(a.size() == toks.size());
    CHECK(a == b);
    for (const auto& tag : a) CHECK(!tag.empty());
}

TEST_CASE("apply_pos_tags fills only missing tags") {
    auto toks = tokenize("2 cups flour");
    toks[1].pos = "XYZ";  // user-supplied tag survives
    apply_pos_tags(toks);
    CHECK(toks[0].pos == "CD");
    CHECK(toks[1].pos == "XYZ");
    CHECK(toks[2].pos == "NN");
}
