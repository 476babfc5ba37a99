#include <doctest.h>

#include <algorithm>

#include "ste/rng.hpp"
#include "ste/text.hpp"

using namespace ste;

TEST_CASE("whitespace-delimited sentence") {
    const auto tok = tokenize("I had never seen a koala .");
    REQUIRE(tok.size() == 7);
    CHECK(tok.tokens[0].surface == "I");
    CHECK(tok.tokens[6].surface == ".");
}

TEST_CASE("contraction n't splits into its own token") {
    const auto tok = tokenize("don't");
    REQUIRE(tok.size() == 2);
    CHECK(tok.tokens[0].surface == "do");
    CHECK(tok.tokens[1].surface == "n't");
    CHECK(tok.tokens[1].start_char == 2);
    CHECK(tok.tokens[1].end_char == 5);
}

TEST_CASE("punctuation detaches") {
    const auto tok = tokenize("Australia.");
    REQUIRE(tok.size() == 2);
    CHECK(tok.tokens[0].surface == "Australia");
    CHECK(tok.tokens[1].surface == ".");
}

TEST_CASE("other contractions and stacked punctuation") {
    const auto tok = tokenize("(I'm \"ready\", he'll say!)");
    std::vector<std::string> surfaces;
    for (const auto& t : tok.tokens) surfaces.push_back(t.surface);
    CHECK(surfaces == std::vector<std::string>{"(", "I", "'m", "\"", "ready", "\"", ",",
                                               "he", "'ll", "say", "!", ")"});
}

TEST_CASE("bare n't stays whole") {
    const auto tok = tokenize("n't");
    REQUIRE(tok.size() == 1);
    CHECK(tok.tokens[0].surface == "n't");
}

TEST_CASE("empty and whitespace-only text") {
    CHECK(tokenize("").size() == 0);
    CHECK(tokenize("   \t\n").size() == 0);
}

TEST_CASE("offsets are code points, not bytes") {
    const auto tok = tokenize("コアラ is big");
    REQUIRE(tok.size() == 3);
    CHECK(tok.tokens[0].surface == "コアラ");
    CHECK(tok.tokens[0].start_char == 0);
    CHECK(tok.tokens[0].end_char == 3);
    CHECK(tok.tokens[1].start_char == 4);
}

TEST_CASE("offsets reconstruct surfaces by substring extraction") {
    const std::vector<std::string> texts = {
        "I had never seen a koala before I saw one in Australia two years ago.",
        "don't stop, won't you?",
        "  mixed　space\tand breaks ",
    };
    Rng rng(99);
    auto random_text = [&]() {
        std::string s;
        const std::string alphabet = "ab c.'d,e n'tf  g!h";
        const std::size_t len = 1 + rng.below(40);
        for (std::size_t i = 0; i < len; ++i)
            s += alphabet[static_cast<std::size_t>(rng.below(alphabet.size()))];
        return s;
    };
    std::vector<std::string> all = texts;
    for (int i = 0; i < 200; ++i) all.push_back(random_text());
    for (const auto& text : all) {
        const auto tok = tokenize(text);
        Utf8View view(text);
        int prev_end = -1;
        for (const auto& t : tok.tokens) {
            CHECK(view.substr(static_cast<std::size_t>(t.start_char),
                              static_cast<std::size_t>(t.end_char)) == t.surface);
            CHECK(t.start_char >= prev_end);  // ordered, non-overlapping
            CHECK(t.start_char < t.end_char);
            prev_end = t.end_char;
        }
    }
}

TEST_CASE("gold attention target spreads 1/k over cue tokens") {
    const auto tok = tokenize("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9");
    REQUIRE(tok.size() == 10);
    CueSpan cue{tok.tokens[2].start_char, tok.tokens[4].end_char};
    const auto target = gold_attention_target(tok, cue);
    REQUIRE(target.has_value());
    for (std::size_t i = 0; i < 10; ++i) {
        if (i >= 2 && i <= 4)
            CHECK((*target)[i] == doctest::Approx(1.0 / 3.0));
        else
            CHECK((*target)[i] == 0.0);
    }
}

TEST_CASE("single-token cue gets full weight") {
    const auto tok = tokenize("alpha beta gamma");
    CueSpan cue{tok.tokens[1].start_char, tok.tokens[1].end_char};
    const auto target = gold_attention_target(tok, cue);
    REQUIRE(target.has_value());
    CHECK((*target)[1] == 1.0);
    CHECK((*target)[0] == 0.0);
}

TEST_CASE("absent cue yields absent target") {
    const auto tok = tokenize("alpha beta");
    CHECK_FALSE(gold_attention_target(tok, std::nullopt).has_value());
}

TEST_CASE("misaligned cue includes partially overlapped tokens with warning") {
    const auto tok = tokenize("before koala");
    CueSpan cue{2, 9};  // cuts into the middle of both tokens
    std::vector<std::string> warnings;
    const auto target = gold_attention_target(tok, cue, &warnings);
    REQUIRE(target.has_value());
    CHECK((*target)[0] == doctest::Approx(0.5));
    CHECK((*target)[1] == doctest::Approx(0.5));
    CHECK(warnings.size() == 1);
}

TEST_CASE("cue covering only whitespace has no target and warns") {
    const auto tok = tokenize("a  b");
    CueSpan cue{1, 2};  // the gap between tokens
    std::vector<std::string> warnings;
    CHECK_FALSE(gold_attention_target(tok, cue, &warnings).has_value());
    CHECK(warnings.size() == 1);
}

TEST_CASE("target sums to one with support exactly on overlapped tokens") {
    Rng rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const int n = 1 + static_cast<int>(rng.below(12));
        for (int i = 0; i < n; ++i) text += (i ? " w" : "w") + std::to_string(i);
        const auto tok = tokenize(text);
        const int len = static_cast<int>(Utf8View(text).size());
        const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(len)));
        const int b = a + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(len - a)));
        const CueSpan cue{a, b};
        const auto target = gold_attention_target(tok, cue);
        const auto overlap = tokens_overlapping(tok, cue);
        if (!target) {
            CHECK(overlap.empty());
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < target->size(); ++i) {
            sum += (*target)[i];
            const bool in_overlap =
                std::find(overlap.begin(), overlap.end(), i) != overlap.end();
            CHECK(((*target)[i] > 0.0) == in_overlap);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}
