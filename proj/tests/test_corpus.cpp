#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "ste/corpus.hpp"
#include "ste/errors.hpp"
#include "ste/rng.hpp"

using namespace ste;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

const char* kThreeResponseFile = R"({
  "questions": [{
    "id": "Q11",
    "l1_text": "alpha beta",
    "chunks": [
      {"index": 0, "l1_text": "alpha", "gloss": "first"},
      {"index": 1, "l1_text": "beta", "gloss": "second"}
    ],
    "reference_answer": "first second .",
    "criteria": [
      {"id": "E1", "chunk_index": 0, "category": "E", "allows_partial": false,
       "label_descriptions": {"2": "ok", "0": "bad"}},
      {"id": "E2", "chunk_index": 1, "category": "E", "allows_partial": true,
       "label_descriptions": {"2": "ok", "1": "close", "0": "bad"}}
    ]
  }],
  "responses": [
    {"id": "R1", "question_id": "Q11", "text": "first second .",
     "annotations": {"E1": {"score": 2, "cue": {"start": 0, "end": 5}, "annotator_id": "a"}}},
    {"id": "R2", "question_id": "Q11", "text": "first 2nd .",
     "annotations": {"E2": {"score": 1, "annotator_id": "a"}}},
    {"id": "R3", "question_id": "Q11", "text": "second first .", "annotations": {}}
  ]
})";

}  // namespace

TEST_CASE("well-formed file loads with expected cardinalities") {
    const auto path = write_temp("ste_ok.json", kThreeResponseFile);
    const Dataset dataset = load_dataset(path);
    CHECK(dataset.questions.size() == 1);
    CHECK(dataset.responses.size() == 3);
    CHECK(dataset.questions[0].rubric.criteria.size() == 2);
}

TEST_CASE("annotation referencing unknown criterion fails naming it") {
    std::string broken = kThreeResponseFile;
    const auto pos = broken.find("\"E1\": {\"score\": 2");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 4, "\"Z9\"");
    const auto path = write_temp("ste_unknown_criterion.json", broken);
    try {
        load_dataset(path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("Z9") != std::string::npos);
    }
}

TEST_CASE("malformed JSON raises a schema error with a line number") {
    const auto path = write_temp("ste_malformed.json", "{\n  \"questions\": [,]\n}");
    try {
        load_dataset(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("missing field raises a schema error with context") {
    const auto path = write_temp(
        "ste_missing_field.json",
        R"({"questions": [{"id": "Q1"}], "responses": []})");
    try {
        load_dataset(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("l1_text") != std::string::npos);
        CHECK(std::string(e.what()).find("questions[0]") != std::string::npos);
    }
}

TEST_CASE("validation collects every breach") {
    std::string broken = kThreeResponseFile;
    // Break the cue bounds and put score 1 on E1 (which forbids partial).
    auto pos = broken.find("{\"start\": 0, \"end\": 5}");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, std::string("{\"start\": 0, \"end\": 5}").size(),
                   "{\"start\": 0, \"end\": 99}");
    const std::string empty_ann = "\"annotations\": {}";
    pos = broken.find(empty_ann);
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, empty_ann.size(),
                   R"("annotations": {"E1": {"score": 1, "annotator_id": "a"}})");
    const auto path = write_temp("ste_breaches.json", broken);
    try {
        load_dataset(path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.breaches().size() == 2);
    }
}

TEST_CASE("duplicate annotation keys warn and keep the last") {
    std::string dup = kThreeResponseFile;
    const std::string needle = "\"annotations\": {\"E2\": {\"score\": 1, \"annotator_id\": \"a\"}}";
    const auto pos = dup.find(needle);
    REQUIRE(pos != std::string::npos);
    dup.replace(pos, needle.size(),
                "\"annotations\": {\"E2\": {\"score\": 1, \"annotator_id\": \"a\"},"
                " \"E2\": {\"score\": 2, \"annotator_id\": \"b\"}}");
    const auto path = write_temp("ste_dup.json", dup);
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(path, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("E2") != std::string::npos);
    const Response* r2 = nullptr;
    for (const auto& r : dataset.responses)
        if (r.id == "R2") r2 = &r;
    REQUIRE(r2 != nullptr);
    CHECK(r2->annotations.at("E2").annotator_id == "b");
}

TEST_CASE("save then reload yields a structurally identical dataset") {
    const Dataset original = fixtures::load_q11();
    const auto path = write_temp("ste_roundtrip.json", serialize_dataset(original));
    const Dataset reloaded = load_dataset(path);
    // Oracle for structural identity: serialize both and compare bytes.
    CHECK(serialize_dataset(original) == serialize_dataset(reloaded));
    REQUIRE(reloaded.questions.size() == original.questions.size());
    CHECK(reloaded.responses.size() == original.responses.size());
    CHECK(reloaded.questions[0].rubric.criteria.size() ==
          original.questions[0].rubric.criteria.size());
}

TEST_CASE("q11 fixture cue spans extract the annotated substrings") {
    const Dataset dataset = fixtures::load_q11();
    const std::map<std::string, std::map<std::string, std::string>> expected = {
        {"R1", {{"E4", "before I saw them"}}},
        {"R4", {{"E4", "until I saw it"}}},
        {"R5", {{"G1", "seen"}, {"E7", "I had never"}}},
        {"R6", {{"E4", "before I saw one"}, {"G1", "saw"}}},
    };
    for (const auto& r : dataset.responses) {
        auto it = expected.find(r.id);
        if (it == expected.end()) continue;
        Utf8View view(r.text);
        for (const auto& [cid, text] : it->second) {
            const auto& ann = r.annotations.at(cid);
            REQUIRE(ann.cue.has_value());
            CHECK(view.substr(static_cast<std::size_t>(ann.cue->start_char),
                              static_cast<std::size_t>(ann.cue->end_char)) == text);
        }
    }
}

TEST_CASE("dataset_stats matches the published Q1 row") {
    const Dataset dataset = fixtures::q1_stats_dataset();
    const auto stats = dataset_stats(dataset);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].num_responses == 159);
    CHECK(stats[0].num_criteria == 9);
    CHECK(stats[0].label_counts[2] == 923);
    CHECK(stats[0].label_counts[1] == 114);
    CHECK(stats[0].label_counts[0] == 235);
    // Counts sum to the number of present annotations, not #Ans x #criteria.
    CHECK(stats[0].label_counts[0] + stats[0].label_counts[1] + stats[0].label_counts[2] == 1272);
}

TEST_CASE("dataset_stats on empty question and synthetic all-correct set") {
    Dataset dataset;
    Question q = fixtures::synthetic_question();
    dataset.questions.push_back(q);
    auto stats = dataset_stats(dataset);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].num_responses == 0);
    CHECK(stats[0].num_distinct == 0);
    CHECK(stats[0].label_counts[2] == 0);

    // 10 responses x 2 annotated criteria, all correct.
    for (int i = 0; i < 10; ++i) {
        Response r;
        r.id = "S" + std::to_string(i);
        r.question_id = q.id;
        r.text = "He read a book at the library yesterday .";
        for (const auto& cid : {"E1", "E5"}) {
            Annotation ann;
            ann.score = ScoreLabel::correct;
            ann.annotator_id = "t";
            r.annotations[cid] = ann;
        }
        dataset.responses.push_back(std::move(r));
    }
    stats = dataset_stats(dataset);
    CHECK(stats[0].num_responses == 10);
    CHECK(stats[0].num_distinct == 1);
    CHECK(stats[0].label_counts[2] == 20);
}

// --- folds -------------------------------------------------------------------

namespace {

std::vector<Response> make_unique_responses(const Question& q, int n) {
    std::vector<Response> responses;
    for (int i = 0; i < n; ++i) {
        Response r;
        r.id = "R" + std::to_string(i);
        r.question_id = q.id;
        r.text = "response " + std::to_string(i);
        responses.push_back(std::move(r));
    }
    return responses;
}

void check_partition(const FoldAssignment& folds, const std::vector<Response>& responses) {
    std::set<std::string> all_ids;
    for (const auto& r : responses) all_ids.insert(r.id);
    std::map<std::string, int> test_appearances;
    for (const auto& f : folds.folds) {
        std::set<std::string> seen;
        for (const auto* part : {&f.train_ids, &f.dev_ids, &f.test_ids})
            for (const auto& id : *part) {
                CHECK(all_ids.count(id) == 1);
                CHECK(seen.insert(id).second);  // pairwise disjoint
            }
        CHECK(seen.size() == all_ids.size());  // union covers everything
        for (const auto& id : f.test_ids) ++test_appearances[id];
    }
    for (const auto& id : all_ids) CHECK(test_appearances[id] == 1);
}

}  // namespace

TEST_CASE("100 responses make 60/20/20 folds") {
    const Question q = fixtures::synthetic_question();
    const auto responses = make_unique_responses(q, 100);
    const auto folds = make_folds(q, responses, 5, 42);
    REQUIRE(folds.folds.size() == 5);
    for (const auto& f : folds.folds) {
        CHECK(f.train_ids.size() == 60);
        CHECK(f.dev_ids.size() == 20);
        CHECK(f.test_ids.size() == 20);
    }
    check_partition(folds, responses);
}

TEST_CASE("same seed reproduces the assignment, different seed changes it") {
    const Question q = fixtures::synthetic_question();
    const auto responses = make_unique_responses(q, 50);
    const auto a = make_folds(q, responses, 5, 7);
    const auto b = make_folds(q, responses, 5, 7);
    const auto c = make_folds(q, responses, 5, 8);
    REQUIRE(a.folds.size() == b.folds.size());
    bool all_equal_seed7 = true;
    bool any_difference_seed8 = false;
    for (std::size_t i = 0; i < a.folds.size(); ++i) {
        all_equal_seed7 = all_equal_seed7 && a.folds[i].train_ids == b.folds[i].train_ids &&
                          a.folds[i].dev_ids == b.folds[i].dev_ids &&
                          a.folds[i].test_ids == b.folds[i].test_ids;
        any_difference_seed8 = any_difference_seed8 || a.folds[i].test_ids != c.folds[i].test_ids;
    }
    CHECK(all_equal_seed7);
    CHECK(any_difference_seed8);
}

TEST_CASE("77 responses follow the rounding rule and partition exactly") {
    const Question q = fixtures::synthetic_question();
    const auto responses = make_unique_responses(q, 77);
    const auto folds = make_folds(q, responses, 5, 13);
    check_partition(folds, responses);
    // floor(77/5) = 15 per test block, remainder 2 spread one per fold.
    std::multiset<std::size_t> test_sizes;
    for (const auto& f : folds.folds) {
        test_sizes.insert(f.test_ids.size());
        CHECK(f.dev_ids.size() == 15);
        CHECK(f.train_ids.size() == 77 - 15 - f.test_ids.size());
    }
    CHECK(test_sizes == std::multiset<std::size_t>{15, 15, 15, 16, 16});
}

TEST_CASE("duplicate texts stay in the same split") {
    const Question q = fixtures::synthetic_question();
    auto responses = make_unique_responses(q, 40);
    // Five copies of one text, three of another.
    for (int i = 0; i < 5; ++i) responses[static_cast<std::size_t>(i)].text = "dup A";
    for (int i = 5; i < 8; ++i) responses[static_cast<std::size_t>(i)].text = "dup B";
    const auto folds = make_folds(q, responses, 5, 3);
    check_partition(folds, responses);
    for (const auto& f : folds.folds) {
        for (const auto& dup_ids : {std::vector<std::string>{"R0", "R1", "R2", "R3", "R4"},
                                    std::vector<std::string>{"R5", "R6", "R7"}}) {
            int in_train = 0, in_dev = 0, in_test = 0;
            for (const auto& id : dup_ids) {
                in_train += std::count(f.train_ids.begin(), f.train_ids.end(), id);
                in_dev += std::count(f.dev_ids.begin(), f.dev_ids.end(), id);
                in_test += std::count(f.test_ids.begin(), f.test_ids.end(), id);
            }
            const int groups_hit = (in_train ? 1 : 0) + (in_dev ? 1 : 0) + (in_test ? 1 : 0);
            CHECK(groups_hit == 1);
        }
    }
}

TEST_CASE("allow_duplicate_leakage restores naive shuffling sizes") {
    const Question q = fixtures::synthetic_question();
    auto responses = make_unique_responses(q, 100);
    for (int i = 0; i < 30; ++i) responses[static_cast<std::size_t>(i)].text = "same";
    const auto folds = make_folds(q, responses, 5, 3, true);
    check_partition(folds, responses);
    for (const auto& f : folds.folds) {
        CHECK(f.test_ids.size() == 20);
        CHECK(f.dev_ids.size() == 20);
    }
}

TEST_CASE("fewer responses than folds is an error") {
    const Question q = fixtures::synthetic_question();
    const auto responses = make_unique_responses(q, 4);
    CHECK_THROWS_AS(make_folds(q, responses, 5, 1), std::invalid_argument);
}

// --- criterion filtering --------------------------------------------------------

namespace {

std::vector<Response> responses_with_incorrect(const Question& q, const std::string& cid,
                                               int total, int incorrect) {
    std::vector<Response> responses;
    for (int i = 0; i < total; ++i) {
        Response r;
        r.id = "R" + std::to_string(i);
        r.question_id = q.id;
        r.text = "text " + std::to_string(i);
        Annotation ann;
        ann.score = i < incorrect ? ScoreLabel::incorrect : ScoreLabel::correct;
        ann.annotator_id = "t";
        r.annotations[cid] = ann;
        responses.push_back(std::move(r));
    }
    return responses;
}

}  // namespace

TEST_CASE("filter keeps exactly-10% and drops just-below") {
    const Question q = fixtures::synthetic_question();
    {
        const auto responses = responses_with_incorrect(q, "E1", 200, 20);
        const auto result = filter_criteria(q, responses, 0.10);
        CHECK(std::count(result.kept.begin(), result.kept.end(), "E1") == 1);
    }
    {
        const auto responses = responses_with_incorrect(q, "E1", 200, 19);
        const auto result = filter_criteria(q, responses, 0.10);
        CHECK(std::count(result.kept.begin(), result.kept.end(), "E1") == 0);
    }
    {
        const auto responses = responses_with_incorrect(q, "E1", 200, 0);
        const auto result = filter_criteria(q, responses, 0.10);
        CHECK(std::count(result.kept.begin(), result.kept.end(), "E1") == 0);
    }
}

TEST_CASE("criterion with zero annotations is excluded and reported") {
    const Question q = fixtures::synthetic_question();
    const auto responses = responses_with_incorrect(q, "E1", 20, 10);
    const auto result = filter_criteria(q, responses, 0.10);
    bool reported = false;
    for (const auto& [id, reason] : result.excluded)
        if (id == "E2" && reason.find("no annotations") != std::string::npos) reported = true;
    CHECK(reported);
}

TEST_CASE("filter is monotone in the threshold") {
    const Question q = fixtures::synthetic_question();
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Response> responses;
        for (int i = 0; i < 40; ++i) {
            Response r;
            r.id = "R" + std::to_string(i);
            r.question_id = q.id;
            r.text = "t" + std::to_string(i);
            for (const auto& c : q.rubric.criteria) {
                if (rng.bernoulli(0.3)) continue;
                Annotation ann;
                ann.score = rng.bernoulli(0.25) ? ScoreLabel::incorrect : ScoreLabel::correct;
                ann.annotator_id = "t";
                r.annotations[c.id] = ann;
            }
            responses.push_back(std::move(r));
        }
        const double lo = rng.uniform(0.0, 0.5);
        const double hi = lo + rng.uniform(0.0, 0.5);
        const auto kept_lo = filter_criteria(q, responses, lo).kept;
        const auto kept_hi = filter_criteria(q, responses, hi).kept;
        for (const auto& id : kept_hi)
            CHECK(std::count(kept_lo.begin(), kept_lo.end(), id) == 1);
    }
}
