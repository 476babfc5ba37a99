#include <doctest.h>

#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "ste/evaluation.hpp"
#include "ste/oracle.hpp"
#include "ste/training.hpp"

using namespace ste;

namespace {

struct TrainSetup {
    Question question;
    std::vector<Response> responses;
    FoldAssignment folds;
    std::vector<std::string> criteria;
};

TrainSetup small_setup(int n = 50, std::uint64_t seed = 19, int k = 5) {
    TrainSetup setup;
    setup.question = fixtures::synthetic_question();
    setup.responses = synthesize_responses(setup.question, fixtures::synthetic_profile(), n, seed);
    setup.folds = make_folds(setup.question, setup.responses, k, seed + 1);
    setup.criteria = {"E1", "E5", "O1"};
    return setup;
}

}  // namespace

TEST_CASE("best-epoch selection is argmax with earliest tie") {
    CHECK(select_best_epoch({0.5, 0.8, 0.7}) == 2);
    CHECK(select_best_epoch({0.9}) == 1);
    CHECK(select_best_epoch({0.3, 0.7, 0.7, 0.7}) == 2);
    CHECK(select_best_epoch({}) == 0);
}

TEST_CASE("training is deterministic in the seed") {
    const auto setup = small_setup(30);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 3;
    const auto a = train_question_model(setup.question, setup.responses, setup.folds,
                                        setup.criteria, config);
    const auto b = train_question_model(setup.question, setup.responses, setup.folds,
                                        setup.criteria, config);
    REQUIRE(a.folds.size() == b.folds.size());
    for (std::size_t fold = 0; fold < a.folds.size(); ++fold) {
        for (const auto& cid : setup.criteria) {
            const auto& sa = a.folds[fold].criteria.at(cid);
            const auto& sb = b.folds[fold].criteria.at(cid);
            REQUIRE(sa.dev_f1.size() == sb.dev_f1.size());
            for (std::size_t e = 0; e < sa.dev_f1.size(); ++e)
                CHECK(sa.dev_f1[e] == sb.dev_f1[e]);  // bitwise: identical curves
            CHECK(sa.best_epoch == sb.best_epoch);
            CHECK((sa.head.M - sb.head.M).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("snapshot selection always matches the logged history argmax") {
    const auto setup = small_setup(40);
    TrainingConfig config = fixtures::tiny_training_config();
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    for (const auto& fm : model.folds)
        for (const auto& cid : setup.criteria) {
            const auto& snap = fm.criteria.at(cid);
            REQUIRE(static_cast<int>(snap.dev_f1.size()) == config.epochs);
            CHECK(snap.best_epoch == select_best_epoch(snap.dev_f1));
            for (const double f1 : snap.dev_f1)
                CHECK(snap.dev_f1[static_cast<std::size_t>(snap.best_epoch - 1)] >= f1);
        }
}

TEST_CASE("single-label training data is flagged degenerate") {
    TrainSetup setup;
    setup.question = fixtures::synthetic_question();
    ErrorProfile profile;  // no injections: every annotation is label 2
    setup.responses = synthesize_responses(setup.question, profile, 20, 3);
    setup.folds = make_folds(setup.question, setup.responses, 5, 4);
    setup.criteria = {"E1"};
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 1;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    CHECK(model.folds[0].criteria.at("E1").degenerate);

    const auto mixed = small_setup(30);
    const auto model2 = train_question_model(mixed.question, mixed.responses, mixed.folds,
                                             {"E1"}, config);
    CHECK_FALSE(model2.folds[0].criteria.at("E1").degenerate);
}

TEST_CASE("predict_response yields one normalized record per criterion") {
    const auto setup = small_setup(30);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 2;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto records = predict_response(model, 0, "He read a book at the library yesterday .");
    REQUIRE(records.size() == 3);
    std::set<std::string> ids;
    for (const auto& rec : records) {
        ids.insert(rec.criterion_id);
        double sum = 0.0;
        for (const double a : rec.attention) sum += a;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rec.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rec.extracted_cue.has_value());
    }
    CHECK(ids == std::set<std::string>{"E1", "E5", "O1"});
}

TEST_CASE("joint training learns separable criteria at small scale") {
    TrainSetup setup = small_setup(80, 23);
    setup.criteria = {"E1", "E2", "E5"};
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 12;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto tests = evaluate_on_tests(model, setup.question, setup.responses, setup.folds);
    std::map<std::string, std::pair<std::vector<ScoreLabel>, std::vector<ScoreLabel>>> by_crit;
    for (const auto& t : tests) {
        by_crit[t.criterion_id].first.push_back(t.gold);
        by_crit[t.criterion_id].second.push_back(t.pred);
    }
    for (const auto& cid : setup.criteria) {
        const double f1 = macro_f1(per_criterion_f1(by_crit[cid].first, by_crit[cid].second));
        CAPTURE(cid);
        CHECK(f1 >= 0.8);
    }
}

TEST_CASE("evaluate_on_tests covers each response exactly once") {
    const auto setup = small_setup(30);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 1;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto tests = evaluate_on_tests(model, setup.question, setup.responses, setup.folds);
    std::map<std::string, int> appearances;
    for (const auto& t : tests)
        if (t.criterion_id == "E1") ++appearances[t.response_id];
    CHECK(appearances.size() == setup.responses.size());
    for (const auto& [id, count] : appearances) CHECK(count == 1);
}

TEST_CASE("per-criterion models train isolated stacks") {
    const auto setup = small_setup(25);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 2;
    config.per_criterion_models = true;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto& fold0 = model.folds[0];
    // Isolated models: distinct recurrent snapshots even at the same epoch.
    std::set<const BiLstmWeights*> lstms;
    for (const auto& cid : setup.criteria) lstms.insert(fold0.criteria.at(cid).lstm.get());
    CHECK(lstms.size() == setup.criteria.size());
    const auto records = predict_response(model, 0, "He read a book .");
    CHECK(records.size() == setup.criteria.size());
}

TEST_CASE("checkpoints round-trip through disk") {
    namespace fs = std::filesystem;
    const auto setup = small_setup(30);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 2;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto dir = fs::temp_directory_path() / "ste_ckpt_test";
    fs::remove_all(dir);
    save_checkpoints(model, dir.string());
    CHECK(fs::exists(dir / "SQ1" / "fold0" / "E1" / "best.ckpt"));

    TrainedModel loaded = load_checkpoints(dir.string(), "SQ1");
    loaded.encoder = model.encoder;
    loaded.config = model.config;
    REQUIRE(loaded.folds.size() == model.folds.size());
    const std::string text = "He read a book at the library yesterday .";
    for (int fold = 0; fold < static_cast<int>(model.folds.size()); ++fold) {
        const auto a = predict_response(model, fold, text);
        const auto b = predict_response(loaded, fold, text);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto& rb = *std::find_if(b.begin(), b.end(), [&](const PredictionRecord& r) {
                return r.criterion_id == a[i].criterion_id;
            });
            CHECK(a[i].predicted == rb.predicted);
            CHECK((a[i].probabilities - rb.probabilities).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("training manifest records config and per-epoch dev F1") {
    const auto setup = small_setup(25);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 3;
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config);
    const auto doc = training_manifest(model);
    CHECK(doc.at("question") == "SQ1");
    CHECK(doc.at("config").at("epochs") == 3);
    CHECK(doc.at("folds").size() == setup.folds.folds.size());
    const auto& c0 = doc.at("folds").at(0).at("criteria").at(0);
    CHECK(c0.at("dev_f1").size() == 3);
    CHECK(c0.contains("best_epoch"));
    CHECK(c0.contains("degenerate"));
}

TEST_CASE("attention mass on cue tokens") {
    const auto tok = tokenize("a b c d");
    const CueSpan cue{2, 5};  // tokens b and c
    CHECK(attention_mass_on_cue({0.1, 0.4, 0.3, 0.2}, tok, cue) == doctest::Approx(0.7));
}

namespace {

// Splits every word into two half-surface subtokens; exercises the
// word/subtoken alignment path end to end.
class SplittingEncoder final : public Encoder {
public:
    SplittingEncoder(int dim, std::uint64_t seed) : toy_(dim, seed) {}

    EncoderOutput encode(const TokenizedText& tokenized) const override {
        const int n = static_cast<int>(tokenized.tokens.size());
        EncoderOutput out;
        out.hidden.resize(2 * n + 1, toy_.dim());
        out.hidden.row(0).setZero();
        for (int i = 0; i < n; ++i) {
            const std::string& s = tokenized.tokens[static_cast<std::size_t>(i)].surface;
            const auto half = s.size() / 2;
            out.hidden.row(1 + 2 * i) = toy_.embed(s.substr(0, half) + "#a").transpose();
            out.hidden.row(2 + 2 * i) = toy_.embed(s.substr(half) + "#b").transpose();
            out.subtoken_to_word.push_back(i);
            out.subtoken_to_word.push_back(i);
        }
        return out;
    }

    int dim() const override { return toy_.dim(); }

private:
    ToyEncoder toy_;
};

}  // namespace

TEST_CASE("subtoken encoders train and predict at word level") {
    const auto setup = small_setup(25);
    TrainingConfig config = fixtures::tiny_training_config();
    config.epochs = 2;
    auto encoder = std::make_shared<SplittingEncoder>(config.encoder_dim, 5);
    const auto model = train_question_model(setup.question, setup.responses, setup.folds,
                                            setup.criteria, config, encoder);
    const std::string text = "He read a book .";
    const auto records = predict_response(model, 0, text);
    const auto tok = tokenize(text);
    for (const auto& rec : records) {
        REQUIRE(rec.attention.size() == tok.size());  // pooled back to words
        double sum = 0.0;
        for (const double a : rec.attention) sum += a;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        REQUIRE(rec.extracted_cue.has_value());
        CHECK(rec.extracted_cue->start_char >= 0);
        CHECK(rec.extracted_cue->end_char <= static_cast<int>(Utf8View(text).size()));
    }
}
