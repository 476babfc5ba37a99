#include <doctest.h>

#include <algorithm>

#include "ste/evaluation.hpp"
#include "ste/rng.hpp"

using namespace ste;

namespace {

std::vector<ScoreLabel> labels(std::initializer_list<int> values) {
    std::vector<ScoreLabel> out;
    for (const int v : values) out.push_back(label_from_int(v));
    return out;
}

}  // namespace

TEST_CASE("perfect predictions give F1 1 for every present label") {
    const auto golds = labels({2, 1, 0, 2, 1, 0});
    const auto f1 = per_criterion_f1(golds, golds);
    for (int label = 0; label < 3; ++label) {
        REQUIRE(f1[label].has_value());
        CHECK(*f1[label] == doctest::Approx(1.0));
    }
}

TEST_CASE("hand confusion-matrix arithmetic") {
    const auto f1 = per_criterion_f1(labels({2, 2, 0, 0}), labels({2, 0, 0, 0}));
    REQUIRE(f1[2].has_value());
    REQUIRE(f1[0].has_value());
    CHECK(*f1[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(*f1[0] == doctest::Approx(0.8).epsilon(1e-9));
    CHECK_FALSE(f1[1].has_value());  // label 1 occurs nowhere: undefined
}

TEST_CASE("label present in preds only is defined with F1 0") {
    const auto f1 = per_criterion_f1(labels({2, 2}), labels({2, 1}));
    REQUIRE(f1[1].has_value());
    CHECK(*f1[1] == 0.0);
}

TEST_CASE("length mismatch is an error") {
    CHECK_THROWS_AS(per_criterion_f1(labels({2}), labels({2, 0})), std::invalid_argument);
}

TEST_CASE("macro F1 averages defined cells only") {
    PerLabelF1 f1;
    f1[2] = 1.0;
    f1[0] = 0.5;
    CHECK(macro_f1(f1) == doctest::Approx(0.75));
    PerLabelF1 empty;
    CHECK(macro_f1(empty) == 0.0);
}

namespace {

CriterionEval make_eval(std::string id, Category cat, std::optional<double> f2,
                        std::optional<double> f1v, std::optional<double> f0) {
    CriterionEval e;
    e.criterion_id = std::move(id);
    e.category = cat;
    e.num_items = 10;
    e.f1[2] = f2;
    e.f1[1] = f1v;
    e.f1[0] = f0;
    return e;
}

}  // namespace

TEST_CASE("aggregate means, population std, and nan exclusion") {
    std::vector<CriterionEval> evals = {
        make_eval("E1", Category::E, 0.8, std::nullopt, 0.6),
        make_eval("E2", Category::E, 1.0, std::nullopt, std::nullopt),
        make_eval("O1", Category::O, 0.9, std::nullopt, 0.7),
        make_eval("G1", Category::G, 0.5, 0.4, 0.3),
    };
    const EvalReport report = aggregate_report(evals, "m", "Q", "5-fold 3:1:1");
    REQUIRE(report.rows.size() == 4);

    const CategoryRow& e_row = report.rows[0];
    CHECK(e_row.name == "E");
    CHECK(e_row.num_criteria == 2);
    CHECK(*e_row.cells[2].mean == doctest::Approx(0.9));
    CHECK(*e_row.cells[2].stddev == doctest::Approx(0.1));  // population std
    // Undefined label-0 cell of E2 excluded: mean over {0.6} alone.
    CHECK(*e_row.cells[0].mean == doctest::Approx(0.6));
    CHECK(e_row.cells[0].count == 1);
    CHECK_FALSE(e_row.cells[1].mean.has_value());  // no E criterion defines label 1

    const CategoryRow& o_row = report.rows[1];
    CHECK(o_row.name == "O");
    CHECK_FALSE(o_row.cells[1].mean.has_value());

    const CategoryRow& all_row = report.rows[3];
    CHECK(all_row.name == "All");
    CHECK(*all_row.cells[2].mean == doctest::Approx((0.8 + 1.0 + 0.9 + 0.5) / 4.0));
    CHECK(*all_row.cells[1].mean == doctest::Approx(0.4));
    CHECK(all_row.cells[1].count == 1);
}

TEST_CASE("single criterion in a category has std 0") {
    std::vector<CriterionEval> evals = {make_eval("G1", Category::G, 0.7, std::nullopt, 0.6)};
    const EvalReport report = aggregate_report(evals, "m", "Q", "5-fold 3:1:1");
    CHECK(*report.rows[2].cells[2].stddev == 0.0);
}

TEST_CASE("two-point mean and population std") {
    std::vector<CriterionEval> evals = {
        make_eval("G1", Category::G, 0.8, std::nullopt, std::nullopt),
        make_eval("G2", Category::G, 1.0, std::nullopt, std::nullopt),
    };
    const EvalReport report = aggregate_report(evals, "m", "Q", "5-fold 3:1:1");
    CHECK(*report.rows[2].cells[2].mean == doctest::Approx(0.9));
    CHECK(*report.rows[2].cells[2].stddev == doctest::Approx(0.1));
    // Sample std instead when requested.
    const EvalReport sample = aggregate_report(evals, "m", "Q", "5-fold 3:1:1", std::nullopt, false);
    CHECK(*sample.rows[2].cells[2].stddev == doctest::Approx(0.1 * std::sqrt(2.0)));
}

TEST_CASE("report renders E O G All rows with per-label columns") {
    std::vector<CriterionEval> evals = {
        make_eval("E1", Category::E, 0.92, 0.64, 0.82),
        make_eval("O1", Category::O, 0.95, std::nullopt, 0.79),
        make_eval("G1", Category::G, 0.94, 0.81, 0.88),
    };
    const EvalReport report = aggregate_report(evals, "m", "Q", "5-fold 3:1:1");
    const std::string text = render_report_text(report);
    CHECK(text.find("E (1)") != std::string::npos);
    CHECK(text.find("O (1)") != std::string::npos);
    CHECK(text.find("G (1)") != std::string::npos);
    CHECK(text.find("All (3)") != std::string::npos);
    CHECK(text.find("nan") != std::string::npos);  // O row, partial column
    CHECK(text.find("Correct") != std::string::npos);
    CHECK(text.find("Partial. Correct") != std::string::npos);
    CHECK(text.find("Incorrect") != std::string::npos);
}

TEST_CASE("aggregation is permutation-invariant") {
    Rng rng(321);
    std::vector<CriterionEval> evals;
    const Category cats[3] = {Category::E, Category::O, Category::G};
    for (int i = 0; i < 12; ++i) {
        auto maybe = [&]() -> std::optional<double> {
            if (rng.bernoulli(0.25)) return std::nullopt;
            return rng.uniform();
        };
        evals.push_back(make_eval("C" + std::to_string(i), cats[rng.below(3)], maybe(), maybe(),
                                  maybe()));
    }
    const EvalReport base = aggregate_report(evals, "m", "Q", "s");
    for (int trial = 0; trial < 10; ++trial) {
        auto shuffled = evals;
        rng.shuffle(shuffled);
        const EvalReport other = aggregate_report(shuffled, "m", "Q", "s");
        for (std::size_t row = 0; row < base.rows.size(); ++row)
            for (int label = 0; label < 3; ++label) {
                const auto& a = base.rows[row].cells[label];
                const auto& b = other.rows[row].cells[label];
                CHECK(a.mean.has_value() == b.mean.has_value());
                if (a.mean)
                    CHECK(*a.mean == doctest::Approx(*b.mean).epsilon(1e-12));
            }
    }
}

TEST_CASE("all defined F1 values lie in [0,1] and means stay within range") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(20));
        std::vector<ScoreLabel> golds, preds;
        for (int i = 0; i < n; ++i) {
            golds.push_back(label_from_int(static_cast<int>(rng.below(3))));
            preds.push_back(label_from_int(static_cast<int>(rng.below(3))));
        }
        const auto f1 = per_criterion_f1(golds, preds);
        for (int label = 0; label < 3; ++label)
            if (f1[label]) {
                CHECK(*f1[label] >= 0.0);
                CHECK(*f1[label] <= 1.0);
            }
    }
}

TEST_CASE("report JSON round-trips") {
    std::vector<CriterionEval> evals = {
        make_eval("E1", Category::E, 0.8, std::nullopt, 0.25),
        make_eval("O9", Category::O, 1.0, std::nullopt, std::nullopt),
    };
    const EvalReport report = aggregate_report(evals, "model-x", "Q5", "5-fold 3:1:1", 2);
    const auto doc = report_to_json(report);
    const EvalReport back = report_from_json(doc);
    CHECK(report_to_json(back) == doc);
    CHECK(back.model == "model-x");
    REQUIRE(back.shots.has_value());
    CHECK(*back.shots == 2);
}
