#ifndef STE_EVALUATION_HPP
#define STE_EVALUATION_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ste/corpus.hpp"
#include <nlohmann/json.hpp>

namespace ste {

// Per-label F1 for one criterion, indexed by label value. A cell is absent
// when the label occurs in neither golds nor predictions.
using PerLabelF1 = std::array<std::optional<double>, 3>;

PerLabelF1 per_criterion_f1(const std::vector<ScoreLabel>& golds,
                            const std::vector<ScoreLabel>& preds);

// Mean of the defined per-label F1 cells; 0 when none is defined. Used for
// dev-set model selection.
double macro_f1(const PerLabelF1& f1);

struct CriterionEval {
    std::string criterion_id;
    Category category = Category::E;
    std::size_t num_items = 0;
    PerLabelF1 f1;
    bool degenerate = false;  // single-label training data
};

struct ReportCell {
    std::optional<double> mean;
    std::optional<double> stddev;
    std::size_t count = 0;  // defined per-criterion cells aggregated
};

struct CategoryRow {
    std::string name;  // "E", "O", "G" or "All"
    std::size_t num_criteria = 0;
    std::array<ReportCell, 3> cells;  // indexed by label value
};

struct EvalReport {
    std::string model;
    std::string question_id;
    std::string fold_scheme;
    std::optional<int> shots;
    bool population_std = true;
    std::vector<CriterionEval> criteria;
    std::vector<CategoryRow> rows;  // E, O, G, All
};

// Aggregates per-criterion F1 into the per-category rows: mean and standard
// deviation over the defined cells of each label, undefined cells excluded.
// The All row averages uniformly over criteria.
EvalReport aggregate_report(const std::vector<CriterionEval>& criteria,
                            const std::string& model, const std::string& question_id,
                            const std::string& fold_scheme,
                            std::optional<int> shots = std::nullopt,
                            bool population_std = true);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);
std::string render_report_text(const EvalReport& report);

// Per-cell deltas between two reports, for the compare subcommand.
std::string render_report_delta(const EvalReport& a, const EvalReport& b);

}  // namespace ste

#endif  // STE_EVALUATION_HPP
