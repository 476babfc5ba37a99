#ifndef STE_CORPUS_HPP
#define STE_CORPUS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ste/rules.hpp"
#include "ste/text.hpp"

namespace ste {

// Analytic score: 2 correct, 1 partially correct, 0 incorrect.
enum class ScoreLabel : int { incorrect = 0, partial = 1, correct = 2 };

inline int label_value(ScoreLabel l) { return static_cast<int>(l); }
ScoreLabel label_from_int(int v);

enum class Category : char { E = 'E', O = 'O', G = 'G' };

Category category_from_string(const std::string& s);

struct Chunk {
    int index = 0;
    std::string l1_text;
    std::string gloss;  // L2 hint shown in prompts
};

struct AnalyticCriterion {
    std::string id;
    int chunk_index = 0;
    Category category = Category::E;
    bool allows_partial = false;
    // Keyed by label value; entries for 2 and 0 always present, 1 iff
    // allows_partial.
    std::map<int, std::string> label_descriptions;
    std::optional<RubricRule> machine_rule;
};

struct Rubric {
    std::vector<AnalyticCriterion> criteria;

    const AnalyticCriterion* find(const std::string& id) const;
};

struct Question {
    std::string id;
    std::string l1_text;
    std::vector<Chunk> chunks;
    std::string reference_answer;
    Rubric rubric;
};

struct Annotation {
    ScoreLabel score = ScoreLabel::incorrect;
    std::optional<CueSpan> cue;
    std::string annotator_id;
};

struct Response {
    std::string id;
    std::string question_id;
    std::string text;
    std::map<std::string, Annotation> annotations;  // criterion id -> annotation
};

struct Dataset {
    std::vector<Question> questions;
    std::vector<Response> responses;

    const Question* question_by_id(const std::string& id) const;
    std::vector<const Response*> responses_for(const std::string& question_id) const;
};

// --- file I/O ----------------------------------------------------------

// Loads and fully validates a dataset file (schema documented in README).
// Schema problems throw SchemaError with location context; invariant
// breaches throw ValidationError listing every breach. Non-fatal oddities
// (duplicate annotation keys, i.e. surplus annotations) are reported through
// `warnings` and the last entry wins.
Dataset load_dataset(const std::string& path,
                     std::vector<std::string>* warnings = nullptr);

Dataset parse_dataset(const std::string& json_text,
                      std::vector<std::string>* warnings = nullptr);

void save_dataset(const Dataset& dataset, const std::string& path);
std::string serialize_dataset(const Dataset& dataset);

// Validation used by load; exposed for tests and the `validate` subcommand.
std::vector<std::string> validate_dataset(const Dataset& dataset);

// --- statistics ---------------------------------------------------------

struct QuestionStats {
    std::string question_id;
    std::size_t num_responses = 0;
    std::size_t num_distinct = 0;  // by exact text equality
    std::size_t num_criteria = 0;
    std::size_t label_counts[3] = {0, 0, 0};  // indexed by label value
};

std::vector<QuestionStats> dataset_stats(const Dataset& dataset);

// --- cross-validation folds ----------------------------------------------

struct FoldSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> dev_ids;
    std::vector<std::string> test_ids;
};

// K disjoint test blocks covering every response exactly once, with a
// 3:1:1-shaped train/dev/test split per fold. Test blocks take floor(n/k)
// ids each, the n mod k remainder spread one-per-fold from fold 0; dev takes
// floor(n/5) of the rest; train is the remainder. Responses with identical
// text stay in the same split unless allow_duplicate_leakage is set.
struct FoldAssignment {
    std::vector<FoldSplit> folds;
};

FoldAssignment make_folds(const Question& question,
                          const std::vector<Response>& responses, int k,
                          std::uint64_t seed,
                          bool allow_duplicate_leakage = false);

// --- criterion filtering --------------------------------------------------

struct CriterionFilterResult {
    std::vector<std::string> kept;  // rubric order
    std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
};

// Keeps a criterion iff (#annotations scored 0) / (#annotations present)
// >= min_incorrect_ratio. Criteria with no annotations are excluded and
// reported.
CriterionFilterResult filter_criteria(const Question& question,
                                      const std::vector<Response>& responses,
                                      double min_incorrect_ratio = 0.10);

}  // namespace ste

#endif  // STE_CORPUS_HPP
