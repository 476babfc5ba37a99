#ifndef STE_TRAINING_HPP
#define STE_TRAINING_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ste/corpus.hpp"
#include "ste/scoring.hpp"
#include <nlohmann/json.hpp>

namespace ste {

struct TrainingConfig {
    int epochs = 50;
    double learning_rate = 1e-3;
    int recurrent_hidden = 128;  // per direction
    int batch_size = 10;
    int encoder_dim = 32;        // ToyEncoder width
    std::uint64_t seed = 42;
    bool attention_supervision = true;
    bool per_criterion_models = false;
};

// Best-epoch state for one criterion: its own head parameters plus a shared
// reference to the recurrent weights as of that epoch.
struct CriterionSnapshot {
    CriterionHeadParams head;
    std::shared_ptr<const BiLstmWeights> lstm;
    int best_epoch = 0;            // 1-based
    double best_dev_f1 = 0.0;
    std::vector<double> dev_f1;    // history, index 0 = epoch 1
    bool degenerate = false;       // single-label training data
};

struct FoldModel {
    std::map<std::string, CriterionSnapshot> criteria;
};

struct TrainedModel {
    std::string question_id;
    TrainingConfig config;
    std::vector<std::string> criterion_ids;
    std::vector<FoldModel> folds;
    std::shared_ptr<const Encoder> encoder;
};

// Joint training: one shared encoder+recurrent stack per fold with
// per-criterion heads, minimizing the summed per-criterion losses; after
// each epoch the dev macro-F1 is logged per criterion and the best epoch's
// parameters are retained per criterion. With per_criterion_models set, each
// criterion instead gets its own isolated model (the alternative reading).
TrainedModel train_question_model(const Question& question,
                                  const std::vector<Response>& responses,
                                  const FoldAssignment& folds,
                                  const std::vector<std::string>& criterion_ids,
                                  const TrainingConfig& config,
                                  std::shared_ptr<const Encoder> encoder = nullptr);

// One record per criterion, each produced from that criterion's best-epoch
// snapshot. Attention is reported at word level; the cue is decoded from it.
std::vector<PredictionRecord> predict_response(const TrainedModel& model, int fold,
                                               const std::string& response_text);

// Single-criterion forward pass through encoder, recurrent layer and head.
PredictionRecord forward_criterion(const Encoder& encoder, const BiLstmWeights& lstm,
                                   const CriterionHeadParams& head,
                                   const std::string& criterion_id,
                                   const std::string& response_text);

// 1-based index of the maximum dev F1, earliest epoch on ties.
int select_best_epoch(const std::vector<double>& dev_f1_history);

struct TestPrediction {
    std::string response_id;
    int fold = 0;
    std::string criterion_id;
    ScoreLabel gold = ScoreLabel::incorrect;
    ScoreLabel pred = ScoreLabel::incorrect;
    std::optional<CueSpan> predicted_cue;
    std::optional<CueSpan> gold_cue;
    std::vector<double> attention;
};

// Runs every fold's test split through the fold's snapshots; one prediction
// per (test response, criterion) with a gold annotation.
std::vector<TestPrediction> evaluate_on_tests(const TrainedModel& model,
                                              const Question& question,
                                              const std::vector<Response>& responses,
                                              const FoldAssignment& folds);

// Share of predicted attention sitting on the gold cue tokens.
double attention_mass_on_cue(const std::vector<double>& attention,
                             const TokenizedText& tokenized, const CueSpan& cue);

// Machine-readable training record: config, seeds and the per-criterion
// dev-F1 history per fold (field list in README).
nlohmann::ordered_json training_manifest(const TrainedModel& model);

// Checkpoint layout: <dir>/<question>/fold<k>/<criterion>/best.ckpt holds
// the head plus a reference to the fold-level recurrent snapshot
// lstm-epoch<e>.ckpt.
void save_checkpoints(const TrainedModel& model, const std::string& run_dir);
TrainedModel load_checkpoints(const std::string& run_dir, const std::string& question_id);

}  // namespace ste

#endif  // STE_TRAINING_HPP
