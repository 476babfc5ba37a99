#ifndef STE_SCORING_HPP
#define STE_SCORING_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ste/corpus.hpp"
#include "ste/encoder.hpp"
#include "ste/lstm.hpp"

namespace ste {

// Per-criterion attention head and classifier: attention scores
// t_i = h'_i M V, alpha = softmax(tanh(t)), pooled state h~ = sum alpha_i h'_i,
// class probabilities softmax(W h~ + b).
struct CriterionHeadParams {
    Eigen::MatrixXd M;  // D x D
    Eigen::VectorXd V;  // D
    Eigen::MatrixXd W;  // 3 x D
    Eigen::VectorXd b;  // 3
};

CriterionHeadParams init_head(int dim, Rng& rng);

// Max-shifted softmax; exp-normalization over the whole vector.
Eigen::VectorXd stable_softmax(const Eigen::VectorXd& x);

struct HeadCache {
    Eigen::VectorXd t;       // raw attention scores
    Eigen::VectorXd a;       // tanh(t)
    Eigen::VectorXd alpha;   // attention weights
    Eigen::VectorXd pooled;  // h~
    Eigen::VectorXd probs;   // 3
};

// Hprime is n x D (one row per subtoken).
HeadCache forward_head(const CriterionHeadParams& params, const Eigen::MatrixXd& Hprime);

struct LossBreakdown {
    double score_loss = 0.0;
    double attention_loss = 0.0;
    double total = 0.0;
};

// score_loss = -log p(gold) with p clamped at 1e-12; attention_loss is the
// summed squared error against the target when one is given, else 0;
// total = score_loss + attention_loss exactly.
LossBreakdown compute_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& alpha,
                           ScoreLabel gold,
                           const std::optional<Eigen::VectorXd>& alpha_target);

inline constexpr double kLogProbEpsilon = 1e-12;

struct HeadGrads {
    Eigen::MatrixXd dM;
    Eigen::VectorXd dV;
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
};

HeadGrads zero_head_grads(const CriterionHeadParams& params);
void accumulate(HeadGrads& acc, const HeadGrads& g, double scale);

// Backward pass for one (instance, criterion): gradients of total loss with
// respect to the head parameters, accumulated into `acc`; returns dH', the
// gradient with respect to the recurrent states.
Eigen::MatrixXd backward_head(const CriterionHeadParams& params, const Eigen::MatrixXd& Hprime,
                              const HeadCache& cache, ScoreLabel gold,
                              const std::optional<Eigen::VectorXd>& alpha_target,
                              HeadGrads& acc);

// Argmax over class probabilities with exact ties broken toward the lower
// label (conservative grading).
ScoreLabel predicted_label(const Eigen::VectorXd& probs);

// Inference-time cue decoding: take the argmax attention token (earliest on
// exact ties), extend over adjacent tokens while their weight is at least
// half the maximum, return the covering character span.
std::optional<CueSpan> extract_cue(const std::vector<double>& attention,
                                   const TokenizedText& tokenized);

struct PredictionRecord {
    std::string criterion_id;
    Eigen::Vector3d probabilities;
    ScoreLabel predicted = ScoreLabel::incorrect;
    std::vector<double> attention;  // word-level weights, sums to 1
    std::optional<CueSpan> extracted_cue;
};

// Spreads a word-level attention target over subtokens (dividing each cue
// token's mass over its subtokens, renormalized), and pools subtoken
// attention back to words by summation.
Eigen::VectorXd word_target_to_subtokens(const std::vector<double>& word_target,
                                         const std::vector<int>& subtoken_to_word);
std::vector<double> subtoken_attention_to_words(const Eigen::VectorXd& alpha,
                                                const std::vector<int>& subtoken_to_word,
                                                std::size_t num_words);

// Adam with the usual defaults; step() applies bias-corrected updates.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void begin_step() { ++t_; }

    template <typename Mat>
    void update(Mat& param, const Mat& grad, Mat& m, Mat& v) const {
        m = beta1_ * m + (1.0 - beta1_) * grad;
        v = (beta2_ * v.array() + (1.0 - beta2_) * grad.array().square()).matrix();
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace ste

#endif  // STE_SCORING_HPP
