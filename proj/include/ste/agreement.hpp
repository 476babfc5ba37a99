#ifndef STE_AGREEMENT_HPP
#define STE_AGREEMENT_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ste/corpus.hpp"

namespace ste {

using LabelPairs = std::vector<std::pair<ScoreLabel, ScoreLabel>>;

// Unweighted Cohen's kappa over aligned label pairs. When chance agreement
// is 1 (both annotators constant and equal) the value is 1 by convention.
double cohen_kappa(const LabelPairs& pairs);

// Token-level F1 between two cue token-index sets. Both empty -> 1.0,
// exactly one empty -> 0.0.
double cue_agreement_f1(const std::vector<std::size_t>& tokens_a,
                        const std::vector<std::size_t>& tokens_b);

// Convenience over character spans sharing one tokenization.
double cue_agreement_f1(const std::optional<CueSpan>& span_a,
                        const std::optional<CueSpan>& span_b,
                        const TokenizedText& tokenized);

struct CriterionAgreement {
    std::string criterion_id;
    std::size_t num_pairs = 0;
    double kappa = 0.0;
};

struct AgreementReport {
    std::vector<CriterionAgreement> per_criterion;
    double mean_kappa = 0.0;      // uniform mean over criteria with pairs
    double cue_f1 = 0.0;          // mean of per-item cue F1 over aligned pairs
    std::size_t cue_pairs = 0;
};

// Aligns two annotation sets by (response id, criterion id) and computes the
// per-criterion kappa plus overall cue agreement.
AgreementReport dataset_agreement(const Dataset& primary, const Dataset& secondary);

}  // namespace ste

#endif  // STE_AGREEMENT_HPP
