#include "ste/agreement.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace ste {

double cohen_kappa(const LabelPairs& pairs) {
    if (pairs.empty()) throw std::invalid_argument("cohen_kappa: no pairs");
    const double n = static_cast<double>(pairs.size());
    double observed = 0.0;
    double marginal_a[3] = {0, 0, 0};
    double marginal_b[3] = {0, 0, 0};
    for (const auto& [a, b] : pairs) {
        if (a == b) observed += 1.0;
        marginal_a[label_value(a)] += 1.0;
        marginal_b[label_value(b)] += 1.0;
    }
    const double p_o = observed / n;
    double p_e = 0.0;
    for (int l = 0; l < 3; ++l) p_e += (marginal_a[l] / n) * (marginal_b[l] / n);
    if (p_e >= 1.0) return 1.0;
    return (p_o - p_e) / (1.0 - p_e);
}

double cue_agreement_f1(const std::vector<std::size_t>& tokens_a,
                        const std::vector<std::size_t>& tokens_b) {
    if (tokens_a.empty() && tokens_b.empty()) return 1.0;
    if (tokens_a.empty() || tokens_b.empty()) return 0.0;
    const std::set<std::size_t> a(tokens_a.begin(), tokens_a.end());
    const std::set<std::size_t> b(tokens_b.begin(), tokens_b.end());
    std::size_t common = 0;
    for (const auto t : a)
        if (b.count(t)) ++common;
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

double cue_agreement_f1(const std::optional<CueSpan>& span_a,
                        const std::optional<CueSpan>& span_b,
                        const TokenizedText& tokenized) {
    std::vector<std::size_t> a, b;
    if (span_a) a = tokens_overlapping(tokenized, *span_a);
    if (span_b) b = tokens_overlapping(tokenized, *span_b);
    return cue_agreement_f1(a, b);
}

AgreementReport dataset_agreement(const Dataset& primary, const Dataset& secondary) {
    AgreementReport report;

    // criterion id -> aligned label pairs, kept in primary rubric order.
    std::vector<std::string> criterion_order;
    std::map<std::string, LabelPairs> pairs_by_criterion;
    double cue_f1_sum = 0.0;
    std::size_t cue_pairs = 0;

    for (const auto& q : primary.questions)
        for (const auto& c : q.rubric.criteria) criterion_order.push_back(c.id);

    for (const auto& r1 : primary.responses) {
        const Response* r2 = nullptr;
        for (const auto& cand : secondary.responses)
            if (cand.id == r1.id) {
                r2 = &cand;
                break;
            }
        if (!r2) continue;
        TokenizedText tokenized = tokenize(r1.text);
        for (const auto& [cid, ann1] : r1.annotations) {
            auto it = r2->annotations.find(cid);
            if (it == r2->annotations.end()) continue;
            pairs_by_criterion[cid].emplace_back(ann1.score, it->second.score);
            cue_f1_sum += cue_agreement_f1(ann1.cue, it->second.cue, tokenized);
            ++cue_pairs;
        }
    }

    double kappa_sum = 0.0;
    std::size_t kappa_count = 0;
    for (const auto& cid : criterion_order) {
        auto it = pairs_by_criterion.find(cid);
        if (it == pairs_by_criterion.end()) continue;
        CriterionAgreement ca;
        ca.criterion_id = cid;
        ca.num_pairs = it->second.size();
        ca.kappa = cohen_kappa(it->second);
        kappa_sum += ca.kappa;
        ++kappa_count;
        report.per_criterion.push_back(std::move(ca));
    }
    report.mean_kappa = kappa_count ? kappa_sum / static_cast<double>(kappa_count) : 0.0;
    report.cue_f1 = cue_pairs ? cue_f1_sum / static_cast<double>(cue_pairs) : 0.0;
    report.cue_pairs = cue_pairs;
    return report;
}

}  // namespace ste
