#include "ste/scoring.hpp"

#include <cmath>
#include <stdexcept>

namespace ste {

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

CriterionHeadParams init_head(int dim, Rng& rng) {
    CriterionHeadParams p;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    p.M.resize(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) p.M(r, c) = rng.gaussian() * scale;
    p.V.resize(dim);
    for (int i = 0; i < dim; ++i) p.V(i) = rng.gaussian() * scale;
    p.W.resize(3, dim);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < dim; ++c) p.W(r, c) = rng.gaussian() * scale;
    p.b = Eigen::VectorXd::Zero(3);
    return p;
}

HeadCache forward_head(const CriterionHeadParams& params, const Eigen::MatrixXd& Hprime) {
    if (Hprime.rows() == 0)
        throw std::invalid_argument("forward_head: empty token sequence");
    HeadCache cache;
    const Eigen::VectorXd u = params.M * params.V;
    cache.t = Hprime * u;
    cache.a = cache.t.array().tanh().matrix();
    cache.alpha = stable_softmax(cache.a);
    cache.pooled = Hprime.transpose() * cache.alpha;
    cache.probs = stable_softmax(params.W * cache.pooled + params.b);
    return cache;
}

LossBreakdown compute_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& alpha,
                           ScoreLabel gold,
                           const std::optional<Eigen::VectorXd>& alpha_target) {
    LossBreakdown loss;
    const double p = std::max(probs(label_value(gold)), kLogProbEpsilon);
    loss.score_loss = -std::log(p);
    if (alpha_target) {
        if (alpha_target->size() != alpha.size())
            throw std::invalid_argument("compute_loss: attention target length mismatch");
        loss.attention_loss = (alpha - *alpha_target).squaredNorm();
    }
    loss.total = loss.score_loss + loss.attention_loss;
    return loss;
}

HeadGrads zero_head_grads(const CriterionHeadParams& params) {
    HeadGrads g;
    g.dM = Eigen::MatrixXd::Zero(params.M.rows(), params.M.cols());
    g.dV = Eigen::VectorXd::Zero(params.V.size());
    g.dW = Eigen::MatrixXd::Zero(params.W.rows(), params.W.cols());
    g.db = Eigen::VectorXd::Zero(params.b.size());
    return g;
}

void accumulate(HeadGrads& acc, const HeadGrads& g, double scale) {
    acc.dM += scale * g.dM;
    acc.dV += scale * g.dV;
    acc.dW += scale * g.dW;
    acc.db += scale * g.db;
}

Eigen::MatrixXd backward_head(const CriterionHeadParams& params, const Eigen::MatrixXd& Hprime,
                              const HeadCache& cache, ScoreLabel gold,
                              const std::optional<Eigen::VectorXd>& alpha_target,
                              HeadGrads& acc) {
    const int n = static_cast<int>(Hprime.rows());

    // Classifier: d(NLL + softmax)/dlogits = probs - onehot(gold). The
    // epsilon clamp is active only when p(gold) underflows, where the exact
    // gradient is astronomically large anyway; the unclamped form is used.
    Eigen::VectorXd dlogits = cache.probs;
    dlogits(label_value(gold)) -= 1.0;

    acc.dW.noalias() += dlogits * cache.pooled.transpose();
    acc.db += dlogits;

    Eigen::VectorXd dpooled = params.W.transpose() * dlogits;

    // h~ = sum_i alpha_i h'_i
    Eigen::VectorXd dalpha = Hprime * dpooled;
    Eigen::MatrixXd dH = cache.alpha * dpooled.transpose();

    if (alpha_target) dalpha += 2.0 * (cache.alpha - *alpha_target);

    // Softmax backward: da_i = alpha_i (dalpha_i - sum_j dalpha_j alpha_j).
    const double dot = dalpha.dot(cache.alpha);
    const Eigen::VectorXd da = cache.alpha.cwiseProduct(dalpha.array().matrix() -
                                                        Eigen::VectorXd::Constant(n, dot));
    // tanh backward.
    const Eigen::VectorXd dt = da.cwiseProduct((1.0 - cache.a.array().square()).matrix());

    // t = H' (M V): dH += dt u^T, du = H'^T dt, dM = du V^T, dV = M^T du.
    const Eigen::VectorXd u = params.M * params.V;
    dH.noalias() += dt * u.transpose();
    const Eigen::VectorXd du = Hprime.transpose() * dt;
    acc.dM.noalias() += du * params.V.transpose();
    acc.dV.noalias() += params.M.transpose() * du;

    return dH;
}

ScoreLabel predicted_label(const Eigen::VectorXd& probs) {
    int best = 0;
    for (int label = 1; label < 3; ++label)
        if (probs(label) > probs(best)) best = label;
    return label_from_int(best);
}

std::optional<CueSpan> extract_cue(const std::vector<double>& attention,
                                   const TokenizedText& tokenized) {
    if (attention.empty() || attention.size() != tokenized.tokens.size())
        return std::nullopt;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < attention.size(); ++i)
        if (attention[i] > attention[peak]) peak = i;
    const double floor = 0.5 * attention[peak];
    std::size_t first = peak;
    while (first > 0 && attention[first - 1] >= floor) --first;
    std::size_t last = peak;
    while (last + 1 < attention.size() && attention[last + 1] >= floor) ++last;
    return span_for_tokens(tokenized, first, last);
}

Eigen::VectorXd word_target_to_subtokens(const std::vector<double>& word_target,
                                         const std::vector<int>& subtoken_to_word) {
    const std::size_t n_sub = subtoken_to_word.size();
    Eigen::VectorXd target = Eigen::VectorXd::Zero(static_cast<int>(n_sub));
    std::size_t marked = 0;
    for (std::size_t s = 0; s < n_sub; ++s)
        if (word_target[subtoken_to_word[s]] > 0.0) ++marked;
    if (marked == 0) return target;
    const double w = 1.0 / static_cast<double>(marked);
    for (std::size_t s = 0; s < n_sub; ++s)
        if (word_target[subtoken_to_word[s]] > 0.0) target(static_cast<int>(s)) = w;
    return target;
}

std::vector<double> subtoken_attention_to_words(const Eigen::VectorXd& alpha,
                                                const std::vector<int>& subtoken_to_word,
                                                std::size_t num_words) {
    std::vector<double> words(num_words, 0.0);
    for (int s = 0; s < alpha.size(); ++s)
        words[subtoken_to_word[static_cast<std::size_t>(s)]] += alpha(s);
    return words;
}

}  // namespace ste
