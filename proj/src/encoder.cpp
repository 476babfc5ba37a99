#include "ste/encoder.hpp"

#include <cmath>

#include "ste/rng.hpp"

namespace ste {

ToyEncoder::ToyEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

Eigen::VectorXd ToyEncoder::embed(const std::string& surface) const {
    Rng rng(mix_seed(seed_, fnv1a(surface)));
    Eigen::VectorXd v(dim_);
    // Uniform in [-a, a] with a = sqrt(3/D), giving rows of roughly unit norm.
    const double a = std::sqrt(3.0 / static_cast<double>(dim_));
    for (int i = 0; i < dim_; ++i) v(i) = rng.uniform(-a, a);
    return v;
}

EncoderOutput ToyEncoder::encode(const TokenizedText& tokenized) const {
    const int n = static_cast<int>(tokenized.tokens.size());
    EncoderOutput out;
    out.hidden.resize(n + 1, dim_);
    out.hidden.row(0).setZero();
    out.subtoken_to_word.resize(n);
    for (int i = 0; i < n; ++i) {
        out.hidden.row(i + 1) = embed(tokenized.tokens[i].surface).transpose();
        out.subtoken_to_word[i] = i;
    }
    if (n > 0) out.hidden.row(0) = out.hidden.bottomRows(n).colwise().mean();
    return out;
}

}  // namespace ste
