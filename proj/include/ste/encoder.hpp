#ifndef STE_ENCODER_HPP
#define STE_ENCODER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ste/text.hpp"

namespace ste {

// Contextual-encoder output: row 0 is the leading aggregate position, rows
// 1..n_sub the subtoken states. subtoken_to_word maps each subtoken to the
// word token it came from, so cue supervision given on words can be spread
// over subtokens and attention can be pooled back to words.
struct EncoderOutput {
    Eigen::MatrixXd hidden;              // (n_sub + 1) x dim
    std::vector<int> subtoken_to_word;   // size n_sub
};

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual EncoderOutput encode(const TokenizedText& tokenized) const = 0;
    virtual int dim() const = 0;
};

// Deterministic hash-based static embeddings: each surface form maps to a
// fixed vector derived from (surface, seed). One subtoken per word; the
// aggregate row is the mean of the token embeddings. Lets the full training
// and test stack run without pretrained weights.
class ToyEncoder final : public Encoder {
public:
    ToyEncoder(int dim, std::uint64_t seed);

    EncoderOutput encode(const TokenizedText& tokenized) const override;
    int dim() const override { return dim_; }

    Eigen::VectorXd embed(const std::string& surface) const;

private:
    int dim_;
    std::uint64_t seed_;
};

}  // namespace ste

#endif  // STE_ENCODER_HPP
