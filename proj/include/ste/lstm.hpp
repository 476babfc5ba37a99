#ifndef STE_LSTM_HPP
#define STE_LSTM_HPP

#include <Eigen/Dense>

#include "ste/rng.hpp"

namespace ste {

// One direction of the recurrent layer. Gate rows are stacked [i; f; g; o],
// each block `hidden` rows tall.
struct LstmDirWeights {
    Eigen::MatrixXd Wx;  // 4H x input
    Eigen::MatrixXd Wh;  // 4H x H
    Eigen::VectorXd b;   // 4H
};

struct BiLstmWeights {
    LstmDirWeights fwd, bwd;
    int input = 0;
    int hidden = 0;
};

struct LstmDirCache {
    Eigen::MatrixXd i, f, g, o, c, tanh_c, h;  // each n x H, in input order
};

struct BiLstmCache {
    LstmDirCache fwd, bwd;
    Eigen::MatrixXd input;  // n x input
};

struct BiLstmGrads {
    LstmDirWeights fwd, bwd;
};

BiLstmWeights init_bilstm(int input, int hidden, Rng& rng);
BiLstmGrads zero_bilstm_grads(const BiLstmWeights& weights);
void accumulate(BiLstmGrads& acc, const BiLstmGrads& g, double scale);

// X is n x input; the result is n x 2H with the forward direction in the
// first H columns. Pass a cache when a backward pass will follow.
Eigen::MatrixXd bilstm_forward(const BiLstmWeights& weights, const Eigen::MatrixXd& X,
                               BiLstmCache* cache = nullptr);

// dH is n x 2H. Accumulates weight gradients into `acc` and returns dX.
Eigen::MatrixXd bilstm_backward(const BiLstmWeights& weights, const BiLstmCache& cache,
                                const Eigen::MatrixXd& dH, BiLstmGrads& acc);

}  // namespace ste

#endif  // STE_LSTM_HPP
