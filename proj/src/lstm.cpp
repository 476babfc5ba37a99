#include "ste/lstm.hpp"

#include <cmath>

namespace ste {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

void init_dir(LstmDirWeights& w, int input, int hidden, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    w.Wx.resize(4 * hidden, input);
    w.Wh.resize(4 * hidden, hidden);
    w.b.resize(4 * hidden);
    for (int r = 0; r < 4 * hidden; ++r) {
        for (int c = 0; c < input; ++c) w.Wx(r, c) = rng.uniform(-a, a);
        for (int c = 0; c < hidden; ++c) w.Wh(r, c) = rng.uniform(-a, a);
        w.b(r) = rng.uniform(-a, a);
    }
    // Forget-gate bias starts at 1 so early training does not wipe state.
    w.b.segment(hidden, hidden).array() += 1.0;
}

// Runs one direction over the rows of X in the given order and writes the
// hidden state of input row t into row t of the result.
void run_dir(const LstmDirWeights& w, const Eigen::MatrixXd& X, bool reverse,
             int hidden, Eigen::MatrixXd& H_out, int col_offset, LstmDirCache* cache) {
    const int n = static_cast<int>(X.rows());
    if (cache) {
        cache->i.resize(n, hidden);
        cache->f.resize(n, hidden);
        cache->g.resize(n, hidden);
        cache->o.resize(n, hidden);
        cache->c.resize(n, hidden);
        cache->tanh_c.resize(n, hidden);
        cache->h.resize(n, hidden);
    }
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
    for (int step = 0; step < n; ++step) {
        const int t = reverse ? n - 1 - step : step;
        const Eigen::VectorXd z = w.Wx * X.row(t).transpose() + w.Wh * h + w.b;
        const Eigen::VectorXd i = sigmoid(z.segment(0, hidden));
        const Eigen::VectorXd f = sigmoid(z.segment(hidden, hidden));
        const Eigen::VectorXd g = z.segment(2 * hidden, hidden).array().tanh().matrix();
        const Eigen::VectorXd o = sigmoid(z.segment(3 * hidden, hidden));
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        const Eigen::VectorXd tanh_c = c.array().tanh().matrix();
        h = o.cwiseProduct(tanh_c);
        H_out.row(t).segment(col_offset, hidden) = h.transpose();
        if (cache) {
            cache->i.row(t) = i.transpose();
            cache->f.row(t) = f.transpose();
            cache->g.row(t) = g.transpose();
            cache->o.row(t) = o.transpose();
            cache->c.row(t) = c.transpose();
            cache->tanh_c.row(t) = tanh_c.transpose();
            cache->h.row(t) = h.transpose();
        }
    }
}

// Backpropagation through one direction; dH_dir holds the gradients flowing
// into each step's hidden state from outside. Accumulates into `acc` and
// adds input gradients into dX.
void backward_dir(const LstmDirWeights& w, const LstmDirCache& cache,
                  const Eigen::MatrixXd& X, bool reverse, int hidden,
                  const Eigen::MatrixXd& dH_dir, LstmDirWeights& acc,
                  Eigen::MatrixXd& dX) {
    const int n = static_cast<int>(X.rows());
    Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dz(4 * hidden);
    for (int step = n - 1; step >= 0; --step) {
        const int t = reverse ? n - 1 - step : step;
        const int t_prev = reverse ? t + 1 : t - 1;
        const bool has_prev = step > 0;

        const Eigen::VectorXd dh = dH_dir.row(t).transpose() + dh_carry;
        const Eigen::VectorXd o = cache.o.row(t).transpose();
        const Eigen::VectorXd tanh_c = cache.tanh_c.row(t).transpose();
        const Eigen::VectorXd i = cache.i.row(t).transpose();
        const Eigen::VectorXd f = cache.f.row(t).transpose();
        const Eigen::VectorXd g = cache.g.row(t).transpose();
        const Eigen::VectorXd c_prev = has_prev
                                           ? Eigen::VectorXd(cache.c.row(t_prev).transpose())
                                           : Eigen::VectorXd(Eigen::VectorXd::Zero(hidden));

        const Eigen::VectorXd do_ = dh.cwiseProduct(tanh_c);
        Eigen::VectorXd dc = dc_carry +
            dh.cwiseProduct(o).cwiseProduct((1.0 - tanh_c.array().square()).matrix());
        const Eigen::VectorXd di = dc.cwiseProduct(g);
        const Eigen::VectorXd dg = dc.cwiseProduct(i);
        const Eigen::VectorXd df = dc.cwiseProduct(c_prev);
        dc_carry = dc.cwiseProduct(f);

        dz.segment(0, hidden) = di.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        dz.segment(hidden, hidden) = df.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        dz.segment(2 * hidden, hidden) = dg.cwiseProduct((1.0 - g.array().square()).matrix());
        dz.segment(3 * hidden, hidden) = do_.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

        acc.Wx.noalias() += dz * X.row(t);
        if (has_prev) acc.Wh.noalias() += dz * cache.h.row(t_prev);
        acc.b += dz;
        dX.row(t) += (w.Wx.transpose() * dz).transpose();
        dh_carry = w.Wh.transpose() * dz;
    }
}

}  // namespace

BiLstmWeights init_bilstm(int input, int hidden, Rng& rng) {
    BiLstmWeights w;
    w.input = input;
    w.hidden = hidden;
    init_dir(w.fwd, input, hidden, rng);
    init_dir(w.bwd, input, hidden, rng);
    return w;
}

BiLstmGrads zero_bilstm_grads(const BiLstmWeights& weights) {
    BiLstmGrads g;
    for (auto [dst, src] : {std::pair{&g.fwd, &weights.fwd}, std::pair{&g.bwd, &weights.bwd}}) {
        dst->Wx = Eigen::MatrixXd::Zero(src->Wx.rows(), src->Wx.cols());
        dst->Wh = Eigen::MatrixXd::Zero(src->Wh.rows(), src->Wh.cols());
        dst->b = Eigen::VectorXd::Zero(src->b.size());
    }
    return g;
}

void accumulate(BiLstmGrads& acc, const BiLstmGrads& g, double scale) {
    acc.fwd.Wx += scale * g.fwd.Wx;
    acc.fwd.Wh += scale * g.fwd.Wh;
    acc.fwd.b += scale * g.fwd.b;
    acc.bwd.Wx += scale * g.bwd.Wx;
    acc.bwd.Wh += scale * g.bwd.Wh;
    acc.bwd.b += scale * g.bwd.b;
}

Eigen::MatrixXd bilstm_forward(const BiLstmWeights& weights, const Eigen::MatrixXd& X,
                               BiLstmCache* cache) {
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd H(n, 2 * weights.hidden);
    if (cache) cache->input = X;
    run_dir(weights.fwd, X, false, weights.hidden, H, 0, cache ? &cache->fwd : nullptr);
    run_dir(weights.bwd, X, true, weights.hidden, H, weights.hidden,
            cache ? &cache->bwd : nullptr);
    return H;
}

Eigen::MatrixXd bilstm_backward(const BiLstmWeights& weights, const BiLstmCache& cache,
                                const Eigen::MatrixXd& dH, BiLstmGrads& acc) {
    const int hidden = weights.hidden;
    Eigen::MatrixXd dX = Eigen::MatrixXd::Zero(cache.input.rows(), cache.input.cols());
    backward_dir(weights.fwd, cache.fwd, cache.input, false, hidden,
                 dH.leftCols(hidden), acc.fwd, dX);
    backward_dir(weights.bwd, cache.bwd, cache.input, true, hidden,
                 dH.rightCols(hidden), acc.bwd, dX);
    return dX;
}

}  // namespace ste
