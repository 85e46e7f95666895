#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elastiq/error.hpp"
#include "elastiq/nn/loss.hpp"
#include "elastiq/nn/lstm.hpp"

namespace elastiq::nn {

enum class LossKind { Mse, WeightedMse };
enum class TrainableScope { All, HeadOnly };

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t max_iters = 5000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Mse;
    TrainableScope scope = TrainableScope::All;
    std::size_t report_every = 250;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
        throw ConfigError("learning_rate must be positive");
}

/// One training sequence: a t_in x n_in window, t_out targets for the tail
/// steps, and a sample weight (used by the weighted loss only).
struct Example {
    Matrix window;
    Vector targets;
    double weight = 1.0;
};

struct GradientResult {
    NetworkParams grads; // same shapes as the parameters
    double loss = 0.0;
};

namespace detail {

inline Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

/// Loss coefficients per stacked column (column s * B + b): the factor
/// multiplying (y − target)² in the loss. Throws on an all-zero weight set.
inline std::vector<double> loss_coefficients(std::span<const Example> batch, int t_out, LossKind loss) {
    const std::size_t B = batch.size();
    std::vector<double> w(B);
    for (std::size_t b = 0; b < B; ++b) {
        const double wb = loss == LossKind::Mse ? 1.0 : batch[b].weight;
        if (!(wb >= 0.0) || !std::isfinite(wb))
            throw ConfigError("sample " + std::to_string(b) + " has an invalid weight");
        w[b] = wb;
    }
    double total = 0.0;
    for (int s = 0; s < t_out; ++s)
        for (std::size_t b = 0; b < B; ++b) total += w[b];
    if (total == 0.0) throw EmptyLossError("all sample weights are zero: the batch was fully filtered");
    std::vector<double> coef(B);
    for (std::size_t b = 0; b < B; ++b) coef[b] = w[b] / total;
    return coef;
}

struct HeadPass {
    Matrix A; // n_den x M pre-activation
    Matrix R; // relu(A)
    RowVector Y;
};

inline HeadPass head_forward(const DenseHeadParams& head, const Matrix& E) {
    HeadPass p;
    p.A = (head.W_h1 * E).colwise() + head.b_h1;
    p.R = p.A.cwiseMax(0.0);
    p.Y = (head.W_h2 * p.R).array() + head.b_h2;
    return p;
}

/// Backward through the head for stacked encodings E (n_cell x M).
/// dY holds dL/dy per column. Accumulates head gradients into g and
/// returns dL/dE.
inline Matrix head_backward(const DenseHeadParams& head, const Matrix& E, const HeadPass& fwd, const RowVector& dY,
                            DenseHeadParams& g, bool need_dE) {
    g.W_h2 = dY * fwd.R.transpose();
    g.b_h2 = dY.sum();
    Matrix dA = head.W_h2.transpose() * dY;
    dA.array() *= (fwd.A.array() > 0.0).cast<double>();
    g.W_h1 = dA * E.transpose();
    g.b_h1 = dA.rowwise().sum();
    if (!need_dE) return {};
    return head.W_h1.transpose() * dA;
}

/// Per-column loss contributions and dL/dy. Column order s * B + b.
inline RowVector loss_backward(const RowVector& Y, std::span<const Example> batch, int t_out,
                               const std::vector<double>& coef, double& loss) {
    const Index B = static_cast<Index>(batch.size());
    RowVector dY(Y.size());
    std::vector<double> per_sample(batch.size(), 0.0);
    for (Index b = 0; b < B; ++b) {
        const auto& targets = batch[b].targets;
        if (targets.size() != t_out)
            throw ConfigError("sample " + std::to_string(b) + " has " + std::to_string(targets.size()) +
                              " targets, expected " + std::to_string(t_out));
        for (int s = 0; s < t_out; ++s) {
            const Index col = s * B + b;
            const double d = Y(col) - targets(s);
            per_sample[b] += coef[b] * (d * d);
            dY(col) = 2.0 * coef[b] * d;
        }
    }
    loss = 0.0;
    for (Index b = 0; b < B; ++b) {
        if (!std::isfinite(per_sample[b]))
            throw NumericError("non-finite loss contribution from sample " + std::to_string(b));
        loss += per_sample[b];
    }
    return dY;
}

} // namespace detail

/// Tail encodings of a batch stacked as columns s * B + b (n_cell x t_out·B).
/// Uses the same batched arithmetic as training.
inline Matrix batch_encodings(std::span<const Example> batch, const NetworkParams& params) {
    const auto& m = params.meta;
    const auto& c = params.cell;
    const Index B = static_cast<Index>(batch.size());
    const Index nc = m.n_cell;
    Matrix E(nc, m.t_out * B);
    Matrix Hs = Matrix::Zero(nc, B), Cs = Matrix::Zero(nc, B), X(m.n_in, B);
    const int tail = m.t_in - m.t_out;
    for (int t = 0; t < m.t_in; ++t) {
        for (Index b = 0; b < B; ++b) X.col(b) = batch[b].window.row(t).transpose();
        const Matrix F = detail::sigmoid((c.W_f * X + c.V_f * Hs).colwise() + c.b_f);
        const Matrix I = detail::sigmoid((c.W_i * X + c.V_i * Hs).colwise() + c.b_i);
        const Matrix O = detail::sigmoid((c.W_o * X + c.V_o * Hs).colwise() + c.b_o);
        const Matrix G = ((c.W_c * X + c.V_c * Hs).colwise() + c.b_c).array().tanh().matrix();
        Cs = F.cwiseProduct(Cs) + I.cwiseProduct(G);
        Hs = O.cwiseProduct(Cs.array().tanh().matrix());
        if (t >= tail) E.middleCols((t - tail) * B, B) = Hs;
    }
    return E;
}

/// Exact gradients of the configured loss for a batch, by reverse
/// accumulation through the unfolded sequence. Cell gradients are zero
/// under the head-only scope.
inline GradientResult bptt_gradients(std::span<const Example> batch, const NetworkParams& params,
                                     const TrainConfig& cfg) {
    if (batch.empty()) throw ConfigError("bptt_gradients: empty batch");
    const auto& m = params.meta;
    const auto& c = params.cell;
    const Index B = static_cast<Index>(batch.size());
    const Index nc = m.n_cell;
    const int T = m.t_in;
    const int tail = m.t_in - m.t_out;
    for (Index b = 0; b < B; ++b) {
        const auto& w = batch[b].window;
        if (w.rows() != m.t_in || w.cols() != m.n_in)
            throw ConfigError("sample " + std::to_string(b) + " window has shape " + std::to_string(w.rows()) +
                              "x" + std::to_string(w.cols()));
    }

    const auto coef = detail::loss_coefficients(batch, m.t_out, cfg.loss);
    const bool full = cfg.scope == TrainableScope::All;

    // Forward, keeping gate activations for the backward pass.
    std::vector<Matrix> X(T), F(T), I(T), O(T), G(T), Cst(T), TC(T), H(T);
    Matrix Hs = Matrix::Zero(nc, B), Cs = Matrix::Zero(nc, B);
    Matrix E(nc, m.t_out * B);
    for (int t = 0; t < T; ++t) {
        X[t].resize(m.n_in, B);
        for (Index b = 0; b < B; ++b) X[t].col(b) = batch[b].window.row(t).transpose();
        F[t] = detail::sigmoid((c.W_f * X[t] + c.V_f * Hs).colwise() + c.b_f);
        I[t] = detail::sigmoid((c.W_i * X[t] + c.V_i * Hs).colwise() + c.b_i);
        O[t] = detail::sigmoid((c.W_o * X[t] + c.V_o * Hs).colwise() + c.b_o);
        G[t] = ((c.W_c * X[t] + c.V_c * Hs).colwise() + c.b_c).array().tanh().matrix();
        Cs = F[t].cwiseProduct(Cs) + I[t].cwiseProduct(G[t]);
        TC[t] = Cs.array().tanh().matrix();
        Hs = O[t].cwiseProduct(TC[t]);
        Cst[t] = Cs;
        H[t] = Hs;
        if (t >= tail) E.middleCols((t - tail) * B, B) = Hs;
    }

    GradientResult out;
    out.grads = zeros_like(params);
    const auto head = detail::head_forward(params.head, E);
    const RowVector dY = detail::loss_backward(head.Y, batch, m.t_out, coef, out.loss);
    const Matrix dE = detail::head_backward(params.head, E, head, dY, out.grads.head, full);
    if (!full) return out;

    auto& g = out.grads.cell;
    Matrix dH_next = Matrix::Zero(nc, B);
    Matrix dC_next = Matrix::Zero(nc, B);
    const Matrix zeros = Matrix::Zero(nc, B);
    for (int t = T - 1; t >= 0; --t) {
        Matrix dH = dH_next;
        if (t >= tail) dH += dE.middleCols((t - tail) * B, B);
        const Matrix& C_prev = t > 0 ? Cst[t - 1] : zeros;
        const Matrix& H_prev = t > 0 ? H[t - 1] : zeros;

        const Matrix dC = dC_next + dH.cwiseProduct(O[t]).cwiseProduct((1.0 - TC[t].array().square()).matrix());
        const Matrix dZo = dH.cwiseProduct(TC[t]).cwiseProduct((O[t].array() * (1.0 - O[t].array())).matrix());
        const Matrix dZf = dC.cwiseProduct(C_prev).cwiseProduct((F[t].array() * (1.0 - F[t].array())).matrix());
        const Matrix dZi = dC.cwiseProduct(G[t]).cwiseProduct((I[t].array() * (1.0 - I[t].array())).matrix());
        const Matrix dZc = dC.cwiseProduct(I[t]).cwiseProduct((1.0 - G[t].array().square()).matrix());

        g.W_f.noalias() += dZf * X[t].transpose();
        g.W_i.noalias() += dZi * X[t].transpose();
        g.W_o.noalias() += dZo * X[t].transpose();
        g.W_c.noalias() += dZc * X[t].transpose();
        if (t > 0) {
            g.V_f.noalias() += dZf * H_prev.transpose();
            g.V_i.noalias() += dZi * H_prev.transpose();
            g.V_o.noalias() += dZo * H_prev.transpose();
            g.V_c.noalias() += dZc * H_prev.transpose();
        }
        g.b_f += dZf.rowwise().sum();
        g.b_i += dZi.rowwise().sum();
        g.b_o += dZo.rowwise().sum();
        g.b_c += dZc.rowwise().sum();

        dH_next.noalias() = c.V_f.transpose() * dZf;
        dH_next.noalias() += c.V_i.transpose() * dZi;
        dH_next.noalias() += c.V_o.transpose() * dZo;
        dH_next.noalias() += c.V_c.transpose() * dZc;
        dC_next = dC.cwiseProduct(F[t]);
    }
    return out;
}

/// Head-only gradients from precomputed tail encodings (the cell is frozen,
/// so the encodings of a sample never change during training).
inline GradientResult head_gradients(const Matrix& stacked_encodings, std::span<const Example> batch,
                                     const NetworkParams& params, LossKind loss) {
    if (batch.empty()) throw ConfigError("head_gradients: empty batch");
    const auto coef = detail::loss_coefficients(batch, params.meta.t_out, loss);
    GradientResult out;
    out.grads = zeros_like(params);
    const auto head = detail::head_forward(params.head, stacked_encodings);
    const RowVector dY = detail::loss_backward(head.Y, batch, params.meta.t_out, coef, out.loss);
    detail::head_backward(params.head, stacked_encodings, head, dY, out.grads.head, false);
    return out;
}

/// Loss of the configured kind over a sample set (single-sample forward path).
inline double evaluate_loss(std::span<const Example> samples, const NetworkParams& params, LossKind loss) {
    std::vector<double> preds, targets, weights;
    for (const auto& ex : samples) {
        const auto out = forward_sequence(ex.window, params);
        for (int s = 0; s < params.meta.t_out; ++s) {
            preds.push_back(out.outputs[s]);
            targets.push_back(ex.targets(s));
            weights.push_back(loss == LossKind::Mse ? 1.0 : ex.weight);
        }
    }
    return weighted_mse(preds, targets, weights);
}

} // namespace elastiq::nn
