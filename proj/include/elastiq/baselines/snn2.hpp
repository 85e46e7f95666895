#pragma once

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "elastiq/data/samples.hpp"
#include "elastiq/error.hpp"
#include "elastiq/estimator/siamese.hpp"
#include "elastiq/nn/adam.hpp"
#include "elastiq/nn/trainer.hpp"
#include "elastiq/seed.hpp"

namespace elastiq::baselines {

using nn::Index;
using nn::Matrix;
using nn::Vector;

/// Three dense layers, ReLU on the two hidden ones, linear output:
/// n_in -> n_hidden -> n_den -> n_out.
struct Mlp {
    std::array<Matrix, 3> W;
    std::array<Vector, 3> b;

    Index n_in() const { return W[0].cols(); }
    Index n_out() const { return W[2].rows(); }
};

inline Mlp mlp_zeros(Index n_in, Index n_hidden, Index n_den, Index n_out) {
    Mlp m;
    const std::array<Index, 4> dims{n_in, n_hidden, n_den, n_out};
    for (std::size_t l = 0; l < 3; ++l) {
        m.W[l] = Matrix::Zero(dims[l + 1], dims[l]);
        m.b[l] = Vector::Zero(dims[l + 1]);
    }
    return m;
}

/// Uniform in [-s, s] with s = fan_in^(-1/2) for layers >= first_layer;
/// biases zero.
inline void mlp_init(Mlp& m, std::uint64_t seed, std::size_t first_layer = 0) {
    std::mt19937_64 rng(seed);
    for (std::size_t l = first_layer; l < 3; ++l) {
        const double s = 1.0 / std::sqrt(static_cast<double>(m.W[l].cols()));
        std::uniform_real_distribution<double> dist(-s, s);
        for (Index j = 0; j < m.W[l].cols(); ++j)
            for (Index i = 0; i < m.W[l].rows(); ++i) m.W[l](i, j) = dist(rng);
        m.b[l].setZero();
    }
}

struct MlpPass {
    std::array<Matrix, 3> A; // pre-activations
    std::array<Matrix, 3> H; // H[0], H[1] relu outputs; H[2] = A[2]
};

/// Forward on a batch, one column per sample.
inline MlpPass mlp_forward(const Mlp& m, const Matrix& X) {
    if (X.rows() != m.n_in()) throw ConfigError("mlp: input has " + std::to_string(X.rows()) + " rows");
    MlpPass p;
    const Matrix* in = &X;
    for (std::size_t l = 0; l < 3; ++l) {
        p.A[l] = (m.W[l] * *in).colwise() + m.b[l];
        p.H[l] = l < 2 ? Matrix(p.A[l].cwiseMax(0.0)) : p.A[l];
        in = &p.H[l];
    }
    return p;
}

inline Vector mlp_predict(const Mlp& m, const Vector& x) { return mlp_forward(m, x).H[2].col(0); }

struct MlpExample {
    Vector x;
    Vector targets;
    double weight = 1.0;
};

/// Weighted MSE over every output of every sample, normalized by the
/// total weight (times n_out), with gradients for layers >= first_trainable.
inline double mlp_gradients(const Mlp& m, std::span<const MlpExample> batch, nn::LossKind loss,
                            std::size_t first_trainable, Mlp& g) {
    const Index B = static_cast<Index>(batch.size());
    if (B == 0) throw ConfigError("mlp: empty batch");
    Matrix X(m.n_in(), B), T(m.n_out(), B);
    std::vector<double> w(batch.size());
    double total = 0.0;
    for (Index k = 0; k < B; ++k) {
        const auto& ex = batch[static_cast<std::size_t>(k)];
        X.col(k) = ex.x;
        if (ex.targets.size() != m.n_out()) throw ConfigError("mlp: target length mismatch");
        T.col(k) = ex.targets;
        const double wk = loss == nn::LossKind::Mse ? 1.0 : ex.weight;
        if (!(wk >= 0.0) || !std::isfinite(wk)) throw ConfigError("mlp: invalid sample weight");
        w[static_cast<std::size_t>(k)] = wk;
        total += wk * static_cast<double>(m.n_out());
    }
    if (total == 0.0) throw EmptyLossError("all sample weights are zero: the batch was fully filtered");
    const auto p = mlp_forward(m, X);
    const Matrix D = p.H[2] - T;
    Matrix dA = D;
    double value = 0.0;
    for (Index k = 0; k < B; ++k) {
        const double c = w[static_cast<std::size_t>(k)] / total;
        value += c * D.col(k).squaredNorm();
        dA.col(k) *= 2.0 * c;
    }
    if (!std::isfinite(value)) throw NumericError("mlp: non-finite loss");
    g = mlp_zeros(m.W[0].cols(), m.W[0].rows(), m.W[1].rows(), m.W[2].rows());
    for (std::size_t l = 3; l-- > first_trainable;) {
        const Matrix& in = l == 0 ? X : p.H[l - 1];
        g.W[l] = dA * in.transpose();
        g.b[l] = dA.rowwise().sum();
        if (l == first_trainable) break;
        dA = (m.W[l].transpose() * dA).cwiseProduct((p.A[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return value;
}

struct MlpAdam {
    Mlp m, v;
    long step = 0;
};

inline void mlp_adam_step(Mlp& params, const Mlp& g, MlpAdam& s, double lr, std::size_t first_trainable) {
    s.step += 1;
    const double bc1 = 1.0 - std::pow(nn::kAdamBeta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(nn::kAdamBeta2, static_cast<double>(s.step));
    auto update = [&](auto& p, const auto& gr, auto& m, auto& v) {
        for (Index j = 0; j < p.size(); ++j) {
            m.data()[j] = nn::kAdamBeta1 * m.data()[j] + (1.0 - nn::kAdamBeta1) * gr.data()[j];
            v.data()[j] = nn::kAdamBeta2 * v.data()[j] + (1.0 - nn::kAdamBeta2) * gr.data()[j] * gr.data()[j];
            p.data()[j] -= lr * (m.data()[j] / bc1) / (std::sqrt(v.data()[j] / bc2) + nn::kAdamEpsilon);
        }
    };
    for (std::size_t l = first_trainable; l < 3; ++l) {
        update(params.W[l], g.W[l], s.m.W[l], s.v.W[l]);
        update(params.b[l], g.b[l], s.m.b[l], s.v.b[l]);
    }
}

/// Exactly cfg.max_iters Adam steps; layers below first_trainable are frozen.
inline double mlp_train(Mlp& m, std::span<const MlpExample> samples, const nn::TrainConfig& cfg,
                        std::size_t first_trainable) {
    nn::validate(cfg);
    if (samples.empty()) throw ConfigError("mlp: no samples");
    nn::BatchScheduler sched(samples.size(), cfg.batch_size, cfg.seed);
    MlpAdam adam{mlp_zeros(m.W[0].cols(), m.W[0].rows(), m.W[1].rows(), m.W[2].rows()),
                 mlp_zeros(m.W[0].cols(), m.W[0].rows(), m.W[1].rows(), m.W[2].rows()), 0};
    std::vector<MlpExample> batch;
    Mlp g;
    double last = 0.0;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        batch.clear();
        for (const std::size_t k : sched.next()) batch.push_back(samples[k]);
        try {
            last = mlp_gradients(m, batch, cfg.loss, first_trainable, g);
        } catch (const EmptyLossError&) {
            throw;
        } catch (const NumericError& e) {
            throw NumericError("training diverged at iteration " + std::to_string(it) + ": " + e.what());
        }
        mlp_adam_step(m, g, adam, cfg.learning_rate, first_trainable);
    }
    return last;
}

// ---------------------------------------------------------------- two-stage dense baseline

struct Snn2Config {
    int n_hidden = 32;
    int n_den_p = 32;
    int n_den_e = 48;
    double dlambda = 3.0;
    double eta_th = 0.8;
    double alpha = 0.5;
    nn::TrainConfig stage1;
    nn::TrainConfig stage2;
    std::uint64_t seed = 1;
};

inline est::EstimatorConfig generator_config(const Snn2Config& c) {
    est::EstimatorConfig e;
    e.dlambda = c.dlambda;
    e.eta_th = c.eta_th;
    e.alpha = c.alpha;
    e.stage1 = c.stage1;
    e.stage2 = c.stage2;
    return e;
}

/// The nine features of the anchor period: the only input the dense
/// baseline sees.
inline Vector anchor_features(const Matrix& window) {
    return window.row(window.rows() - kElasticityLength).transpose();
}

struct Snn2Model {
    Mlp load_net;
    Mlp elasticity_net; // layer 0 copied from load_net and frozen
};

struct Snn2Result {
    Snn2Model model;
    std::vector<est::SyntheticSample> synthetic;
};

inline Snn2Result snn2_train(std::span<const data::Sample> train, const data::Scaler& scaler, const Snn2Config& cfg) {
    const auto gcfg = generator_config(cfg);
    est::validate(gcfg);
    if (train.empty()) throw ConfigError("2snn: no training samples");
    Snn2Result r;
    auto& p = r.model.load_net;
    p = mlp_zeros(data::kNumFeatures, cfg.n_hidden, cfg.n_den_p, kElasticityLength);
    mlp_init(p, derive_seed(cfg.seed, est::kStage1InitStream));
    std::vector<MlpExample> ex;
    ex.reserve(train.size());
    for (const auto& s : train) {
        MlpExample e;
        e.x = anchor_features(s.window);
        e.targets.resize(kElasticityLength);
        for (int k = 0; k < kElasticityLength; ++k)
            e.targets(k) = scaler.scale_load(s.target_loads[static_cast<std::size_t>(k)]);
        ex.push_back(std::move(e));
    }
    auto t1 = cfg.stage1;
    t1.loss = nn::LossKind::Mse;
    t1.seed = derive_seed(cfg.seed, est::kStage1BatchStream);
    try {
        mlp_train(p, ex, t1, 0);
    } catch (const NumericError& e) {
        throw NumericError(std::string("2snn stage 1: ") + e.what());
    }

    auto predict = [&](const Matrix& w) {
        const Vector y = mlp_predict(p, anchor_features(w));
        return std::vector<double>(y.data(), y.data() + y.size());
    };
    r.synthetic = est::synthesize_with(train, scaler, gcfg, predict);

    auto& q = r.model.elasticity_net;
    q = mlp_zeros(data::kNumFeatures, cfg.n_hidden, cfg.n_den_e, kElasticityLength);
    mlp_init(q, derive_seed(cfg.seed, est::kStage2InitStream), 1);
    q.W[0] = p.W[0];
    q.b[0] = p.b[0];
    std::vector<MlpExample> ex2;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!(r.synthetic[i].wf > 0.0)) continue;
        MlpExample e;
        e.x = ex[i].x;
        e.targets = Eigen::Map<const Vector>(r.synthetic[i].e.data(), kElasticityLength);
        e.weight = r.synthetic[i].wf;
        ex2.push_back(std::move(e));
    }
    if (ex2.empty()) throw EmptyLossError(std::string("2snn stage 2: ") + est::kNoReliableData);
    auto t2 = cfg.stage2;
    t2.loss = nn::LossKind::WeightedMse;
    t2.seed = derive_seed(cfg.seed, est::kStage2BatchStream);
    try {
        mlp_train(q, ex2, t2, 1);
    } catch (const NumericError& e) {
        throw NumericError(std::string("2snn stage 2: ") + e.what());
    }
    return r;
}

inline std::vector<ElasticityVector> snn2_estimate(std::span<const data::Sample> samples, const Snn2Model& model) {
    std::vector<ElasticityVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const Vector y = mlp_predict(model.elasticity_net, anchor_features(s.window));
        ElasticityVector v{s.anchor, s.anchor_time, {}};
        for (int k = 0; k < kElasticityLength; ++k) v.e[static_cast<std::size_t>(k)] = y(k);
        out.push_back(v);
    }
    return out;
}

} // namespace elastiq::baselines
