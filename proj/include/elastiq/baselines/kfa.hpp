#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elastiq/data/dataset.hpp"
#include "elastiq/data/samples.hpp"
#include "elastiq/error.hpp"
#include "elastiq/estimator/elasticity.hpp"

namespace elastiq::baselines {

struct KfaConfig {
    double q = 1e-4;            // state noise variance per step
    double r = 1e-2;            // observation noise variance
    double initial_cov = 1.0;   // P_0 = initial_cov * I
};

inline void validate(const KfaConfig& c) {
    if (!(c.q > 0.0)) throw ConfigError("kfa.q must be > 0");
    if (!(c.r > 0.0)) throw ConfigError("kfa.r must be > 0");
    if (!(c.initial_cov > 0.0)) throw ConfigError("kfa.initial_cov must be > 0");
}

/// Linear-Gaussian filter with an identity (random-walk) transition.
class RandomWalkKalman {
  public:
    RandomWalkKalman(Eigen::Index n, double q, double r, double initial_cov)
        : x_(Eigen::VectorXd::Zero(n)), P_(Eigen::MatrixXd::Identity(n, n) * initial_cov), q_(q), r_(r) {}

    void predict() { P_.diagonal().array() += q_; }

    /// y = H x + v, v ~ N(0, r I).
    void update(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
        Eigen::MatrixXd S = H * P_ * H.transpose();
        S.diagonal().array() += r_;
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success || !S.allFinite())
            throw NumericError("kfa: innovation covariance is not positive definite (q=" + std::to_string(q_) +
                               ", r=" + std::to_string(r_) + ")");
        const Eigen::MatrixXd K = llt.solve(H * P_).transpose(); // P H^T S^-1 (P, S symmetric)
        x_ += K * (y - H * x_);
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P_.rows(), P_.cols());
        P_ = (I - K * H) * P_;
        P_ = 0.5 * (P_ + P_.transpose());
        if (!x_.allFinite() || !P_.allFinite())
            throw NumericError("kfa: non-finite state (q=" + std::to_string(q_) + ", r=" + std::to_string(r_) + ")");
    }

    const Eigen::VectorXd& state() const { return x_; }
    const Eigen::MatrixXd& covariance() const { return P_; }

  private:
    Eigen::VectorXd x_;
    Eigen::MatrixXd P_;
    double q_;
    double r_;
};

/// Mean price and load per within-day period over records [0, end).
struct PeriodProfiles {
    std::array<double, data::kPeriodsPerDay> price{};
    std::array<double, data::kPeriodsPerDay> load{};
};

inline PeriodProfiles period_profiles(const data::SeriesDataset& ds, std::size_t end) {
    end = std::min(end, ds.size());
    if (end == 0) throw ConfigError("kfa: empty reference range");
    PeriodProfiles p;
    std::array<int, data::kPeriodsPerDay> n{};
    for (std::size_t t = 0; t < end; ++t) {
        const auto k = static_cast<std::size_t>(ds[t].timestamp.period_index() - 1);
        p.price[k] += ds[t].price;
        p.load[k] += ds[t].load;
        ++n[k];
    }
    for (std::size_t k = 0; k < p.price.size(); ++k) {
        if (n[k] == 0) throw ConfigError("kfa: reference range does not cover every period of the day");
        p.price[k] /= n[k];
        p.load[k] /= n[k];
    }
    return p;
}

/// Filters the nine sensitivities dp_{T+tau} / dlambda_T through every
/// anchor-range period of the dataset in time order and reports the filtered
/// state at the requested anchors. Observation at T: load deviations
/// p_{T+tau} - Pbar(T+tau) against the price deviation lambda_T - Lbar(T),
/// with the profiles taken from records [0, reference_end).
inline std::vector<ElasticityVector> kfa_estimate(const data::SeriesDataset& ds, std::span<const std::size_t> anchors,
                                                  const KfaConfig& cfg, std::size_t reference_end) {
    validate(cfg);
    const auto prof = period_profiles(ds, reference_end);
    const auto period0 = [&](std::size_t t) { return static_cast<std::size_t>(ds[t].timestamp.period_index() - 1); };
    RandomWalkKalman kf(kElasticityLength, cfg.q, cfg.r, cfg.initial_cov);

    std::vector<ElasticityVector> out;
    out.reserve(anchors.size());
    std::size_t next = 0;
    for (std::size_t i = 1; i < anchors.size(); ++i)
        if (anchors[i] <= anchors[i - 1]) throw ConfigError("kfa: anchors must be increasing");

    Eigen::MatrixXd H(kElasticityLength, kElasticityLength);
    Eigen::VectorXd y(kElasticityLength);
    for (std::size_t t = 0; t + kElasticityLength <= ds.size() && next < anchors.size(); ++t) {
        const int period = ds[t].timestamp.period_index();
        if (period < data::kFirstAnchorPeriod || period > data::kLastAnchorPeriod) continue;
        const double dx = ds[t].price - prof.price[period0(t)];
        H = Eigen::MatrixXd::Identity(kElasticityLength, kElasticityLength) * dx;
        for (int k = 0; k < kElasticityLength; ++k) {
            const std::size_t u = t + static_cast<std::size_t>(k);
            y(k) = ds[u].load - prof.load[period0(u)];
        }
        kf.predict();
        kf.update(H, y);
        if (t == anchors[next]) {
            ElasticityVector v{t, ds[t].timestamp, {}};
            for (int k = 0; k < kElasticityLength; ++k)
                v.e[static_cast<std::size_t>(k)] = kf.state()(k) * ds[t].price / ds[t + static_cast<std::size_t>(k)].load;
            out.push_back(v);
            ++next;
        }
    }
    if (next != anchors.size())
        throw ConfigError("kfa: anchor " + std::to_string(anchors[next]) + " is outside the anchor periods or the data");
    return out;
}

} // namespace elastiq::baselines
