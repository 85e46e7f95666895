#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastiq/data/samples.hpp"
#include "elastiq/error.hpp"
#include "elastiq/estimator/config.hpp"
#include "elastiq/estimator/elasticity.hpp"
#include "elastiq/nn/checkpoint.hpp"
#include "elastiq/nn/trainer.hpp"
#include "elastiq/seed.hpp"

namespace elastiq::est {

// Sub-seed streams of EstimatorConfig::seed.
inline constexpr std::uint64_t kStage1InitStream = 11;
inline constexpr std::uint64_t kStage1BatchStream = 12;
inline constexpr std::uint64_t kStage2InitStream = 21;
inline constexpr std::uint64_t kStage2BatchStream = 22;

/// Secant-slope synthetic elasticities plus the reliability of the
/// stage-1 prediction they came from.
struct SyntheticSample {
    std::size_t anchor = 0;
    data::LocalTime anchor_time;
    Elasticities e{};
    double eta = 0.0; // stage-1 accuracy on the unperturbed window
    double wf = 0.0;  // weighting factor
};

struct Stage1Result {
    nn::NetworkParams params;
    nn::FitReport report;
};

struct SiameseBundle {
    nn::NetworkParams params_p;
    nn::NetworkParams params_e;
    data::Scaler scaler;
    EstimatorConfig config;
};

// ---------------------------------------------------------------- stage 1

inline nn::Example load_example(const data::Sample& s, const data::Scaler& scaler) {
    nn::Example ex;
    ex.window = s.window;
    ex.targets.resize(static_cast<nn::Index>(s.target_loads.size()));
    for (std::size_t k = 0; k < s.target_loads.size(); ++k)
        ex.targets(static_cast<nn::Index>(k)) = scaler.scale_load(s.target_loads[k]);
    return ex;
}

inline std::vector<nn::Example> load_examples(std::span<const data::Sample> samples, const data::Scaler& scaler) {
    std::vector<nn::Example> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(load_example(s, scaler));
    return out;
}

inline nn::NetworkMeta stage1_meta(const EstimatorConfig& cfg) {
    nn::NetworkMeta m;
    m.n_cell = cfg.n_cell;
    m.n_den = cfg.n_den_p;
    m.n_in = data::kNumFeatures;
    m.t_in = cfg.t_in;
    m.t_out = cfg.t_out;
    return m;
}

/// Price-response network: plain MSE on scaled tail loads, all parameters
/// trainable.
inline Stage1Result train_stage1(std::span<const data::Sample> samples, const data::Scaler& scaler,
                                 const EstimatorConfig& cfg, std::span<const data::Sample> validation = {}) {
    validate(cfg);
    if (samples.empty()) throw ConfigError("stage 1: no training samples");
    Stage1Result r;
    r.params = nn::init_network(stage1_meta(cfg), derive_seed(cfg.seed, kStage1InitStream));
    auto tc = cfg.stage1;
    tc.loss = nn::LossKind::Mse;
    tc.scope = nn::TrainableScope::All;
    tc.seed = derive_seed(cfg.seed, kStage1BatchStream);
    const auto train = load_examples(samples, scaler);
    const auto val = load_examples(validation, scaler);
    try {
        r.report = nn::train(r.params, train, tc, val);
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage 1: ") + e.what());
    }
    return r;
}

/// Tail encodings h_t, one row per tail step.
inline nn::Matrix encode(const nn::Matrix& window, const nn::NetworkParams& params_p) {
    return nn::forward_sequence(window, params_p).encodings;
}

/// Stage-1 load prediction in MW for the tail periods.
inline std::vector<double> predict_loads(const nn::Matrix& window, const nn::NetworkParams& params_p,
                                         const data::Scaler& scaler) {
    auto out = nn::forward_sequence(window, params_p).outputs;
    for (double& v : out) v = scaler.unscale_load(v);
    return out;
}

// ---------------------------------------------------------------- generator and filter

/// Row of the window holding the anchor period.
inline int anchor_row(const nn::Matrix& window, int t_out) { return static_cast<int>(window.rows()) - t_out; }

/// Copy of the window with the anchor price moved by `shift` USD/MWh and
/// re-normalized. The result is not clipped to [0, 1].
inline nn::Matrix perturb_anchor_price(const nn::Matrix& window, const data::Scaler& scaler, double anchor_price,
                                       double shift, int t_out) {
    if (scaler.degenerate(data::kPrice))
        throw ConfigError("generator: price is constant on the training split, its scale is undefined");
    nn::Matrix w = window;
    w(anchor_row(window, t_out), data::kPrice) = scaler.scale(data::kPrice, anchor_price + shift);
    return w;
}

/// Central secant elasticities from any scaled-load predictor:
///   e_tau = lambda / dlambda * (p+_tau - p-_tau) / (2 p_tau)
/// with p± the unscaled predictions on the ±dlambda windows and p the
/// recorded load.
template <class Predict>
Elasticities secant_elasticities(const data::Sample& s, const data::Scaler& scaler, double dlambda, Predict&& predict) {
    if (!(dlambda > 0.0)) throw ConfigError("generator: dlambda must be > 0");
    if (!(s.anchor_price > 0.0))
        throw DataError("generator: anchor price at " + s.anchor_time.str() + " is not positive");
    const int t_out = static_cast<int>(s.target_loads.size());
    if (t_out != kElasticityLength) throw ConfigError("generator: samples must carry 9 tail loads");
    const auto up = predict(perturb_anchor_price(s.window, scaler, s.anchor_price, +dlambda, t_out));
    const auto dn = predict(perturb_anchor_price(s.window, scaler, s.anchor_price, -dlambda, t_out));
    Elasticities e{};
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double p = s.target_loads[k];
        if (!(p > 0.0)) throw DataError("generator: recorded load is not positive at " + s.anchor_time.str());
        const double hi = scaler.unscale_load(up[k]), lo = scaler.unscale_load(dn[k]);
        e[k] = s.anchor_price / dlambda * (hi - lo) / (2.0 * p);
    }
    return e;
}

inline Elasticities generate_synthetic(const data::Sample& s, const nn::NetworkParams& params_p,
                                       const data::Scaler& scaler, double dlambda) {
    return secant_elasticities(s, scaler, dlambda,
                               [&](const nn::Matrix& w) { return nn::forward_sequence(w, params_p).outputs; });
}

/// eta = 1 - mean(((p_hat - p) / p)^2) over the tail.
inline double prediction_accuracy(std::span<const double> predicted, std::span<const double> recorded) {
    if (predicted.size() != recorded.size() || predicted.empty())
        throw ConfigError("prediction_accuracy: length mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const double r = (predicted[k] - recorded[k]) / recorded[k];
        sum += r * r;
    }
    return 1.0 - sum / static_cast<double>(predicted.size());
}

/// WF = I(eta >= eta_th) / (eta + alpha).
inline double weighting_factor(double eta, double eta_th, double alpha) {
    return eta >= eta_th ? 1.0 / (eta + alpha) : 0.0;
}

/// Generator and filter over a sample set with any scaled-load predictor.
/// Samples with a non-positive anchor price get WF = 0 and zero targets.
template <class Predict>
std::vector<SyntheticSample> synthesize_with(std::span<const data::Sample> samples, const data::Scaler& scaler,
                                             const EstimatorConfig& cfg, Predict&& predict) {
    std::vector<SyntheticSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        SyntheticSample r;
        r.anchor = s.anchor;
        r.anchor_time = s.anchor_time;
        auto pred = predict(s.window);
        for (double& v : pred) v = scaler.unscale_load(v);
        r.eta = prediction_accuracy(pred, s.target_loads);
        if (s.anchor_price > 0.0) {
            r.e = secant_elasticities(s, scaler, cfg.dlambda, predict);
            r.wf = weighting_factor(r.eta, cfg.eta_th, cfg.alpha);
        }
        out.push_back(r);
    }
    return out;
}

inline std::vector<SyntheticSample> synthesize(std::span<const data::Sample> samples,
                                               const nn::NetworkParams& params_p, const data::Scaler& scaler,
                                               const EstimatorConfig& cfg) {
    return synthesize_with(samples, scaler, cfg,
                           [&](const nn::Matrix& w) { return nn::forward_sequence(w, params_p).outputs; });
}

// ---------------------------------------------------------------- stage 2

inline constexpr const char* kNoReliableData = "no reliable synthetic data; lower eta_th or improve stage 1";

/// Elasticity network: the stage-1 cell, frozen, under a fresh head of
/// size n_den_e, trained with WF-weighted MSE on the synthetic targets.
/// Samples with WF = 0 are dropped before batching.
inline nn::NetworkParams train_stage2(std::span<const data::Sample> samples,
                                      std::span<const SyntheticSample> synthetic,
                                      const nn::NetworkParams& params_p, const EstimatorConfig& cfg,
                                      nn::FitReport* report = nullptr) {
    validate(cfg);
    if (samples.size() != synthetic.size()) throw ConfigError("stage 2: samples and synthetic data differ in length");
    std::vector<nn::Example> train;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].anchor != synthetic[i].anchor) throw ConfigError("stage 2: sample and synthetic anchors differ");
        if (!(synthetic[i].wf > 0.0)) continue;
        nn::Example ex;
        ex.window = samples[i].window;
        ex.targets = Eigen::Map<const nn::Vector>(synthetic[i].e.data(), kElasticityLength);
        ex.weight = synthetic[i].wf;
        train.push_back(std::move(ex));
    }
    if (train.empty()) throw EmptyLossError(std::string("stage 2: ") + kNoReliableData);

    nn::NetworkParams pe = params_p;
    pe.meta.n_den = cfg.n_den_e;
    pe.head = nn::init_head(params_p.meta.n_cell, cfg.n_den_e, derive_seed(cfg.seed, kStage2InitStream));
    auto tc = cfg.stage2;
    tc.loss = nn::LossKind::WeightedMse;
    tc.scope = nn::TrainableScope::HeadOnly;
    tc.seed = derive_seed(cfg.seed, kStage2BatchStream);
    try {
        auto r = nn::train(pe, train, tc);
        if (report) *report = std::move(r);
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage 2: ") + e.what());
    }
    return pe;
}

// ---------------------------------------------------------------- estimation

/// One forward pass of the elasticity network; tail step tau gives e_tau.
inline Elasticities estimate(const nn::Matrix& window, const nn::NetworkParams& params_e) {
    const auto out = nn::forward_sequence(window, params_e).outputs;
    if (out.size() != kElasticityLength) throw ConfigError("estimate: elasticity network must have t_out = 9");
    Elasticities e{};
    std::copy(out.begin(), out.end(), e.begin());
    return e;
}

inline std::vector<ElasticityVector> estimate_all(std::span<const data::Sample> samples,
                                                  const nn::NetworkParams& params_e) {
    std::vector<ElasticityVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.anchor, s.anchor_time, estimate(s.window, params_e)});
    return out;
}

struct TrainedEstimator {
    SiameseBundle bundle;
    nn::FitReport stage1_report;
    nn::FitReport stage2_report;
    std::vector<SyntheticSample> synthetic;
};

/// Both stages end to end on a set of training samples.
inline TrainedEstimator fit_estimator(std::span<const data::Sample> train, const data::Scaler& scaler,
                                      const EstimatorConfig& cfg, std::span<const data::Sample> validation = {}) {
    TrainedEstimator t;
    auto s1 = train_stage1(train, scaler, cfg, validation);
    t.stage1_report = std::move(s1.report);
    t.synthetic = synthesize(train, s1.params, scaler, cfg);
    t.bundle.params_e = train_stage2(train, t.synthetic, s1.params, cfg, &t.stage2_report);
    t.bundle.params_p = std::move(s1.params);
    t.bundle.scaler = scaler;
    t.bundle.config = cfg;
    return t;
}

// ---------------------------------------------------------------- files

inline void save_bundle(const SiameseBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nn::save_params(b.params_p, dir / "stage1.json");
    nn::save_params(b.params_e, dir / "stage2.json");
    for (const auto& [name, j] : {std::pair{"scaler.json", data::to_json(b.scaler)},
                                  std::pair{"config.json", to_json(b.config)}}) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write " + (dir / name).string());
        out << j.dump(2) << '\n';
    }
}

namespace detail {

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": malformed JSON: " + e.what());
    }
}

} // namespace detail

inline SiameseBundle load_bundle(const std::filesystem::path& dir) {
    SiameseBundle b;
    b.params_p = nn::load_params(dir / "stage1.json");
    b.params_e = nn::load_params(dir / "stage2.json");
    b.scaler = data::scaler_from_json(detail::read_json(dir / "scaler.json"));
    b.config = estimator_config_from_json(detail::read_json(dir / "config.json"));
    if (!nn::bit_identical(b.params_p, b.params_e, true))
        throw ConfigError(dir.string() + ": stage-2 cell differs from the stage-1 cell");
    return b;
}

inline constexpr std::string_view kSyntheticHeader = "anchor_timestamp,e0,e1,e2,e3,e4,e5,e6,e7,e8,eta,wf";

inline void write_synthetic_csv(std::span<const SyntheticSample> rs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << kSyntheticHeader << '\n';
    for (const auto& r : rs) {
        out << r.anchor_time.str();
        for (double v : r.e) out << ',' << data::detail::format_number(v);
        out << ',' << data::detail::format_number(r.eta) << ',' << data::detail::format_number(r.wf) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace elastiq::est
