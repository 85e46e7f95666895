#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastiq/baselines/kfa.hpp"
#include "elastiq/baselines/llr.hpp"
#include "elastiq/baselines/snn2.hpp"
#include "elastiq/data/samples.hpp"
#include "elastiq/estimator/siamese.hpp"
#include "elastiq/eval/metrics.hpp"
#include "elastiq/eval/report.hpp"
#include "elastiq/sim/scenario.hpp"

namespace elastiq::eval {

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"smlstm", "2snn", "llr", "kfa"};
    return m;
}

struct RunConfig {
    std::filesystem::path scenario;
    std::vector<std::string> methods = known_methods();
    est::EstimatorConfig estimator;
    double test_fraction = 0.2;
    std::optional<data::LocalTime> split_date; // takes precedence over test_fraction
    std::filesystem::path output_dir = "out";
    std::optional<std::uint64_t> seed;         // overrides scenario and estimator seeds
    baselines::LlrConfig llr;
    baselines::KfaConfig kfa;
    int snn2_hidden = 32;
};

inline void validate(const RunConfig& c) {
    if (c.methods.empty()) throw ConfigError("no methods evaluated");
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        const auto& m = c.methods[i];
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
            throw ConfigError("unknown method '" + m + "' (expected smlstm, 2snn, llr or kfa)");
        if (std::find(c.methods.begin(), c.methods.begin() + static_cast<std::ptrdiff_t>(i), m) !=
            c.methods.begin() + static_cast<std::ptrdiff_t>(i))
            throw ConfigError("method '" + m + "' listed twice");
    }
    if (!c.split_date && !(c.test_fraction > 0.0 && c.test_fraction < 1.0))
        throw ConfigError("split.test_fraction must lie in (0, 1)");
    if (c.snn2_hidden < 1) throw ConfigError("snn2.n_hidden must be >= 1");
    est::validate(c.estimator);
    baselines::validate(c.llr);
    baselines::validate(c.kfa);
}

// ---------------------------------------------------------------- json

inline nlohmann::json to_json(const baselines::LlrConfig& c) {
    return {{"bandwidth", c.bandwidth}, {"ridge", c.ridge}, {"lookback_days", c.lookback_days}, {"cutoff", c.cutoff}};
}

inline nlohmann::json to_json(const baselines::KfaConfig& c) {
    return {{"q", c.q}, {"r", c.r}, {"initial_cov", c.initial_cov}};
}

inline baselines::Snn2Config snn2_config(const RunConfig& c) {
    baselines::Snn2Config s;
    s.n_hidden = c.snn2_hidden;
    s.n_den_p = c.estimator.n_den_p;
    s.n_den_e = c.estimator.n_den_e;
    s.dlambda = c.estimator.dlambda;
    s.eta_th = c.estimator.eta_th;
    s.alpha = c.estimator.alpha;
    s.stage1 = c.estimator.stage1;
    s.stage2 = c.estimator.stage2;
    s.seed = c.estimator.seed;
    return s;
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json split = nlohmann::json::object();
    if (c.split_date)
        split["date"] = c.split_date->str().substr(0, 10);
    else
        split["test_fraction"] = c.test_fraction;
    nlohmann::json j{{"scenario", c.scenario.string()},
                     {"methods", c.methods},
                     {"estimator", est::to_json(c.estimator)},
                     {"split", split},
                     {"output_dir", c.output_dir.string()},
                     {"llr", to_json(c.llr)},
                     {"kfa", to_json(c.kfa)},
                     {"snn2", {{"n_hidden", c.snn2_hidden}}}};
    if (c.seed) j["seed"] = *c.seed;
    return j;
}

/// Relative paths are taken relative to `base`. Missing fields keep defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    if (!j.is_object()) throw ParseError("run config: expected an object");
    RunConfig c;
    auto rel = [&](const std::string& p) {
        const std::filesystem::path x(p);
        return x.is_absolute() || base.empty() ? x : base / x;
    };
    try {
        if (!j.contains("scenario")) throw ConfigError("run config: 'scenario' is required");
        c.scenario = rel(j.at("scenario").get<std::string>());
        if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
        if (j.contains("estimator")) c.estimator = est::estimator_config_from_json(j.at("estimator"));
        if (j.contains("split")) {
            const auto& s = j.at("split");
            if (s.contains("date")) c.split_date = data::LocalTime::parse(s.at("date").get<std::string>());
            if (s.contains("test_fraction")) c.test_fraction = s.at("test_fraction").get<double>();
        }
        if (j.contains("output_dir")) c.output_dir = rel(j.at("output_dir").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("llr")) {
            const auto& l = j.at("llr");
            c.llr.bandwidth = l.value("bandwidth", c.llr.bandwidth);
            c.llr.ridge = l.value("ridge", c.llr.ridge);
            c.llr.lookback_days = l.value("lookback_days", c.llr.lookback_days);
            c.llr.cutoff = l.value("cutoff", c.llr.cutoff);
        }
        if (j.contains("kfa")) {
            const auto& k = j.at("kfa");
            c.kfa.q = k.value("q", c.kfa.q);
            c.kfa.r = k.value("r", c.kfa.r);
            c.kfa.initial_cov = k.value("initial_cov", c.kfa.initial_cov);
        }
        if (j.contains("snn2")) c.snn2_hidden = j.at("snn2").value("n_hidden", c.snn2_hidden);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run config: ") + e.what());
    }
    validate(c);
    return c;
}

/// Reads a run config; the scenario path must exist.
inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": malformed JSON: " + e.what());
    }
    auto c = run_config_from_json(j, path.parent_path());
    if (!std::filesystem::exists(c.scenario)) throw IoError("cannot open scenario file " + c.scenario.string());
    return c;
}

/// ELASTIQ_OUT, when set and non-empty, replaces the configured directory.
inline std::filesystem::path resolve_output_dir(const RunConfig& c) {
    if (const char* env = std::getenv("ELASTIQ_OUT"); env && *env) return env;
    return c.output_dir;
}

// ---------------------------------------------------------------- stages

/// Everything the methods share: simulated data, oracle truth on the test
/// anchors, samples and the spike threshold.
struct Prepared {
    sim::Scenario scenario;
    data::SeriesDataset dataset;
    std::vector<sim::OracleResult> oracle; // every anchor-range index
    data::DatasetSplit split;
    data::Scaler scaler;
    data::SampleSplit samples;
    std::vector<std::size_t> test_anchors;
    std::vector<ElasticityVector> truth; // aligned with test_anchors
    std::vector<double> test_prices;     // anchor prices, aligned with test_anchors
    double threshold = 0.0;
};

/// Applies the run-level seed override to scenario and estimator.
inline void apply_seed(RunConfig& c, sim::Scenario& sc) {
    if (!c.seed) return;
    sc.seed = *c.seed;
    c.estimator.seed = *c.seed;
}

/// Split, scale, build samples and align the oracle with the test anchors.
inline Prepared prepare(data::SeriesDataset dataset, std::vector<sim::OracleResult> oracle, const RunConfig& cfg) {
    Prepared p;
    p.dataset = std::move(dataset);
    p.oracle = std::move(oracle);
    p.split = cfg.split_date ? data::split_dataset(p.dataset, *cfg.split_date)
                             : data::split_dataset(p.dataset, cfg.test_fraction);
    p.scaler = data::fit_scaler(p.split.train);
    p.samples = data::split_samples(p.dataset, p.split, p.scaler, cfg.estimator.t_in, cfg.estimator.t_out);
    if (p.samples.train.empty()) throw DataError("no training samples");
    if (p.samples.test.empty()) throw DataError("no test samples");

    std::map<std::size_t, const sim::OracleResult*> by_anchor;
    for (const auto& o : p.oracle) by_anchor[o.anchor] = &o;
    for (const auto& s : p.samples.test) {
        const auto it = by_anchor.find(s.anchor);
        if (it == by_anchor.end()) throw DataError("no oracle vector for test anchor " + s.anchor_time.str());
        ElasticityVector t{s.anchor, s.anchor_time, {}};
        std::copy(it->second->e.begin(), it->second->e.end(), t.e.begin());
        p.truth.push_back(t);
        p.test_anchors.push_back(s.anchor);
        p.test_prices.push_back(s.anchor_price);
    }
    std::vector<double> train_prices;
    train_prices.reserve(p.split.train.size());
    for (const auto& r : p.split.train.records) train_prices.push_back(r.price);
    p.threshold = spike_threshold(train_prices);
    return p;
}

inline Prepared prepare(const sim::Scenario& sc, const RunConfig& cfg, const sim::Simulation& simulation) {
    auto p = prepare(sim::to_dataset(simulation), sim::oracle_all(simulation, sc.dlambda), cfg);
    p.scenario = sc;
    return p;
}

inline std::vector<ElasticityVector> run_llr(const Prepared& p, const baselines::LlrConfig& cfg) {
    return baselines::llr_estimate(p.dataset, p.test_anchors, cfg).estimates;
}

inline std::vector<ElasticityVector> run_kfa(const Prepared& p, const baselines::KfaConfig& cfg) {
    return baselines::kfa_estimate(p.dataset, p.test_anchors, cfg, p.split.boundary);
}

/// The configuration a method ran with, echoed into its report.
inline nlohmann::json method_echo(const RunConfig& cfg, const std::string& m) {
    if (m == "smlstm") return est::to_json(cfg.estimator);
    if (m == "llr") return to_json(cfg.llr);
    if (m == "kfa") return to_json(cfg.kfa);
    const auto scfg = snn2_config(cfg);
    auto echo = est::to_json(baselines::generator_config(scfg));
    echo.erase("n_cell");
    echo.erase("t_in");
    echo["n_hidden"] = scfg.n_hidden;
    echo["n_den_p"] = scfg.n_den_p;
    echo["n_den_e"] = scfg.n_den_e;
    echo["seed"] = scfg.seed;
    return echo;
}

inline MetricReport evaluate_run(const Prepared& p, const RunConfig& cfg, const MethodEstimates& run) {
    auto r = breakdown(run.method, run.estimates, p.truth, p.test_prices, p.threshold);
    r.config = method_echo(cfg, run.method);
    r.seed = cfg.estimator.seed;
    return r;
}

/// A stage that failed, with the stage named in the message.
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

struct PipelineResult {
    std::vector<MetricReport> reports;
    std::vector<MethodEstimates> runs;
    std::filesystem::path output_dir;
};

inline constexpr const char* kFailedMarker = "FAILED";

/// simulate -> split -> train -> estimate -> compare -> report. Every
/// artifact lands under the output directory; a failing stage leaves what it
/// already wrote plus a FAILED marker naming the stage, then throws
/// StageError. `log` receives one line per stage (may be null).
inline PipelineResult run_pipeline(RunConfig cfg, std::ostream* log = nullptr) {
    validate(cfg);
    PipelineResult res;
    const auto dir = resolve_output_dir(cfg);
    res.output_dir = dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::filesystem::remove(dir / kFailedMarker, ec);

    auto stage = [&](const std::string& name, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            std::ofstream(dir / kFailedMarker) << name << ": " << e.what() << '\n';
            throw StageError(name, e.what());
        }
        if (log) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::ostringstream line;
            line << "[" << name << "] done in " << std::fixed << std::setprecision(1) << s << " s\n";
            *log << line.str() << std::flush;
        }
    };

    sim::Scenario sc;
    sim::Simulation simulation;
    Prepared p;
    stage("load", [&] {
        sc = sim::load_scenario(cfg.scenario);
        apply_seed(cfg, sc);
        std::ofstream(dir / "run_config.json") << to_json(cfg).dump(2) << '\n';
    });
    stage("simulate", [&] {
        simulation = sim::simulate(sc);
        p = prepare(sc, cfg, simulation);
        data::write_dataset(p.dataset, dir / "dataset.csv");
        sim::write_oracle_csv(p.oracle, dir / "oracle.csv");
    });

    for (const auto& m : cfg.methods) {
        MethodEstimates run{m, {}};
        if (m == "smlstm") {
            est::TrainedEstimator trained;
            stage("train:smlstm", [&] {
                trained = est::fit_estimator(p.samples.train, p.scaler, cfg.estimator);
                est::save_bundle(trained.bundle, dir / "model");
                est::write_synthetic_csv(trained.synthetic, dir / "synthetic.csv");
            });
            stage("estimate:smlstm", [&] { run.estimates = est::estimate_all(p.samples.test, trained.bundle.params_e); });
        } else if (m == "2snn") {
            const auto scfg = snn2_config(cfg);
            baselines::Snn2Result trained;
            stage("train:2snn", [&] { trained = baselines::snn2_train(p.samples.train, p.scaler, scfg); });
            stage("estimate:2snn", [&] { run.estimates = baselines::snn2_estimate(p.samples.test, trained.model); });
        } else if (m == "llr") {
            stage("estimate:llr", [&] { run.estimates = run_llr(p, cfg.llr); });
        } else {
            stage("estimate:kfa", [&] { run.estimates = run_kfa(p, cfg.kfa); });
        }
        stage("evaluate:" + m, [&] { res.reports.push_back(evaluate_run(p, cfg, run)); });
        res.runs.push_back(std::move(run));
    }
    stage("report", [&] {
        write_estimates_csv(res.runs, dir / "estimates.csv");
        emit_report(res.reports, res.runs, p.truth, dir);
    });
    return res;
}

} // namespace elastiq::eval
