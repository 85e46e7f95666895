// elastiq: simulate, train, estimate, evaluate, pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "elastiq/eval/pipeline.hpp"

namespace fs = std::filesystem;
using namespace elastiq;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, const char* what) {
    cmd->add_option("--config", c.config, what)->required();
    cmd->add_option("--seed", c.seed, "override every seed in the configuration");
}

eval::RunConfig run_config(const Common& c) {
    auto cfg = eval::load_run_config(c.config);
    if (c.seed) cfg.seed = c.seed;
    if (cfg.seed) cfg.estimator.seed = *cfg.seed;
    return cfg;
}

sim::Scenario scenario_for(eval::RunConfig& cfg) {
    auto sc = sim::load_scenario(cfg.scenario);
    eval::apply_seed(cfg, sc);
    return sc;
}

/// Dataset and oracle from files when given, otherwise simulated.
eval::Prepared load_or_simulate(eval::RunConfig& cfg, const std::string& data_path, const std::string& oracle_path) {
    if (data_path.empty() != oracle_path.empty()) throw ConfigError("--data and --oracle must be given together");
    if (!data_path.empty()) {
        auto ds = data::parse_dataset(fs::path(data_path));
        auto oracle = sim::read_oracle_csv(oracle_path, ds);
        return eval::prepare(std::move(ds), std::move(oracle), cfg);
    }
    const auto sc = scenario_for(cfg);
    return eval::prepare(sc, cfg, sim::simulate(sc));
}

int cmd_simulate(const Common& c, const std::string& out_opt) {
    auto sc = sim::load_scenario(c.config);
    if (c.seed) sc.seed = *c.seed;
    const fs::path out = out_opt.empty() ? fs::path(std::getenv("ELASTIQ_OUT") ? std::getenv("ELASTIQ_OUT") : "out")
                                         : fs::path(out_opt);
    fs::create_directories(out);
    const auto simulation = sim::simulate(sc);
    const auto ds = sim::to_dataset(simulation);
    data::write_dataset(ds, out / "dataset.csv");
    const auto oracle = sim::oracle_all(simulation, sc.dlambda);
    sim::write_oracle_csv(oracle, out / "oracle.csv");
    std::cout << "wrote " << ds.size() << " periods and " << oracle.size() << " oracle vectors to " << out.string()
              << '\n';
    return 0;
}

int cmd_train(const Common& c, const std::string& data_path, const std::string& oracle_path) {
    auto cfg = run_config(c);
    const auto out = eval::resolve_output_dir(cfg);
    const auto p = load_or_simulate(cfg, data_path, oracle_path);
    const auto t = est::fit_estimator(p.samples.train, p.scaler, cfg.estimator);
    est::save_bundle(t.bundle, out / "model");
    est::write_synthetic_csv(t.synthetic, out / "synthetic.csv");
    std::size_t kept = 0;
    for (const auto& s : t.synthetic) kept += s.wf > 0.0;
    std::cout << "stage 1 loss " << t.stage1_report.final_loss << ", stage 2 loss " << t.stage2_report.final_loss
              << ", " << kept << "/" << t.synthetic.size() << " synthetic samples kept; model in "
              << (out / "model").string() << '\n';
    return 0;
}

int cmd_estimate(const Common& c, const std::string& model_opt, const std::string& data_path,
                 const std::string& oracle_path) {
    auto cfg = run_config(c);
    const auto out = eval::resolve_output_dir(cfg);
    const auto p = load_or_simulate(cfg, data_path, oracle_path);
    std::vector<eval::MethodEstimates> runs;
    for (const auto& m : cfg.methods) {
        eval::MethodEstimates run{m, {}};
        if (m == "smlstm") {
            const auto bundle = est::load_bundle(model_opt.empty() ? out / "model" : fs::path(model_opt));
            if (bundle.config.t_in != cfg.estimator.t_in || bundle.config.t_out != cfg.estimator.t_out)
                throw ConfigError("model window shape differs from the run config");
            // Windows are rebuilt with the model's own scaler.
            const auto samples =
                data::split_samples(p.dataset, p.split, bundle.scaler, bundle.config.t_in, bundle.config.t_out).test;
            run.estimates = est::estimate_all(samples, bundle.params_e);
        } else if (m == "2snn") {
            const auto t = baselines::snn2_train(p.samples.train, p.scaler, eval::snn2_config(cfg));
            run.estimates = baselines::snn2_estimate(p.samples.test, t.model);
        } else if (m == "llr") {
            run.estimates = eval::run_llr(p, cfg.llr);
        } else {
            run.estimates = eval::run_kfa(p, cfg.kfa);
        }
        runs.push_back(std::move(run));
    }
    fs::create_directories(out);
    eval::write_estimates_csv(runs, out / "estimates.csv");
    std::cout << "wrote estimates for " << runs.size() << " method(s) to " << (out / "estimates.csv").string() << '\n';
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& est_opt, const std::string& data_path,
                 const std::string& oracle_path) {
    auto cfg = run_config(c);
    const auto out = eval::resolve_output_dir(cfg);
    const auto data = data_path.empty() ? (out / "dataset.csv").string() : data_path;
    const auto oracle = oracle_path.empty() ? (out / "oracle.csv").string() : oracle_path;
    const auto p = load_or_simulate(cfg, data, oracle);
    const auto runs = eval::read_estimates_csv(est_opt.empty() ? out / "estimates.csv" : fs::path(est_opt), p.dataset);
    std::vector<eval::MetricReport> reports;
    for (const auto& r : runs) reports.push_back(eval::evaluate_run(p, cfg, r));
    eval::emit_report(reports, runs, p.truth, out);
    for (const auto& r : reports) std::cout << r.method << ": rmse " << r.rmse << ", mae " << r.mae << '\n';
    return 0;
}

int cmd_pipeline(const Common& c) {
    const auto res = eval::run_pipeline(run_config(c), &std::cout);
    for (const auto& r : res.reports) std::cout << r.method << ": rmse " << r.rmse << ", mae " << r.mae << '\n';
    std::cout << "artifacts in " << res.output_dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying price elasticity estimation on simulated demand"};
    app.require_subcommand(1);

    Common sim_c, train_c, est_c, eval_c, pipe_c;
    std::string sim_out, train_data, train_oracle, est_model, est_data, est_oracle, eval_est, eval_data, eval_oracle;

    auto* s = app.add_subcommand("simulate", "simulate a scenario; write dataset.csv and oracle.csv");
    add_common(s, sim_c, "scenario JSON");
    s->add_option("--out", sim_out, "output directory (default $ELASTIQ_OUT or ./out)");

    auto* t = app.add_subcommand("train", "fit both stages of the Siamese estimator");
    add_common(t, train_c, "run config JSON");
    t->add_option("--data", train_data, "dataset CSV (default: simulate the scenario)");
    t->add_option("--oracle", train_oracle, "oracle CSV matching --data");

    auto* e = app.add_subcommand("estimate", "estimate elasticity vectors on the test anchors");
    add_common(e, est_c, "run config JSON");
    e->add_option("--model", est_model, "model directory (default <out>/model)");
    e->add_option("--data", est_data, "dataset CSV (default: simulate the scenario)");
    e->add_option("--oracle", est_oracle, "oracle CSV matching --data");

    auto* v = app.add_subcommand("evaluate", "score estimates against the oracle");
    add_common(v, eval_c, "run config JSON");
    v->add_option("--estimates", eval_est, "estimates CSV (default <out>/estimates.csv)");
    v->add_option("--data", eval_data, "dataset CSV (default <out>/dataset.csv)");
    v->add_option("--oracle", eval_oracle, "oracle CSV (default <out>/oracle.csv)");

    auto* p = app.add_subcommand("pipeline", "simulate, train, estimate and evaluate in one run");
    add_common(p, pipe_c, "run config JSON");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*s) return cmd_simulate(sim_c, sim_out);
        if (*t) return cmd_train(train_c, train_data, train_oracle);
        if (*e) return cmd_estimate(est_c, est_model, est_data, est_oracle);
        if (*v) return cmd_evaluate(eval_c, eval_est, eval_data, eval_oracle);
        return cmd_pipeline(pipe_c);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
