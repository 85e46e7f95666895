#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "elastiq/nn/adam.hpp"
#include "elastiq/nn/bptt.hpp"

namespace elastiq::nn {

struct LossPoint {
    std::size_t iteration = 0;
    double train_loss = 0.0; // mean mini-batch loss since the previous point
    std::optional<double> validation_loss;
};

struct FitReport {
    std::vector<LossPoint> history;
    double final_loss = 0.0; // loss of the last mini-batch
};

/// Mini-batches drawn without replacement; the index order is reshuffled at
/// the start of every epoch from a single seeded generator. The last batch
/// of an epoch may be short.
class BatchScheduler {
  public:
    BatchScheduler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : order_(n), batch_size_(std::min(batch_size, n)), rng_(seed) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        pos_ = n;
    }

    std::span<const std::size_t> next() {
        if (pos_ >= order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            pos_ = 0;
        }
        const std::size_t len = std::min(batch_size_, order_.size() - pos_);
        std::span<const std::size_t> out(order_.data() + pos_, len);
        pos_ += len;
        return out;
    }

  private:
    std::vector<std::size_t> order_;
    std::size_t batch_size_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

/// Runs exactly cfg.max_iters Adam steps on `params`.
///
/// Under the head-only scope the tail encodings of every sample are
/// computed once up front; the frozen cell makes them constant.
inline FitReport train(NetworkParams& params, std::span<const Example> samples, const TrainConfig& cfg,
                       std::span<const Example> validation = {}) {
    validate(cfg);
    validate(params);
    if (samples.empty()) throw ConfigError("train: no samples");
    const bool head_only = cfg.scope == TrainableScope::HeadOnly;
    const int t_out = params.meta.t_out;
    const Index nc = params.meta.n_cell;

    Matrix cached; // n_cell x (t_out · N), column s * N + k
    if (head_only) cached = batch_encodings(samples, params);
    const Index N = static_cast<Index>(samples.size());

    BatchScheduler scheduler(samples.size(), cfg.batch_size, cfg.seed);
    AdamState adam = AdamState::for_params(params);
    FitReport report;
    double window_sum = 0.0;
    std::size_t window_n = 0;
    std::vector<Example> batch;

    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        const auto idx = scheduler.next();
        batch.clear();
        for (const std::size_t k : idx) batch.push_back(samples[k]);

        GradientResult gr;
        try {
            if (head_only) {
                const Index B = static_cast<Index>(idx.size());
                Matrix E(nc, t_out * B);
                for (int s = 0; s < t_out; ++s)
                    for (Index b = 0; b < B; ++b)
                        E.col(s * B + b) = cached.col(s * N + static_cast<Index>(idx[static_cast<std::size_t>(b)]));
                gr = head_gradients(E, batch, params, cfg.loss);
            } else {
                gr = bptt_gradients(batch, params, cfg);
            }
        } catch (const EmptyLossError&) {
            throw;
        } catch (const NumericError& e) {
            throw NumericError("training diverged at iteration " + std::to_string(it) + ": " + e.what());
        }
        optimizer_step(params, gr.grads, adam, cfg);
        report.final_loss = gr.loss;
        window_sum += gr.loss;
        ++window_n;

        if (it % cfg.report_every == 0 || it == cfg.max_iters) {
            LossPoint pt;
            pt.iteration = it;
            pt.train_loss = window_sum / static_cast<double>(window_n);
            if (!validation.empty()) pt.validation_loss = evaluate_loss(validation, params, cfg.loss);
            report.history.push_back(pt);
            window_sum = 0.0;
            window_n = 0;
        }
    }
    return report;
}

} // namespace elastiq::nn
