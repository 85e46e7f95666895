#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "elastiq/nn/adam.hpp"
#include "elastiq/nn/bptt.hpp"
#include "elastiq/nn/checkpoint.hpp"
#include "elastiq/nn/gradient_check.hpp"
#include "elastiq/nn/loss.hpp"
#include "elastiq/nn/lstm.hpp"
#include "elastiq/nn/trainer.hpp"

namespace nn = elastiq::nn;
using nn::Matrix;
using nn::Vector;

namespace {

nn::NetworkMeta meta_of(int ni, int nc, int nd, int t_in, int t_out) {
    nn::NetworkMeta m;
    m.n_in = ni;
    m.n_cell = nc;
    m.n_den = nd;
    m.t_in = t_in;
    m.t_out = t_out;
    return m;
}

Matrix random_matrix(std::mt19937_64& rng, nn::Index r, nn::Index c, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix m(r, c);
    for (nn::Index j = 0; j < c; ++j)
        for (nn::Index i = 0; i < r; ++i) m(i, j) = d(rng);
    return m;
}

std::vector<nn::Example> random_batch(const nn::NetworkMeta& m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<nn::Example> batch;
    for (std::size_t k = 0; k < n; ++k) {
        nn::Example ex;
        ex.window = random_matrix(rng, m.t_in, m.n_in, 0.0, 1.0);
        ex.targets = random_matrix(rng, m.t_out, 1, 0.0, 1.0);
        ex.weight = 0.5 + static_cast<double>(k % 3);
        batch.push_back(ex);
    }
    return batch;
}

// Scalar transcription of the LSTM step, written independently of the
// Eigen path: explicit loops over rows and columns.
void reference_step(const std::vector<double>& x, std::vector<double>& c, std::vector<double>& h,
                    const nn::LstmCellParams& p) {
    const std::size_t nc = static_cast<std::size_t>(p.n_cell());
    const std::size_t ni = x.size();
    std::vector<double> c_new(nc), h_new(nc);
    for (std::size_t r = 0; r < nc; ++r) {
        double zf = p.b_f(r), zi = p.b_i(r), zo = p.b_o(r), zc = p.b_c(r);
        for (std::size_t k = 0; k < ni; ++k) {
            zf += p.W_f(r, k) * x[k];
            zi += p.W_i(r, k) * x[k];
            zo += p.W_o(r, k) * x[k];
            zc += p.W_c(r, k) * x[k];
        }
        for (std::size_t k = 0; k < nc; ++k) {
            zf += p.V_f(r, k) * h[k];
            zi += p.V_i(r, k) * h[k];
            zo += p.V_o(r, k) * h[k];
            zc += p.V_c(r, k) * h[k];
        }
        const double f = 1.0 / (1.0 + std::exp(-zf));
        const double i = 1.0 / (1.0 + std::exp(-zi));
        const double o = 1.0 / (1.0 + std::exp(-zo));
        c_new[r] = f * c[r] + i * std::tanh(zc);
        h_new[r] = o * std::tanh(c_new[r]);
    }
    c = c_new;
    h = h_new;
}

double reference_head(const nn::DenseHeadParams& head, const std::vector<double>& h) {
    double y = head.b_h2;
    for (nn::Index r = 0; r < head.W_h1.rows(); ++r) {
        double a = head.b_h1(r);
        for (nn::Index k = 0; k < head.W_h1.cols(); ++k) a += head.W_h1(r, k) * h[static_cast<std::size_t>(k)];
        y += head.W_h2(r) * std::max(a, 0.0);
    }
    return y;
}

nn::NetworkParams random_network(const nn::NetworkMeta& m, std::uint64_t seed) {
    // Biases are randomized too so the gradient check covers every block.
    nn::NetworkParams p = nn::init_network(m, seed);
    std::mt19937_64 rng(seed + 1);
    for (nn::Vector* b : {&p.cell.b_f, &p.cell.b_i, &p.cell.b_o, &p.cell.b_c, &p.head.b_h1})
        *b = random_matrix(rng, b->size(), 1, -0.5, 0.5);
    p.head.b_h2 = 0.1;
    return p;
}

} // namespace

TEST(LstmStep, ZeroParametersGiveHalfGatesAndZeroState) {
    const auto p = nn::zeros_like(meta_of(3, 4, 2, 1, 1)).cell;
    const Vector x = Vector::Constant(3, 2.5);
    const auto next = nn::lstm_step(x, nn::SequenceState::zeros(4), p);
    EXPECT_TRUE(next.c.isZero(0.0));
    EXPECT_TRUE(next.h.isZero(0.0));
    // The gates themselves: with zero pre-activations every gate is exactly 0.5.
    EXPECT_DOUBLE_EQ(nn::sigmoid(0.0), 0.5);
}

TEST(LstmStep, SaturatedForgetGateCarriesCellState) {
    auto p = nn::zeros_like(meta_of(3, 4, 2, 1, 1)).cell;
    p.b_f.setConstant(20.0);
    nn::SequenceState s;
    s.c = (Vector(4) << 0.3, -1.2, 2.0, 0.0).finished();
    s.h = Vector::Zero(4);
    const auto next = nn::lstm_step(Vector::Constant(3, -4.0), s, p);
    for (int r = 0; r < 4; ++r) EXPECT_NEAR(next.c(r), s.c(r), 1e-8);
}

TEST(LstmStep, MatchesScalarReference) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = meta_of(9, 7, 3, 1, 1);
        const auto p = random_network(m, 100 + trial).cell;
        const Vector x = random_matrix(rng, 9, 1, -2.0, 2.0);
        nn::SequenceState s{random_matrix(rng, 7, 1, -3.0, 3.0), random_matrix(rng, 7, 1, -1.0, 1.0)};
        std::vector<double> xv(x.data(), x.data() + 9), c(s.c.data(), s.c.data() + 7), h(s.h.data(), s.h.data() + 7);
        reference_step(xv, c, h, p);
        const auto next = nn::lstm_step(x, s, p);
        for (int r = 0; r < 7; ++r) {
            EXPECT_NEAR(next.c(r), c[static_cast<std::size_t>(r)], 1e-12);
            EXPECT_NEAR(next.h(r), h[static_cast<std::size_t>(r)], 1e-12);
        }
    }
}

TEST(LstmStep, RejectsMismatchedAndNonFiniteInput) {
    const auto p = nn::zeros_like(meta_of(3, 4, 2, 1, 1)).cell;
    EXPECT_THROW(nn::lstm_step(Vector::Zero(5), nn::SequenceState::zeros(4), p), elastiq::ConfigError);
    Vector bad = Vector::Zero(3);
    bad(1) = std::nan("");
    EXPECT_THROW(nn::lstm_step(bad, nn::SequenceState::zeros(4), p), elastiq::NumericError);
}

TEST(LstmStep, IntermediateStateStaysInOpenUnitInterval) {
    // Property: for random finite parameters, inputs and states of widely
    // varying magnitude, c stays finite and |h| <= 1. The bound is strict
    // while pre-activations stay below the double saturation point of
    // sigmoid/tanh (about |z| < 18); beyond it both round to exactly 1.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> scale_dist(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double scale = std::pow(10.0, scale_dist(rng));
        const auto m = meta_of(5, 6, 2, 1, 1);
        auto p = random_network(m, 7000 + trial);
        p.cell.W_i *= scale;
        p.cell.W_o *= scale;
        const Vector x = random_matrix(rng, 5, 1, -scale, scale);
        nn::SequenceState s{random_matrix(rng, 6, 1, -scale, scale), random_matrix(rng, 6, 1, -1.0, 1.0)};
        const auto next = nn::lstm_step(x, s, p.cell);
        ASSERT_TRUE(next.c.allFinite());
        ASSERT_LE(next.h.cwiseAbs().maxCoeff(), 1.0);
        if (scale <= 1.0) {
            ASSERT_LT(next.h.cwiseAbs().maxCoeff(), 1.0);
        }
    }
}

TEST(ForwardSequence, ConstantHeadIgnoresWindow) {
    auto p = nn::init_network(meta_of(9, 5, 4, 7, 3), 3);
    p.head.W_h2.setZero();
    p.head.b_h2 = 1.75;
    std::mt19937_64 rng(1);
    const auto out = nn::forward_sequence(random_matrix(rng, 7, 9), p);
    ASSERT_EQ(out.outputs.size(), 3u);
    for (double y : out.outputs) EXPECT_EQ(y, 1.75);
    EXPECT_EQ(out.encodings.rows(), 3);
    EXPECT_EQ(out.encodings.cols(), 5);
}

TEST(ForwardSequence, SingleStepUnfoldIsStepThenHead) {
    const auto p = random_network(meta_of(9, 6, 4, 1, 1), 11);
    std::mt19937_64 rng(5);
    const Matrix w = random_matrix(rng, 1, 9);
    const auto out = nn::forward_sequence(w, p);
    const auto s = nn::lstm_step(w.row(0).transpose(), nn::SequenceState::zeros(6), p.cell);
    EXPECT_EQ(out.outputs[0], nn::dense_head(p.head, s.h));
    EXPECT_TRUE(out.encodings.row(0).transpose() == s.h);
}

TEST(ForwardSequence, MatchesStepByStepScalarReexecution) {
    const auto m = meta_of(9, 8, 6, 12, 4);
    const auto p = random_network(m, 77);
    std::mt19937_64 rng(9);
    const Matrix w = random_matrix(rng, 12, 9, 0.0, 1.0);
    const auto out = nn::forward_sequence(w, p);
    std::vector<double> c(8, 0.0), h(8, 0.0);
    for (int t = 0; t < 12; ++t) {
        std::vector<double> x(9);
        for (int k = 0; k < 9; ++k) x[static_cast<std::size_t>(k)] = w(t, k);
        reference_step(x, c, h, p.cell);
        if (t >= 8) {
            EXPECT_NEAR(out.outputs[static_cast<std::size_t>(t - 8)], reference_head(p.head, h), 1e-12);
            for (int r = 0; r < 8; ++r) EXPECT_NEAR(out.encodings(t - 8, r), h[static_cast<std::size_t>(r)], 1e-12);
        }
    }
}

TEST(ForwardSequence, ShapeMismatchIsConfigError) {
    const auto p = nn::init_network(meta_of(9, 4, 4, 6, 3), 1);
    EXPECT_THROW(nn::forward_sequence(Matrix::Zero(5, 9), p), elastiq::ConfigError);
    EXPECT_THROW(nn::forward_sequence(Matrix::Zero(6, 8), p), elastiq::ConfigError);
}

TEST(WeightedMse, UniformWeightsEqualPlainMse) {
    const std::vector<double> p{0.3, -1.0, 2.5, 4.0}, t{0.1, 0.0, 2.0, -1.0}, w(4, 1.0);
    EXPECT_EQ(nn::weighted_mse(p, t, w), nn::mse(p, t));
}

TEST(WeightedMse, ZeroWeightSampleIsExcluded) {
    const std::vector<double> p{1.0, 2.0}, t{0.0, 0.0}, w{0.5, 0.0};
    EXPECT_EQ(nn::weighted_mse(p, t, w), 1.0);
}

TEST(WeightedMse, DuplicatingEqualsDoublingWeight) {
    const std::vector<double> p{0.7, 1.3, -0.2}, t{0.5, 1.0, 0.4};
    const double dup = nn::weighted_mse(std::vector<double>{0.7, 0.7, 1.3, -0.2}, std::vector<double>{0.5, 0.5, 1.0, 0.4},
                                        std::vector<double>{1.0, 1.0, 1.0, 1.0});
    const double doubled = nn::weighted_mse(p, t, std::vector<double>{2.0, 1.0, 1.0});
    EXPECT_NEAR(dup, doubled, 1e-15);
}

TEST(WeightedMse, AllZeroWeightsRaiseEmptyLoss) {
    const std::vector<double> p{1.0, 2.0}, t{0.0, 0.0}, w{0.0, 0.0};
    EXPECT_THROW(nn::weighted_mse(p, t, w), elastiq::EmptyLossError);
    EXPECT_THROW(nn::weighted_mse(p, t, std::vector<double>{1.0, -1.0}), elastiq::ConfigError);
}

TEST(Bptt, AllZeroWeightsUnderWeightedLossRaise) {
    const auto m = meta_of(9, 4, 3, 5, 2);
    auto batch = random_batch(m, 3, 1);
    for (auto& ex : batch) ex.weight = 0.0;
    nn::TrainConfig cfg;
    cfg.loss = nn::LossKind::WeightedMse;
    EXPECT_THROW(nn::bptt_gradients(batch, nn::init_network(m, 1), cfg), elastiq::EmptyLossError);
}

TEST(Bptt, HeadOnlyScopeZeroesCellGradients) {
    const auto m = meta_of(9, 4, 3, 5, 2);
    const auto batch = random_batch(m, 4, 2);
    nn::TrainConfig cfg;
    cfg.scope = nn::TrainableScope::HeadOnly;
    const auto g = nn::bptt_gradients(batch, random_network(m, 3), cfg).grads;
    nn::for_each_block(g, [](std::string_view name, bool in_cell, const auto& b) {
        if (in_cell) {
            EXPECT_TRUE(b.isZero(0.0)) << name;
        }
    });
    EXPECT_GT(g.head.W_h1.cwiseAbs().sum(), 0.0);
}

TEST(Bptt, LossMatchesSingleSampleForwardPath) {
    const auto m = meta_of(9, 6, 5, 8, 3);
    const auto batch = random_batch(m, 5, 3);
    const auto p = random_network(m, 4);
    nn::TrainConfig cfg;
    cfg.loss = nn::LossKind::WeightedMse;
    EXPECT_NEAR(nn::bptt_gradients(batch, p, cfg).loss, nn::evaluate_loss(batch, p, nn::LossKind::WeightedMse), 1e-13);
}

TEST(Bptt, NonFiniteTargetNamesSample) {
    const auto m = meta_of(9, 4, 3, 5, 2);
    auto batch = random_batch(m, 4, 2);
    batch[2].targets(1) = std::numeric_limits<double>::infinity();
    try {
        nn::bptt_gradients(batch, random_network(m, 3), nn::TrainConfig{});
        FAIL() << "expected NumericError";
    } catch (const elastiq::NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos);
    }
}

TEST(Bptt, MatchesCentralDifferencesOnRandomNetworks) {
    // Finite-difference oracle over randomly chosen parameters of every block.
    struct Case {
        int nc, nd, t_in, t_out;
        nn::LossKind loss;
    };
    for (const Case c : {Case{3, 2, 4, 2, nn::LossKind::Mse}, Case{8, 8, 6, 3, nn::LossKind::WeightedMse},
                         Case{16, 12, 12, 9, nn::LossKind::WeightedMse}}) {
        const auto m = meta_of(9, c.nc, c.nd, c.t_in, c.t_out);
        const auto batch = random_batch(m, 5, 31 + c.nc);
        nn::TrainConfig cfg;
        cfg.loss = c.loss;
        const auto res = nn::gradient_check(random_network(m, 17 + c.nc), batch, cfg, 1e-5, 3, 5);
        EXPECT_LE(res.max_rel_error, 1e-4) << "n_cell=" << c.nc;
        EXPECT_GE(res.entries.size(), 50u);
    }
}

TEST(GradientCheck, SelfConsistentOnSmallNetwork) {
    const auto m = meta_of(9, 8, 8, 6, 3);
    const auto batch = random_batch(m, 6, 8);
    const auto res = nn::gradient_check(random_network(m, 21), batch, nn::TrainConfig{}, 1e-5);
    EXPECT_LE(res.max_rel_error, 1e-4);
    EXPECT_GE(res.entries.size(), 50u);
}

TEST(GradientCheck, HeadOnlySkipsCellEntries) {
    const auto m = meta_of(9, 8, 8, 6, 3);
    const auto batch = random_batch(m, 6, 8);
    nn::TrainConfig cfg;
    cfg.scope = nn::TrainableScope::HeadOnly;
    const auto res = nn::gradient_check(random_network(m, 21), batch, cfg, 1e-5);
    ASSERT_FALSE(res.entries.empty());
    for (const auto& e : res.entries) EXPECT_TRUE(e.block == "W_h1" || e.block == "b_h1" || e.block == "W_h2" || e.block == "b_h2");
    EXPECT_LE(res.max_rel_error, 1e-4);
}

TEST(GradientCheck, DetectsCorruptedBlock) {
    const auto m = meta_of(9, 8, 8, 6, 3);
    const auto batch = random_batch(m, 6, 8);
    const auto p = random_network(m, 21);
    const nn::TrainConfig cfg;
    for (const char* block : {"V_i", "W_c", "b_h1"}) {
        auto g = nn::bptt_gradients(batch, p, cfg).grads;
        nn::for_each_block(g, [&](std::string_view name, bool, auto& b) {
            if (name == block) b *= 2.0;
        });
        EXPECT_GE(nn::gradient_check(p, batch, cfg, g, 1e-5).max_rel_error, 0.3) << block;
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    auto p = nn::init_network(meta_of(3, 2, 2, 2, 1), 5);
    const auto before = p;
    auto st = nn::AdamState::for_params(p);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.1;
    for (int i = 0; i < 3; ++i) nn::optimizer_step(p, nn::zeros_like(p), st, cfg);
    EXPECT_TRUE(nn::bit_identical(p, before));
}

TEST(Adam, FirstStepMovesEachEntryByLearningRate) {
    auto p = nn::init_network(meta_of(3, 2, 2, 2, 1), 5);
    const auto before = p;
    auto g = nn::zeros_like(p);
    nn::for_each_block(g, [](std::string_view, bool, auto& b) { b.setConstant(-0.37); });
    auto st = nn::AdamState::for_params(p);
    nn::TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    nn::optimizer_step(p, g, st, cfg);
    nn::for_each_block_pair(p, before, [&](std::string_view, bool, const auto& after, const auto& prev) {
        for (nn::Index j = 0; j < after.size(); ++j) {
            const double ratio = (after.data()[j] - prev.data()[j]) / cfg.learning_rate;
            EXPECT_GE(std::abs(ratio), 0.999);
            EXPECT_LE(std::abs(ratio), 1.0 + 1e-12);
        }
    });
}

TEST(Adam, ConvergesOnScalarQuadratic) {
    // Drive the output bias alone: loss (θ − 3)², gradient 2(θ − 3).
    auto p = nn::zeros_like(meta_of(1, 1, 1, 1, 1));
    auto st = nn::AdamState::for_params(p);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.05;
    for (int i = 0; i < 500; ++i) {
        auto g = nn::zeros_like(p);
        g.head.b_h2 = 2.0 * (p.head.b_h2 - 3.0);
        nn::optimizer_step(p, g, st, cfg);
    }
    EXPECT_LT(std::abs(p.head.b_h2 - 3.0), 0.05);
}

TEST(Adam, HeadOnlyScopeFreezesCell) {
    auto p = nn::init_network(meta_of(3, 2, 2, 2, 1), 5);
    const auto before = p;
    auto g = nn::zeros_like(p);
    nn::for_each_block(g, [](std::string_view, bool, auto& b) { b.setConstant(0.5); });
    auto st = nn::AdamState::for_params(p);
    nn::TrainConfig cfg;
    cfg.scope = nn::TrainableScope::HeadOnly;
    for (int i = 0; i < 10; ++i) nn::optimizer_step(p, g, st, cfg);
    EXPECT_TRUE(nn::bit_identical(p, before, true));
    EXPECT_FALSE(nn::bit_identical(p, before));
}

TEST(Trainer, FrozenScopeKeepsCellAndFitsHead) {
    const auto m = meta_of(9, 6, 5, 6, 3);
    auto batch = random_batch(m, 40, 12);
    for (auto& ex : batch) ex.targets.setConstant(0.8 * ex.window(5, 0));
    auto p = nn::init_network(m, 9);
    const auto before = p;
    nn::TrainConfig cfg;
    cfg.scope = nn::TrainableScope::HeadOnly;
    cfg.loss = nn::LossKind::WeightedMse;
    cfg.batch_size = 16;
    cfg.max_iters = 300;
    cfg.learning_rate = 1e-2;
    const double loss0 = nn::evaluate_loss(batch, p, cfg.loss);
    nn::train(p, batch, cfg);
    EXPECT_TRUE(nn::bit_identical(p, before, true));
    EXPECT_LT(nn::evaluate_loss(batch, p, cfg.loss), loss0);
}

TEST(Trainer, SameSeedGivesBitIdenticalParameters) {
    const auto m = meta_of(9, 6, 5, 6, 3);
    const auto batch = random_batch(m, 30, 13);
    nn::TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_iters = 40;
    cfg.seed = 99;
    auto a = nn::init_network(m, 4);
    auto b = nn::init_network(m, 4);
    const auto ra = nn::train(a, batch, cfg);
    const auto rb = nn::train(b, batch, cfg);
    EXPECT_TRUE(nn::bit_identical(a, b));
    EXPECT_EQ(ra.final_loss, rb.final_loss);
    cfg.seed = 100;
    auto c = nn::init_network(m, 4);
    nn::train(c, batch, cfg);
    EXPECT_FALSE(nn::bit_identical(a, c));
}

TEST(Trainer, SchedulerVisitsEverySampleOncePerEpoch) {
    nn::BatchScheduler s(10, 4, 3);
    std::vector<int> seen(10, 0);
    for (int k = 0; k < 3; ++k)
        for (auto i : s.next()) ++seen[i];
    for (int v : seen) EXPECT_EQ(v, 1);
}

class CheckpointTest : public ::testing::Test {
  protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "elastiq_ckpt_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(CheckpointTest, RoundTripIsBitIdentical) {
    auto p = random_network(meta_of(9, 5, 4, 7, 3), 8);
    p.head.W_h1(0, 0) = 1.0 / 3.0;
    p.cell.V_c(1, 2) = -0.0;
    p.cell.W_f(0, 0) = 4.9406564584124654e-324;
    nn::save_params(p, dir / "net.json");
    const auto q = nn::load_params(dir / "net.json");
    EXPECT_TRUE(nn::bit_identical(p, q));
}

TEST_F(CheckpointTest, TruncatedFileIsParseError) {
    nn::save_params(nn::init_network(meta_of(9, 5, 4, 7, 3), 8), dir / "net.json");
    std::ifstream in(dir / "net.json");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "cut.json") << text.substr(0, text.size() / 2);
    EXPECT_THROW(nn::load_params(dir / "cut.json"), elastiq::ParseError);
}

TEST_F(CheckpointTest, RowCountMismatchNamesBlock) {
    auto j = nn::to_json(nn::init_network(meta_of(9, 32, 4, 7, 3), 8));
    auto& wf = j["cell"]["W_f"];
    wf.erase(wf.begin() + 28, wf.end());
    std::ofstream(dir / "bad.json") << j.dump();
    try {
        nn::load_params(dir / "bad.json");
        FAIL() << "expected ConfigError";
    } catch (const elastiq::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("W_f"), std::string::npos);
    }
}

TEST_F(CheckpointTest, MissingFieldNamesField) {
    auto j = nn::to_json(nn::init_network(meta_of(9, 3, 4, 7, 3), 8));
    j["head"].erase("b_h1");
    std::ofstream(dir / "bad.json") << j.dump();
    try {
        nn::load_params(dir / "bad.json");
        FAIL() << "expected ParseError";
    } catch (const elastiq::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("b_h1"), std::string::npos);
    }
}
