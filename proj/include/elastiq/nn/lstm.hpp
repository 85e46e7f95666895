#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "elastiq/error.hpp"

namespace elastiq::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Gate parameters of a single LSTM cell layer (no peepholes).
///
/// Input matrices are n_cell x n_in, recurrent matrices n_cell x n_cell,
/// biases have n_cell entries. Gate order everywhere in this library is
/// forget, input, output, candidate.
struct LstmCellParams {
    Matrix W_f, W_i, W_o, W_c;
    Matrix V_f, V_i, V_o, V_c;
    Vector b_f, b_i, b_o, b_c;

    Index n_cell() const { return W_f.rows(); }
    Index n_in() const { return W_f.cols(); }
};

/// Dense head applied to every tail encoding: ReLU hidden layer then a
/// linear scalar output.
struct DenseHeadParams {
    Matrix W_h1;     // n_den x n_cell
    Vector b_h1;     // n_den
    RowVector W_h2;  // 1 x n_den
    double b_h2 = 0.0;

    Index n_den() const { return W_h1.rows(); }
};

struct NetworkMeta {
    int n_cell = 32;
    int n_den = 32;
    int n_in = 9;
    int t_in = 25;
    int t_out = 9;

    bool operator==(const NetworkMeta&) const = default;
};

struct NetworkParams {
    LstmCellParams cell;
    DenseHeadParams head;
    NetworkMeta meta;
};

/// (c_t, h_t) carried between steps.
struct SequenceState {
    Vector c;
    Vector h;

    static SequenceState zeros(Index n_cell) {
        return {Vector::Zero(n_cell), Vector::Zero(n_cell)};
    }
};

namespace detail {

template <typename Params, typename Fn>
void visit_blocks(Params& p, Fn&& fn) {
    auto& c = p.cell;
    auto& h = p.head;
    fn("W_f", true, c.W_f);
    fn("W_i", true, c.W_i);
    fn("W_o", true, c.W_o);
    fn("W_c", true, c.W_c);
    fn("V_f", true, c.V_f);
    fn("V_i", true, c.V_i);
    fn("V_o", true, c.V_o);
    fn("V_c", true, c.V_c);
    fn("b_f", true, c.b_f);
    fn("b_i", true, c.b_i);
    fn("b_o", true, c.b_o);
    fn("b_c", true, c.b_c);
    fn("W_h1", false, h.W_h1);
    fn("b_h1", false, h.b_h1);
    fn("W_h2", false, h.W_h2);
    Eigen::Map<std::conditional_t<std::is_const_v<Params>, const Matrix, Matrix>> out(&h.b_h2, 1, 1);
    fn("b_h2", false, out);
}

} // namespace detail

/// Calls fn(name, in_cell, block) for each of the 16 parameter blocks in a
/// fixed order. The block is passed as an Eigen expression that can be
/// read (and written, for a non-const NetworkParams).
template <typename Fn>
void for_each_block(NetworkParams& p, Fn&& fn) {
    detail::visit_blocks(p, std::forward<Fn>(fn));
}

template <typename Fn>
void for_each_block(const NetworkParams& p, Fn&& fn) {
    detail::visit_blocks(p, std::forward<Fn>(fn));
}

/// Two parameter sets visited in lock step.
template <typename Fn>
void for_each_block_pair(NetworkParams& a, const NetworkParams& b, Fn&& fn) {
    std::vector<const double*> src;
    std::vector<Index> sizes;
    for_each_block(b, [&](std::string_view, bool, const auto& m) {
        src.push_back(m.data());
        sizes.push_back(m.size());
    });
    std::size_t k = 0;
    for_each_block(a, [&](std::string_view name, bool in_cell, auto& m) {
        if (m.size() != sizes[k]) throw ConfigError("parameter block " + std::string(name) + " has mismatched size");
        Eigen::Map<const Matrix> other(src[k], m.rows(), m.cols());
        fn(name, in_cell, m, other);
        ++k;
    });
}

/// True when every block of the selected scope has equal shape and equal
/// bits (NaN payloads included).
inline bool bit_identical(const NetworkParams& a, const NetworkParams& b, bool cell_only = false) {
    if (!cell_only && !(a.meta == b.meta)) return false;
    std::vector<std::pair<const double*, Index>> lhs, rhs;
    std::vector<std::pair<Index, Index>> lshape, rshape;
    for_each_block(a, [&](std::string_view, bool in_cell, const auto& m) {
        if (cell_only && !in_cell) return;
        lhs.emplace_back(m.data(), m.size());
        lshape.emplace_back(m.rows(), m.cols());
    });
    for_each_block(b, [&](std::string_view, bool in_cell, const auto& m) {
        if (cell_only && !in_cell) return;
        rhs.emplace_back(m.data(), m.size());
        rshape.emplace_back(m.rows(), m.cols());
    });
    if (lshape != rshape) return false;
    for (std::size_t k = 0; k < lhs.size(); ++k) {
        if (std::memcmp(lhs[k].first, rhs[k].first, sizeof(double) * static_cast<std::size_t>(lhs[k].second)) != 0)
            return false;
    }
    return true;
}

inline Index parameter_count(const NetworkParams& p) {
    Index n = 0;
    for_each_block(p, [&](std::string_view, bool, const auto& m) { n += m.size(); });
    return n;
}

/// Zero-valued parameters with the shapes implied by meta.
inline NetworkParams zeros_like(const NetworkMeta& meta) {
    NetworkParams p;
    p.meta = meta;
    const Index nc = meta.n_cell, ni = meta.n_in, nd = meta.n_den;
    for (Matrix* m : {&p.cell.W_f, &p.cell.W_i, &p.cell.W_o, &p.cell.W_c}) *m = Matrix::Zero(nc, ni);
    for (Matrix* m : {&p.cell.V_f, &p.cell.V_i, &p.cell.V_o, &p.cell.V_c}) *m = Matrix::Zero(nc, nc);
    for (Vector* v : {&p.cell.b_f, &p.cell.b_i, &p.cell.b_o, &p.cell.b_c}) *v = Vector::Zero(nc);
    p.head.W_h1 = Matrix::Zero(nd, nc);
    p.head.b_h1 = Vector::Zero(nd);
    p.head.W_h2 = RowVector::Zero(nd);
    p.head.b_h2 = 0.0;
    return p;
}

inline NetworkParams zeros_like(const NetworkParams& p) { return zeros_like(p.meta); }

inline void validate(const NetworkMeta& meta) {
    if (meta.n_cell < 1 || meta.n_in < 1 || meta.n_den < 1)
        throw ConfigError("network sizes must be positive");
    if (meta.t_in < 1 || meta.t_out < 1) throw ConfigError("t_in and t_out must be positive");
    if (meta.t_out > meta.t_in) throw ConfigError("t_out must not exceed t_in");
}

/// Checks that every block has the shape implied by meta and holds finite
/// values. The error message names the first offending block.
inline void validate(const NetworkParams& p) {
    validate(p.meta);
    const NetworkParams ref = zeros_like(p.meta);
    std::vector<std::pair<Index, Index>> shapes;
    for_each_block(ref, [&](std::string_view, bool, const auto& m) { shapes.emplace_back(m.rows(), m.cols()); });
    std::size_t k = 0;
    for_each_block(p, [&](std::string_view name, bool, const auto& m) {
        const auto [r, c] = shapes[k++];
        if (m.rows() != r || m.cols() != c) {
            throw ConfigError("shape mismatch in " + std::string(name) + ": expected " + std::to_string(r) + "x" +
                              std::to_string(c) + ", got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
        }
        if (!m.allFinite()) throw NumericError("non-finite value in " + std::string(name));
    });
}

/// Seeded initialization: every matrix uniform in [-s, s] with
/// s = fan_in^(-1/2), biases zero except the forget gate bias (1.0).
inline NetworkParams init_network(const NetworkMeta& meta, std::uint64_t seed) {
    validate(meta);
    NetworkParams p = zeros_like(meta);
    std::mt19937_64 rng(seed);
    auto fill = [&](auto& m, double fan_in) {
        std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };
    for (Matrix* m : {&p.cell.W_f, &p.cell.W_i, &p.cell.W_o, &p.cell.W_c}) fill(*m, meta.n_in);
    for (Matrix* m : {&p.cell.V_f, &p.cell.V_i, &p.cell.V_o, &p.cell.V_c}) fill(*m, meta.n_cell);
    p.cell.b_f.setConstant(1.0);
    fill(p.head.W_h1, meta.n_cell);
    fill(p.head.W_h2, meta.n_den);
    return p;
}

/// Fresh head of size n_den on top of an existing cell.
inline DenseHeadParams init_head(Index n_cell, Index n_den, std::uint64_t seed) {
    NetworkMeta meta;
    meta.n_cell = static_cast<int>(n_cell);
    meta.n_den = static_cast<int>(n_den);
    meta.n_in = 1;
    meta.t_in = meta.t_out = 1;
    return init_network(meta, seed).head;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// One LSTM step:
///   f = σ(W_f x + V_f h + b_f), i = σ(W_i x + V_i h + b_i), o = σ(W_o x + V_o h + b_o)
///   c' = f ⊙ c + i ⊙ tanh(W_c x + V_c h + b_c),  h' = o ⊙ tanh(c')
inline SequenceState lstm_step(const Vector& x, const SequenceState& state, const LstmCellParams& p) {
    const Index nc = p.n_cell();
    if (x.size() != p.n_in()) throw ConfigError("lstm_step: input has " + std::to_string(x.size()) +
                                                " entries, cell expects " + std::to_string(p.n_in()));
    if (state.c.size() != nc || state.h.size() != nc) throw ConfigError("lstm_step: state size mismatch");
    if (!x.allFinite() || !state.c.allFinite() || !state.h.allFinite())
        throw NumericError("lstm_step: non-finite input");

    auto gate = [&](const Matrix& W, const Matrix& V, const Vector& b) -> Vector {
        return W * x + V * state.h + b;
    };
    const Vector f = gate(p.W_f, p.V_f, p.b_f).unaryExpr(&sigmoid);
    const Vector i = gate(p.W_i, p.V_i, p.b_i).unaryExpr(&sigmoid);
    const Vector o = gate(p.W_o, p.V_o, p.b_o).unaryExpr(&sigmoid);
    const Vector g = gate(p.W_c, p.V_c, p.b_c).array().tanh();

    SequenceState next;
    next.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
    next.h = o.cwiseProduct(next.c.array().tanh().matrix());
    return next;
}

/// Dense head on a single encoding vector.
inline double dense_head(const DenseHeadParams& head, const Vector& h) {
    const Vector hidden = (head.W_h1 * h + head.b_h1).cwiseMax(0.0);
    return head.W_h2.dot(hidden) + head.b_h2;
}

struct SequenceOutput {
    std::vector<double> outputs; // t_out scalar outputs
    Matrix encodings;            // t_out x n_cell, row k is h at tail step k
};

/// Runs the cell over all t_in rows of the window from a zero state and
/// applies the dense head at each of the last t_out steps.
inline SequenceOutput forward_sequence(const Matrix& window, const NetworkParams& params) {
    const auto& m = params.meta;
    if (window.rows() != m.t_in || window.cols() != m.n_in) {
        throw ConfigError("forward_sequence: window is " + std::to_string(window.rows()) + "x" +
                          std::to_string(window.cols()) + ", network expects " + std::to_string(m.t_in) + "x" +
                          std::to_string(m.n_in));
    }
    SequenceOutput out;
    out.outputs.reserve(m.t_out);
    out.encodings.resize(m.t_out, m.n_cell);
    SequenceState state = SequenceState::zeros(m.n_cell);
    const int tail_start = m.t_in - m.t_out;
    for (int t = 0; t < m.t_in; ++t) {
        state = lstm_step(window.row(t).transpose(), state, params.cell);
        if (t >= tail_start) {
            out.encodings.row(t - tail_start) = state.h.transpose();
            out.outputs.push_back(dense_head(params.head, state.h));
        }
    }
    return out;
}

} // namespace elastiq::nn
