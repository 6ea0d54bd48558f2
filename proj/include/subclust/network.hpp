#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "subclust/errors.hpp"
#include "subclust/rng.hpp"

namespace subclust {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatView = Eigen::Map<RowMajorMatrix>;
using ConstMatView = Eigen::Map<const RowMajorMatrix>;
using VecView = Eigen::Map<Eigen::VectorXd>;
using ConstVecView = Eigen::Map<const Eigen::VectorXd>;

struct NetworkConfig {
    int input_dim = 2;
    int hidden_width = 128;
    int num_blocks = 50;
    int output_dim = 5;
    bool l2_normalize_output = true;
    std::string activation = "relu";
    std::uint64_t seed = 0;

    void validate() const {
        if (input_dim < 2) throw ValidationError("network config: input_dim must be >= 2");
        if (num_blocks < 1) throw ValidationError("network config: num_blocks must be >= 1");
        if (output_dim < 2) throw ValidationError("network config: output_dim must be >= 2");
        if (hidden_width < output_dim)
            throw ValidationError("network config: hidden_width must be >= output_dim");
        if (activation != "relu") throw ValidationError("network config: unsupported activation '" + activation + "'");
    }

    bool operator==(const NetworkConfig&) const = default;
};

/// Offsets of every parameter tensor inside the flat parameter vector. The
/// flat order is also the checkpoint blob order: input projection (row-major
/// weight, bias), each block in order (W1, b1, W2, b2), output projection.
class ParamLayout {
public:
    struct Segment {
        std::string name;
        std::size_t offset;
        std::size_t rows;
        std::size_t cols;  // 1 for biases
        std::size_t count() const { return rows * cols; }
    };

    explicit ParamLayout(const NetworkConfig& cfg) {
        cfg.validate();
        const std::size_t d = static_cast<std::size_t>(cfg.input_dim);
        const std::size_t h = static_cast<std::size_t>(cfg.hidden_width);
        const std::size_t k = static_cast<std::size_t>(cfg.output_dim);
        std::size_t at = 0;
        auto push = [&](std::string name, std::size_t rows, std::size_t cols) {
            segments_.push_back({std::move(name), at, rows, cols});
            at += rows * cols;
        };
        push("input.W", h, d);
        push("input.b", h, 1);
        for (int i = 0; i < cfg.num_blocks; ++i) {
            const std::string p = "blocks[" + std::to_string(i) + "].";
            push(p + "W1", h, h);
            push(p + "b1", h, 1);
            push(p + "W2", h, h);
            push(p + "b2", h, 1);
        }
        push("output.W", k, h);
        push("output.b", k, 1);
        total_ = at;
    }

    std::size_t total() const { return total_; }
    const std::vector<Segment>& segments() const { return segments_; }

    // Segment index arithmetic: 0 = input.W, 1 = input.b, blocks start at 2
    // with 4 segments each, output.W / output.b are the last two.
    const Segment& input_w() const { return segments_[0]; }
    const Segment& input_b() const { return segments_[1]; }
    const Segment& block_w1(int i) const { return segments_[2 + 4 * static_cast<std::size_t>(i)]; }
    const Segment& block_b1(int i) const { return segments_[3 + 4 * static_cast<std::size_t>(i)]; }
    const Segment& block_w2(int i) const { return segments_[4 + 4 * static_cast<std::size_t>(i)]; }
    const Segment& block_b2(int i) const { return segments_[5 + 4 * static_cast<std::size_t>(i)]; }
    const Segment& output_w() const { return segments_[segments_.size() - 2]; }
    const Segment& output_b() const { return segments_.back(); }

    static MatView mat(Eigen::VectorXd& v, const Segment& s) {
        return MatView(v.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
    }
    static ConstMatView mat(const Eigen::VectorXd& v, const Segment& s) {
        return ConstMatView(v.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                            static_cast<Eigen::Index>(s.cols));
    }
    static VecView vec(Eigen::VectorXd& v, const Segment& s) {
        return VecView(v.data() + s.offset, static_cast<Eigen::Index>(s.count()));
    }
    static ConstVecView vec(const Eigen::VectorXd& v, const Segment& s) {
        return ConstVecView(v.data() + s.offset, static_cast<Eigen::Index>(s.count()));
    }

private:
    std::vector<Segment> segments_;
    std::size_t total_ = 0;
};

/// All trainable parameters, stored as one flat vector in checkpoint order.
struct NetworkParams {
    NetworkConfig config;
    ParamLayout layout;
    Eigen::VectorXd data;

    explicit NetworkParams(const NetworkConfig& cfg)
        : config(cfg), layout(cfg), data(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ParamLayout(cfg).total()))) {}

    std::size_t size() const { return layout.total(); }

    ConstMatView input_w() const { return ParamLayout::mat(data, layout.input_w()); }
    ConstVecView input_b() const { return ParamLayout::vec(data, layout.input_b()); }
    ConstMatView block_w1(int i) const { return ParamLayout::mat(data, layout.block_w1(i)); }
    ConstVecView block_b1(int i) const { return ParamLayout::vec(data, layout.block_b1(i)); }
    ConstMatView block_w2(int i) const { return ParamLayout::mat(data, layout.block_w2(i)); }
    ConstVecView block_b2(int i) const { return ParamLayout::vec(data, layout.block_b2(i)); }
    ConstMatView output_w() const { return ParamLayout::mat(data, layout.output_w()); }
    ConstVecView output_b() const { return ParamLayout::vec(data, layout.output_b()); }

    MatView input_w() { return ParamLayout::mat(data, layout.input_w()); }
    VecView input_b() { return ParamLayout::vec(data, layout.input_b()); }
    MatView block_w1(int i) { return ParamLayout::mat(data, layout.block_w1(i)); }
    VecView block_b1(int i) { return ParamLayout::vec(data, layout.block_b1(i)); }
    MatView block_w2(int i) { return ParamLayout::mat(data, layout.block_w2(i)); }
    VecView block_b2(int i) { return ParamLayout::vec(data, layout.block_b2(i)); }
    MatView output_w() { return ParamLayout::mat(data, layout.output_w()); }
    VecView output_b() { return ParamLayout::vec(data, layout.output_b()); }
};

/// Seeded fan-scaled uniform initialization: weights ~ U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)) drawn in flat layout order (row-major
/// within each weight matrix); biases zero.
inline NetworkParams init_params(const NetworkConfig& cfg) {
    NetworkParams params(cfg);
    Sampler rng(cfg.seed);
    for (const auto& seg : params.layout.segments()) {
        if (seg.cols == 1) continue;  // bias, stays zero
        const double fan_in = static_cast<double>(seg.cols);
        const double fan_out = static_cast<double>(seg.rows);
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        VecView v = ParamLayout::vec(params.data, seg);
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-a, a);
    }
    return params;
}

// ---------------------------------------------------------------------------
// Z-score normalization over the points of one instance
// ---------------------------------------------------------------------------

/// Variance floor. Rows whose population variance falls below this are scaled
/// by 1/sqrt(floor) instead, which maps constant rows to zero and keeps
/// gradients finite; all other rows normalize to exactly unit variance.
constexpr double kZScoreVarFloor = 1e-8;

struct ZScoreStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd inv_std;
    std::vector<char> degenerate;  // per row: variance at or below the floor
};

/// Normalize each row to zero mean and unit population variance. N >= 2.
inline Eigen::MatrixXd zscore_norm(const Eigen::MatrixXd& x, ZScoreStats& stats) {
    const Eigen::Index n = x.cols();
    if (n < 2) throw ValidationError("zscore_norm: need at least 2 points");
    stats.mean = x.rowwise().mean();
    Eigen::MatrixXd centered = x.colwise() - stats.mean;
    const Eigen::VectorXd var = centered.array().square().rowwise().mean();
    stats.inv_std.resize(x.rows());
    stats.degenerate.assign(static_cast<std::size_t>(x.rows()), 0);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (var(r) > kZScoreVarFloor) {
            stats.inv_std(r) = 1.0 / std::sqrt(var(r));
        } else {
            stats.inv_std(r) = 1.0 / std::sqrt(kZScoreVarFloor);
            stats.degenerate[static_cast<std::size_t>(r)] = 1;
        }
    }
    centered.array().colwise() *= stats.inv_std.array();
    return centered;
}

inline Eigen::MatrixXd zscore_norm(const Eigen::MatrixXd& x) {
    ZScoreStats stats;
    return zscore_norm(x, stats);
}

/// Reverse-mode step through zscore_norm. The mean and variance are treated
/// as functions of the input; degenerate rows use a constant scale, so only
/// the centering term survives there.
inline Eigen::MatrixXd zscore_backward(const Eigen::MatrixXd& d_out, const Eigen::MatrixXd& normalized,
                                       const ZScoreStats& stats) {
    const Eigen::VectorXd d_mean = d_out.rowwise().mean();
    const Eigen::VectorXd proj = (d_out.array() * normalized.array()).rowwise().mean();
    Eigen::MatrixXd dx = d_out.colwise() - d_mean;
    for (Eigen::Index r = 0; r < dx.rows(); ++r) {
        if (!stats.degenerate[static_cast<std::size_t>(r)])
            dx.row(r) -= proj(r) * normalized.row(r);
        dx.row(r) *= stats.inv_std(r);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct BlockTape {
    Eigen::MatrixXd n1, h1, n2, h2;  // normalized inputs and pre-activations
    ZScoreStats s1, s2;
};

struct ForwardTape {
    Eigen::MatrixXd input;       // D x N
    std::vector<BlockTape> blocks;
    Eigen::MatrixXd hidden_out;  // H x N, input of the output projection
    Eigen::VectorXd col_norm;    // per-column norms before L2 normalization
    Eigen::MatrixXd embedding;   // K_e x N
};

/// Evaluate the network: input projection, residual blocks (two sublayers of
/// z-score normalization -> affine map -> rectifier, identity skip added
/// after the second sublayer), output projection without activation, then
/// column-wise L2 normalization when enabled. Deterministic in (x, params).
inline Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const NetworkParams& params,
                               ForwardTape* tape = nullptr) {
    const NetworkConfig& cfg = params.config;
    if (x.rows() != cfg.input_dim)
        throw ValidationError("forward: input has " + std::to_string(x.rows()) + " rows, config expects " +
                              std::to_string(cfg.input_dim));
    if (x.cols() < 2) throw ValidationError("forward: need at least 2 points");
    if (!x.allFinite()) throw ValidationError("forward: non-finite input");

    if (tape) {
        tape->input = x;
        tape->blocks.resize(static_cast<std::size_t>(cfg.num_blocks));
    }

    Eigen::MatrixXd h = (params.input_w() * x).colwise() + params.input_b();
    for (int b = 0; b < cfg.num_blocks; ++b) {
        BlockTape local;
        BlockTape& t = tape ? tape->blocks[static_cast<std::size_t>(b)] : local;
        t.n1 = zscore_norm(h, t.s1);
        t.h1 = (params.block_w1(b) * t.n1).colwise() + params.block_b1(b);
        const Eigen::MatrixXd r1 = t.h1.cwiseMax(0.0);
        t.n2 = zscore_norm(r1, t.s2);
        t.h2 = (params.block_w2(b) * t.n2).colwise() + params.block_b2(b);
        h += t.h2.cwiseMax(0.0);
    }
    if (tape) tape->hidden_out = h;

    Eigen::MatrixXd z = (params.output_w() * h).colwise() + params.output_b();
    if (cfg.l2_normalize_output) {
        Eigen::VectorXd norms = z.colwise().norm();
        for (Eigen::Index j = 0; j < norms.size(); ++j) norms(j) = std::max(norms(j), 1e-150);
        z.array().rowwise() /= norms.transpose().array();
        if (tape) tape->col_norm = norms;
    }
    if (tape) tape->embedding = z;
    return z;
}

struct BackwardResult {
    Eigen::VectorXd param_grad;  // same flat layout as NetworkParams::data
    Eigen::MatrixXd input_grad;  // D x N
};

/// Exact reverse-mode differentiation of forward. dz is dL/dZ evaluated at
/// the tape's embedding. Gradients flow through the normalization statistics
/// and, when enabled, through the output normalization Jacobian
/// (I - zz^T)/|y| per column.
inline BackwardResult backward(const ForwardTape& tape, const NetworkParams& params,
                               const Eigen::MatrixXd& dz) {
    const NetworkConfig& cfg = params.config;
    if (static_cast<int>(tape.blocks.size()) != cfg.num_blocks)
        throw ValidationError("backward: tape does not match the network depth");
    if (dz.rows() != cfg.output_dim || dz.cols() != tape.input.cols())
        throw ValidationError("backward: gradient shape does not match the tape");

    BackwardResult out;
    out.param_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    const ParamLayout& L = params.layout;

    Eigen::MatrixXd dy = dz;
    if (cfg.l2_normalize_output) {
        for (Eigen::Index j = 0; j < dy.cols(); ++j) {
            const auto zc = tape.embedding.col(j);
            dy.col(j) = (dz.col(j) - zc * zc.dot(dz.col(j))) / tape.col_norm(j);
        }
    }

    ParamLayout::mat(out.param_grad, L.output_w()) = dy * tape.hidden_out.transpose();
    ParamLayout::vec(out.param_grad, L.output_b()) = dy.rowwise().sum();
    Eigen::MatrixXd dh = params.output_w().transpose() * dy;

    for (int b = cfg.num_blocks - 1; b >= 0; --b) {
        const BlockTape& t = tape.blocks[static_cast<std::size_t>(b)];
        // residual branch gradient; the skip keeps dh flowing unchanged below
        Eigen::MatrixXd dh2 = (t.h2.array() > 0.0).select(dh, 0.0);
        ParamLayout::mat(out.param_grad, L.block_w2(b)) = dh2 * t.n2.transpose();
        ParamLayout::vec(out.param_grad, L.block_b2(b)) = dh2.rowwise().sum();
        const Eigen::MatrixXd dn2 = params.block_w2(b).transpose() * dh2;
        const Eigen::MatrixXd dr1 = zscore_backward(dn2, t.n2, t.s2);
        Eigen::MatrixXd dh1 = (t.h1.array() > 0.0).select(dr1, 0.0);
        ParamLayout::mat(out.param_grad, L.block_w1(b)) = dh1 * t.n1.transpose();
        ParamLayout::vec(out.param_grad, L.block_b1(b)) = dh1.rowwise().sum();
        const Eigen::MatrixXd dn1 = params.block_w1(b).transpose() * dh1;
        dh += zscore_backward(dn1, t.n1, t.s1);
    }

    ParamLayout::mat(out.param_grad, L.input_w()) = dh * tape.input.transpose();
    ParamLayout::vec(out.param_grad, L.input_b()) = dh.rowwise().sum();
    out.input_grad = params.input_w().transpose() * dh;
    return out;
}

}  // namespace subclust
