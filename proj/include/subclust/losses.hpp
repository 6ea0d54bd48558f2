#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "subclust/errors.hpp"
#include "subclust/instance.hpp"

namespace subclust {

/// Scalar loss value plus its exact gradient with respect to the embedding.
struct LossEval {
    double value = 0.0;
    Eigen::MatrixXd grad;  // K_e x N
};

/// Index sets of each cluster; built from contiguous 0-based labels, so every
/// cluster is nonempty by construction.
struct ClusterIndex {
    std::vector<std::vector<Eigen::Index>> members;

    static ClusterIndex from_labels(const std::vector<int>& labels) {
        if (labels.empty()) throw ValidationError("cluster index: empty labels");
        int k = 0;
        for (int l : labels) {
            if (l < 0) throw ValidationError("cluster index: negative label");
            k = std::max(k, l + 1);
        }
        ClusterIndex idx;
        idx.members.resize(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < labels.size(); ++i)
            idx.members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
        for (const auto& m : idx.members)
            if (m.empty()) throw ValidationError("cluster index: labels are not contiguous");
        return idx;
    }

    int num_clusters() const { return static_cast<int>(members.size()); }
};

/// Numerical floor inside the logarithms of the extremal loss and its
/// gradient denominators.
constexpr double kLossEpsilon = 1e-8;

namespace detail {

inline void check_pairwise_shapes(const Eigen::MatrixXd& z, const OneHotLabels& y) {
    if (z.cols() != y.Y.cols())
        throw ValidationError("loss: embedding and labels disagree on point count");
}

}  // namespace detail

/// Ideal affinity Y^T Y (binary) and reconstructed affinity Z^T Z.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> affinities(const Eigen::MatrixXd& z,
                                                              const OneHotLabels& y) {
    detail::check_pairwise_shapes(z, y);
    return {y.Y.transpose() * y.Y, z.transpose() * z};
}

/// Squared Frobenius distance between the ideal and reconstructed affinity
/// matrices.
inline LossEval l2_regression(const Eigen::MatrixXd& z, const OneHotLabels& y) {
    detail::check_pairwise_shapes(z, y);
    const Eigen::MatrixXd diff = y.Y.transpose() * y.Y - z.transpose() * z;
    LossEval out;
    out.value = diff.squaredNorm();
    out.grad = -4.0 * z * diff;
    return out;
}

/// Element-wise cross-entropy between the binary affinity targets and the
/// logistic of the embedding inner products, summed over all ordered pairs
/// (self-pairs included).
inline LossEval cross_entropy(const Eigen::MatrixXd& z, const OneHotLabels& y) {
    detail::check_pairwise_shapes(z, y);
    const Eigen::MatrixXd t = y.Y.transpose() * y.Y;
    const Eigen::MatrixXd k = z.transpose() * z;
    // |z_i . z_j| <= 1 for unit columns keeps the logistic away from 0 and 1.
    const Eigen::ArrayXXd s = 1.0 / (1.0 + (-k.array()).exp());
    LossEval out;
    out.value = -(t.array() * s.log() + (1.0 - t.array()) * (1.0 - s).log()).sum();
    const Eigen::MatrixXd g = (s - t.array()).matrix();
    out.grad = 2.0 * z * g;  // g is symmetric
    return out;
}

namespace detail {

struct ClusterMoments {
    Eigen::MatrixXd means;     // K_e x K
    Eigen::VectorXd scatters;  // per-cluster total squared deviation
};

inline ClusterMoments cluster_moments(const Eigen::MatrixXd& z, const ClusterIndex& idx) {
    const int k = idx.num_clusters();
    ClusterMoments m;
    m.means.resize(z.rows(), k);
    m.scatters = Eigen::VectorXd::Zero(k);
    for (int l = 0; l < k; ++l) {
        const auto& mem = idx.members[static_cast<std::size_t>(l)];
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(z.rows());
        for (Eigen::Index i : mem) mu += z.col(i);
        mu /= static_cast<double>(mem.size());
        m.means.col(l) = mu;
        double s = 0.0;
        for (Eigen::Index i : mem) s += (z.col(i) - mu).squaredNorm();
        m.scatters(l) = s;
    }
    return m;
}

/// Lexicographically smallest pair (m, n), m < n, with minimal squared mean
/// distance.
inline std::pair<int, int> argmin_pair(const Eigen::MatrixXd& means, double& min_dist2) {
    const int k = static_cast<int>(means.cols());
    int bm = 0, bn = 1;
    min_dist2 = (means.col(0) - means.col(1)).squaredNorm();
    for (int m = 0; m < k; ++m) {
        for (int n = m + 1; n < k; ++n) {
            const double d2 = (means.col(m) - means.col(n)).squaredNorm();
            if (d2 < min_dist2) {
                min_dist2 = d2;
                bm = m;
                bn = n;
            }
        }
    }
    return {bm, bn};
}

inline int argmax_scatter(const Eigen::VectorXd& scatters) {
    int best = 0;
    for (int l = 1; l < scatters.size(); ++l)
        if (scatters(l) > scatters(best)) best = l;
    return best;
}

inline void add_inter_gradient(Eigen::MatrixXd& grad, const ClusterIndex& idx,
                               const ClusterMoments& mom, int m, int n, double min_dist2) {
    const Eigen::VectorXd diff = mom.means.col(m) - mom.means.col(n);
    const double denom = min_dist2 + kLossEpsilon;
    const auto& cm = idx.members[static_cast<std::size_t>(m)];
    const auto& cn = idx.members[static_cast<std::size_t>(n)];
    const Eigen::VectorXd gm = (-2.0 / (denom * static_cast<double>(cm.size()))) * diff;
    const Eigen::VectorXd gn = (2.0 / (denom * static_cast<double>(cn.size()))) * diff;
    for (Eigen::Index i : cm) grad.col(i) += gm;
    for (Eigen::Index i : cn) grad.col(i) += gn;
}

inline void add_intra_gradient(Eigen::MatrixXd& grad, const Eigen::MatrixXd& z, const ClusterIndex& idx,
                               const ClusterMoments& mom, int l) {
    const double denom = mom.scatters(l) + kLossEpsilon;
    for (Eigen::Index i : idx.members[static_cast<std::size_t>(l)])
        grad.col(i) += (2.0 / denom) * (z.col(i) - mom.means.col(l));
}

}  // namespace detail

/// -log of the minimal squared distance between cluster mean embeddings.
/// Subgradient: only the extremal pair receives gradient; ties resolve to the
/// lexicographically smallest pair.
inline LossEval max_inter(const Eigen::MatrixXd& z, const ClusterIndex& idx) {
    if (idx.num_clusters() < 2) throw ValidationError("max_inter: needs at least 2 clusters");
    const auto mom = detail::cluster_moments(z, idx);
    double min_dist2 = 0.0;
    const auto [m, n] = detail::argmin_pair(mom.means, min_dist2);
    LossEval out;
    out.value = -std::log(min_dist2 + kLossEpsilon);
    out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    detail::add_inter_gradient(out.grad, idx, mom, m, n, min_dist2);
    return out;
}

/// +log of the maximal within-cluster scatter; gradient on the extremal
/// cluster only (smallest index on ties).
inline LossEval min_intra(const Eigen::MatrixXd& z, const ClusterIndex& idx) {
    const auto mom = detail::cluster_moments(z, idx);
    const int l = detail::argmax_scatter(mom.scatters);
    LossEval out;
    out.value = std::log(mom.scatters(l) + kLossEpsilon);
    out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    detail::add_intra_gradient(out.grad, z, idx, mom, l);
    return out;
}

/// Extremal separation loss: -log min squared inter-mean distance plus
/// log max within-cluster scatter.
inline LossEval mimi(const Eigen::MatrixXd& z, const ClusterIndex& idx) {
    if (idx.num_clusters() < 2) throw ValidationError("mimi: needs at least 2 clusters");
    const auto mom = detail::cluster_moments(z, idx);
    double min_dist2 = 0.0;
    const auto [m, n] = detail::argmin_pair(mom.means, min_dist2);
    const int l = detail::argmax_scatter(mom.scatters);
    LossEval out;
    out.value = -std::log(min_dist2 + kLossEpsilon) + std::log(mom.scatters(l) + kLossEpsilon);
    out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    detail::add_inter_gradient(out.grad, idx, mom, m, n, min_dist2);
    detail::add_intra_gradient(out.grad, z, idx, mom, l);
    return out;
}

/// Total point-to-center squared distance with the ground-truth assignment.
inline LossEval supervised_kmeans(const Eigen::MatrixXd& z, const ClusterIndex& idx) {
    const auto mom = detail::cluster_moments(z, idx);
    LossEval out;
    out.value = mom.scatters.sum();
    out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    for (int l = 0; l < idx.num_clusters(); ++l)
        for (Eigen::Index i : idx.members[static_cast<std::size_t>(l)])
            out.grad.col(i) = 2.0 * (z.col(i) - mom.means.col(l));
    return out;
}

// ---------------------------------------------------------------------------
// Dispatch by name
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& loss_names() {
    static const std::vector<std::string> names{"l2", "ce", "mimi", "maxinter", "minintra", "skm"};
    return names;
}

/// Evaluate a loss by its registry name on (embedding, labels). When
/// mean_normalize is set, value and gradient are divided by the number of
/// points so losses are comparable across instance sizes.
inline LossEval evaluate_loss(const std::string& name, const Eigen::MatrixXd& z,
                              const std::vector<int>& labels, bool mean_normalize = false) {
    if (static_cast<std::size_t>(z.cols()) != labels.size())
        throw ValidationError("loss: embedding and labels disagree on point count");
    LossEval out;
    if (name == "l2") {
        out = l2_regression(z, one_hot(labels));
    } else if (name == "ce") {
        out = cross_entropy(z, one_hot(labels));
    } else if (name == "mimi") {
        out = mimi(z, ClusterIndex::from_labels(labels));
    } else if (name == "maxinter") {
        out = max_inter(z, ClusterIndex::from_labels(labels));
    } else if (name == "minintra") {
        out = min_intra(z, ClusterIndex::from_labels(labels));
    } else if (name == "skm") {
        out = supervised_kmeans(z, ClusterIndex::from_labels(labels));
    } else {
        throw ValidationError("unknown loss '" + name + "'");
    }
    if (!std::isfinite(out.value) || !out.grad.allFinite())
        throw NumericError("loss '" + name + "' produced non-finite values");
    if (mean_normalize) {
        const double inv = 1.0 / static_cast<double>(z.cols());
        out.value *= inv;
        out.grad *= inv;
    }
    return out;
}

}  // namespace subclust
