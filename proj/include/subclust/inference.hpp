#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "subclust/errors.hpp"
#include "subclust/instance.hpp"
#include "subclust/rng.hpp"

namespace subclust {

struct ClusterResult {
    std::vector<int> assignments;
    Eigen::MatrixXd centroids;  // K_e x K
    double residual = 0.0;
};

/// Total squared distance of points to their assigned centroids.
inline double clustering_residual(const Eigen::MatrixXd& z, const std::vector<int>& assignments,
                                  const Eigen::MatrixXd& centroids) {
    double r = 0.0;
    for (Eigen::Index k = 0; k < centroids.cols(); ++k) {
        for (Eigen::Index i = 0; i < z.cols(); ++i) {
            if (assignments[static_cast<std::size_t>(i)] == static_cast<int>(k))
                r += (z.col(i) - centroids.col(k)).squaredNorm();
        }
    }
    return r;
}

namespace detail {

constexpr int kLloydMaxIters = 300;

inline Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& z, int k, Sampler& rng) {
    const Eigen::Index n = z.cols();
    Eigen::MatrixXd centroids(z.rows(), k);
    centroids.col(0) = z.col(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd dist2(n);
    for (Eigen::Index i = 0; i < n; ++i) dist2(i) = (z.col(i) - centroids.col(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
        } else {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2(i);
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.col(c) = z.col(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            dist2(i) = std::min(dist2(i), (z.col(i) - centroids.col(c)).squaredNorm());
    }
    return centroids;
}

inline ClusterResult lloyd(const Eigen::MatrixXd& z, Eigen::MatrixXd centroids) {
    const Eigen::Index n = z.cols();
    const int k = static_cast<int>(centroids.cols());
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    std::vector<int> prev;

    for (int iter = 0; iter < kLloydMaxIters; ++iter) {
        prev = assign;
        // nearest centroid, lowest index on ties
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (int c = 0; c < k; ++c) {
                const double d = (z.col(i) - centroids.col(c)).squaredNorm();
                if (d < best) {
                    best = d;
                    best_k = c;
                }
            }
            assign[static_cast<std::size_t>(i)] = best_k;
        }
        // repair empty clusters: reseed to the point farthest from its centroid
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (int a : assign) ++counts[static_cast<std::size_t>(a)];
        bool repaired = false;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            double worst = -1.0;
            Eigen::Index worst_i = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int a = assign[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(a)] <= 1) continue;  // keep donors nonempty
                const double d = (z.col(i) - centroids.col(a)).squaredNorm();
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            if (worst_i < 0) continue;  // only singletons left to donate
            --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(worst_i)])];
            assign[static_cast<std::size_t>(worst_i)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            centroids.col(c) = z.col(worst_i);
            repaired = true;
        }
        if (!repaired && assign == prev) break;
        // centroid update; unrepairable empty clusters keep their centroid
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(z.rows(), k);
        for (Eigen::Index i = 0; i < n; ++i) sums.col(assign[static_cast<std::size_t>(i)]) += z.col(i);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0)
                centroids.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
    }

    ClusterResult out;
    out.assignments = std::move(assign);
    out.centroids = std::move(centroids);
    out.residual = clustering_residual(z, out.assignments, out.centroids);
    return out;
}

}  // namespace detail

/// Lloyd iterations from k-means++ style seeding until the assignment
/// reaches a fixpoint (or 300 iterations), best of `restarts` by residual
/// with ties keeping the earliest restart.
inline ClusterResult kmeans(const Eigen::MatrixXd& z, int k, int restarts, std::uint64_t seed) {
    const Eigen::Index n = z.cols();
    if (k < 1) throw ValidationError("kmeans: K must be >= 1");
    if (static_cast<Eigen::Index>(k) > n) throw ValidationError("kmeans: K exceeds the number of points");
    if (restarts < 1) throw ValidationError("kmeans: need at least 1 restart");

    ClusterResult best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Sampler rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        ClusterResult cur = detail::lloyd(z, detail::kmeanspp_init(z, k, rng));
        if (cur.residual < best.residual) best = std::move(cur);
    }
    return best;
}

/// r(K) for K in 1..k_max, with the monotone envelope
/// r(K) <- min(r(K), r(K-1)) applied in ascending K to suppress restart
/// noise before elbow detection.
struct ResidualCurve {
    std::vector<double> r;  // index 0 is K = 1
    int restarts = 0;

    double at(int k) const { return r.at(static_cast<std::size_t>(k - 1)); }
    int k_max() const { return static_cast<int>(r.size()); }
};

inline ResidualCurve residual_curve(const Eigen::MatrixXd& z, int k_max, int restarts,
                                    std::uint64_t seed) {
    if (k_max < 1) throw ValidationError("residual_curve: k_max must be >= 1");
    if (static_cast<Eigen::Index>(k_max) > z.cols())
        throw ValidationError("residual_curve: k_max exceeds the number of points");
    ResidualCurve curve;
    curve.restarts = restarts;
    curve.r.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k)
        curve.r.push_back(kmeans(z, k, restarts, mix_seed(seed, static_cast<std::uint64_t>(k))).residual);
    for (std::size_t i = 1; i < curve.r.size(); ++i) curve.r[i] = std::min(curve.r[i], curve.r[i - 1]);
    return curve;
}

/// Elbow detection: the K in 2..k_max-1 maximizing the discrete second
/// difference of the r(1)-normalized curve; ties resolve to the smallest K.
/// A flat curve (r(1) = 0) returns 1.
inline int select_k_sod(const ResidualCurve& curve) {
    if (curve.k_max() < 3) throw ValidationError("select_k_sod: need k_max >= 3");
    const double r1 = curve.at(1);
    if (r1 <= 0.0) return 1;
    int best_k = 2;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 2; k <= curve.k_max() - 1; ++k) {
        const double sod = (curve.at(k - 1) + curve.at(k + 1) - 2.0 * curve.at(k)) / r1;
        if (sod > best) {
            best = sod;
            best_k = k;
        }
    }
    return best_k;
}

/// Mean silhouette coefficient of a clustering; singleton clusters score 0.
inline double mean_silhouette(const Eigen::MatrixXd& z, const std::vector<int>& assignments, int k) {
    const Eigen::Index n = z.cols();
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] <= 1) continue;  // silhouette 0
        std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] +=
                (z.col(i) - z.col(j)).norm();
        }
        const double a = sums[static_cast<std::size_t>(own)] /
                         static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, sums[static_cast<std::size_t>(c)] / static_cast<double>(counts[static_cast<std::size_t>(c)]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

/// The K in 2..k_max with the best mean silhouette of its k-means result;
/// ties resolve to the smallest K.
inline int select_k_silhouette(const Eigen::MatrixXd& z, int k_max, int restarts, std::uint64_t seed) {
    if (z.cols() < 3) throw ValidationError("select_k_silhouette: need at least 3 points");
    if (k_max < 2) throw ValidationError("select_k_silhouette: need k_max >= 2");
    const int upper = static_cast<int>(std::min<Eigen::Index>(k_max, z.cols()));
    int best_k = 2;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 2; k <= upper; ++k) {
        const ClusterResult res = kmeans(z, k, restarts, mix_seed(seed, static_cast<std::uint64_t>(k)));
        const double s = mean_silhouette(z, res.assignments, k);
        if (s > best) {
            best = s;
            best_k = k;
        }
    }
    return best_k;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

inline ordered_json cluster_result_to_json(const ClusterResult& res, const std::string& name) {
    ordered_json j;
    j["name"] = name;
    j["assignments"] = res.assignments;
    ordered_json cents = ordered_json::array();
    for (Eigen::Index c = 0; c < res.centroids.cols(); ++c) {
        ordered_json col = ordered_json::array();
        for (Eigen::Index r = 0; r < res.centroids.rows(); ++r) col.push_back(res.centroids(r, c));
        cents.push_back(std::move(col));
    }
    j["centroids"] = std::move(cents);
    j["residual"] = res.residual;
    return j;
}

inline void write_cluster_result(const std::filesystem::path& path, const ClusterResult& res,
                                 const std::string& name) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << cluster_result_to_json(res, name).dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_residual_curve_csv(const std::filesystem::path& path, const ResidualCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "K,r\n";
    out.precision(17);
    for (int k = 1; k <= curve.k_max(); ++k) out << k << ',' << curve.at(k) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace subclust
