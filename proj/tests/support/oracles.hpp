#pragma once

// Test-only reference implementations, independent of the library paths they
// are used to check.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "subclust/conic.hpp"
#include "subclust/rng.hpp"

namespace oracle {

/// Dense-scan geometric distance from a point to a conic of known kind:
/// the minimum over a fine parameter grid, polished with local ternary
/// refinement. Deliberately brute-force.
inline double geometric_distance(const Eigen::Vector2d& p, const subclust::Conic& k,
                                 subclust::StructureKind kind) {
    using subclust::StructureKind;
    if (kind == StructureKind::line) {
        const double denom = std::hypot(k.d(), k.e());
        return std::abs(k.d() * p.x() + k.e() * p.y() + k.f()) / denom;
    }
    std::function<Eigen::Vector2d(double)> curve;
    if (kind == StructureKind::circle) {
        const auto g = subclust::circle_geometry(k);
        curve = [g](double t) {
            return Eigen::Vector2d(g.center.x() + g.radius * std::cos(t),
                                   g.center.y() + g.radius * std::sin(t));
        };
    } else {
        const auto g = subclust::ellipse_geometry(k);
        curve = [g](double t) { return g.point_at(t); };
    }
    const int samples = 4096;
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = 2.0 * std::numbers::pi * i / samples;
        const double d = (p - curve(t)).norm();
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    double lo = best_t - 2.0 * std::numbers::pi / samples;
    double hi = best_t + 2.0 * std::numbers::pi / samples;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if ((p - curve(m1)).norm() < (p - curve(m2)).norm())
            hi = m2;
        else
            lo = m1;
    }
    return (p - curve((lo + hi) / 2.0)).norm();
}

/// Exhaustive k-means optimum: minimum residual over every assignment of n
/// points into k clusters with no cluster empty. n and k must be tiny.
inline double best_partition_residual(const Eigen::MatrixXd& z, int k) {
    const int n = static_cast<int>(z.cols());
    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    double best = std::numeric_limits<double>::infinity();
    const long total = static_cast<long>(std::pow(static_cast<double>(k), n) + 0.5);
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            assign[static_cast<std::size_t>(i)] = static_cast<int>(c % k);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
            c /= k;
        }
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) continue;
        double residual = 0.0;
        for (int cl = 0; cl < k; ++cl) {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(z.rows());
            for (int i = 0; i < n; ++i)
                if (assign[static_cast<std::size_t>(i)] == cl) mu += z.col(i);
            mu /= static_cast<double>(counts[static_cast<std::size_t>(cl)]);
            for (int i = 0; i < n; ++i)
                if (assign[static_cast<std::size_t>(i)] == cl) residual += (z.col(i) - mu).squaredNorm();
        }
        best = std::min(best, residual);
    }
    return best;
}

/// Brute-force best accuracy over all injective mappings of predicted
/// cluster ids into ground-truth ids (padded to a square problem).
inline double best_permutation_error(const std::vector<int>& pred, const std::vector<int>& gt) {
    int kp = 0, kg = 0;
    for (int p : pred) kp = std::max(kp, p + 1);
    for (int g : gt) kg = std::max(kg, g + 1);
    const int k = std::max(kp, kg);
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(k),
                                          std::vector<long>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++counts[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(gt[i])];
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    long best = -1;
    do {
        long matched = 0;
        for (int i = 0; i < k; ++i) matched += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        best = std::max(best, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return 1.0 - static_cast<double>(best) / static_cast<double>(pred.size());
}

/// Direct joint-histogram normalized mutual information, written separately
/// from the library version.
inline double nmi_reference(const std::vector<int>& a, const std::vector<int>& b) {
    int ka = 0, kb = 0;
    for (int x : a) ka = std::max(ka, x + 1);
    for (int x : b) kb = std::max(kb, x + 1);
    const double n = static_cast<double>(a.size());
    std::vector<std::vector<double>> joint(static_cast<std::size_t>(ka),
                                           std::vector<double>(static_cast<std::size_t>(kb), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        joint[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0 / n;
    std::vector<double> pa(static_cast<std::size_t>(ka), 0.0), pb(static_cast<std::size_t>(kb), 0.0);
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            pa[static_cast<std::size_t>(i)] += joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            pb[static_cast<std::size_t>(j)] += joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    double ha = 0.0, hb = 0.0, mi = 0.0;
    for (double q : pa)
        if (q > 0) ha -= q * std::log(q);
    for (double q : pb)
        if (q > 0) hb -= q * std::log(q);
    if (ha <= 0.0 && hb <= 0.0) return 1.0;
    if (ha <= 0.0 || hb <= 0.0) return 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            const double pij = joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (pij > 0) mi += pij * std::log(pij / (pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]));
        }
    return std::min(1.0, std::max(0.0, mi / std::sqrt(ha * hb)));
}

/// Gaussian blobs around k unit-norm centers with pairwise center distance
/// at least min_center_dist; points are re-normalized onto the unit sphere.
struct Blobs {
    Eigen::MatrixXd z;
    std::vector<int> labels;
};

inline Blobs unit_sphere_blobs(int dim, int k, int per_cluster, double sigma,
                               double min_center_dist, std::uint64_t seed) {
    subclust::Sampler rng(seed);
    Eigen::MatrixXd centers(dim, k);
    for (int c = 0; c < k; ++c) {
        for (int tries = 0;; ++tries) {
            Eigen::VectorXd v(dim);
            for (int r = 0; r < dim; ++r) v(r) = rng.normal();
            v.normalize();
            bool ok = true;
            for (int p = 0; p < c; ++p) ok = ok && (centers.col(p) - v).norm() >= min_center_dist;
            if (ok || tries > 10000) {
                centers.col(c) = v;
                break;
            }
        }
    }
    Blobs out;
    out.z.resize(dim, k * per_cluster);
    out.labels.resize(static_cast<std::size_t>(k * per_cluster));
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per_cluster; ++i) {
            Eigen::VectorXd v = centers.col(c);
            for (int r = 0; r < dim; ++r) v(r) += sigma * rng.normal();
            v.normalize();
            const int col = c * per_cluster + i;
            out.z.col(col) = v;
            out.labels[static_cast<std::size_t>(col)] = c;
        }
    }
    return out;
}

/// Unique temporary directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("subclust_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace oracle
