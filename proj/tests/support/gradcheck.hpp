#pragma once

// Central finite-difference gradient checking shared by the unit tests and
// the acceptance suite.

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "subclust/losses.hpp"
#include "subclust/network.hpp"

namespace gradcheck {

constexpr double kStep = 1e-5;
constexpr double kRelTol = 1e-4;
// Gradient entries this small are compared absolutely: the quotient of two
// finite-difference noise terms is meaningless.
constexpr double kTiny = 1e-6;

struct Report {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double max_rel_err = 0.0;
    bool ok = true;
    std::string worst;
};

inline bool agrees(double analytic, double numeric, double* rel_err = nullptr) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < kTiny) {
        if (rel_err) *rel_err = 0.0;
        return std::abs(analytic - numeric) < kTiny;
    }
    const double rel = std::abs(analytic - numeric) / scale;
    if (rel_err) *rel_err = rel;
    return rel <= kRelTol;
}

/// Check d(value)/d(x_i) for a scalar function with an analytic gradient.
/// `crosses_kink(i)` may veto a coordinate whose +/- step evaluations do not
/// share the same active set (rectifier sign pattern, argmin/argmax choice).
inline Report check(const Eigen::VectorXd& x, const std::function<double(const Eigen::VectorXd&)>& f,
                    const Eigen::VectorXd& analytic_grad,
                    const std::function<bool(const Eigen::VectorXd&, const Eigen::VectorXd&)>& same_active_set =
                        nullptr,
                    const std::vector<Eigen::Index>* coords = nullptr) {
    Report rep;
    std::vector<Eigen::Index> all;
    if (!coords) {
        all.resize(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) all[static_cast<std::size_t>(i)] = i;
        coords = &all;
    }
    for (Eigen::Index i : *coords) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += kStep;
        xm(i) -= kStep;
        if (same_active_set && !same_active_set(xp, xm)) {
            ++rep.skipped;
            continue;
        }
        const double numeric = (f(xp) - f(xm)) / (2.0 * kStep);
        double rel = 0.0;
        const bool good = agrees(analytic_grad(i), numeric, &rel);
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        ++rep.checked;
        if (!good) {
            rep.ok = false;
            rep.worst = "coord " + std::to_string(i) + ": analytic " + std::to_string(analytic_grad(i)) +
                        " vs numeric " + std::to_string(numeric);
        }
    }
    return rep;
}

/// Active-set signature of a loss at an embedding: the argmin inter pair and
/// argmax scatter cluster (extremal losses), or nothing for smooth losses.
inline std::vector<int> extremal_signature(const Eigen::MatrixXd& z, const subclust::ClusterIndex& idx) {
    const int k = idx.num_clusters();
    Eigen::MatrixXd means(z.rows(), k);
    Eigen::VectorXd scatters(k);
    for (int l = 0; l < k; ++l) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(z.rows());
        for (Eigen::Index i : idx.members[static_cast<std::size_t>(l)]) mu += z.col(i);
        mu /= static_cast<double>(idx.members[static_cast<std::size_t>(l)].size());
        means.col(l) = mu;
        double s = 0.0;
        for (Eigen::Index i : idx.members[static_cast<std::size_t>(l)]) s += (z.col(i) - mu).squaredNorm();
        scatters(l) = s;
    }
    int bm = 0, bn = 1;
    double best = (means.col(0) - means.col(1)).squaredNorm();
    for (int m = 0; m < k; ++m)
        for (int n = m + 1; n < k; ++n) {
            const double d = (means.col(m) - means.col(n)).squaredNorm();
            if (d < best) {
                best = d;
                bm = m;
                bn = n;
            }
        }
    int bl = 0;
    for (int l = 1; l < k; ++l)
        if (scatters(l) > scatters(bl)) bl = l;
    return {bm, bn, bl};
}

}  // namespace gradcheck
