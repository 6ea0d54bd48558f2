#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subclust/errors.hpp"
#include "subclust/instance.hpp"

namespace subclust {

/// counts(p, g) = number of points with predicted cluster p and ground-truth
/// class g.
struct ConfusionMatrix {
    std::vector<std::vector<long>> counts;  // K_pred x K_gt
    long total = 0;

    int pred_clusters() const { return static_cast<int>(counts.size()); }
    int gt_clusters() const { return counts.empty() ? 0 : static_cast<int>(counts.front().size()); }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.empty() || pred.size() != gt.size())
        throw ValidationError("confusion_matrix: empty or mismatched label vectors");
    int kp = 0, kg = 0;
    for (int p : pred) {
        if (p < 0) throw ValidationError("confusion_matrix: negative predicted label");
        kp = std::max(kp, p + 1);
    }
    for (int g : gt) {
        if (g < 0) throw ValidationError("confusion_matrix: negative ground-truth label");
        kg = std::max(kg, g + 1);
    }
    ConfusionMatrix cm;
    cm.counts.assign(static_cast<std::size_t>(kp), std::vector<long>(static_cast<std::size_t>(kg), 0));
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++cm.counts[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(gt[i])];
    cm.total = static_cast<long>(pred.size());
    return cm;
}

namespace detail {

/// Minimum-cost assignment on an n x n matrix via shortest augmenting paths
/// (Jonker-Volgenant style potentials). Returns, for each row, the assigned
/// column.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), std::numeric_limits<double>::infinity());
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

/// Maximum-weight one-to-one matching of predicted clusters to ground-truth
/// classes. Rectangular matrices are padded with zero-count rows/columns;
/// padded matches are reported as -1.
inline std::vector<int> match_clusters(const ConfusionMatrix& cm) {
    const int kp = cm.pred_clusters();
    const int kg = cm.gt_clusters();
    const int n = std::max(kp, kg);
    long cmax = 0;
    for (const auto& row : cm.counts)
        for (long c : row) cmax = std::max(cmax, c);
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n), static_cast<double>(cmax)));
    for (int i = 0; i < kp; ++i)
        for (int j = 0; j < kg; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                static_cast<double>(cmax - cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    std::vector<int> match = solve_assignment(cost);
    match.resize(static_cast<std::size_t>(kp));
    for (auto& m : match)
        if (m >= kg) m = -1;
    return match;
}

}  // namespace detail

/// 1 - accuracy of the best one-to-one matching of predicted clusters to
/// ground-truth classes (rectangular assignment; unmatched clusters
/// contribute no matches).
inline double error_rate(const std::vector<int>& pred, const std::vector<int>& gt) {
    const ConfusionMatrix cm = confusion_matrix(pred, gt);
    const std::vector<int> match = detail::match_clusters(cm);
    long matched = 0;
    for (int i = 0; i < cm.pred_clusters(); ++i)
        if (match[static_cast<std::size_t>(i)] >= 0)
            matched += cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
    return 1.0 - static_cast<double>(matched) / static_cast<double>(cm.total);
}

/// Mutual information normalized by the geometric mean of the two label
/// entropies (natural logs). Two identical single-cluster partitions score
/// 1; if either entropy is zero and the partitions differ, 0.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& gt) {
    const ConfusionMatrix cm = confusion_matrix(pred, gt);
    const double n = static_cast<double>(cm.total);
    std::vector<double> pp(static_cast<std::size_t>(cm.pred_clusters()), 0.0);
    std::vector<double> pg(static_cast<std::size_t>(cm.gt_clusters()), 0.0);
    for (int i = 0; i < cm.pred_clusters(); ++i)
        for (int j = 0; j < cm.gt_clusters(); ++j) {
            const double c = static_cast<double>(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            pp[static_cast<std::size_t>(i)] += c / n;
            pg[static_cast<std::size_t>(j)] += c / n;
        }
    double hp = 0.0, hg = 0.0;
    for (double q : pp)
        if (q > 0.0) hp -= q * std::log(q);
    for (double q : pg)
        if (q > 0.0) hg -= q * std::log(q);
    if (hp <= 0.0 && hg <= 0.0) return 1.0;  // both single-cluster: identical partitions
    if (hp <= 0.0 || hg <= 0.0) return 0.0;
    double mi = 0.0;
    for (int i = 0; i < cm.pred_clusters(); ++i) {
        for (int j = 0; j < cm.gt_clusters(); ++j) {
            const double c = static_cast<double>(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            if (c <= 0.0) continue;
            const double pij = c / n;
            mi += pij * std::log(pij / (pp[static_cast<std::size_t>(i)] * pg[static_cast<std::size_t>(j)]));
        }
    }
    return std::clamp(mi / std::sqrt(hp * hg), 0.0, 1.0);
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double fmeasure = 0.0;
};

/// Unweighted per-class precision and recall under the same one-to-one
/// cluster matching as error_rate; unmatched clusters and classes score 0.
inline Prf prf(const std::vector<int>& pred, const std::vector<int>& gt) {
    const ConfusionMatrix cm = confusion_matrix(pred, gt);
    const std::vector<int> match = detail::match_clusters(cm);
    const int kp = cm.pred_clusters();
    const int kg = cm.gt_clusters();
    std::vector<long> pred_size(static_cast<std::size_t>(kp), 0);
    std::vector<long> gt_size(static_cast<std::size_t>(kg), 0);
    for (int i = 0; i < kp; ++i)
        for (int j = 0; j < kg; ++j) {
            pred_size[static_cast<std::size_t>(i)] += cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            gt_size[static_cast<std::size_t>(j)] += cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    Prf out;
    for (int i = 0; i < kp; ++i) {
        const int j = match[static_cast<std::size_t>(i)];
        if (j < 0 || pred_size[static_cast<std::size_t>(i)] == 0) continue;
        out.precision += static_cast<double>(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
                         static_cast<double>(pred_size[static_cast<std::size_t>(i)]);
    }
    out.precision /= static_cast<double>(kp);
    for (int j = 0; j < kg; ++j) {
        int matched_pred = -1;
        for (int i = 0; i < kp; ++i)
            if (match[static_cast<std::size_t>(i)] == j) matched_pred = i;
        if (matched_pred < 0 || gt_size[static_cast<std::size_t>(j)] == 0) continue;
        out.recall += static_cast<double>(
                          cm.counts[static_cast<std::size_t>(matched_pred)][static_cast<std::size_t>(j)]) /
                      static_cast<double>(gt_size[static_cast<std::size_t>(j)]);
    }
    out.recall /= static_cast<double>(kg);
    out.fmeasure = (out.precision + out.recall > 0.0)
                       ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                       : 0.0;
    return out;
}

struct MetricReport {
    double error_rate = 0.0;
    double nmi = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double fmeasure = 0.0;
};

inline MetricReport evaluate_labels(const std::vector<int>& pred, const std::vector<int>& gt) {
    MetricReport r;
    r.error_rate = error_rate(pred, gt);
    r.nmi = nmi(pred, gt);
    const Prf p = prf(pred, gt);
    r.precision = p.precision;
    r.recall = p.recall;
    r.fmeasure = p.fmeasure;
    return r;
}

inline ordered_json metric_report_to_json(const MetricReport& r) {
    ordered_json j;
    j["error_rate"] = r.error_rate;
    j["nmi"] = r.nmi;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["fmeasure"] = r.fmeasure;
    return j;
}

}  // namespace subclust
