#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "subclust/conic.hpp"
#include "subclust/errors.hpp"
#include "subclust/instance.hpp"
#include "subclust/rng.hpp"

namespace subclust {

struct ModelSchedule {
    StructureKind kind = StructureKind::line;
    int count = 1;
};

/// Parse "line:1,circle:1,ellipse:2" into a schedule.
inline std::vector<ModelSchedule> parse_schedule(const std::string& text) {
    std::vector<ModelSchedule> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("schedule item '" + item + "' is not kind:count");
        ModelSchedule m;
        m.kind = kind_from_name(item.substr(0, colon));
        try {
            m.count = std::stoi(item.substr(colon + 1));
        } catch (const std::exception&) {
            throw ValidationError("schedule item '" + item + "' has a non-integer count");
        }
        if (m.count < 1) throw ValidationError("schedule counts must be positive");
        out.push_back(m);
        pos = comma + 1;
    }
    if (out.empty()) throw ValidationError("empty model schedule");
    return out;
}

namespace detail {

struct FittedModel {
    StructureKind kind;
    Conic conic;
};

}  // namespace detail

/// Greedy multi-model fitting: for each scheduled model, hypothesize from
/// minimal samples of the remaining points, score by consensus under the
/// geometric inlier threshold, refit on the best consensus set with the
/// kind's least-squares fitter, then assign and remove its inliers. Points
/// left over at the end go to the nearest recovered model.
inline std::vector<int> sequential_fit(const Instance& instance,
                                       const std::vector<ModelSchedule>& schedule,
                                       double inlier_threshold, int ransac_iters,
                                       std::uint64_t seed) {
    instance.validate();
    if (instance.dim() != 2) throw ValidationError("sequential_fit: expects 2-D instances");
    if (inlier_threshold <= 0.0) throw ValidationError("sequential_fit: inlier threshold must be positive");
    if (ransac_iters <= 0) throw FitError("sequential_fit: ransac_iters must be positive");

    const Eigen::Index n = instance.size();
    Sampler rng(seed);
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    std::vector<std::size_t> remaining(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

    std::vector<detail::FittedModel> models;
    auto gather = [&](const std::vector<std::size_t>& idx) {
        Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            pts.col(static_cast<Eigen::Index>(i)) = instance.points.col(static_cast<Eigen::Index>(idx[i]));
        return pts;
    };

    int model_index = 0;
    for (const auto& sched : schedule) {
        for (int c = 0; c < sched.count; ++c, ++model_index) {
            const int support = minimal_support(sched.kind);
            if (remaining.size() < static_cast<std::size_t>(support))
                throw FitError(std::string("sequential_fit: only ") + std::to_string(remaining.size()) +
                               " points left, need " + std::to_string(support) + " for a " +
                               kind_name(sched.kind));

            Conic best_conic{};
            std::vector<std::size_t> best_inliers;
            bool found = false;
            for (int it = 0; it < ransac_iters; ++it) {
                const auto picks = rng.sample_without_replacement(remaining.size(), static_cast<std::size_t>(support));
                std::vector<std::size_t> sample;
                sample.reserve(picks.size());
                for (std::size_t p : picks) sample.push_back(remaining[p]);
                Conic hyp;
                try {
                    hyp = fit_kind(sched.kind, gather(sample));
                } catch (const FitError&) {
                    continue;  // degenerate minimal sample
                }
                std::vector<std::size_t> inliers;
                for (std::size_t i : remaining) {
                    if (geometric_distance(instance.points.col(static_cast<Eigen::Index>(i)), hyp, sched.kind) <=
                        inlier_threshold)
                        inliers.push_back(i);
                }
                if (!found || inliers.size() > best_inliers.size()) {
                    best_conic = hyp;
                    best_inliers = std::move(inliers);
                    found = true;
                }
            }
            if (!found)
                throw FitError(std::string("sequential_fit: no valid ") + kind_name(sched.kind) + " hypothesis");

            if (best_inliers.size() >= static_cast<std::size_t>(support)) {
                try {
                    const Conic refit = fit_kind(sched.kind, gather(best_inliers));
                    std::vector<std::size_t> refit_inliers;
                    for (std::size_t i : remaining) {
                        if (geometric_distance(instance.points.col(static_cast<Eigen::Index>(i)), refit,
                                               sched.kind) <= inlier_threshold)
                            refit_inliers.push_back(i);
                    }
                    if (!refit_inliers.empty()) {
                        best_conic = refit;
                        best_inliers = std::move(refit_inliers);
                    }
                } catch (const FitError&) {
                    // keep the hypothesis model
                }
            }

            for (std::size_t i : best_inliers) labels[i] = model_index;
            std::vector<std::size_t> next;
            next.reserve(remaining.size());
            for (std::size_t i : remaining)
                if (labels[i] == -1) next.push_back(i);
            remaining = std::move(next);
            models.push_back({sched.kind, best_conic});
        }
    }

    for (std::size_t i : remaining) {
        double best = std::numeric_limits<double>::infinity();
        int best_model = 0;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const double d = geometric_distance(instance.points.col(static_cast<Eigen::Index>(i)),
                                                models[m].conic, models[m].kind);
            if (d < best) {
                best = d;
                best_model = static_cast<int>(m);
            }
        }
        labels[i] = best_model;
    }
    return labels;
}

}  // namespace subclust
