#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

#include "subclust/errors.hpp"
#include "subclust/network.hpp"

namespace subclust {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First- and second-moment accumulators, flat like the parameter vector.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t t = 0;

    static AdamState zeros(std::size_t n) {
        AdamState s;
        s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        return s;
    }
};

/// One bias-corrected Adam update in place. Throws NumericError naming the
/// first parameter block whose gradient is non-finite.
inline void adam_step(NetworkParams& params, const Eigen::VectorXd& grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (grads.size() != params.data.size() || state.m.size() != grads.size() ||
        state.v.size() != grads.size())
        throw ValidationError("adam_step: shape mismatch between params, grads, and state");
    if (!grads.allFinite()) {
        for (const auto& seg : params.layout.segments()) {
            if (!ParamLayout::vec(grads, seg).allFinite())
                throw NumericError("adam_step: non-finite gradient in " + seg.name);
        }
        throw NumericError("adam_step: non-finite gradient");
    }
    state.t += 1;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    params.data.array() -= cfg.learning_rate * (state.m.array() / bias1) /
                           ((state.v.array() / bias2).sqrt() + cfg.epsilon);
}

}  // namespace subclust
