#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "subclust/checkpoint.hpp"
#include "subclust/errors.hpp"
#include "subclust/inference.hpp"
#include "subclust/instance.hpp"
#include "subclust/losses.hpp"
#include "subclust/metrics.hpp"
#include "subclust/network.hpp"
#include "subclust/optimizer.hpp"
#include "subclust/rng.hpp"

namespace subclust {

struct TrainConfig {
    std::string loss = "mimi";
    double learning_rate = 1e-3;
    int epochs = 300;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double label_fraction = 1.0;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // epochs between checkpoints; 0 disables
    bool mean_normalize = false;
    bool quiet = true;

    void validate() const {
        if (learning_rate <= 0.0) throw ValidationError("train config: learning_rate must be positive");
        if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
        if (!(label_fraction > 0.0) || label_fraction > 1.0)
            throw ValidationError("train config: label_fraction must be in (0, 1]");
        if (checkpoint_every < 0) throw ValidationError("train config: negative checkpoint cadence");
        bool known = false;
        for (const auto& n : loss_names()) known = known || n == loss;
        if (!known) throw ValidationError("train config: unknown loss '" + loss + "'");
    }

    AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double val_error = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

inline void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,val_error,seconds\n";
    out.precision(10);
    for (const auto& e : log.epochs)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_error << ','
            << e.seconds << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

/// Seeded stratified label subsampling: each cluster keeps at least 2
/// labelled points and about fraction of its members, sampled without
/// replacement. Returns a per-point labelled mask.
inline std::vector<std::uint8_t> subsample_labels(const Instance& instance, double fraction,
                                                  std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ValidationError("subsample_labels: fraction must be in (0, 1]");
    const auto idx = ClusterIndex::from_labels(instance.labels);
    std::vector<std::uint8_t> mask(instance.labels.size(), 0);
    Sampler rng(seed);
    for (const auto& members : idx.members) {
        if (members.size() < 2)
            throw ValidationError("subsample_labels: cluster with fewer than 2 points");
        std::size_t keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        keep = std::max<std::size_t>(keep, 2);
        keep = std::min(keep, members.size());
        const auto picks = rng.sample_without_replacement(members.size(), keep);
        for (std::size_t p : picks) mask[static_cast<std::size_t>(members[p])] = 1;
    }
    return mask;
}

struct TrainResult {
    NetworkParams params;
    AdamState adam;
    TrainLog log;
};

namespace detail {

inline LossEval masked_loss(const std::string& loss, const Eigen::MatrixXd& z,
                            const std::vector<int>& labels, const std::vector<std::uint8_t>& mask,
                            bool mean_normalize) {
    std::vector<Eigen::Index> keep;
    keep.reserve(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) keep.push_back(static_cast<Eigen::Index>(i));
    if (keep.size() == mask.size()) {
        return evaluate_loss(loss, z, labels, mean_normalize);
    }
    Eigen::MatrixXd zs(z.rows(), static_cast<Eigen::Index>(keep.size()));
    std::vector<int> ls(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        zs.col(static_cast<Eigen::Index>(i)) = z.col(keep[i]);
        ls[i] = labels[static_cast<std::size_t>(keep[i])];
    }
    LossEval sub = evaluate_loss(loss, zs, ls, mean_normalize);
    LossEval out;
    out.value = sub.value;
    out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    for (std::size_t i = 0; i < keep.size(); ++i)
        out.grad.col(keep[i]) = sub.grad.col(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace detail

/// Adam training over a dataset with per-instance mini-batches: each epoch
/// visits the instances in a seeded shuffled order, and each visit runs
/// forward -> loss on labelled points -> backward -> one Adam step.
/// Instances whose loss cannot be evaluated are skipped with a warning; an
/// epoch in which everything was skipped aborts the run. Fully deterministic
/// in (datasets, configs); label masks depend only on (seed, instance index)
/// and epoch order only on (seed, epoch), so a checkpoint resume replays the
/// unbroken run exactly.
inline TrainResult train(const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
                         const NetworkConfig& net_cfg, const TrainConfig& cfg,
                         const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt,
                         const std::optional<CheckpointData>& resume = std::nullopt) {
    net_cfg.validate();
    cfg.validate();
    if (train_set.empty()) throw ValidationError("train: empty training set");
    for (const auto& inst : train_set) inst.validate();

    NetworkParams params = resume ? resume->to_params() : init_params(net_cfg);
    if (resume && !(resume->config == net_cfg))
        throw ValidationError("train: resume checkpoint config does not match");
    AdamState adam = resume && resume->adam ? *resume->adam : AdamState::zeros(params.size());
    const int start_epoch = resume ? resume->epoch : 0;
    const AdamConfig adam_cfg = cfg.adam();

    // Label masks are fixed for the whole run, one seeded draw per instance.
    std::vector<std::vector<std::uint8_t>> masks(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        if (cfg.label_fraction < 1.0)
            masks[i] = subsample_labels(train_set[i], cfg.label_fraction,
                                        mix_seed(cfg.seed, 0x6d61736bull, static_cast<std::uint64_t>(i)));
        else
            masks[i].assign(train_set[i].labels.size(), 1);
    }

    TrainResult out{std::move(params), std::move(adam), {}};
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Sampler shuffler(mix_seed(cfg.seed, 0x6f72646572ull, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(order);

        double loss_sum = 0.0;
        std::size_t done = 0;
        for (std::size_t idx : order) {
            const Instance& inst = train_set[idx];
            try {
                ForwardTape tape;
                const Eigen::MatrixXd z = forward(inst.points, out.params, &tape);
                const LossEval loss =
                    detail::masked_loss(cfg.loss, z, inst.labels, masks[idx], cfg.mean_normalize);
                const BackwardResult grads = backward(tape, out.params, loss.grad);
                adam_step(out.params, grads.param_grad, out.adam, adam_cfg);
                loss_sum += loss.value;
                ++done;
            } catch (const Error& e) {
                if (!cfg.quiet)
                    std::cerr << "warning: skipping instance '" << inst.name << "': " << e.what() << "\n";
            }
        }
        if (done == 0) throw Error("train: every instance failed in epoch " + std::to_string(epoch));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(done);

        if (!val_set.empty()) {
            double val_loss = 0.0, val_err = 0.0;
            std::size_t val_done = 0;
            for (std::size_t i = 0; i < val_set.size(); ++i) {
                const Instance& inst = val_set[i];
                try {
                    const Eigen::MatrixXd z = forward(inst.points, out.params);
                    val_loss += evaluate_loss(cfg.loss, z, inst.labels, cfg.mean_normalize).value;
                    const ClusterResult res = kmeans(z, inst.num_clusters(), 4,
                                                     mix_seed(cfg.seed, 0x76616cull, static_cast<std::uint64_t>(i)));
                    val_err += error_rate(res.assignments, inst.labels);
                    ++val_done;
                } catch (const Error&) {
                }
            }
            if (val_done > 0) {
                rec.val_loss = val_loss / static_cast<double>(val_done);
                rec.val_error = val_err / static_cast<double>(val_done);
            }
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.log.epochs.push_back(rec);

        if (checkpoint_dir && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
            epoch + 1 < cfg.epochs) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "checkpoint_epoch_%04d.ckpt", epoch + 1);
            save_checkpoint(*checkpoint_dir / buf, out.params, epoch + 1, cfg.seed, &out.adam, &adam_cfg);
        }
    }
    return out;
}

}  // namespace subclust
