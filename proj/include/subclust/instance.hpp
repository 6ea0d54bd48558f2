#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "subclust/errors.hpp"

namespace subclust {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// One clustering problem: a D x N point matrix (one column per point),
/// per-point integer labels contiguous in 0..K-1, a unique name, and
/// free-form string metadata.
struct Instance {
    std::string name;
    Eigen::MatrixXd points;  // D x N
    std::vector<int> labels;
    std::map<std::string, std::string> meta;

    Eigen::Index dim() const { return points.rows(); }
    Eigen::Index size() const { return points.cols(); }

    int num_clusters() const {
        int k = -1;
        for (int l : labels) k = std::max(k, l);
        return k + 1;
    }

    void validate() const {
        if (points.rows() < 2) throw ValidationError(name + ": points must have D >= 2");
        if (points.cols() < 2) throw ValidationError(name + ": points must have N >= 2");
        if (!points.allFinite()) throw ValidationError(name + ": points contain non-finite values");
        if (static_cast<Eigen::Index>(labels.size()) != points.cols())
            throw ValidationError(name + ": labels length does not match point count");
        const int k = num_clusters();
        if (k < 1) throw ValidationError(name + ": empty label set");
        std::vector<char> seen(static_cast<std::size_t>(k), 0);
        for (int l : labels) {
            if (l < 0 || l >= k) throw ValidationError(name + ": labels must be contiguous 0-based ids");
            seen[static_cast<std::size_t>(l)] = 1;
        }
        if (std::find(seen.begin(), seen.end(), 0) != seen.end())
            throw ValidationError(name + ": labels must cover 0..K-1 with no gaps");
    }
};

/// K x N binary indicator matrix; each column is the one-hot encoding of a
/// point's label.
struct OneHotLabels {
    Eigen::MatrixXd Y;  // K x N, entries in {0, 1}

    Eigen::Index num_clusters() const { return Y.rows(); }
    Eigen::Index size() const { return Y.cols(); }
};

struct Dataset {
    std::vector<Instance> instances;
    std::string split;  // one of train / val / test
};

struct Manifest {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

/// Remap arbitrary integer labels to contiguous 0-based ids, preserving
/// first-occurrence order.
inline std::vector<int> reindex_labels(const std::vector<int>& labels) {
    std::unordered_map<int, int> remap;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

/// One-hot encode labels that are already contiguous 0-based.
inline OneHotLabels one_hot(const std::vector<int>& labels) {
    if (labels.empty()) throw ValidationError("one_hot: empty label vector");
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw ValidationError("one_hot: negative label");
        k = std::max(k, l + 1);
    }
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int l : labels) seen[static_cast<std::size_t>(l)] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw ValidationError("one_hot: labels are not contiguous 0-based");
    OneHotLabels oh;
    oh.Y = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        oh.Y(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
    return oh;
}

/// Stack F frames of 2 x N coordinates into a (2F) x N matrix whose column i
/// is (x_1, y_1, ..., x_F, y_F) for point i.
inline Eigen::MatrixXd flatten_trajectories(const std::vector<Eigen::Matrix2Xd>& frames) {
    if (frames.empty()) throw ValidationError("flatten_trajectories: no frames");
    const Eigen::Index n = frames.front().cols();
    for (const auto& f : frames) {
        if (f.cols() != n) throw ValidationError("flatten_trajectories: ragged frame widths");
        if (!f.allFinite()) throw ValidationError("flatten_trajectories: non-finite coordinate");
    }
    Eigen::MatrixXd out(2 * static_cast<Eigen::Index>(frames.size()), n);
    for (std::size_t f = 0; f < frames.size(); ++f) out.middleRows(2 * static_cast<Eigen::Index>(f), 2) = frames[f];
    return out;
}

/// Inverse of flatten_trajectories.
inline std::vector<Eigen::Matrix2Xd> unflatten_trajectories(const Eigen::MatrixXd& flat) {
    if (flat.rows() < 2 || flat.rows() % 2 != 0)
        throw ValidationError("unflatten_trajectories: row count is not 2F");
    std::vector<Eigen::Matrix2Xd> frames(static_cast<std::size_t>(flat.rows() / 2));
    for (std::size_t f = 0; f < frames.size(); ++f)
        frames[f] = flat.middleRows(2 * static_cast<Eigen::Index>(f), 2);
    return frames;
}

namespace detail {

inline double require_finite_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ParseError(field + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(field + ": non-finite value");
    return d;
}

}  // namespace detail

/// Parse an instance from its JSON representation. Labels are re-indexed to
/// contiguous 0-based ids preserving first-occurrence order.
inline Instance instance_from_json(const json& j, const std::string& context) {
    if (!j.is_object()) throw ParseError(context + ": expected a JSON object");
    Instance inst;

    if (!j.contains("name") || !j.at("name").is_string())
        throw ParseError(context + ": missing or non-string field 'name'");
    inst.name = j.at("name").get<std::string>();

    if (!j.contains("points") || !j.at("points").is_array())
        throw ParseError(context + ": missing or non-array field 'points'");
    const auto& rows = j.at("points");
    const std::size_t n = rows.size();
    if (n == 0) throw ParseError(context + ": 'points' is empty");
    if (!rows.at(0).is_array() || rows.at(0).empty())
        throw ParseError(context + ": 'points[0]' must be a non-empty array");
    const std::size_t d = rows.at(0).size();
    inst.points.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows.at(i);
        if (!row.is_array() || row.size() != d)
            throw ParseError(context + ": 'points[" + std::to_string(i) + "]' has inconsistent width");
        for (std::size_t c = 0; c < d; ++c) {
            inst.points(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = detail::require_finite_number(
                row.at(c), context + ": points[" + std::to_string(i) + "][" + std::to_string(c) + "]");
        }
    }

    if (!j.contains("labels") || !j.at("labels").is_array())
        throw ParseError(context + ": missing or non-array field 'labels'");
    std::vector<int> raw;
    raw.reserve(j.at("labels").size());
    for (std::size_t i = 0; i < j.at("labels").size(); ++i) {
        const auto& v = j.at("labels").at(i);
        if (!v.is_number_integer())
            throw ParseError(context + ": labels[" + std::to_string(i) + "]: expected an integer");
        raw.push_back(v.get<int>());
    }
    inst.labels = reindex_labels(raw);

    if (j.contains("meta")) {
        if (!j.at("meta").is_object()) throw ParseError(context + ": 'meta' must be an object");
        for (const auto& [key, value] : j.at("meta").items()) {
            if (!value.is_string()) throw ParseError(context + ": meta['" + key + "'] must be a string");
            inst.meta[key] = value.get<std::string>();
        }
    }

    try {
        inst.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
    return inst;
}

inline ordered_json instance_to_json(const Instance& inst) {
    inst.validate();
    ordered_json j;
    j["name"] = inst.name;
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < inst.points.cols(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < inst.points.rows(); ++c) row.push_back(inst.points(c, i));
        rows.push_back(std::move(row));
    }
    j["points"] = std::move(rows);
    j["labels"] = inst.labels;
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : inst.meta) meta[k] = v;  // std::map iterates sorted
    j["meta"] = std::move(meta);
    return j;
}

inline Instance read_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return instance_from_json(j, path.string());
}

inline void write_instance(const Instance& inst, const std::filesystem::path& path) {
    const ordered_json j = instance_to_json(inst);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    Manifest m;
    auto read_split = [&](const char* key, std::vector<std::string>& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_array()) throw ParseError(path.string() + ": '" + key + "' must be an array");
        for (const auto& v : j.at(key)) {
            if (!v.is_string()) throw ParseError(path.string() + ": '" + std::string(key) + "' entries must be strings");
            out.push_back(v.get<std::string>());
        }
    };
    read_split("train", m.train);
    read_split("val", m.val);
    read_split("test", m.test);
    return m;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    ordered_json j;
    j["train"] = m.train;
    j["val"] = m.val;
    j["test"] = m.test;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

/// Load one split of a dataset directory (instances named <name>.json next to
/// manifest.json).
inline Dataset load_dataset(const std::filesystem::path& dir, const std::string& split) {
    const Manifest m = read_manifest(dir / "manifest.json");
    const std::vector<std::string>* names = nullptr;
    if (split == "train") names = &m.train;
    else if (split == "val") names = &m.val;
    else if (split == "test") names = &m.test;
    else throw ValidationError("unknown split '" + split + "'");

    Dataset ds;
    ds.split = split;
    ds.instances.reserve(names->size());
    std::vector<std::string> seen;
    for (const auto& name : *names) {
        if (std::find(seen.begin(), seen.end(), name) != seen.end())
            throw ValidationError(dir.string() + ": duplicate instance name '" + name + "' in split " + split);
        seen.push_back(name);
        ds.instances.push_back(read_instance(dir / (name + ".json")));
    }
    return ds;
}

}  // namespace subclust
