#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subclust/errors.hpp"
#include "subclust/network.hpp"
#include "subclust/optimizer.hpp"

namespace subclust {

// Checkpoint file layout:
//   bytes 0..7    magic "SUBCLCP1"
//   bytes 8..15   little-endian u64 length of the JSON header
//   header        JSON: network config, epoch, seed, param_count, optimizer
//   blob          param_count little-endian f64 (flat parameter order:
//                 input projection row-major weight then bias, blocks in
//                 order with W1, b1, W2, b2, output projection)
//   adam blobs    when the header carries an optimizer entry: first moments,
//                 then second moments, param_count f64 each

inline constexpr char kCheckpointMagic[8] = {'S', 'U', 'B', 'C', 'L', 'C', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

struct CheckpointData {
    NetworkConfig config;
    int epoch = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd params;
    std::optional<AdamState> adam;
    std::optional<AdamConfig> adam_config;

    NetworkParams to_params() const {
        NetworkParams p(config);
        if (p.data.size() != params.size()) throw ValidationError("checkpoint: parameter count mismatch");
        p.data = params;
        return p;
    }
};

inline ordered_json network_config_to_json(const NetworkConfig& cfg) {
    ordered_json j;
    j["input_dim"] = cfg.input_dim;
    j["hidden_width"] = cfg.hidden_width;
    j["num_blocks"] = cfg.num_blocks;
    j["output_dim"] = cfg.output_dim;
    j["l2_normalize_output"] = cfg.l2_normalize_output;
    j["activation"] = cfg.activation;
    j["seed"] = cfg.seed;
    return j;
}

inline NetworkConfig network_config_from_json(const json& j, const std::string& context) {
    static const std::vector<std::string> known{"input_dim",  "hidden_width",        "num_blocks",
                                                "output_dim", "l2_normalize_output", "activation",
                                                "seed"};
    if (!j.is_object()) throw ParseError(context + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const auto& k : known) ok = ok || k == key;
        if (!ok) throw ParseError(context + ": unknown key '" + key + "'");
    }
    NetworkConfig cfg;
    auto get_int = [&](const char* key, int& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer()) throw ParseError(context + ": '" + key + "' must be an integer");
        out = j.at(key).get<int>();
    };
    get_int("input_dim", cfg.input_dim);
    get_int("hidden_width", cfg.hidden_width);
    get_int("num_blocks", cfg.num_blocks);
    get_int("output_dim", cfg.output_dim);
    if (j.contains("l2_normalize_output")) {
        if (!j.at("l2_normalize_output").is_boolean())
            throw ParseError(context + ": 'l2_normalize_output' must be a boolean");
        cfg.l2_normalize_output = j.at("l2_normalize_output").get<bool>();
    }
    if (j.contains("activation")) {
        if (!j.at("activation").is_string()) throw ParseError(context + ": 'activation' must be a string");
        cfg.activation = j.at("activation").get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer()) throw ParseError(context + ": 'seed' must be an integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.validate();
    return cfg;
}

inline void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params, int epoch,
                            std::uint64_t seed, const AdamState* adam = nullptr,
                            const AdamConfig* adam_cfg = nullptr) {
    ordered_json header;
    header["format"] = "subclust-checkpoint";
    header["network"] = network_config_to_json(params.config);
    header["epoch"] = epoch;
    header["seed"] = seed;
    header["param_count"] = params.data.size();
    if (adam && adam_cfg) {
        header["optimizer"] = {{"t", adam->t},
                               {"learning_rate", adam_cfg->learning_rate},
                               {"beta1", adam_cfg->beta1},
                               {"beta2", adam_cfg->beta2},
                               {"epsilon", adam_cfg->epsilon}};
    }
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kCheckpointMagic, 8);
    const std::uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    auto write_blob = [&](const Eigen::VectorXd& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * static_cast<Eigen::Index>(sizeof(double))));
    };
    write_blob(params.data);
    if (adam && adam_cfg) {
        write_blob(adam->m);
        write_blob(adam->v);
    }
    if (!out) throw IoError("write failed for " + path.string());
}

inline CheckpointData load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw ParseError(path.string() + ": not a checkpoint file (bad magic)");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    if (!in || hlen == 0 || hlen > (1ull << 20))
        throw ParseError(path.string() + ": implausible header length");
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw ParseError(path.string() + ": truncated header");

    json header;
    try {
        header = json::parse(htext);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": header: " + e.what());
    }
    CheckpointData data;
    if (!header.contains("network")) throw ParseError(path.string() + ": header missing 'network'");
    data.config = network_config_from_json(header.at("network"), path.string() + ": network");
    if (header.contains("epoch")) data.epoch = header.at("epoch").get<int>();
    if (header.contains("seed")) data.seed = header.at("seed").get<std::uint64_t>();
    if (!header.contains("param_count")) throw ParseError(path.string() + ": header missing 'param_count'");
    const auto count = header.at("param_count").get<std::int64_t>();
    const ParamLayout layout(data.config);
    if (count != static_cast<std::int64_t>(layout.total()))
        throw ParseError(path.string() + ": param_count does not match the network config");

    auto read_blob = [&](Eigen::VectorXd& v) {
        v.resize(static_cast<Eigen::Index>(count));
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(count * static_cast<std::int64_t>(sizeof(double))));
        if (!in) throw ParseError(path.string() + ": truncated parameter blob");
    };
    read_blob(data.params);
    if (header.contains("optimizer")) {
        const auto& opt = header.at("optimizer");
        AdamState state;
        state.t = opt.at("t").get<std::int64_t>();
        read_blob(state.m);
        read_blob(state.v);
        data.adam = std::move(state);
        AdamConfig acfg;
        acfg.learning_rate = opt.at("learning_rate").get<double>();
        acfg.beta1 = opt.at("beta1").get<double>();
        acfg.beta2 = opt.at("beta2").get<double>();
        acfg.epsilon = opt.at("epsilon").get<double>();
        data.adam_config = acfg;
    }
    if (!data.params.allFinite()) throw ValidationError(path.string() + ": non-finite parameters");
    return data;
}

}  // namespace subclust
