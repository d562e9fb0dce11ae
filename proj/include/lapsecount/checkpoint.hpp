#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lapsecount/errors.hpp"
#include "lapsecount/tensor.hpp"

namespace lapsecount::ckpt {

constexpr const char* kFormat = "lapsecount-ckpt/1";

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
};

struct Checkpoint {
    std::string arch;       // model descriptor, e.g. "tinyconv-8-16-m32" or "lstm2x30"
    std::string extractor;  // extractor descriptor for dynamic models, else empty
    std::size_t window = 0;
    std::size_t m = 0;
    std::size_t tw = 0;     // 0 for static models
    std::uint64_t seed = 0;
    std::string loss;       // "l1" | "l2"
    std::size_t steps = 0;  // optimizer steps taken
    std::size_t epochs = 0;
    std::vector<NamedTensor> params;
};

inline std::vector<NamedTensor> snapshot_params(const ParamList& params,
                                                const std::string& prefix = "") {
    std::vector<NamedTensor> out;
    out.reserve(params.size());
    for (const auto& pr : params)
        out.push_back({prefix + pr->name, pr->value.shape, pr->value.data});
    return out;
}

/// Restores values into `params` by exact name match (with prefix). Every
/// parameter must be found with a matching shape.
inline void restore_params(const ParamList& params, const std::vector<NamedTensor>& saved,
                           const std::string& prefix = "") {
    for (const auto& pr : params) {
        const std::string want = prefix + pr->name;
        const NamedTensor* found = nullptr;
        for (const auto& nt : saved)
            if (nt.name == want) {
                found = &nt;
                break;
            }
        if (!found) throw IoError("checkpoint missing parameter '" + want + "'");
        if (found->shape != pr->value.shape || found->values.size() != pr->value.size())
            throw IoError("checkpoint shape mismatch for parameter '" + want + "'");
        pr->value.data = found->values;
    }
}

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace detail

/// Values are serialized as decimal with 17 significant digits, which
/// round-trips doubles exactly; the writer emits a fixed key order so that
/// identical checkpoints are byte-identical.
inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::string out;
    out.reserve(1 << 16);
    out += "{\n";
    out += "\"format\": \"" + std::string(kFormat) + "\",\n";
    out += "\"arch\": \"" + c.arch + "\",\n";
    if (!c.extractor.empty()) out += "\"extractor\": \"" + c.extractor + "\",\n";
    out += "\"window\": " + std::to_string(c.window) + ",\n";
    out += "\"m\": " + std::to_string(c.m) + ",\n";
    if (c.tw > 0) out += "\"tw\": " + std::to_string(c.tw) + ",\n";
    out += "\"params\": [\n";
    for (std::size_t i = 0; i < c.params.size(); ++i) {
        const auto& nt = c.params[i];
        out += "{\"name\": \"" + nt.name + "\", \"shape\": [";
        for (std::size_t d = 0; d < nt.shape.size(); ++d) {
            if (d) out += ", ";
            out += std::to_string(nt.shape[d]);
        }
        out += "], \"values\": [";
        for (std::size_t v = 0; v < nt.values.size(); ++v) {
            if (v) out += ", ";
            detail::append_double(out, nt.values[v]);
        }
        out += "]}";
        out += (i + 1 < c.params.size()) ? ",\n" : "\n";
    }
    out += "],\n";
    out += "\"seed\": " + std::to_string(c.seed) + ",\n";
    out += "\"training\": {\"loss\": \"" + c.loss + "\", \"steps\": " + std::to_string(c.steps) +
           ", \"epochs\": " + std::to_string(c.epochs) + "}\n";
    out += "}\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != kFormat)
        throw IoError("unsupported checkpoint format in " + path);
    Checkpoint c;
    c.arch = j.at("arch").get<std::string>();
    c.extractor = j.value("extractor", "");
    c.window = j.at("window").get<std::size_t>();
    c.m = j.at("m").get<std::size_t>();
    c.tw = j.value("tw", std::size_t{0});
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("training");
    c.loss = t.at("loss").get<std::string>();
    c.steps = t.at("steps").get<std::size_t>();
    c.epochs = t.value("epochs", std::size_t{0});
    for (const auto& jp : j.at("params")) {
        NamedTensor nt;
        nt.name = jp.at("name").get<std::string>();
        nt.shape = jp.at("shape").get<std::vector<std::size_t>>();
        nt.values = jp.at("values").get<std::vector<double>>();
        if (nt.values.size() != Tensor::numel(nt.shape))
            throw IoError("checkpoint value count does not match shape for '" + nt.name + "'");
        c.params.push_back(std::move(nt));
    }
    return c;
}

}  // namespace lapsecount::ckpt
