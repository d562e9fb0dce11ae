#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lapsecount/errors.hpp"
#include "lapsecount/image.hpp"
#include "lapsecount/sim.hpp"
#include "lapsecount/threads.hpp"

namespace lapsecount::data {

struct FrameEntry {
    std::string image;       // path relative to the manifest
    std::string annotation;  // path relative to the manifest
    double timestamp_h = 0.0;
};

struct CultureEntry {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<FrameEntry> frames;
};

struct DatasetManifest {
    std::filesystem::path root;  // directory holding manifest.json
    std::vector<CultureEntry> cultures;

    const CultureEntry& culture(const std::string& name) const {
        for (const auto& c : cultures)
            if (c.name == name) return c;
        throw IoError("manifest has no culture named '" + name + "'");
    }

    std::size_t total_frames() const {
        std::size_t n = 0;
        for (const auto& c : cultures) n += c.frames.size();
        return n;
    }
};

inline void write_annotation(const std::string& path, double timestamp_h,
                             const std::vector<grid::Dot>& dots) {
    nlohmann::ordered_json j;
    j["timestamp_h"] = timestamp_h;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& d : dots) arr.push_back({d[0], d[1]});
    j["dots"] = std::move(arr);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write annotation: " + path);
    out << j.dump(1) << "\n";
}

struct Annotation {
    double timestamp_h = 0.0;
    std::vector<grid::Dot> dots;
};

inline Annotation read_annotation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read annotation: " + path);
    nlohmann::json j;
    in >> j;
    Annotation a;
    a.timestamp_h = j.at("timestamp_h").get<double>();
    for (const auto& d : j.at("dots")) a.dots.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
    return a;
}

inline void write_manifest(const DatasetManifest& manifest,
                           const nlohmann::ordered_json& generator_echo) {
    nlohmann::ordered_json j;
    auto cultures = nlohmann::ordered_json::array();
    for (const auto& c : manifest.cultures) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        auto frames = nlohmann::ordered_json::array();
        for (const auto& f : c.frames) {
            nlohmann::ordered_json jf;
            jf["image"] = f.image;
            jf["annotation"] = f.annotation;
            jf["timestamp_h"] = f.timestamp_h;
            frames.push_back(std::move(jf));
        }
        jc["frames"] = std::move(frames);
        jc["seed"] = c.seed;
        cultures.push_back(std::move(jc));
    }
    j["cultures"] = std::move(cultures);
    if (!generator_echo.is_null()) j["generator"] = generator_echo;
    const auto path = manifest.root / "manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j.dump(1) << "\n";
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest: " + path.string());
    nlohmann::json j;
    in >> j;
    DatasetManifest m;
    m.root = path.parent_path();
    for (const auto& jc : j.at("cultures")) {
        CultureEntry c;
        c.name = jc.at("name").get<std::string>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        for (const auto& jf : jc.at("frames")) {
            FrameEntry f;
            f.image = jf.at("image").get<std::string>();
            f.annotation = jf.at("annotation").get<std::string>();
            f.timestamp_h = jf.at("timestamp_h").get<double>();
            c.frames.push_back(std::move(f));
        }
        m.cultures.push_back(std::move(c));
    }
    return m;
}

/// Loads one frame (image + annotations) back from disk.
inline sim::Frame load_frame(const DatasetManifest& manifest, const FrameEntry& entry) {
    sim::Frame frame;
    frame.image = read_pgm((manifest.root / entry.image).string());
    const Annotation a = read_annotation((manifest.root / entry.annotation).string());
    frame.timestamp_h = a.timestamp_h;
    frame.dots = a.dots;
    return frame;
}

inline std::vector<sim::Frame> load_culture(const DatasetManifest& manifest,
                                            const CultureEntry& culture) {
    std::vector<sim::Frame> frames(culture.frames.size());
    parallel_for(frames.size(),
                 [&](std::size_t i) { frames[i] = load_frame(manifest, culture.frames[i]); });
    return frames;
}

/// Simulates one culture to disk: frames at the sampling cadence plus one
/// JSON annotation sidecar per frame.
inline CultureEntry generate_culture(const sim::SimConfig& cfg, const std::string& name,
                                     const std::filesystem::path& root) {
    cfg.validate();
    const auto dir = root / name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create culture directory: " + dir.string());

    CultureEntry entry;
    entry.name = name;
    entry.seed = cfg.seed;

    sim::CultureScene scene = sim::make_scene(cfg);
    const std::size_t n_frames =
        static_cast<std::size_t>(std::floor(cfg.duration_h / cfg.sampling_interval_h + 1e-9)) + 1;
    for (std::size_t k = 0; k < n_frames; ++k) {
        if (k > 0) sim::advance_culture(scene, cfg, cfg.sampling_interval_h);
        const sim::Frame frame = sim::render_frame(scene, cfg);

        char stem[32];
        std::snprintf(stem, sizeof(stem), "frame-%04zu", k);
        FrameEntry fe;
        fe.image = name + "/" + stem + ".pgm";
        fe.annotation = name + "/" + stem + ".json";
        fe.timestamp_h = frame.timestamp_h;
        write_pgm(frame.image, (root / fe.image).string());
        write_annotation((root / fe.annotation).string(), frame.timestamp_h, frame.dots);
        entry.frames.push_back(std::move(fe));
    }
    return entry;
}

/// Default benchmark cultures: square frames, shared cadence, per-culture
/// seeds and growth parameters derived from the master seed so the five
/// growth curves differ.
inline std::pair<std::vector<sim::SimConfig>, std::vector<std::string>> default_culture_configs(
    std::uint64_t seed, std::size_t count, std::size_t frame_size, double duration_h,
    double interval_h) {
    std::vector<sim::SimConfig> configs;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) {
        sim::SimConfig cfg;
        cfg.width = cfg.height = frame_size;
        cfg.duration_h = duration_h;
        cfg.sampling_interval_h = interval_h;
        cfg.seed = mix_seed(seed, 7000 + i);
        Rng crng(mix_seed(seed, 7700 + i));
        cfg.proliferation.n0 = 4.0 + static_cast<double>(crng.uniform_index(6));
        cfg.proliferation.cycle_frequency = 1.0 / crng.uniform(10.0, 14.0);
        configs.push_back(cfg);
        char name[32];
        std::snprintf(name, sizeof(name), "culture-%02zu", i + 1);
        names.emplace_back(name);
    }
    return {std::move(configs), std::move(names)};
}

/// Generates one culture directory per config plus the dataset manifest.
/// Requires at least two configs with pairwise distinct seeds.
inline DatasetManifest generate_dataset(const std::vector<sim::SimConfig>& configs,
                                        const std::vector<std::string>& names,
                                        const std::filesystem::path& root,
                                        const nlohmann::ordered_json& generator_echo = {}) {
    if (configs.size() < 2)
        throw std::invalid_argument("generate_dataset: need at least 2 culture configs");
    if (names.size() != configs.size())
        throw std::invalid_argument("generate_dataset: one name per config required");
    for (std::size_t i = 0; i < configs.size(); ++i) {
        configs[i].validate();
        for (std::size_t j = i + 1; j < configs.size(); ++j)
            if (configs[i].seed == configs[j].seed)
                throw std::invalid_argument("generate_dataset: culture seeds must be distinct");
    }

    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoError("cannot create dataset directory: " + root.string());

    DatasetManifest manifest;
    manifest.root = root;
    manifest.cultures.resize(configs.size());
    parallel_for(configs.size(), [&](std::size_t i) {
        manifest.cultures[i] = generate_culture(configs[i], names[i], root);
    });
    write_manifest(manifest, generator_echo);
    return manifest;
}

}  // namespace lapsecount::data
