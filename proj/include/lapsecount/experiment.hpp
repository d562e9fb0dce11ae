#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapsecount/dataset.hpp"
#include "lapsecount/eval.hpp"
#include "lapsecount/features.hpp"
#include "lapsecount/lstm.hpp"
#include "lapsecount/partition.hpp"
#include "lapsecount/pipeline.hpp"
#include "lapsecount/temporal.hpp"
#include "lapsecount/threads.hpp"
#include "lapsecount/training.hpp"

namespace lapsecount::exp {

struct TrainSettings {
    std::size_t static_epochs = 15;
    std::size_t dynamic_epochs = 6;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::size_t hidden = 30;
};

struct ExperimentConfig {
    enum class Mode { Static, Dynamic };

    Mode mode = Mode::Static;
    std::size_t tw = 0;  // temporal window; set iff dynamic
    bool bidirectional = false;
    feat::ExtractorKind extractor = feat::ExtractorKind::TinyConv;
    grid::PartitionConfig partition{50, 25, false};  // training grid; prediction adds flush
    bool balance = true;  // applied to static crop sets; dynamic blocks stay unbalanced
    std::size_t balance_cap = 1000;
    std::uint64_t seed = 1;
    TrainSettings train;

    void validate() const {
        if (mode == Mode::Dynamic && tw < 1)
            throw std::invalid_argument("experiment: dynamic mode requires tw >= 1");
        if (mode == Mode::Static && tw != 0)
            throw std::invalid_argument("experiment: tw applies only to dynamic mode");
    }

    std::string mode_name() const { return mode == Mode::Static ? "static" : "dynamic"; }
};

/// The Tables 1-3 grid: static plus {uni, bi} x tw sweep, sharing extractor,
/// partition, seed and training settings.
inline std::vector<ExperimentConfig> make_sweep(const ExperimentConfig& base,
                                                std::vector<std::size_t> tws = {10, 20, 30}) {
    std::vector<ExperimentConfig> grid;
    ExperimentConfig st = base;
    st.mode = ExperimentConfig::Mode::Static;
    st.tw = 0;
    st.bidirectional = false;
    grid.push_back(st);
    for (bool bi : {false, true}) {
        for (std::size_t tw : tws) {
            ExperimentConfig dy = base;
            dy.mode = ExperimentConfig::Mode::Dynamic;
            dy.tw = tw;
            dy.bidirectional = bi;
            grid.push_back(dy);
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Training entry points.
// ---------------------------------------------------------------------------

struct CropSample {
    std::vector<double> pixels;
    double label = 0.0;
    std::string culture;
};

struct BlockSample {
    timeflow::TemporalBlock block;
    double label = 0.0;
    std::string culture;
};

/// Jointly optimizes extractor and head on labeled crops (L1 by default).
/// Returns the per-epoch training loss curve.
inline std::vector<double> train_static(feat::StaticModel& model,
                                        std::span<const CropSample> samples,
                                        nn::TrainOptions opts) {
    if (samples.empty()) throw std::invalid_argument("train_static: no samples");
    for (const auto& s : samples)
        if (s.label < 0.0) throw std::invalid_argument("train_static: labels must be >= 0");
    return nn::train_minibatch<feat::StaticModel, CropSample>(
        model, samples, opts,
        [](feat::StaticModel& m, const CropSample& s, double scale) {
            feat::StaticModel::Cache cache;
            const double pred = m.forward(s.pixels, cache);
            const auto l = nn::loss(pred, s.label, nn::LossKind::L1);
            m.backward(cache, l.grad * scale);
            return l.value;
        });
}

/// Optimizes the recurrent stack and readout on precomputed feature blocks
/// (L2 by default); the extractor stays frozen.
inline std::vector<double> train_dynamic(pipe::DynamicModel& model,
                                         std::span<const BlockSample> samples,
                                         nn::TrainOptions opts) {
    if (samples.empty()) throw std::invalid_argument("train_dynamic: no samples");
    for (const auto& s : samples) {
        if (s.label < 0.0) throw std::invalid_argument("train_dynamic: labels must be >= 0");
        if (s.block.tw != samples[0].block.tw || s.block.m != samples[0].block.m)
            throw std::invalid_argument("train_dynamic: blocks must share (tw, m)");
    }
    return nn::train_minibatch<pipe::DynamicModel, BlockSample>(
        model, samples, opts,
        [](pipe::DynamicModel& m, const BlockSample& s, double scale) {
            if (m.kind == pipe::DynamicModel::Kind::Lstm) {
                rnn::LstmStack::Cache cache;
                const double pred = m.uni.forward(s.block, &cache);
                const auto l = nn::loss(pred, s.label, nn::LossKind::L2);
                m.uni.backward(cache, l.grad * scale);
                return l.value;
            }
            rnn::BiLstmStack::Cache cache;
            const double pred = m.bi.forward(s.block, &cache);
            const auto l = nn::loss(pred, s.label, nn::LossKind::L2);
            m.bi.backward(cache, l.grad * scale);
            return l.value;
        });
}

// ---------------------------------------------------------------------------
// Leave-one-culture-out experiment runner.
// ---------------------------------------------------------------------------

namespace detail {

/// Features for every (location, frame) of one culture under a fixed grid.
struct CultureSeries {
    std::vector<grid::CropRef> crops;                         // location grid
    std::vector<std::vector<feat::FeatureVector>> series;     // [location][frame]
    std::vector<std::vector<double>> labels;                  // [location][frame]
};

inline CultureSeries extract_series(const std::vector<sim::Frame>& frames,
                                    const feat::StaticModel& extractor,
                                    const grid::PartitionConfig& pcfg) {
    CultureSeries out;
    if (frames.empty()) return out;
    const auto& img0 = frames[0].image;
    out.crops = grid::enumerate_crops(img0.width, img0.height, pcfg);
    out.series.assign(out.crops.size(), {});
    out.labels.assign(out.crops.size(), {});
    parallel_for(out.crops.size(), [&](std::size_t loc) {
        auto& s = out.series[loc];
        auto& l = out.labels[loc];
        s.resize(frames.size());
        l.resize(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            s[t] = extractor.extract(feat::crop_pixels(frames[t].image, out.crops[loc]));
            l[t] = grid::label_crop(out.crops[loc], frames[t].dots).count;
        }
    });
    return out;
}

}  // namespace detail

/// Labeled crops from the given cultures under one grid (no balancing).
inline std::vector<CropSample> collect_crop_samples(
    const std::map<std::string, std::vector<sim::Frame>>& frames,
    const std::vector<std::string>& cultures, const grid::PartitionConfig& pcfg) {
    std::vector<CropSample> samples;
    for (const auto& name : cultures) {
        for (const auto& frame : frames.at(name)) {
            const auto crops =
                grid::enumerate_crops(frame.image.width, frame.image.height, pcfg);
            for (const auto& crop : crops) {
                CropSample s;
                s.pixels = feat::crop_pixels(frame.image, crop);
                s.label = grid::label_crop(crop, frame.dots).count;
                s.culture = name;
                samples.push_back(std::move(s));
            }
        }
    }
    return samples;
}

/// Block samples for every (location, frame) of the given series.
inline std::vector<BlockSample> collect_block_samples(
    const std::vector<detail::CultureSeries>& series, const std::vector<std::string>& cultures,
    const timeflow::TemporalConfig& tcfg, std::size_t m) {
    std::vector<BlockSample> blocks;
    for (std::size_t ci = 0; ci < series.size(); ++ci) {
        const auto& cs = series[ci];
        for (std::size_t loc = 0; loc < cs.crops.size(); ++loc) {
            for (std::size_t t = 0; t < cs.series[loc].size(); ++t) {
                BlockSample b;
                b.block = pipe::block_from_series(cs.series[loc], t, tcfg, m);
                b.label = cs.labels[loc][t];
                b.culture = cultures[ci];
                blocks.push_back(std::move(b));
            }
        }
    }
    return blocks;
}

/// Per-fold seeds, stable across processes for reproducible artifacts.
struct FoldSeeds {
    std::uint64_t balance, static_init, static_shuffle;
    static FoldSeeds of(std::uint64_t seed, std::size_t fold_id) {
        return {mix_seed(seed, 100 + fold_id), mix_seed(seed, 10 + fold_id),
                mix_seed(seed, 20 + fold_id)};
    }
};

/// Runs the whole grid with leave-one-culture-out folds. All configs must
/// share extractor, partition, seed, balancing and training settings (only
/// mode / tw / direction vary); each fold then trains the static model once
/// and reuses its frozen extractor for every dynamic row.
inline evalab::MetricReport run_experiment(const data::DatasetManifest& manifest,
                                           const std::vector<ExperimentConfig>& grid) {
    if (grid.empty()) throw std::invalid_argument("run_experiment: empty config grid");
    for (const auto& cfg : grid) {
        cfg.validate();
        const auto& base = grid.front();
        if (cfg.extractor != base.extractor || cfg.seed != base.seed ||
            cfg.partition.window != base.partition.window ||
            cfg.partition.step != base.partition.step || cfg.balance != base.balance ||
            cfg.balance_cap != base.balance_cap)
            throw std::invalid_argument(
                "run_experiment: grid rows must share extractor/partition/seed/balance");
    }
    const ExperimentConfig& base = grid.front();

    std::vector<std::string> names;
    for (const auto& c : manifest.cultures) names.push_back(c.name);
    const auto folds = evalab::make_folds(names);

    // all cultures are used by several folds; load once
    std::map<std::string, std::vector<sim::Frame>> frames;
    for (const auto& c : manifest.cultures) frames[c.name] = data::load_culture(manifest, c);

    grid::PartitionConfig train_grid = base.partition;
    train_grid.flush_edges = false;
    grid::PartitionConfig predict_grid = base.partition;
    predict_grid.flush_edges = true;

    evalab::MetricReport report;
    for (const auto& fold : folds) {
        for (const auto& name : fold.train)
            if (name == fold.test)
                throw std::logic_error("fold leakage: test culture in training set");

        // --- static phase: crops from the training cultures only
        const FoldSeeds seeds = FoldSeeds::of(base.seed, fold.id);
        std::vector<CropSample> crop_samples = collect_crop_samples(frames, fold.train, train_grid);
        for (const auto& s : crop_samples)
            if (s.culture == fold.test)
                throw std::logic_error("fold leakage: test-culture crop in training set");
        if (base.balance) {
            evalab::BalanceConfig bcfg{base.balance_cap};
            crop_samples = evalab::balance(crop_samples, bcfg, seeds.balance,
                                           [](const CropSample& s) {
                                               return static_cast<long>(std::llround(s.label));
                                           });
        }

        feat::StaticModel static_model(base.extractor, base.partition.window);
        Rng init_rng(seeds.static_init);
        static_model.init(init_rng);
        nn::TrainOptions sopts;
        sopts.loss = nn::LossKind::L1;
        sopts.epochs = base.train.static_epochs;
        sopts.batch_size = base.train.batch_size;
        sopts.lr = base.train.lr;
        sopts.seed = seeds.static_shuffle;
        const auto static_losses = train_static(static_model, crop_samples, sopts);

        // --- shared feature series for the dynamic rows
        const bool any_dynamic = std::any_of(grid.begin(), grid.end(), [](const auto& c) {
            return c.mode == ExperimentConfig::Mode::Dynamic;
        });
        std::vector<detail::CultureSeries> train_series;
        detail::CultureSeries test_series;
        if (any_dynamic) {
            for (const auto& name : fold.train)
                train_series.push_back(
                    detail::extract_series(frames.at(name), static_model, train_grid));
            test_series = detail::extract_series(frames.at(fold.test), static_model, predict_grid);
        }
        const auto& test_frames = frames.at(fold.test);
        std::vector<double> truths;
        for (const auto& f : test_frames) truths.push_back(static_cast<double>(f.dots.size()));

        // --- one report row per grid config
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            const ExperimentConfig& cfg = grid[gi];
            evalab::MetricRow row;
            row.fold = fold.test;
            row.mode = cfg.mode_name();
            row.extractor = static_model.arch();
            row.tw = cfg.tw;
            row.bidirectional = cfg.bidirectional;
            row.n_frames = test_frames.size();

            std::vector<double> preds(test_frames.size());
            if (cfg.mode == ExperimentConfig::Mode::Static) {
                for (std::size_t k = 0; k < test_frames.size(); ++k)
                    preds[k] = pipe::static_frame_count(test_frames[k].image, static_model,
                                                        predict_grid);
            } else {
                timeflow::TemporalConfig tcfg;
                tcfg.tw = cfg.tw;
                const std::size_t m = static_model.feature_size();
                const std::vector<BlockSample> blocks =
                    collect_block_samples(train_series, fold.train, tcfg, m);
                for (const auto& b : blocks)
                    if (b.culture == fold.test)
                        throw std::logic_error("fold leakage: test-culture block in training set");

                pipe::DynamicModel model(cfg.bidirectional ? pipe::DynamicModel::Kind::BiLstm
                                                           : pipe::DynamicModel::Kind::Lstm,
                                         m, cfg.train.hidden);
                Rng dyn_rng(mix_seed(base.seed, 1000 + fold.id * 31 + gi));
                model.init(dyn_rng);
                nn::TrainOptions dopts;
                dopts.loss = nn::LossKind::L2;
                dopts.epochs = cfg.train.dynamic_epochs;
                dopts.batch_size = cfg.train.batch_size;
                dopts.lr = cfg.train.lr;
                dopts.seed = mix_seed(base.seed, 2000 + fold.id * 31 + gi);
                train_dynamic(model, blocks, dopts);

                std::vector<double> estimates(test_series.crops.size());
                for (std::size_t k = 0; k < test_frames.size(); ++k) {
                    parallel_for(test_series.crops.size(), [&](std::size_t loc) {
                        estimates[loc] = model.predict(
                            pipe::block_from_series(test_series.series[loc], k, tcfg, m));
                    });
                    preds[k] = grid::join_counts(estimates, predict_grid,
                                                 test_frames[k].image.width,
                                                 test_frames[k].image.height,
                                                 grid::JoinMethod::OverlapAveragedDensity);
                }
            }

            const auto [mae_v, std_v] = evalab::mae(preds, truths);
            row.mae = mae_v;
            row.stddev = std_v;
            for (std::size_t k = 0; k < preds.size(); ++k)
                row.frame_errors.push_back(preds[k] - truths[k]);
            report.rows.push_back(std::move(row));
        }
        (void)static_losses;
    }
    return report;
}

}  // namespace lapsecount::exp
