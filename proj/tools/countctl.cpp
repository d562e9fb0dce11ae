// countctl: simulate synthetic cultures, train counting models, stream
// per-frame predictions, and run the cross-validated evaluation grid.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lapsecount/checkpoint.hpp"
#include "lapsecount/dataset.hpp"
#include "lapsecount/errors.hpp"
#include "lapsecount/eval.hpp"
#include "lapsecount/experiment.hpp"
#include "lapsecount/pipeline.hpp"

namespace lc = lapsecount;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::string manifest;
    std::string out;
    std::string mode = "static";
    std::string extractor = "tinyconv";
    std::size_t tw = 20;
    bool bidirectional = false;
    std::size_t window = 50;
    std::size_t step = 25;
    std::size_t balance_cap = 1000;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::size_t static_epochs = 0;
    std::string fold = "all";
};

lc::feat::ExtractorKind parse_extractor(const std::string& name) {
    if (name == "tinyconv") return lc::feat::ExtractorKind::TinyConv;
    if (name == "handcrafted") return lc::feat::ExtractorKind::Handcrafted;
    throw std::invalid_argument("unknown extractor '" + name + "'");
}

lc::exp::ExperimentConfig make_config(const CommonOpts& o) {
    lc::exp::ExperimentConfig cfg;
    cfg.mode = o.mode == "dynamic" ? lc::exp::ExperimentConfig::Mode::Dynamic
                                   : lc::exp::ExperimentConfig::Mode::Static;
    cfg.tw = cfg.mode == lc::exp::ExperimentConfig::Mode::Dynamic ? o.tw : 0;
    cfg.bidirectional = o.bidirectional;
    cfg.extractor = parse_extractor(o.extractor);
    cfg.partition = {o.window, o.step, false};
    cfg.balance_cap = o.balance_cap;
    cfg.seed = o.seed;
    if (o.static_epochs > 0) cfg.train.static_epochs = o.static_epochs;
    if (o.epochs > 0) {
        if (cfg.mode == lc::exp::ExperimentConfig::Mode::Static)
            cfg.train.static_epochs = o.epochs;
        else
            cfg.train.dynamic_epochs = o.epochs;
    }
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json config_echo(const lc::exp::ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["mode"] = cfg.mode_name();
    j["extractor"] = lc::feat::to_string(cfg.extractor);
    j["tw"] = cfg.tw;
    j["bidirectional"] = cfg.bidirectional;
    j["window"] = cfg.partition.window;
    j["step"] = cfg.partition.step;
    j["balance"] = cfg.balance;
    j["balance_cap"] = cfg.balance_cap;
    j["static_epochs"] = cfg.train.static_epochs;
    j["dynamic_epochs"] = cfg.train.dynamic_epochs;
    j["batch_size"] = cfg.train.batch_size;
    j["lr"] = cfg.train.lr;
    j["hidden"] = cfg.train.hidden;
    j["seed"] = cfg.seed;
    return j;
}

void write_loss_csv(const std::string& path, const std::vector<double>& losses,
                    const nlohmann::ordered_json& echo) {
    std::ofstream out(path);
    if (!out) throw lc::IoError("cannot write loss CSV: " + path);
    out << "# config " << echo.dump() << "\n";
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        out << i << ',' << lc::evalab::format_g6(losses[i]) << '\n';
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string out;
    std::uint64_t seed = 0;
    std::size_t cultures = 5;
    std::size_t frame_size = 256;
    double duration_h = 40.0;
    double interval_h = 1.0;
};

int cmd_simulate(const SimulateOpts& o) {
    const auto [configs, names] = lc::data::default_culture_configs(
        o.seed, o.cultures, o.frame_size, o.duration_h, o.interval_h);

    nlohmann::ordered_json echo;
    echo["seed"] = o.seed;
    echo["cultures"] = o.cultures;
    echo["frame_size"] = o.frame_size;
    echo["duration_h"] = o.duration_h;
    echo["sampling_interval_h"] = o.interval_h;

    const auto manifest = lc::data::generate_dataset(configs, names, o.out, echo);

    std::size_t total_frames = 0, total_dots = 0;
    for (const auto& c : manifest.cultures) {
        total_frames += c.frames.size();
        for (const auto& f : c.frames)
            total_dots += lc::data::read_annotation((manifest.root / f.annotation).string()).dots.size();
    }
    std::cout << "wrote " << manifest.cultures.size() << " cultures, " << total_frames
              << " frames, " << total_dots << " dots to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

std::vector<lc::evalab::FoldSpec> select_folds(const lc::data::DatasetManifest& manifest,
                                               const std::string& which) {
    std::vector<std::string> names;
    for (const auto& c : manifest.cultures) names.push_back(c.name);
    auto folds = lc::evalab::make_folds(names);
    if (which == "all") return folds;
    for (const auto& f : folds)
        if (f.test == which) return {f};
    throw lc::IoError("no fold with test culture '" + which + "'");
}

struct TrainedFold {
    lc::feat::StaticModel static_model{lc::feat::ExtractorKind::TinyConv, 50};
    std::vector<double> losses;
    std::size_t steps = 0;
};

TrainedFold train_fold_static(const std::map<std::string, std::vector<lc::sim::Frame>>& frames,
                              const lc::evalab::FoldSpec& fold,
                              const lc::exp::ExperimentConfig& cfg) {
    lc::grid::PartitionConfig train_grid = cfg.partition;
    train_grid.flush_edges = false;
    auto samples = lc::exp::collect_crop_samples(frames, fold.train, train_grid);
    const auto seeds = lc::exp::FoldSeeds::of(cfg.seed, fold.id);
    if (cfg.balance) {
        lc::evalab::BalanceConfig bcfg{cfg.balance_cap};
        samples = lc::evalab::balance(samples, bcfg, seeds.balance, [](const auto& s) {
            return static_cast<long>(std::llround(s.label));
        });
    }
    TrainedFold out;
    out.static_model = lc::feat::StaticModel(cfg.extractor, cfg.partition.window);
    lc::Rng init_rng(seeds.static_init);
    out.static_model.init(init_rng);
    lc::nn::TrainOptions opts;
    opts.loss = lc::nn::LossKind::L1;
    opts.epochs = cfg.train.static_epochs;
    opts.batch_size = cfg.train.batch_size;
    opts.lr = cfg.train.lr;
    opts.seed = seeds.static_shuffle;
    out.losses = lc::exp::train_static(out.static_model, samples, opts);
    const std::size_t batches = (samples.size() + opts.batch_size - 1) / opts.batch_size;
    out.steps = opts.epochs * batches;
    return out;
}

int cmd_train(const CommonOpts& o) {
    const auto cfg = make_config(o);
    const auto manifest = lc::data::read_manifest(o.manifest);
    const auto folds = select_folds(manifest, o.fold);
    fs::create_directories(o.out);

    std::map<std::string, std::vector<lc::sim::Frame>> frames;
    for (const auto& c : manifest.cultures) frames[c.name] = lc::data::load_culture(manifest, c);

    for (const auto& fold : folds) {
        TrainedFold trained = train_fold_static(frames, fold, cfg);

        lc::ckpt::Checkpoint c;
        c.window = cfg.partition.window;
        c.seed = cfg.seed;

        if (cfg.mode == lc::exp::ExperimentConfig::Mode::Static) {
            c.arch = trained.static_model.arch();
            c.m = trained.static_model.feature_size();
            c.loss = "l1";
            c.steps = trained.steps;
            c.epochs = cfg.train.static_epochs;
            c.params = lc::ckpt::snapshot_params(trained.static_model.params());
            write_loss_csv(o.out + "/train-loss-" + fold.test + ".csv", trained.losses,
                           config_echo(cfg));
        } else {
            lc::grid::PartitionConfig train_grid = cfg.partition;
            train_grid.flush_edges = false;
            std::vector<lc::exp::detail::CultureSeries> series;
            for (const auto& name : fold.train)
                series.push_back(lc::exp::detail::extract_series(frames.at(name),
                                                                 trained.static_model, train_grid));
            lc::timeflow::TemporalConfig tcfg;
            tcfg.tw = cfg.tw;
            const std::size_t m = trained.static_model.feature_size();
            const auto blocks = lc::exp::collect_block_samples(series, fold.train, tcfg, m);

            lc::pipe::DynamicModel model(cfg.bidirectional ? lc::pipe::DynamicModel::Kind::BiLstm
                                                           : lc::pipe::DynamicModel::Kind::Lstm,
                                         m, cfg.train.hidden);
            lc::Rng dyn_rng(lc::mix_seed(cfg.seed, 3000 + fold.id));
            model.init(dyn_rng);
            lc::nn::TrainOptions opts;
            opts.loss = lc::nn::LossKind::L2;
            opts.epochs = cfg.train.dynamic_epochs;
            opts.batch_size = cfg.train.batch_size;
            opts.lr = cfg.train.lr;
            opts.seed = lc::mix_seed(cfg.seed, 4000 + fold.id);
            const auto losses = lc::exp::train_dynamic(model, blocks, opts);

            c.arch = model.arch();
            c.extractor = trained.static_model.arch();
            c.m = m;
            c.tw = cfg.tw;
            c.loss = "l2";
            c.steps = opts.epochs * ((blocks.size() + opts.batch_size - 1) / opts.batch_size);
            c.epochs = cfg.train.dynamic_epochs;
            c.params = lc::ckpt::snapshot_params(trained.static_model.params(), "extractor.");
            const auto model_params = lc::ckpt::snapshot_params(model.params());
            c.params.insert(c.params.end(), model_params.begin(), model_params.end());
            write_loss_csv(o.out + "/train-loss-" + fold.test + ".csv", losses, config_echo(cfg));
        }

        const std::string path = o.out + "/ckpt-" + fold.test + ".json";
        lc::ckpt::save_checkpoint(c, path);
        std::cout << "fold " << fold.test << ": wrote " << path << " (arch " << c.arch << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct LoadedModel {
    bool dynamic = false;
    lc::feat::StaticModel extractor{lc::feat::ExtractorKind::TinyConv, 50};
    lc::pipe::DynamicModel model;
    lc::timeflow::TemporalConfig tcfg;
    std::size_t window = 50;
};

lc::feat::ExtractorKind extractor_kind_of(const std::string& arch) {
    if (arch.rfind("tinyconv", 0) == 0) return lc::feat::ExtractorKind::TinyConv;
    if (arch.rfind("handcrafted", 0) == 0) return lc::feat::ExtractorKind::Handcrafted;
    throw lc::IoError("unknown extractor descriptor '" + arch + "'");
}

LoadedModel load_model(const std::string& path) {
    const auto c = lc::ckpt::load_checkpoint(path);
    LoadedModel lm;
    lm.window = c.window;
    if (c.arch.rfind("lstm2x", 0) == 0 || c.arch.rfind("bilstm2x", 0) == 0) {
        lm.dynamic = true;
        const bool bi = c.arch.rfind("bilstm2x", 0) == 0;
        const std::size_t hidden =
            static_cast<std::size_t>(std::stoul(c.arch.substr(bi ? 8 : 6)));
        lm.extractor = lc::feat::StaticModel(extractor_kind_of(c.extractor), c.window);
        if (lm.extractor.extractor_kind() == lc::feat::ExtractorKind::TinyConv)
            lc::ckpt::restore_params(lm.extractor.conv().params(), c.params, "extractor.");
        lm.model = lc::pipe::DynamicModel(bi ? lc::pipe::DynamicModel::Kind::BiLstm
                                             : lc::pipe::DynamicModel::Kind::Lstm,
                                          c.m, hidden);
        lc::ckpt::restore_params(lm.model.params(), c.params);
        lm.tcfg.tw = c.tw;
    } else {
        lm.extractor = lc::feat::StaticModel(extractor_kind_of(c.arch), c.window);
        lc::ckpt::restore_params(lm.extractor.params(), c.params);
    }
    return lm;
}

struct PredictOpts {
    std::string checkpoint;
    std::string manifest;
    std::string culture;
    std::vector<std::string> images;
};

int cmd_predict(const PredictOpts& o) {
    LoadedModel lm = load_model(o.checkpoint);

    struct InputFrame {
        lc::GrayImage image;
        double timestamp_h;
        bool has_truth;
        std::size_t truth;
    };
    std::vector<InputFrame> inputs;
    if (!o.manifest.empty()) {
        if (o.culture.empty())
            throw std::invalid_argument("predict: --culture required with --manifest");
        const auto manifest = lc::data::read_manifest(o.manifest);
        const auto& culture = manifest.culture(o.culture);
        for (const auto& fe : culture.frames) {
            auto frame = lc::data::load_frame(manifest, fe);
            inputs.push_back({std::move(frame.image), frame.timestamp_h, true, frame.dots.size()});
        }
    } else {
        if (o.images.empty())
            throw std::invalid_argument("predict: give --manifest/--culture or image paths");
        for (std::size_t i = 0; i < o.images.size(); ++i) {
            InputFrame in;
            in.image = lc::read_pgm(o.images[i]);
            in.timestamp_h = static_cast<double>(i);
            in.has_truth = false;
            in.truth = 0;
            const fs::path sidecar = fs::path(o.images[i]).replace_extension(".json");
            if (fs::exists(sidecar)) {
                const auto a = lc::data::read_annotation(sidecar.string());
                in.timestamp_h = a.timestamp_h;
                in.has_truth = true;
                in.truth = a.dots.size();
            }
            inputs.push_back(std::move(in));
        }
    }

    for (std::size_t i = 1; i < inputs.size(); ++i)
        if (inputs[i].timestamp_h <= inputs[i - 1].timestamp_h)
            throw std::invalid_argument("predict: frames must arrive in increasing time order");

    lc::grid::PartitionConfig pcfg{lm.window, lm.window / 2, true};
    std::optional<lc::pipe::DynamicCounter> counter;
    if (lm.dynamic) counter.emplace(&lm.extractor, &lm.model, pcfg, lm.tcfg);

    std::cout << "timestamp_h,count";
    if (!inputs.empty() && inputs.front().has_truth) std::cout << ",truth";
    std::cout << "\n";
    for (const auto& in : inputs) {
        const double count = lm.dynamic
                                 ? counter->process_frame(in.image, in.timestamp_h)
                                 : lc::pipe::static_frame_count(in.image, lm.extractor, pcfg);
        std::cout << lc::evalab::format_g6(in.timestamp_h) << ','
                  << lc::evalab::format_g6(count);
        if (in.has_truth) std::cout << ',' << in.truth;
        std::cout << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate / report
// ---------------------------------------------------------------------------

void print_table(const lc::evalab::MetricReport& report) {
    // pivot: one line per config, one column per fold
    std::vector<std::string> folds;
    std::vector<std::string> configs;
    std::map<std::pair<std::string, std::string>, const lc::evalab::MetricRow*> cells;
    for (const auto& r : report.rows) {
        const std::string cfg_key = r.mode + (r.tw ? " tw=" + std::to_string(r.tw) : "") +
                                    (r.bidirectional ? " bi" : (r.tw ? " uni" : ""));
        if (std::find(folds.begin(), folds.end(), r.fold) == folds.end()) folds.push_back(r.fold);
        if (std::find(configs.begin(), configs.end(), cfg_key) == configs.end())
            configs.push_back(cfg_key);
        cells[{cfg_key, r.fold}] = &r;
    }
    std::printf("%-22s", "config \\ fold");
    for (const auto& f : folds) std::printf(" %16s", f.c_str());
    std::printf("\n");
    for (const auto& cfg : configs) {
        std::printf("%-22s", cfg.c_str());
        for (const auto& f : folds) {
            auto it = cells.find({cfg, f});
            if (it == cells.end()) {
                std::printf(" %16s", "-");
            } else {
                char cell[64];
                std::snprintf(cell, sizeof(cell), "%.2f +/- %.2f", it->second->mae,
                              it->second->stddev);
                std::printf(" %16s", cell);
            }
        }
        std::printf("\n");
    }
}

struct EvaluateOpts {
    CommonOpts common;
    bool sweep = false;
    std::string checkpoint;
};

int cmd_evaluate(const EvaluateOpts& o) {
    const auto manifest = lc::data::read_manifest(o.common.manifest);
    fs::create_directories(o.common.out);
    lc::evalab::MetricReport report;

    if (!o.checkpoint.empty()) {
        // evaluate an existing checkpoint on one fold's test culture
        if (o.common.fold == "all")
            throw std::invalid_argument("evaluate: --checkpoint needs a single --fold");
        LoadedModel lm = load_model(o.checkpoint);
        const auto folds = select_folds(manifest, o.common.fold);
        const auto& fold = folds.front();
        const auto& culture = manifest.culture(fold.test);

        lc::grid::PartitionConfig pcfg{lm.window, lm.window / 2, true};
        std::optional<lc::pipe::DynamicCounter> counter;
        if (lm.dynamic) counter.emplace(&lm.extractor, &lm.model, pcfg, lm.tcfg);
        std::vector<double> preds, truths;
        for (const auto& fe : culture.frames) {
            const auto frame = lc::data::load_frame(manifest, fe);
            preds.push_back(lm.dynamic
                                ? counter->process_frame(frame.image, frame.timestamp_h)
                                : lc::pipe::static_frame_count(frame.image, lm.extractor, pcfg));
            truths.push_back(static_cast<double>(frame.dots.size()));
        }
        lc::evalab::MetricRow row;
        row.fold = fold.test;
        row.mode = lm.dynamic ? "dynamic" : "static";
        row.extractor = lm.extractor.arch();
        row.tw = lm.dynamic ? lm.tcfg.tw : 0;
        row.bidirectional = lm.dynamic && lm.model.kind == lc::pipe::DynamicModel::Kind::BiLstm;
        row.n_frames = preds.size();
        const auto [m, s] = lc::evalab::mae(preds, truths);
        row.mae = m;
        row.stddev = s;
        for (std::size_t i = 0; i < preds.size(); ++i)
            row.frame_errors.push_back(preds[i] - truths[i]);
        report.rows.push_back(std::move(row));
        nlohmann::ordered_json echo;
        echo["checkpoint"] = o.checkpoint;
        echo["fold"] = fold.test;
        report.config_echo = std::move(echo);
    } else {
        auto cfg = make_config(o.common);
        std::vector<lc::exp::ExperimentConfig> grid;
        if (o.sweep)
            grid = lc::exp::make_sweep(cfg);
        else
            grid = {cfg};
        report = lc::exp::run_experiment(manifest, grid);
        report.config_echo = config_echo(cfg);
        report.config_echo["sweep"] = o.sweep;
        if (o.common.fold != "all") {
            // keep only the requested fold's rows
            std::vector<lc::evalab::MetricRow> rows;
            for (auto& r : report.rows)
                if (r.fold == o.common.fold) rows.push_back(std::move(r));
            if (rows.empty()) throw lc::IoError("no fold with test culture '" + o.common.fold + "'");
            report.rows = std::move(rows);
        }
    }

    lc::evalab::write_report_csv(report, o.common.out + "/metrics.csv");
    lc::evalab::write_report_json(report, o.common.out + "/metrics.json");
    print_table(report);
    return 0;
}

struct ReportOpts {
    std::string json;
    std::string out;
};

int cmd_report(const ReportOpts& o) {
    const auto report = lc::evalab::read_report_json(o.json);
    fs::create_directories(o.out);
    lc::evalab::write_report_csv(report, o.out + "/metrics.csv");
    print_table(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lapsecount: static vs dynamic microscopy cell counting on synthetic time-lapse data"};
    app.require_subcommand(1);

    SimulateOpts sim_opts;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic time-lapse dataset");
    sim->add_option("--out", sim_opts.out, "output dataset directory")->required();
    sim->add_option("--seed", sim_opts.seed, "master seed")->required();
    sim->add_option("--cultures", sim_opts.cultures, "number of cultures (default 5)");
    sim->add_option("--frame-size", sim_opts.frame_size, "frame side length in px (default 256)");
    sim->add_option("--duration", sim_opts.duration_h, "hours of growth (default 40)");
    sim->add_option("--interval", sim_opts.interval_h, "hours between frames (default 1)");

    CommonOpts train_opts;
    auto* train = app.add_subcommand("train", "train counting models per fold");
    train->add_option("--manifest", train_opts.manifest, "dataset manifest path")->required();
    train->add_option("--out", train_opts.out, "output directory")->required();
    train->add_option("--seed", train_opts.seed, "training seed")->required();
    train->add_option("--mode", train_opts.mode, "static | dynamic")
        ->check(CLI::IsMember({"static", "dynamic"}));
    train->add_option("--extractor", train_opts.extractor, "tinyconv | handcrafted")
        ->check(CLI::IsMember({"tinyconv", "handcrafted"}));
    train->add_option("--tw", train_opts.tw, "temporal window (dynamic)")
        ->check(CLI::IsMember({10, 20, 30}));
    train->add_flag("--bidirectional", train_opts.bidirectional, "use the bidirectional stack");
    train->add_option("--window", train_opts.window, "crop side length (default 50)");
    train->add_option("--step", train_opts.step, "crop stride (default 25)");
    train->add_option("--balance-cap", train_opts.balance_cap, "max samples per class (default 1000)");
    train->add_option("--epochs", train_opts.epochs, "training epochs for the selected mode");
    train->add_option("--static-epochs", train_opts.static_epochs,
                      "extractor pre-training epochs (dynamic mode)");
    train->add_option("--fold", train_opts.fold, "test-culture name or 'all'");

    PredictOpts predict_opts;
    auto* predict = app.add_subcommand("predict", "stream per-frame counts");
    predict->add_option("--checkpoint", predict_opts.checkpoint, "model checkpoint")->required();
    predict->add_option("--manifest", predict_opts.manifest, "dataset manifest path");
    predict->add_option("--culture", predict_opts.culture, "culture name inside the manifest");
    predict->add_option("images", predict_opts.images, "ordered PGM frame paths");

    EvaluateOpts eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "run the cross-validated experiment grid");
    evaluate->add_option("--manifest", eval_opts.common.manifest, "dataset manifest path")
        ->required();
    evaluate->add_option("--out", eval_opts.common.out, "output directory")->required();
    evaluate->add_option("--seed", eval_opts.common.seed, "experiment seed");
    evaluate->add_option("--mode", eval_opts.common.mode, "static | dynamic")
        ->check(CLI::IsMember({"static", "dynamic"}));
    evaluate->add_option("--extractor", eval_opts.common.extractor, "tinyconv | handcrafted")
        ->check(CLI::IsMember({"tinyconv", "handcrafted"}));
    evaluate->add_option("--tw", eval_opts.common.tw, "temporal window (dynamic)")
        ->check(CLI::IsMember({10, 20, 30}));
    evaluate->add_flag("--bidirectional", eval_opts.common.bidirectional,
                       "use the bidirectional stack");
    evaluate->add_option("--window", eval_opts.common.window, "crop side length (default 50)");
    evaluate->add_option("--step", eval_opts.common.step, "crop stride (default 25)");
    evaluate->add_option("--balance-cap", eval_opts.common.balance_cap,
                         "max samples per class (default 1000)");
    evaluate->add_option("--epochs", eval_opts.common.epochs, "epochs for the selected mode");
    evaluate->add_option("--static-epochs", eval_opts.common.static_epochs,
                         "extractor pre-training epochs");
    evaluate->add_option("--fold", eval_opts.common.fold, "test-culture name or 'all'");
    evaluate->add_flag("--sweep", eval_opts.sweep, "full grid: static + {uni,bi} x tw {10,20,30}");
    evaluate->add_option("--checkpoint", eval_opts.checkpoint,
                         "evaluate an existing checkpoint instead of training");

    ReportOpts report_opts;
    auto* report = app.add_subcommand("report", "regenerate tables from stored metrics JSON");
    report->add_option("--json", report_opts.json, "metrics.json produced by evaluate")->required();
    report->add_option("--out", report_opts.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*sim) return cmd_simulate(sim_opts);
        if (*train) return cmd_train(train_opts);
        if (*predict) return cmd_predict(predict_opts);
        if (*evaluate) return cmd_evaluate(eval_opts);
        if (*report) return cmd_report(report_opts);
    } catch (const lc::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const lc::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
