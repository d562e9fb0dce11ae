// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// criteria hold. Heavier than the unit tests; the cross-validated experiment
// in criterion 8 dominates the runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lapsecount/dataset.hpp"
#include "lapsecount/eval.hpp"
#include "lapsecount/experiment.hpp"
#include "lapsecount/gradcheck.hpp"
#include "lapsecount/lstm.hpp"
#include "lapsecount/pipeline.hpp"
#include "lapsecount/sim.hpp"
#include "lapsecount/threads.hpp"

namespace fs = std::filesystem;
using namespace lapsecount;

namespace {

int g_failures = 0;

void verdict(int criterion, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --------------------------------------------------------------------------
// 1. gradient integrity across four model families, >= 20 seeds each
// --------------------------------------------------------------------------

void randomize(const ParamList& params, Rng& rng, double scale) {
    for (auto& pr : params)
        for (auto& v : pr->value.data) v = rng.uniform(-scale, scale);
}

double check_composite(std::uint64_t seed) {
    // dense + conv + maxpool + relu/sigmoid/tanh + gap stacked into a scalar
    Rng rng(seed);
    Param K("K", {2, 1, 3, 3}), kb("kb", {2}), W("W", {3, 2}), b("b", {3}), V("V", {1, 3}),
        vb("vb", {1});
    const ParamList params{{&K}, {&kb}, {&W}, {&b}, {&V}, {&vb}};
    randomize(params, rng, 0.6);
    std::vector<double> x(36);
    for (auto& v : x) v = rng.uniform(0.1, 1.0);
    const double target = rng.uniform(0.5, 2.0);

    auto forward = [&]() {
        std::vector<double> a(2 * 36), r(2 * 36), p(2 * 9), g(2), d(3), s(3), t(3), y(1);
        std::vector<std::size_t> argmax;
        nn::conv2d_forward(x, 1, 6, 6, K.value, kb.value, a);
        nn::relu_forward(a, r);
        nn::maxpool2_forward(r, 2, 6, 6, p, argmax);
        nn::global_avg_pool_forward(p, 2, 3, 3, g);
        nn::dense_forward(W.value, b.value, g, d);
        nn::sigmoid_forward(d, s);
        nn::tanh_forward(s, t);
        nn::dense_forward(V.value, vb.value, t, y);
        return (y[0] - target) * (y[0] - target);
    };
    // analytic pass
    {
        std::vector<double> a(2 * 36), r(2 * 36), p(2 * 9), g(2), d(3), s(3), t(3), y(1);
        std::vector<std::size_t> argmax;
        nn::conv2d_forward(x, 1, 6, 6, K.value, kb.value, a);
        nn::relu_forward(a, r);
        nn::maxpool2_forward(r, 2, 6, 6, p, argmax);
        nn::global_avg_pool_forward(p, 2, 3, 3, g);
        nn::dense_forward(W.value, b.value, g, d);
        nn::sigmoid_forward(d, s);
        nn::tanh_forward(s, t);
        nn::dense_forward(V.value, vb.value, t, y);
        const double dy = 2.0 * (y[0] - target);
        std::vector<double> dt(3), ds(3), dd(3), dg(2), dp(2 * 9), dr(2 * 36), da(2 * 36);
        nn::dense_backward(V.value, t, std::span<const double>(&dy, 1), V.grad, vb.grad, dt);
        nn::tanh_backward(t, dt, ds);
        nn::sigmoid_backward(s, ds, dd);
        nn::dense_backward(W.value, g, dd, W.grad, b.grad, dg);
        nn::global_avg_pool_backward(dg, 2, 3, 3, dp);
        nn::maxpool2_backward(dp, argmax, dr);
        nn::relu_backward(a, dr, da);
        nn::conv2d_backward(x, 1, 6, 6, K.value, da, K.grad, kb.grad, {});
    }
    return nn::gradient_check(forward, params).max_rel_err;
}

double check_tinyconv_head(std::uint64_t seed) {
    Rng rng(seed);
    feat::StaticModel model(feat::ExtractorKind::TinyConv, 12);
    model.init(rng);
    std::vector<double> crop(144);
    for (auto& v : crop) v = rng.uniform(0.0, 1.0);
    const double target = rng.uniform(0.0, 4.0);

    feat::StaticModel::Cache cache;
    const double pred = model.forward(crop, cache);
    model.backward(cache, 2.0 * (pred - target));
    return nn::gradient_check(
               [&]() {
                   const double p = model.predict(crop);
                   return (p - target) * (p - target);
               },
               model.params())
        .max_rel_err;
}

double check_lstm(std::uint64_t seed) {
    Rng rng(seed);
    rnn::LstmStack model(6, 4);
    randomize(model.params(), rng, 0.4);
    timeflow::TemporalBlock block;
    block.tw = 5;
    block.m = 6;
    block.n_real = 5;
    block.rows.resize(30);
    for (auto& v : block.rows) v = rng.uniform(-1.0, 1.0);
    const double target = rng.uniform(0.0, 3.0);

    rnn::LstmStack::Cache cache;
    const double pred = model.forward(block, &cache);
    model.backward(cache, 2.0 * (pred - target));
    return nn::gradient_check(
               [&]() {
                   const double p = model.forward(block);
                   return (p - target) * (p - target);
               },
               model.params())
        .max_rel_err;
}

double check_bilstm(std::uint64_t seed) {
    Rng rng(seed);
    rnn::BiLstmStack model(5, 3);
    randomize(model.params(), rng, 0.4);
    timeflow::TemporalBlock block;
    block.tw = 4;
    block.m = 5;
    block.n_real = 4;
    block.rows.resize(20);
    for (auto& v : block.rows) v = rng.uniform(-1.0, 1.0);
    const double target = rng.uniform(0.0, 3.0);

    rnn::BiLstmStack::Cache cache;
    const double pred = model.forward(block, &cache);
    model.backward(cache, 2.0 * (pred - target));
    return nn::gradient_check(
               [&]() {
                   const double p = model.forward(block);
                   return (p - target) * (p - target);
               },
               model.params())
        .max_rel_err;
}

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_family;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        struct {
            const char* name;
            double err;
        } results[] = {{"composite", check_composite(seed)},
                       {"tinyconv+head", check_tinyconv_head(seed)},
                       {"lstm2 tw=5", check_lstm(seed)},
                       {"bilstm tw=4", check_bilstm(seed)}};
        for (const auto& r : results)
            if (r.err > worst) {
                worst = r.err;
                worst_family = r.name;
            }
    }
    const double secs = elapsed_s(start);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient integrity: max rel err %.3g (worst %s), 20 seeds x 4 families, %.1fs",
                  worst, worst_family.c_str(), secs);
    verdict(1, worst < 1e-4 && secs < 120.0, buf);
}

// --------------------------------------------------------------------------
// 2. partition enumeration vs brute force
// --------------------------------------------------------------------------

void criterion_2() {
    Rng rng(20250001);
    bool all_match = true;
    for (int it = 0; it < 100; ++it) {
        const std::size_t w = 2 + rng.uniform_index(40);
        const std::size_t s = 1 + rng.uniform_index(w);
        const std::size_t W = w + rng.uniform_index(120);
        const std::size_t H = w + rng.uniform_index(120);
        const grid::PartitionConfig cfg{w, s, rng.uniform() < 0.5};

        std::set<std::pair<std::size_t, std::size_t>> brute;
        {
            std::set<std::size_t> xs, ys;
            for (std::size_t o = 0; o + w <= W; ++o)
                if (o % s == 0) xs.insert(o);
            for (std::size_t o = 0; o + w <= H; ++o)
                if (o % s == 0) ys.insert(o);
            if (cfg.flush_edges) {
                xs.insert(W - w);
                ys.insert(H - w);
            }
            for (auto y : ys)
                for (auto x : xs) brute.insert({x, y});
        }
        std::set<std::pair<std::size_t, std::size_t>> got;
        for (const auto& c : grid::enumerate_crops(W, H, cfg)) got.insert({c.x, c.y});
        if (got != brute) all_match = false;
    }
    const std::size_t paper_crops = grid::enumerate_crops(1392, 1040, {50, 25, false}).size();
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "partition oracle: 100 random instances %s; 1392x1040 w50 s25 -> %zu crops",
                  all_match ? "match" : "MISMATCH", paper_crops);
    verdict(2, all_match && paper_crops == 2160, buf);
}

// --------------------------------------------------------------------------
// 3. join exactness with oracle crop counts
// --------------------------------------------------------------------------

void criterion_3() {
    Rng rng(20250003);
    double worst = 0.0;
    for (int it = 0; it < 50; ++it) {
        const std::size_t w = 2 * (2 + rng.uniform_index(12));
        const std::size_t s = w / 2;
        const std::size_t W = w + s * (3 + rng.uniform_index(10));
        const std::size_t H = w + s * (3 + rng.uniform_index(10));
        const grid::PartitionConfig cfg{w, s, rng.uniform() < 0.5};

        std::vector<grid::Dot> dots;
        const std::size_t n = 1 + rng.uniform_index(50);
        for (std::size_t i = 0; i < n; ++i)
            dots.push_back({rng.uniform(static_cast<double>(w), static_cast<double>(W - w)),
                            rng.uniform(static_cast<double>(w), static_cast<double>(H - w))});

        const auto crops = grid::enumerate_crops(W, H, cfg);
        std::vector<double> est(crops.size());
        for (std::size_t i = 0; i < crops.size(); ++i)
            est[i] = grid::label_crop(crops[i], dots).count;

        for (auto method :
             {grid::JoinMethod::OverlapAveragedDensity, grid::JoinMethod::SimpleNormalizedSum}) {
            const double joined = grid::join_counts(est, cfg, W, H, method);
            worst = std::max(worst, std::abs(joined - static_cast<double>(n)));
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "join exactness: worst abs deviation %.3g over 50 instances",
                  worst);
    verdict(3, worst < 1e-9, buf);
}

// --------------------------------------------------------------------------
// 4. temporal padding worked example + first-frame prediction
// --------------------------------------------------------------------------

void criterion_4() {
    const std::size_t m = 8;
    timeflow::FeatureHistory history;
    std::vector<feat::FeatureVector> fs_(3, feat::FeatureVector(m));
    Rng rng(20250004);
    for (std::size_t k = 0; k < 3; ++k) {
        for (auto& v : fs_[k]) v = rng.uniform(-1.0, 1.0);
        history.append(static_cast<double>(k + 1), fs_[k]);
    }
    timeflow::TemporalConfig tcfg;
    tcfg.tw = 5;
    const auto block = timeflow::build_block(history, tcfg, m);

    bool ok = block.tw == 5 && block.n_real == 3;
    for (std::size_t t = 0; t < 2 && ok; ++t)
        for (double v : block.row(t))
            if (v != 1.0) ok = false;
    for (std::size_t k = 0; k < 3 && ok; ++k) {
        const auto row = block.row(2 + k);
        for (std::size_t j = 0; j < m; ++j)
            if (row[j] != fs_[k][j]) ok = false;
    }

    // a dynamic counter must emit a finite count on the very first frame
    feat::StaticModel extractor(feat::ExtractorKind::TinyConv, 12);
    Rng erng(1);
    extractor.init(erng);
    pipe::DynamicModel model(pipe::DynamicModel::Kind::Lstm, 32, 6);
    Rng mrng(2);
    model.init(mrng);
    pipe::DynamicCounter counter(&extractor, &model, {12, 6, true}, tcfg);
    GrayImage first(36, 36);
    for (auto& p : first.pixels) p = rng.uniform();
    const double count = counter.process_frame(first, 0.0);
    ok = ok && std::isfinite(count);

    verdict(4, ok, "temporal padding: tw=5 with 3 frames -> [1,1,f1,f2,f3]; first-frame count " +
                       std::string(std::isfinite(count) ? "finite" : "non-finite"));
}

// --------------------------------------------------------------------------
// 5. bidirectional-to-unidirectional reduction
// --------------------------------------------------------------------------

void criterion_5() {
    Rng rng(20250005);
    double worst = 0.0;
    for (int it = 0; it < 50; ++it) {
        const std::size_t m = 3 + rng.uniform_index(5);
        const std::size_t h = 2 + rng.uniform_index(5);
        const std::size_t tw = 1 + rng.uniform_index(6);
        rnn::BiLstmStack bi(m, h);
        bi.init(rng);
        for (std::size_t j = h; j < 2 * h; ++j) bi.readout_w().value[j] = 0.0;

        rnn::LstmStack uni(m, h);
        uni.core() = bi.forward_core();
        for (std::size_t j = 0; j < h; ++j) uni.readout_w().value[j] = bi.readout_w().value[j];
        uni.readout_b().value[0] = bi.readout_b().value[0];

        timeflow::TemporalBlock block;
        block.tw = tw;
        block.m = m;
        block.n_real = tw;
        block.rows.resize(tw * m);
        for (auto& v : block.rows) v = rng.uniform(-1.5, 1.5);
        worst = std::max(worst, std::abs(bi.forward(block) - uni.forward(block)));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "bidirectional reduction: worst |bi - uni| = %.3g over 50 models", worst);
    verdict(5, worst < 1e-12, buf);
}

// --------------------------------------------------------------------------
// 6. proliferation calibration at f*t = 2 over 200 seeds
// --------------------------------------------------------------------------

void criterion_6() {
    sim::SimConfig base;
    base.width = base.height = 128;
    base.proliferation = {8.0, 1.0 / 12.0};
    double total = 0.0;
    const int n_seeds = 200;
    for (int s = 0; s < n_seeds; ++s) {
        sim::SimConfig cfg = base;
        cfg.seed = 9000 + static_cast<std::uint64_t>(s);
        auto scene = sim::make_scene(cfg);
        for (int t = 0; t < 24; ++t) sim::advance_culture(scene, cfg, 1.0);
        total += static_cast<double>(scene.population());
    }
    const double mean = total / n_seeds;
    const double expected = sim::expected_population(base.proliferation, 24.0);
    const double rel = std::abs(mean - expected) / expected;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "proliferation calibration: mean %.2f vs closed form %.2f (rel dev %.3f)", mean,
                  expected, rel);
    verdict(6, rel < 0.05, buf);
}

// --------------------------------------------------------------------------
// 7. class balancing cap
// --------------------------------------------------------------------------

void criterion_7() {
    struct S {
        long cls;
        int id;
    };
    std::vector<S> samples;
    Rng rng(20250007);
    const std::vector<std::size_t> class_sizes{2400, 1500, 1000, 730, 120, 3};
    for (std::size_t cls = 0; cls < class_sizes.size(); ++cls)
        for (std::size_t i = 0; i < class_sizes[cls]; ++i)
            samples.push_back({static_cast<long>(cls), static_cast<int>(i)});

    const auto out = evalab::balance(samples, evalab::BalanceConfig{1000}, 17,
                                     [](const S& s) { return s.cls; });
    std::map<long, std::set<int>> kept;
    for (const auto& s : out) kept[s.cls].insert(s.id);

    bool ok = true;
    for (std::size_t cls = 0; cls < class_sizes.size(); ++cls) {
        const std::size_t n = kept[static_cast<long>(cls)].size();
        if (class_sizes[cls] > 1000 && n != 1000) ok = false;
        if (class_sizes[cls] <= 1000 && n != class_sizes[cls]) ok = false;  // untouched
    }
    verdict(7, ok, "balancing: classes above the cap trimmed to 1000, others untouched");
}

// --------------------------------------------------------------------------
// 8. qualitative static-vs-dynamic reproduction on the synthetic benchmark
// --------------------------------------------------------------------------

void criterion_8(const fs::path& work) {
    const auto start = std::chrono::steady_clock::now();

    const auto [configs, names] = data::default_culture_configs(424242, 5, 256, 40.0, 1.0);
    const fs::path ds = work / "benchmark";
    fs::remove_all(ds);
    const auto manifest = data::generate_dataset(configs, names, ds);
    std::printf("  benchmark dataset ready (%.1fs)\n", elapsed_s(start));
    std::fflush(stdout);

    exp::ExperimentConfig base;
    base.extractor = feat::ExtractorKind::TinyConv;
    base.partition = {50, 25, false};
    base.balance = true;
    base.balance_cap = 1000;
    base.seed = 424242;

    const auto grid = exp::make_sweep(base);
    const auto report = exp::run_experiment(manifest, grid);

    // full sweep grid, informational except for the static vs tw=20 pair
    std::printf("  %-24s %10s\n", "config", "mean MAE");
    for (const auto& cfg : grid) {
        const double mean = report.mean_mae([&](const evalab::MetricRow& r) {
            return r.mode == cfg.mode_name() && r.tw == cfg.tw &&
                   r.bidirectional == cfg.bidirectional;
        });
        char label[64];
        if (cfg.mode == exp::ExperimentConfig::Mode::Static)
            std::snprintf(label, sizeof(label), "static");
        else
            std::snprintf(label, sizeof(label), "dynamic tw=%zu %s", cfg.tw,
                          cfg.bidirectional ? "bi" : "uni");
        std::printf("  %-24s %10.3f\n", label, mean);
    }
    std::fflush(stdout);

    const double static_mae = report.mean_mae(
        [](const evalab::MetricRow& r) { return r.mode == "static"; });
    const double dynamic_mae = report.mean_mae([](const evalab::MetricRow& r) {
        return r.mode == "dynamic" && r.tw == 20 && !r.bidirectional;
    });

    const double secs = elapsed_s(start);
    const double budget = 1200.0 * std::max(1.0, 4.0 / static_cast<double>(thread_budget()));
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "dynamic (tw=20, uni) mean MAE %.3f < static mean MAE %.3f; runtime %.0fs "
                  "(budget %.0fs at %u threads)",
                  dynamic_mae, static_mae, secs, budget, thread_budget());
    verdict(8, dynamic_mae < static_mae && secs <= budget, buf);
}

// --------------------------------------------------------------------------
// 9. byte-identical reruns of train/evaluate
// --------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(COUNTCTL_PATH) + " " + args + " >> " + log.string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

void criterion_9(const fs::path& work) {
    const fs::path log = work / "cli.log";
    const fs::path ds = work / "determinism_ds";
    fs::remove_all(ds);
    bool ok = run_cli("simulate --out " + ds.string() +
                          " --seed 21 --cultures 2 --frame-size 64 --duration 6 --interval 1",
                      log) == 0;

    const std::string train_flags = "train --manifest " + (ds / "manifest.json").string() +
                                    " --seed 33 --mode dynamic --tw 10 --window 24 --step 12"
                                    " --epochs 1 --static-epochs 1 --fold culture-01 --out ";
    const fs::path t1 = work / "train1", t2 = work / "train2";
    fs::remove_all(t1);
    fs::remove_all(t2);
    ok = ok && run_cli(train_flags + t1.string(), log) == 0;
    ok = ok && run_cli(train_flags + t2.string(), log) == 0;
    const bool ckpt_same =
        slurp(t1 / "ckpt-culture-01.json") == slurp(t2 / "ckpt-culture-01.json") &&
        !slurp(t1 / "ckpt-culture-01.json").empty();

    const std::string eval_flags = "evaluate --manifest " + (ds / "manifest.json").string() +
                                   " --seed 55 --mode static --window 24 --step 12 --epochs 1"
                                   " --out ";
    const fs::path e1 = work / "eval1", e2 = work / "eval2";
    fs::remove_all(e1);
    fs::remove_all(e2);
    ok = ok && run_cli(eval_flags + e1.string(), log) == 0;
    ok = ok && run_cli(eval_flags + e2.string(), log) == 0;
    const bool csv_same =
        slurp(e1 / "metrics.csv") == slurp(e2 / "metrics.csv") && !slurp(e1 / "metrics.csv").empty();

    verdict(9, ok && ckpt_same && csv_same,
            std::string("determinism: checkpoints ") + (ckpt_same ? "identical" : "DIFFER") +
                ", metric CSVs " + (csv_same ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "lapsecount_acceptance";
    fs::create_directories(work);
    std::printf("acceptance suite (threads=%u)\n", thread_budget());

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8(work);
    criterion_9(work);

    if (g_failures == 0) {
        std::printf("all 9 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
