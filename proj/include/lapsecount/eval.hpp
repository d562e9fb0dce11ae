#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lapsecount/errors.hpp"
#include "lapsecount/rng.hpp"

namespace lapsecount::evalab {

/// MAE plus the population standard deviation of the absolute errors.
inline std::pair<double, double> mae(std::span<const double> preds,
                                     std::span<const double> truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw std::invalid_argument("mae: need equal, non-empty prediction/truth lists");
    const double n = static_cast<double>(preds.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - truths[i]);
    const double mean = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = std::abs(preds[i] - truths[i]) - mean;
        var += d * d;
    }
    return {mean, std::sqrt(var / n)};
}

/// Leave-one-culture-out split.
struct FoldSpec {
    std::size_t id = 0;
    std::vector<std::string> train;
    std::string test;
};

inline std::vector<FoldSpec> make_folds(std::vector<std::string> cultures) {
    if (cultures.size() < 2) throw std::invalid_argument("make_folds: need >= 2 cultures");
    std::sort(cultures.begin(), cultures.end());
    if (std::adjacent_find(cultures.begin(), cultures.end()) != cultures.end())
        throw std::invalid_argument("make_folds: duplicate culture names");
    std::vector<FoldSpec> folds;
    for (std::size_t i = 0; i < cultures.size(); ++i) {
        FoldSpec fold;
        fold.id = i;
        fold.test = cultures[i];
        for (std::size_t j = 0; j < cultures.size(); ++j)
            if (j != i) fold.train.push_back(cultures[j]);
        folds.push_back(std::move(fold));
    }
    return folds;
}

struct BalanceConfig {
    std::size_t cap = 1000;  // max samples per integer count class

    void validate() const {
        if (cap < 1) throw std::invalid_argument("balance: cap must be >= 1");
    }
};

/// Down-samples over-represented count classes to the cap; classes at or
/// below it stay untouched. The retained set is deterministically shuffled.
/// `count_of(sample)` must return the non-negative integer class.
template <typename T, typename CountFn>
std::vector<T> balance(const std::vector<T>& samples, const BalanceConfig& cfg,
                       std::uint64_t seed, CountFn count_of) {
    cfg.validate();
    Rng rng(seed);
    std::map<long, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const long cls = count_of(samples[i]);
        if (cls < 0) throw std::invalid_argument("balance: counts must be non-negative integers");
        by_class[cls].push_back(i);
    }
    std::vector<std::size_t> retained;
    retained.reserve(samples.size());
    for (auto& [cls, idxs] : by_class) {
        if (idxs.size() > cfg.cap) {
            rng.shuffle(idxs);
            idxs.resize(cfg.cap);
            std::sort(idxs.begin(), idxs.end());
        }
        retained.insert(retained.end(), idxs.begin(), idxs.end());
    }
    rng.shuffle(retained);
    std::vector<T> out;
    out.reserve(retained.size());
    for (std::size_t i : retained) out.push_back(samples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Result reporting.
// ---------------------------------------------------------------------------

struct MetricRow {
    std::string fold;        // test culture name
    std::string mode;        // "static" | "dynamic"
    std::string extractor;   // arch descriptor
    std::size_t tw = 0;      // 0 for static
    bool bidirectional = false;
    double mae = 0.0;
    double stddev = 0.0;
    std::size_t n_frames = 0;
    std::vector<double> frame_errors;  // signed pred - truth, per test frame
};

struct MetricReport {
    std::vector<MetricRow> rows;
    nlohmann::ordered_json config_echo;

    /// Mean fold MAE over rows matching a predicate.
    template <typename Pred>
    double mean_mae(Pred pred) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (pred(r)) {
                sum += r.mae;
                ++n;
            }
        if (n == 0) throw std::invalid_argument("mean_mae: no matching rows");
        return sum / static_cast<double>(n);
    }
};

inline std::string format_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// CSV with 6-significant-digit floats; one row per (fold x config).
inline void write_report_csv(const MetricReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report CSV: " + path);
    out << "fold,mode,extractor,tw,bidirectional,mae,std,n_frames\n";
    for (const auto& r : report.rows) {
        out << r.fold << ',' << r.mode << ',' << r.extractor << ',' << r.tw << ','
            << (r.bidirectional ? 1 : 0) << ',' << format_g6(r.mae) << ',' << format_g6(r.stddev)
            << ',' << r.n_frames << '\n';
    }
}

/// JSON with the full-precision per-frame error series.
inline void write_report_json(const MetricReport& report, const std::string& path) {
    nlohmann::ordered_json j;
    if (!report.config_echo.is_null()) j["config"] = report.config_echo;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json jr;
        jr["fold"] = r.fold;
        jr["mode"] = r.mode;
        jr["extractor"] = r.extractor;
        jr["tw"] = r.tw;
        jr["bidirectional"] = r.bidirectional;
        jr["mae"] = r.mae;
        jr["std"] = r.stddev;
        jr["n_frames"] = r.n_frames;
        jr["frame_errors"] = r.frame_errors;
        rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report JSON: " + path);
    out << j.dump(1) << "\n";
}

inline MetricReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read report JSON: " + path);
    nlohmann::json j;
    in >> j;
    MetricReport report;
    if (j.contains("config")) report.config_echo = j["config"];
    for (const auto& jr : j.at("rows")) {
        MetricRow r;
        r.fold = jr.at("fold").get<std::string>();
        r.mode = jr.at("mode").get<std::string>();
        r.extractor = jr.at("extractor").get<std::string>();
        r.tw = jr.at("tw").get<std::size_t>();
        r.bidirectional = jr.at("bidirectional").get<bool>();
        r.mae = jr.at("mae").get<double>();
        r.stddev = jr.at("std").get<double>();
        r.n_frames = jr.at("n_frames").get<std::size_t>();
        r.frame_errors = jr.at("frame_errors").get<std::vector<double>>();
        report.rows.push_back(std::move(r));
    }
    return report;
}

}  // namespace lapsecount::evalab
