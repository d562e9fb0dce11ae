#pragma once

#include <cstddef>
#include <deque>
#include <stdexcept>
#include <vector>

#include "lapsecount/features.hpp"

namespace lapsecount::timeflow {

struct TemporalConfig {
    std::size_t tw = 20;                // temporal window: recurrent step count
    double sampling_interval_h = 1.0;   // metadata
    double padding_value = 1.0;         // prefix fill for short histories

    void validate() const {
        if (tw < 1) throw std::invalid_argument("temporal: tw must be >= 1");
    }
};

/// The tw x m input block for the recurrent model. Rows are in strict
/// temporal order, most recent last; when fewer than tw frames exist the
/// leading rows are padding.
struct TemporalBlock {
    std::size_t tw = 0;
    std::size_t m = 0;
    std::size_t n_real = 0;            // trailing rows holding real features
    std::vector<double> rows;          // tw * m, row-major

    std::span<const double> row(std::size_t t) const {
        return {rows.data() + t * m, m};
    }
};

/// Ordered per-crop-location feature history. Keeps at least the most
/// recent `keep` entries; older ones are pruned.
class FeatureHistory {
public:
    FeatureHistory() = default;
    explicit FeatureHistory(std::size_t keep) : keep_(keep) {}

    void append(double timestamp_h, feat::FeatureVector v) {
        if (!entries_.empty()) {
            if (timestamp_h <= entries_.back().timestamp)
                throw std::invalid_argument("FeatureHistory: timestamps must strictly increase");
            if (v.size() != entries_.back().features.size())
                throw std::invalid_argument("FeatureHistory: feature length changed");
        }
        entries_.push_back({timestamp_h, std::move(v)});
        while (keep_ > 0 && entries_.size() > keep_) entries_.pop_front();
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    double last_timestamp() const { return entries_.back().timestamp; }
    const feat::FeatureVector& features_from_end(std::size_t back_index) const {
        return entries_[entries_.size() - 1 - back_index].features;
    }

private:
    struct Entry {
        double timestamp;
        feat::FeatureVector features;
    };
    std::deque<Entry> entries_;
    std::size_t keep_ = 0;  // 0 = unlimited
};

/// Builds block alpha from the tw most recent entries. Short histories are
/// front-padded so prediction works from the very first frame of a stream.
inline TemporalBlock build_block(const FeatureHistory& history, const TemporalConfig& cfg,
                                 std::size_t m) {
    cfg.validate();
    TemporalBlock block;
    block.tw = cfg.tw;
    block.m = m;
    block.n_real = std::min(history.size(), cfg.tw);
    block.rows.assign(cfg.tw * m, cfg.padding_value);
    for (std::size_t k = 0; k < block.n_real; ++k) {
        // k = 0 is the most recent entry and fills the last row
        const auto& v = history.features_from_end(k);
        if (v.size() != m) throw std::invalid_argument("build_block: feature length != m");
        std::copy(v.begin(), v.end(), block.rows.begin() + (cfg.tw - 1 - k) * m);
    }
    return block;
}

}  // namespace lapsecount::timeflow
