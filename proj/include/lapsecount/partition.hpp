#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace lapsecount::grid {

/// Sliding-window layout over a frame: side length `window`, stride `step`.
/// With `flush_edges` a final window flush to the right/bottom border is
/// added when the stride grid does not already land there; prediction wants
/// that (full coverage for joining), training-set extraction does not.
struct PartitionConfig {
    std::size_t window = 50;
    std::size_t step = 25;
    bool flush_edges = false;

    void validate(std::size_t width, std::size_t height) const {
        if (step == 0 || step > window)
            throw std::invalid_argument("partition: require 0 < step <= window");
        if (window > width || window > height)
            throw std::invalid_argument("partition: window larger than frame");
    }
};

struct CropRef {
    std::size_t frame_id = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t window = 0;

    bool operator==(const CropRef&) const = default;
};

struct CropLabel {
    double count = 0.0;
};

/// Offsets {0, s, 2s, ...} up to the last full window, plus one flush offset
/// L - w when enabled and not already on the grid.
inline std::vector<std::size_t> axis_offsets(std::size_t length, std::size_t window,
                                             std::size_t step, bool flush) {
    std::vector<std::size_t> offsets;
    const std::size_t last = length - window;
    for (std::size_t o = 0;; o += step) {
        offsets.push_back(o);
        if (o + step > last) break;
    }
    if (flush && offsets.back() != last) offsets.push_back(last);
    return offsets;
}

/// Row-major crop enumeration (y outer, x inner); deterministic order.
inline std::vector<CropRef> enumerate_crops(std::size_t width, std::size_t height,
                                            const PartitionConfig& cfg,
                                            std::size_t frame_id = 0) {
    cfg.validate(width, height);
    const auto xs = axis_offsets(width, cfg.window, cfg.step, cfg.flush_edges);
    const auto ys = axis_offsets(height, cfg.window, cfg.step, cfg.flush_edges);
    std::vector<CropRef> crops;
    crops.reserve(xs.size() * ys.size());
    for (std::size_t y : ys)
        for (std::size_t x : xs) crops.push_back({frame_id, x, y, cfg.window});
    return crops;
}

/// Dot annotations are (x, y) centers in pixels, possibly sub-pixel.
using Dot = std::array<double, 2>;

/// Half-open membership: a dot at exactly (x, y) counts, one at (x + w, y)
/// does not. Prevents double counting on shared crop edges.
inline CropLabel label_crop(const CropRef& crop, std::span<const Dot> annotations) {
    std::size_t n = 0;
    const double x0 = static_cast<double>(crop.x), y0 = static_cast<double>(crop.y);
    const double x1 = x0 + static_cast<double>(crop.window);
    const double y1 = y0 + static_cast<double>(crop.window);
    for (const auto& d : annotations)
        if (d[0] >= x0 && d[0] < x1 && d[1] >= y0 && d[1] < y1) ++n;
    return {static_cast<double>(n)};
}

/// Per-pixel crop multiplicity R_p.
struct CoverageMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint32_t> multiplicity;  // row-major, width * height

    std::uint32_t at(std::size_t x, std::size_t y) const { return multiplicity[y * width + x]; }
};

inline CoverageMap coverage_map(std::size_t width, std::size_t height,
                                const PartitionConfig& cfg) {
    cfg.validate(width, height);
    // separable: per-axis offset coverage, then outer product
    const auto axis_cov = [&](std::size_t length) {
        const auto offsets = axis_offsets(length, cfg.window, cfg.step, cfg.flush_edges);
        std::vector<std::uint32_t> cov(length, 0);
        for (std::size_t o : offsets)
            for (std::size_t q = o; q < o + cfg.window; ++q) cov[q] += 1;
        return cov;
    };
    const auto cx = axis_cov(width);
    const auto cy = axis_cov(height);
    CoverageMap map{width, height, std::vector<std::uint32_t>(width * height)};
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) map.multiplicity[y * width + x] = cy[y] * cx[x];
    return map;
}

enum class JoinMethod {
    /// Each crop spreads its estimate as uniform density est / w^2; densities
    /// from overlapping crops are averaged per pixel and integrated.
    OverlapAveragedDensity,
    /// Sum of crop estimates divided by the peak redundancy of the layout.
    SimpleNormalizedSum,
};

/// Merges per-crop estimates (aligned with enumerate_crops order) into a
/// whole-frame count. Negative estimates are clamped to zero first.
inline double join_counts(std::span<const double> estimates, const PartitionConfig& cfg,
                          std::size_t width, std::size_t height, JoinMethod method) {
    const auto crops = enumerate_crops(width, height, cfg);
    if (estimates.size() != crops.size())
        throw std::invalid_argument("join_counts: estimate count does not match enumeration");
    const CoverageMap cov = coverage_map(width, height, cfg);

    if (method == JoinMethod::SimpleNormalizedSum) {
        const std::uint32_t peak = *std::max_element(cov.multiplicity.begin(),
                                                     cov.multiplicity.end());
        double sum = 0.0;
        for (double e : estimates) sum += std::max(0.0, e);
        return peak > 0 ? sum / static_cast<double>(peak) : 0.0;
    }

    // OverlapAveragedDensity: total = sum_c est_c / w^2 * sum_{p in c} 1/R_p
    std::vector<double> inv(cov.multiplicity.size());
    for (std::size_t p = 0; p < inv.size(); ++p)
        inv[p] = cov.multiplicity[p] > 0 ? 1.0 / static_cast<double>(cov.multiplicity[p]) : 0.0;
    const double inv_area = 1.0 / (static_cast<double>(cfg.window) * static_cast<double>(cfg.window));
    double total = 0.0;
    for (std::size_t c = 0; c < crops.size(); ++c) {
        const double est = std::max(0.0, estimates[c]);
        if (est == 0.0) continue;
        double weight = 0.0;
        for (std::size_t dy = 0; dy < cfg.window; ++dy) {
            const double* row = inv.data() + (crops[c].y + dy) * width + crops[c].x;
            for (std::size_t dx = 0; dx < cfg.window; ++dx) weight += row[dx];
        }
        total += est * inv_area * weight;
    }
    return total;
}

}  // namespace lapsecount::grid
