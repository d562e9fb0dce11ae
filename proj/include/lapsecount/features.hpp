#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapsecount/image.hpp"
#include "lapsecount/layers.hpp"
#include "lapsecount/partition.hpp"
#include "lapsecount/rng.hpp"
#include "lapsecount/tensor.hpp"

namespace lapsecount::feat {

using FeatureVector = std::vector<double>;

inline std::vector<double> crop_pixels(const GrayImage& img, const grid::CropRef& crop) {
    if (crop.x + crop.window > img.width || crop.y + crop.window > img.height)
        throw std::invalid_argument("crop_pixels: crop outside frame");
    std::vector<double> out(crop.window * crop.window);
    for (std::size_t r = 0; r < crop.window; ++r) {
        const double* src = img.pixels.data() + (crop.y + r) * img.width + crop.x;
        std::copy(src, src + crop.window, out.data() + r * crop.window);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trainable extractor: conv(8) -> pool -> conv(16) -> pool -> GAP -> dense(32)
// ---------------------------------------------------------------------------

class TinyConvNet {
public:
    static constexpr std::size_t kC1 = 8, kC2 = 16, kM = 32;

    TinyConvNet()
        : conv1_k_("conv1.k", {kC1, 1, 3, 3}),
          conv1_b_("conv1.b", {kC1}),
          conv2_k_("conv2.k", {kC2, kC1, 3, 3}),
          conv2_b_("conv2.b", {kC2}),
          fc_w_("fc.w", {kM, kC2}),
          fc_b_("fc.b", {kM}) {}

    void init(Rng& rng) {
        conv1_k_.init_glorot(rng, 1 * 9, kC1 * 9);
        conv1_b_.fill(0.0);
        conv2_k_.init_glorot(rng, kC1 * 9, kC2 * 9);
        conv2_b_.fill(0.0);
        fc_w_.init_glorot(rng, kC2, kM);
        fc_b_.fill(0.0);
    }

    ParamList params() {
        return {{&conv1_k_}, {&conv1_b_}, {&conv2_k_}, {&conv2_b_}, {&fc_w_}, {&fc_b_}};
    }

    static std::string arch() { return "tinyconv-8-16-m32"; }

    /// Per-call activation storage; lets frozen-parameter inference run in
    /// parallel across crops.
    struct Cache {
        std::size_t side = 0, h1 = 0, h2 = 0;
        std::vector<double> input, a1, r1, p1, a2, r2, p2, gap, features;
        std::vector<std::size_t> arg1, arg2;
    };

    void forward(std::span<const double> crop, std::size_t side, Cache& c) const {
        if (crop.size() != side * side)
            throw std::invalid_argument("TinyConvNet: crop size mismatch");
        c.side = side;
        c.h1 = nn::pooled_extent(side);
        c.h2 = nn::pooled_extent(c.h1);
        c.input.assign(crop.begin(), crop.end());
        c.a1.resize(kC1 * side * side);
        c.r1.resize(c.a1.size());
        c.p1.resize(kC1 * c.h1 * c.h1);
        c.a2.resize(kC2 * c.h1 * c.h1);
        c.r2.resize(c.a2.size());
        c.p2.resize(kC2 * c.h2 * c.h2);
        c.gap.resize(kC2);
        c.features.resize(kM);

        nn::conv2d_forward(c.input, 1, side, side, conv1_k_.value, conv1_b_.value, c.a1);
        nn::relu_forward(c.a1, c.r1);
        nn::maxpool2_forward(c.r1, kC1, side, side, c.p1, c.arg1);
        nn::conv2d_forward(c.p1, kC1, c.h1, c.h1, conv2_k_.value, conv2_b_.value, c.a2);
        nn::relu_forward(c.a2, c.r2);
        nn::maxpool2_forward(c.r2, kC2, c.h1, c.h1, c.p2, c.arg2);
        nn::global_avg_pool_forward(c.p2, kC2, c.h2, c.h2, c.gap);
        nn::dense_forward(fc_w_.value, fc_b_.value, c.gap, c.features);
    }

    /// Accumulates parameter grads from d(features); input grads are not
    /// propagated (crops are leaves).
    void backward(const Cache& c, std::span<const double> dfeat) {
        std::vector<double> dgap(kC2);
        nn::dense_backward(fc_w_.value, c.gap, dfeat, fc_w_.grad, fc_b_.grad, dgap);
        std::vector<double> dp2(c.p2.size());
        nn::global_avg_pool_backward(dgap, kC2, c.h2, c.h2, dp2);
        std::vector<double> dr2(c.r2.size());
        nn::maxpool2_backward(dp2, c.arg2, dr2);
        std::vector<double> da2(c.a2.size());
        nn::relu_backward(c.a2, dr2, da2);
        std::vector<double> dp1(c.p1.size());
        nn::conv2d_backward(c.p1, kC1, c.h1, c.h1, conv2_k_.value, da2, conv2_k_.grad,
                            conv2_b_.grad, dp1);
        std::vector<double> dr1(c.r1.size());
        nn::maxpool2_backward(dp1, c.arg1, dr1);
        std::vector<double> da1(c.a1.size());
        nn::relu_backward(c.a1, dr1, da1);
        nn::conv2d_backward(c.input, 1, c.side, c.side, conv1_k_.value, da1, conv1_k_.grad,
                            conv1_b_.grad, {});
    }

    FeatureVector extract(std::span<const double> crop, std::size_t side) const {
        Cache c;
        forward(crop, side, c);
        return c.features;
    }

private:
    Param conv1_k_, conv1_b_, conv2_k_, conv2_b_, fc_w_, fc_b_;
};

// ---------------------------------------------------------------------------
// Fixed descriptor: 16-bin normalized intensity histogram, local-maxima
// count above an adaptive threshold, gradient-magnitude mean and std. m = 19.
// ---------------------------------------------------------------------------

struct HandcraftedExtractor {
    static constexpr std::size_t kM = 19;

    static std::string arch() { return "handcrafted-19"; }

    static FeatureVector extract(std::span<const double> crop, std::size_t side) {
        if (crop.size() != side * side)
            throw std::invalid_argument("HandcraftedExtractor: crop size mismatch");
        FeatureVector f(kM, 0.0);

        const double inv_n = 1.0 / static_cast<double>(crop.size());
        double mean = 0.0;
        for (double p : crop) mean += p;
        mean *= inv_n;
        double var = 0.0;
        for (double p : crop) var += (p - mean) * (p - mean);
        var *= inv_n;
        const double stddev = std::sqrt(var);

        for (double p : crop) {
            auto bin = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * 16.0);
            if (bin > 15) bin = 15;
            f[bin] += inv_n;
        }

        // local maxima: strict 8-neighbour peaks above mean + sigma
        const double threshold = mean + stddev;
        double maxima = 0.0;
        for (std::size_t y = 1; y + 1 < side; ++y) {
            for (std::size_t x = 1; x + 1 < side; ++x) {
                const double v = crop[y * side + x];
                if (v <= threshold) continue;
                bool peak = true;
                for (int dy = -1; dy <= 1 && peak; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (crop[(y + dy) * side + (x + dx)] >= v) {
                            peak = false;
                            break;
                        }
                    }
                if (peak) maxima += 1.0;
            }
        }
        f[16] = maxima;

        // central-difference gradient magnitude over interior pixels
        double gsum = 0.0, gsq = 0.0;
        std::size_t gcount = 0;
        for (std::size_t y = 1; y + 1 < side; ++y) {
            for (std::size_t x = 1; x + 1 < side; ++x) {
                const double gx = 0.5 * (crop[y * side + x + 1] - crop[y * side + x - 1]);
                const double gy = 0.5 * (crop[(y + 1) * side + x] - crop[(y - 1) * side + x]);
                const double g = std::sqrt(gx * gx + gy * gy);
                gsum += g;
                gsq += g * g;
                ++gcount;
            }
        }
        if (gcount > 0) {
            const double gmean = gsum / static_cast<double>(gcount);
            f[17] = gmean;
            f[18] = std::sqrt(std::max(0.0, gsq / static_cast<double>(gcount) - gmean * gmean));
        }
        return f;
    }
};

enum class ExtractorKind { TinyConv, Handcrafted };

inline std::string to_string(ExtractorKind k) {
    return k == ExtractorKind::TinyConv ? "tinyconv" : "handcrafted";
}

inline std::size_t feature_dim(ExtractorKind k) {
    return k == ExtractorKind::TinyConv ? TinyConvNet::kM : HandcraftedExtractor::kM;
}

// ---------------------------------------------------------------------------
// Static per-crop regressor: extractor + dense head (m -> 1).
// ---------------------------------------------------------------------------

class StaticModel {
public:
    StaticModel() : StaticModel(ExtractorKind::TinyConv, 50) {}

    StaticModel(ExtractorKind kind, std::size_t window)
        : kind_(kind),
          window_(window),
          head_w_("head.w", {1, feature_dim(kind)}),
          head_b_("head.b", {1}) {}

    void init(Rng& rng) {
        conv_.init(rng);
        head_w_.init_glorot(rng, feature_dim(kind_), 1);
        head_b_.fill(0.0);
    }

    ExtractorKind extractor_kind() const { return kind_; }
    std::size_t window() const { return window_; }
    std::size_t feature_size() const { return feature_dim(kind_); }
    std::string arch() const {
        return kind_ == ExtractorKind::TinyConv ? TinyConvNet::arch() : HandcraftedExtractor::arch();
    }

    const TinyConvNet& conv() const { return conv_; }
    TinyConvNet& conv() { return conv_; }

    /// Trainable parameters; the handcrafted extractor contributes none.
    ParamList params() {
        ParamList list;
        if (kind_ == ExtractorKind::TinyConv) list = conv_.params();
        list.push_back({&head_w_});
        list.push_back({&head_b_});
        return list;
    }

    FeatureVector extract(std::span<const double> crop) const {
        check_side(crop);
        return kind_ == ExtractorKind::TinyConv ? conv_.extract(crop, window_)
                                                : HandcraftedExtractor::extract(crop, window_);
    }

    /// Unclamped per-crop estimate; clamping happens at join time.
    double predict(std::span<const double> crop) const {
        const FeatureVector f = extract(crop);
        double y = 0.0;
        nn::dense_forward(head_w_.value, head_b_.value, f, std::span<double>(&y, 1));
        return y;
    }

    struct Cache {
        TinyConvNet::Cache conv;
        FeatureVector features;
        double pred = 0.0;
    };

    double forward(std::span<const double> crop, Cache& cache) const {
        check_side(crop);
        if (kind_ == ExtractorKind::TinyConv) {
            conv_.forward(crop, window_, cache.conv);
            cache.features = cache.conv.features;
        } else {
            cache.features = HandcraftedExtractor::extract(crop, window_);
        }
        nn::dense_forward(head_w_.value, head_b_.value, cache.features,
                          std::span<double>(&cache.pred, 1));
        return cache.pred;
    }

    void backward(const Cache& cache, double dpred) {
        std::vector<double> dfeat(cache.features.size());
        nn::dense_backward(head_w_.value, cache.features, std::span<const double>(&dpred, 1),
                           head_w_.grad, head_b_.grad, dfeat);
        if (kind_ == ExtractorKind::TinyConv) conv_.backward(cache.conv, dfeat);
    }

private:
    void check_side(std::span<const double> crop) const {
        if (crop.size() != window_ * window_)
            throw std::invalid_argument("StaticModel: crop side does not match configured window");
    }

    ExtractorKind kind_;
    std::size_t window_;
    TinyConvNet conv_;
    Param head_w_, head_b_;
};

}  // namespace lapsecount::feat
