#include <gtest/gtest.h>

#include <vector>

#include "lapsecount/pipeline.hpp"
#include "lapsecount/rng.hpp"
#include "lapsecount/temporal.hpp"

using namespace lapsecount;

namespace {

feat::FeatureVector vec(std::size_t m, double fill) { return feat::FeatureVector(m, fill); }

}  // namespace

TEST(FeatureHistory, AppendAndPrune) {
    timeflow::FeatureHistory h(3);
    EXPECT_TRUE(h.empty());
    h.append(1.0, vec(4, 0.1));
    EXPECT_EQ(h.size(), 1u);

    EXPECT_THROW(h.append(1.0, vec(4, 0.2)), std::invalid_argument);   // equal timestamp
    EXPECT_THROW(h.append(0.5, vec(4, 0.2)), std::invalid_argument);   // going backwards
    EXPECT_THROW(h.append(2.0, vec(5, 0.2)), std::invalid_argument);   // length change

    for (int t = 2; t <= 8; ++t) h.append(static_cast<double>(t), vec(4, 0.1 * t));
    EXPECT_EQ(h.size(), 3u);  // pruned to the retention window
    EXPECT_DOUBLE_EQ(h.last_timestamp(), 8.0);
    EXPECT_DOUBLE_EQ(h.features_from_end(0)[0], 0.8);
    EXPECT_DOUBLE_EQ(h.features_from_end(2)[0], 0.6);
}

TEST(BuildBlock, PaperWorkedExample) {
    // tw = 5 with 3 recorded frames: rows are [ones, ones, f1, f2, f3]
    const std::size_t m = 4;
    timeflow::FeatureHistory h;
    h.append(1.0, vec(m, 0.25));
    h.append(2.0, vec(m, 0.50));
    h.append(3.0, vec(m, 0.75));
    timeflow::TemporalConfig cfg;
    cfg.tw = 5;
    const auto block = timeflow::build_block(h, cfg, m);

    ASSERT_EQ(block.tw, 5u);
    ASSERT_EQ(block.m, m);
    EXPECT_EQ(block.n_real, 3u);
    for (std::size_t t = 0; t < 2; ++t)
        for (double v : block.row(t)) EXPECT_DOUBLE_EQ(v, 1.0);
    for (double v : block.row(2)) EXPECT_DOUBLE_EQ(v, 0.25);
    for (double v : block.row(3)) EXPECT_DOUBLE_EQ(v, 0.50);
    for (double v : block.row(4)) EXPECT_DOUBLE_EQ(v, 0.75);
}

TEST(BuildBlock, EmptyHistoryIsAllOnes) {
    timeflow::FeatureHistory h;
    timeflow::TemporalConfig cfg;
    cfg.tw = 3;
    const auto block = timeflow::build_block(h, cfg, 6);
    EXPECT_EQ(block.n_real, 0u);
    for (double v : block.rows) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(BuildBlock, LongHistoryKeepsMostRecent) {
    const std::size_t m = 2;
    timeflow::FeatureHistory h;
    for (int t = 1; t <= 5; ++t) h.append(static_cast<double>(t), vec(m, static_cast<double>(t)));
    timeflow::TemporalConfig cfg;
    cfg.tw = 3;
    const auto block = timeflow::build_block(h, cfg, m);
    EXPECT_EQ(block.n_real, 3u);
    EXPECT_DOUBLE_EQ(block.row(0)[0], 3.0);
    EXPECT_DOUBLE_EQ(block.row(1)[0], 4.0);
    EXPECT_DOUBLE_EQ(block.row(2)[0], 5.0);
}

TEST(BuildBlock, AlwaysExactlyTwRows) {
    Rng rng(3);
    for (int it = 0; it < 50; ++it) {
        const std::size_t m = 1 + rng.uniform_index(8);
        const std::size_t tw = 1 + rng.uniform_index(10);
        const std::size_t n = rng.uniform_index(15);
        timeflow::FeatureHistory h;
        std::vector<feat::FeatureVector> raw;
        for (std::size_t t = 0; t < n; ++t) {
            feat::FeatureVector v(m);
            for (auto& x : v) x = rng.uniform(-2.0, 2.0);
            raw.push_back(v);
            h.append(static_cast<double>(t + 1), std::move(v));
        }
        timeflow::TemporalConfig cfg;
        cfg.tw = tw;
        const auto block = timeflow::build_block(h, cfg, m);
        ASSERT_EQ(block.rows.size(), tw * m);
        ASSERT_EQ(block.n_real, std::min(n, tw));
        // padding rows are exactly 1.0, real rows are bit-exact copies
        for (std::size_t t = 0; t < tw - block.n_real; ++t)
            for (double v : block.row(t)) ASSERT_DOUBLE_EQ(v, 1.0);
        for (std::size_t k = 0; k < block.n_real; ++k) {
            const auto row = block.row(tw - 1 - k);
            const auto& expect = raw[n - 1 - k];
            for (std::size_t j = 0; j < m; ++j) ASSERT_EQ(row[j], expect[j]);
        }
        if (n >= tw) ASSERT_EQ(block.n_real, tw);  // no padding with a full history
    }
}

TEST(BuildBlock, ConfigurablePaddingValue) {
    timeflow::FeatureHistory h;
    h.append(1.0, vec(3, 0.5));
    timeflow::TemporalConfig cfg;
    cfg.tw = 3;
    cfg.padding_value = 0.0;
    const auto block = timeflow::build_block(h, cfg, 3);
    for (double v : block.row(0)) EXPECT_DOUBLE_EQ(v, 0.0);
    for (double v : block.row(2)) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(BlockFromSeries, MatchesHistoryRoute) {
    Rng rng(7);
    for (int it = 0; it < 30; ++it) {
        const std::size_t m = 1 + rng.uniform_index(6);
        const std::size_t tw = 1 + rng.uniform_index(8);
        const std::size_t n = 1 + rng.uniform_index(12);
        std::vector<feat::FeatureVector> series(n);
        for (auto& v : series) {
            v.resize(m);
            for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        }
        timeflow::TemporalConfig cfg;
        cfg.tw = tw;
        for (std::size_t k = 0; k < n; ++k) {
            timeflow::FeatureHistory h(tw);
            for (std::size_t t = 0; t <= k; ++t) h.append(static_cast<double>(t + 1), series[t]);
            const auto a = timeflow::build_block(h, cfg, m);
            const auto b = pipe::block_from_series(series, k, cfg, m);
            ASSERT_EQ(a.rows, b.rows);
            ASSERT_EQ(a.n_real, b.n_real);
        }
    }
}
