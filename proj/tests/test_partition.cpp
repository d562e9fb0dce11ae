#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "lapsecount/partition.hpp"
#include "lapsecount/rng.hpp"

using namespace lapsecount;
using grid::CropRef;
using grid::Dot;
using grid::PartitionConfig;

namespace {

// Brute-force offset enumeration, independent of the production path: walk
// every pixel offset and keep those on the stride grid (plus flush offsets).
std::set<std::pair<std::size_t, std::size_t>> brute_force_offsets(std::size_t W, std::size_t H,
                                                                  const PartitionConfig& cfg) {
    std::set<std::size_t> xs, ys;
    for (std::size_t o = 0; o + cfg.window <= W; ++o)
        if (o % cfg.step == 0) xs.insert(o);
    for (std::size_t o = 0; o + cfg.window <= H; ++o)
        if (o % cfg.step == 0) ys.insert(o);
    if (cfg.flush_edges) {
        xs.insert(W - cfg.window);
        ys.insert(H - cfg.window);
    }
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (auto y : ys)
        for (auto x : xs) out.insert({x, y});
    return out;
}

std::size_t brute_force_coverage(std::size_t px, std::size_t py,
                                 const std::vector<CropRef>& crops) {
    std::size_t n = 0;
    for (const auto& c : crops)
        if (px >= c.x && px < c.x + c.window && py >= c.y && py < c.y + c.window) ++n;
    return n;
}

}  // namespace

TEST(EnumerateCrops, PaperConfigurationGives2160) {
    PartitionConfig cfg{50, 25, false};
    const auto crops = grid::enumerate_crops(1392, 1040, cfg);
    EXPECT_EQ(crops.size(), 2160u);  // 54 x 40
}

TEST(EnumerateCrops, SingleWindowFrame) {
    for (std::size_t step : {1u, 10u, 50u}) {
        PartitionConfig cfg{50, step, false};
        const auto crops = grid::enumerate_crops(50, 50, cfg);
        ASSERT_EQ(crops.size(), 1u);
        EXPECT_EQ(crops[0].x, 0u);
        EXPECT_EQ(crops[0].y, 0u);
    }
}

TEST(EnumerateCrops, FlushAddsBorderWindow) {
    PartitionConfig cfg{50, 25, true};
    const auto crops = grid::enumerate_crops(60, 50, cfg);
    ASSERT_EQ(crops.size(), 2u);
    EXPECT_EQ(crops[0].x, 0u);
    EXPECT_EQ(crops[1].x, 10u);
}

TEST(EnumerateCrops, WindowLargerThanFrameRejected) {
    PartitionConfig cfg{50, 25, false};
    EXPECT_THROW(grid::enumerate_crops(40, 100, cfg), std::invalid_argument);
    EXPECT_THROW(grid::enumerate_crops(100, 40, cfg), std::invalid_argument);
}

TEST(EnumerateCrops, MatchesBruteForceOnRandomInstances) {
    Rng rng(41);
    for (int it = 0; it < 100; ++it) {
        const std::size_t w = 2 + rng.uniform_index(30);
        const std::size_t s = 1 + rng.uniform_index(w);
        const std::size_t W = w + rng.uniform_index(80);
        const std::size_t H = w + rng.uniform_index(80);
        PartitionConfig cfg{w, s, rng.uniform() < 0.5};

        const auto crops = grid::enumerate_crops(W, H, cfg);
        std::set<std::pair<std::size_t, std::size_t>> got;
        for (const auto& c : crops) {
            EXPECT_LE(c.x + c.window, W);
            EXPECT_LE(c.y + c.window, H);
            got.insert({c.x, c.y});
        }
        EXPECT_EQ(got.size(), crops.size()) << "duplicate crops";
        EXPECT_EQ(got, brute_force_offsets(W, H, cfg))
            << "W=" << W << " H=" << H << " w=" << w << " s=" << s << " flush="
            << cfg.flush_edges;
    }
}

TEST(LabelCrop, HalfOpenMembership) {
    CropRef crop{0, 10, 20, 50};
    EXPECT_EQ(grid::label_crop(crop, std::vector<Dot>{{10.0, 20.0}}).count, 1.0);
    EXPECT_EQ(grid::label_crop(crop, std::vector<Dot>{{60.0, 20.0}}).count, 0.0);
    EXPECT_EQ(grid::label_crop(crop, std::vector<Dot>{{59.999, 69.999}}).count, 1.0);
    EXPECT_EQ(grid::label_crop(crop, std::vector<Dot>{{10.0, 70.0}}).count, 0.0);
}

TEST(LabelCrop, DisjointTilingPartitionsDots) {
    Rng rng(43);
    const std::size_t W = 200, H = 150, w = 50;
    std::vector<Dot> dots;
    for (int i = 0; i < 30; ++i)
        dots.push_back({rng.uniform(0.0, static_cast<double>(W)),
                        rng.uniform(0.0, static_cast<double>(H))});
    PartitionConfig cfg{w, w, false};  // disjoint tiling covering the frame
    const auto crops = grid::enumerate_crops(W, H, cfg);
    double total = 0.0;
    for (const auto& c : crops) total += grid::label_crop(c, dots).count;
    EXPECT_DOUBLE_EQ(total, 30.0);
}

TEST(CoverageMap, InteriorRedundancyAndCorners) {
    PartitionConfig cfg{50, 25, false};
    const auto cov = grid::coverage_map(200, 150, cfg);
    EXPECT_EQ(cov.at(0, 0), 1u);
    EXPECT_EQ(cov.at(100, 75), 4u);  // (w/s)^2 interior
    EXPECT_EQ(cov.at(30, 30), 2u);   // one border band
}

TEST(CoverageMap, DisjointTilingIsUniformOne) {
    PartitionConfig cfg{50, 50, false};
    const auto cov = grid::coverage_map(150, 100, cfg);
    for (auto v : cov.multiplicity) EXPECT_EQ(v, 1u);
}

TEST(CoverageMap, MatchesBruteForceAndSumRule) {
    Rng rng(47);
    for (int it = 0; it < 20; ++it) {
        const std::size_t w = 3 + rng.uniform_index(12);
        const std::size_t s = 1 + rng.uniform_index(w);
        const std::size_t W = w + rng.uniform_index(30);
        const std::size_t H = w + rng.uniform_index(30);
        PartitionConfig cfg{w, s, rng.uniform() < 0.5};
        const auto cov = grid::coverage_map(W, H, cfg);
        const auto crops = grid::enumerate_crops(W, H, cfg);

        std::size_t total = 0;
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                EXPECT_EQ(cov.at(x, y), brute_force_coverage(x, y, crops));
                total += cov.at(x, y);
            }
        EXPECT_EQ(total, crops.size() * w * w);  // sum rule
        if (cfg.flush_edges)
            for (auto v : cov.multiplicity) EXPECT_GE(v, 1u);
    }
}

TEST(JoinCounts, SingleCropPassesThrough) {
    PartitionConfig cfg{50, 25, false};
    const std::vector<double> est{7.0};
    for (auto method :
         {grid::JoinMethod::OverlapAveragedDensity, grid::JoinMethod::SimpleNormalizedSum})
        EXPECT_NEAR(grid::join_counts(est, cfg, 50, 50, method), 7.0, 1e-12);
}

TEST(JoinCounts, AllZeroGivesZero) {
    PartitionConfig cfg{50, 25, true};
    const auto crops = grid::enumerate_crops(120, 90, cfg);
    const std::vector<double> est(crops.size(), 0.0);
    for (auto method :
         {grid::JoinMethod::OverlapAveragedDensity, grid::JoinMethod::SimpleNormalizedSum})
        EXPECT_DOUBLE_EQ(grid::join_counts(est, cfg, 120, 90, method), 0.0);
}

TEST(JoinCounts, MismatchedEstimateSetRejected) {
    PartitionConfig cfg{50, 25, false};
    std::vector<double> est(3, 1.0);
    EXPECT_THROW(grid::join_counts(est, cfg, 200, 150, grid::JoinMethod::OverlapAveragedDensity),
                 std::invalid_argument);
}

namespace {

// Oracle-estimate join instance: s = w/2, (L - w) divisible by s, dots at
// least w px away from every border. Returns (true_total, joined values).
void exact_recovery_case(Rng& rng, grid::JoinMethod method) {
    const std::size_t w = 2 * (2 + rng.uniform_index(10));        // even window
    const std::size_t s = w / 2;
    const std::size_t W = w + s * (3 + rng.uniform_index(8));     // s | (W - w), W > 2w
    const std::size_t H = w + s * (3 + rng.uniform_index(8));
    PartitionConfig cfg{w, s, rng.uniform() < 0.5};               // flush is a no-op here

    std::vector<Dot> dots;
    const std::size_t n_dots = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n_dots; ++i)
        dots.push_back({rng.uniform(static_cast<double>(w), static_cast<double>(W - w)),
                        rng.uniform(static_cast<double>(w), static_cast<double>(H - w))});

    const auto crops = grid::enumerate_crops(W, H, cfg);
    std::vector<double> est(crops.size());
    for (std::size_t i = 0; i < crops.size(); ++i)
        est[i] = grid::label_crop(crops[i], dots).count;

    const double joined = grid::join_counts(est, cfg, W, H, method);
    EXPECT_NEAR(joined, static_cast<double>(n_dots), 1e-9)
        << "W=" << W << " H=" << H << " w=" << w;
}

}  // namespace

TEST(JoinCounts, ExactRecoveryOverlapAveragedDensity) {
    Rng rng(53);
    for (int it = 0; it < 50; ++it) exact_recovery_case(rng, grid::JoinMethod::OverlapAveragedDensity);
}

TEST(JoinCounts, ExactRecoverySimpleNormalizedSum) {
    Rng rng(59);
    for (int it = 0; it < 50; ++it) exact_recovery_case(rng, grid::JoinMethod::SimpleNormalizedSum);
}

TEST(JoinCounts, LinearInEstimates) {
    Rng rng(61);
    PartitionConfig cfg{20, 10, true};
    const std::size_t W = 70, H = 50;
    const auto crops = grid::enumerate_crops(W, H, cfg);
    std::vector<double> e1(crops.size()), e2(crops.size());
    for (auto& v : e1) v = rng.uniform(0.0, 3.0);
    for (auto& v : e2) v = rng.uniform(0.0, 3.0);
    const double a = 0.7, b = 1.9;
    std::vector<double> mix(crops.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * e1[i] + b * e2[i];
    for (auto method :
         {grid::JoinMethod::OverlapAveragedDensity, grid::JoinMethod::SimpleNormalizedSum}) {
        const double lhs = grid::join_counts(mix, cfg, W, H, method);
        const double rhs = a * grid::join_counts(e1, cfg, W, H, method) +
                           b * grid::join_counts(e2, cfg, W, H, method);
        EXPECT_NEAR(lhs, rhs, 1e-9);
    }
}

TEST(JoinCounts, NegativeEstimatesClampToZero) {
    PartitionConfig cfg{50, 50, false};
    const auto crops = grid::enumerate_crops(100, 50, cfg);
    ASSERT_EQ(crops.size(), 2u);
    const std::vector<double> est{-5.0, 3.0};
    const double joined =
        grid::join_counts(est, cfg, 100, 50, grid::JoinMethod::OverlapAveragedDensity);
    EXPECT_NEAR(joined, 3.0, 1e-12);
    EXPECT_GE(joined, 0.0);
}
