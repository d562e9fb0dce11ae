#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lapsecount/image.hpp"
#include "lapsecount/partition.hpp"
#include "lapsecount/rng.hpp"

namespace lapsecount::sim {

/// Exponential proliferation N_t = n0 * 2^(t f).
struct ProliferationParams {
    double n0 = 6.0;               // initial cell count
    double cycle_frequency = 1.0 / 12.0;  // cell cycles per hour

    void validate() const {
        if (n0 < 0.0 || cycle_frequency < 0.0)
            throw std::invalid_argument("proliferation: n0 and cycle_frequency must be >= 0");
    }
};

inline double expected_population(const ProliferationParams& p, double t_hours) {
    if (t_hours < 0.0) throw std::invalid_argument("expected_population: t must be >= 0");
    return p.n0 * std::exp2(t_hours * p.cycle_frequency);
}

/// One cell. `phase` is division-cycle progress in [0, 1); the rendered
/// morphology is a deterministic function of it: round, then elongating,
/// then a pinched dumbbell just before the split.
struct CellState {
    std::uint64_t id = 0;
    double x = 0.0;
    double y = 0.0;
    double radius = 4.0;
    double phase = 0.0;
    double orientation = 0.0;  // radians
};

struct DebrisSpot {
    double x = 0.0;
    double y = 0.0;
    double radius = 2.0;
    double intensity = 0.0;  // signed; negative spots mimic dead cells
};

struct Background {
    double base = 0.40;
    double grad_x = 0.0;  // intensity change across the full width
    double grad_y = 0.0;
    std::vector<DebrisSpot> debris;
    double noise_amp = 0.02;
};

struct SimConfig {
    std::size_t width = 256;
    std::size_t height = 256;
    double duration_h = 40.0;
    double sampling_interval_h = 1.0;
    ProliferationParams proliferation{};

    double noise_amp = 0.02;        // per-pixel additive noise sigma
    double illumination_amp = 0.08; // gradient magnitude across the frame
    double debris_amp = 0.18;       // debris spot intensity scale
    double debris_per_kpx = 0.25;   // expected spots per 1000 pixels

    double cell_radius = 4.0;       // nominal blob radius (px)
    double radius_jitter = 0.12;    // relative spread of per-cell radius
    double cell_brightness = 0.42;
    double drift_px = 0.5;          // random-walk sigma per sqrt(hour)
    double phase_jitter_rel = 0.05; // relative jitter on phase increments

    // morphology thresholds (cycle fractions)
    double elongate_threshold = 0.6;
    double pinch_threshold = 0.9;

    std::size_t division_cap = 100000;  // populations at the cap stop dividing
    std::uint64_t seed = 1;

    void validate() const {
        proliferation.validate();
        if (width == 0 || height == 0) throw std::invalid_argument("sim: empty frame");
        if (sampling_interval_h <= 0.0)
            throw std::invalid_argument("sim: sampling_interval must be > 0");
        if (duration_h < sampling_interval_h)
            throw std::invalid_argument("sim: duration must be >= sampling_interval");
    }
};

/// Mutable culture state. All randomness flows through `rng`, which was
/// seeded from SimConfig::seed at creation.
struct CultureScene {
    std::vector<CellState> cells;
    double clock = 0.0;  // hours since start
    Rng rng{0};
    Background background;
    std::uint64_t next_id = 0;
    bool saturated = false;

    std::size_t population() const { return cells.size(); }
};

/// One timestamped frame with its ground-truth dot annotations.
struct Frame {
    GrayImage image;
    double timestamp_h = 0.0;
    std::vector<grid::Dot> dots;
};

namespace detail {

/// Initial phases are drawn with CDF F(v) = 2 - 2^(1-v) so that the mean of
/// the per-lineage doubling staircase equals the closed-form curve at every
/// t, not just at whole cycle counts.
inline double sample_initial_phase(Rng& rng) {
    return 1.0 - std::log2(2.0 - rng.uniform());
}

inline double cell_amp_factor(std::uint64_t id) {
    // stable per-cell brightness in [0.9, 1.1]
    const std::uint64_t h = mix_seed(id, 0x5eedf00d);
    return 0.9 + 0.2 * static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::uint64_t clock_hash(std::uint64_t seed, double clock) {
    return mix_seed(seed, std::bit_cast<std::uint64_t>(clock));
}

}  // namespace detail

inline CultureScene make_scene(const SimConfig& cfg) {
    cfg.validate();
    CultureScene scene;
    scene.rng = Rng(cfg.seed);
    scene.clock = 0.0;

    Rng bg_rng = scene.rng.derive(0xb6);
    const double angle = bg_rng.uniform(0.0, 6.283185307179586);
    scene.background.base = 0.38 + 0.06 * bg_rng.uniform();
    scene.background.grad_x = cfg.illumination_amp * std::cos(angle);
    scene.background.grad_y = cfg.illumination_amp * std::sin(angle);
    scene.background.noise_amp = cfg.noise_amp;

    const double area_kpx = static_cast<double>(cfg.width * cfg.height) / 1000.0;
    const std::size_t n_debris =
        static_cast<std::size_t>(std::floor(cfg.debris_per_kpx * area_kpx + bg_rng.uniform()));
    for (std::size_t i = 0; i < n_debris; ++i) {
        DebrisSpot spot;
        spot.x = bg_rng.uniform(0.0, static_cast<double>(cfg.width));
        spot.y = bg_rng.uniform(0.0, static_cast<double>(cfg.height));
        spot.radius = 1.0 + 2.5 * bg_rng.uniform();
        // mostly dark specks (dead cells, dust), occasionally bright
        const double sign = bg_rng.uniform() < 0.7 ? -1.0 : 1.0;
        spot.intensity = sign * cfg.debris_amp * (0.4 + 0.6 * bg_rng.uniform());
        scene.background.debris.push_back(spot);
    }

    const std::size_t n0 = static_cast<std::size_t>(std::llround(cfg.proliferation.n0));
    const double margin = 2.0 * cfg.cell_radius + 2.0;
    for (std::size_t i = 0; i < n0; ++i) {
        CellState c;
        c.id = scene.next_id++;
        c.x = scene.rng.uniform(margin, static_cast<double>(cfg.width) - margin);
        c.y = scene.rng.uniform(margin, static_cast<double>(cfg.height) - margin);
        c.radius = cfg.cell_radius * (1.0 + cfg.radius_jitter * (2.0 * scene.rng.uniform() - 1.0));
        c.phase = detail::sample_initial_phase(scene.rng);
        c.orientation = scene.rng.uniform(0.0, 6.283185307179586);
        scene.cells.push_back(c);
    }
    return scene;
}

/// Advances the culture by dt hours: phase progression with jitter, random
/// drift, and division when a cell's phase crosses 1. The parent id retires
/// and two daughters appear at +/- radius along the orientation axis.
/// Populations at the division cap stop dividing and flag saturation.
inline void advance_culture(CultureScene& scene, const SimConfig& cfg, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("advance_culture: dt must be > 0");
    scene.clock += dt;
    const double f = cfg.proliferation.cycle_frequency;
    const double drift = cfg.drift_px * std::sqrt(dt);

    std::vector<CellState> next;
    next.reserve(scene.cells.size() + 4);
    std::size_t live = scene.cells.size();

    for (CellState cell : scene.cells) {
        const double jitter = 1.0 + cfg.phase_jitter_rel * scene.rng.normal();
        cell.phase += dt * f * std::max(0.0, jitter);

        cell.x += drift * scene.rng.normal();
        cell.y += drift * scene.rng.normal();
        const double m = std::max(1.0, cell.radius);
        cell.x = std::clamp(cell.x, m, static_cast<double>(cfg.width) - 1.0 - m);
        cell.y = std::clamp(cell.y, m, static_cast<double>(cfg.height) - 1.0 - m);

        if (cell.phase < 1.0) {
            next.push_back(cell);
            continue;
        }
        if (live >= cfg.division_cap) {
            cell.phase = std::nextafter(1.0, 0.0);  // hold just below the crossing
            scene.saturated = true;
            next.push_back(cell);
            continue;
        }

        const double ux = std::cos(cell.orientation), uy = std::sin(cell.orientation);
        const double leftover = std::min(cell.phase - 1.0, 0.2);
        for (int d = 0; d < 2; ++d) {
            CellState daughter;
            daughter.id = scene.next_id++;
            const double s = d == 0 ? 1.0 : -1.0;
            daughter.x = cell.x + s * cell.radius * ux;
            daughter.y = cell.y + s * cell.radius * uy;
            daughter.x = std::clamp(daughter.x, m, static_cast<double>(cfg.width) - 1.0 - m);
            daughter.y = std::clamp(daughter.y, m, static_cast<double>(cfg.height) - 1.0 - m);
            daughter.radius =
                cell.radius * (1.0 + 0.5 * cfg.radius_jitter * (2.0 * scene.rng.uniform() - 1.0));
            daughter.phase = leftover;
            daughter.orientation = cell.orientation + scene.rng.normal(0.0, 0.6);
            next.push_back(daughter);
        }
        live += 1;
    }
    scene.cells = std::move(next);
}

namespace detail {

/// Anisotropic bright blob with a dark halo ring, phase-contrast style.
inline void splat_cell(GrayImage& img, double cx, double cy, double sigma_u, double sigma_v,
                       double ux, double uy, double amp) {
    const double halo_frac = 0.42, halo_scale = 1.9;
    const double reach = 3.2 * halo_scale * std::max(sigma_u, sigma_v);
    const long x0 = std::max(0L, static_cast<long>(std::floor(cx - reach)));
    const long x1 = std::min(static_cast<long>(img.width) - 1, static_cast<long>(std::ceil(cx + reach)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(cy - reach)));
    const long y1 = std::min(static_cast<long>(img.height) - 1, static_cast<long>(std::ceil(cy + reach)));
    const double inv_u2 = 1.0 / (2.0 * sigma_u * sigma_u);
    const double inv_v2 = 1.0 / (2.0 * sigma_v * sigma_v);
    const double hs2 = halo_scale * halo_scale;
    for (long py = y0; py <= y1; ++py) {
        for (long px = x0; px <= x1; ++px) {
            const double dx = static_cast<double>(px) - cx;
            const double dy = static_cast<double>(py) - cy;
            const double du = dx * ux + dy * uy;
            const double dv = -dx * uy + dy * ux;
            const double q = du * du * inv_u2 + dv * dv * inv_v2;
            const double value = amp * (std::exp(-q) - halo_frac * std::exp(-q / hs2));
            img.pixels[static_cast<std::size_t>(py) * img.width + static_cast<std::size_t>(px)] +=
                value;
        }
    }
}

}  // namespace detail

/// Pure render of the current scene: background gradient + debris + one blob
/// per cell (morphology driven by phase) + seeded zero-mean noise, clamped
/// to [0, 1]. Annotations are the live cell centers.
inline Frame render_frame(const CultureScene& scene, const SimConfig& cfg) {
    Frame frame;
    frame.timestamp_h = scene.clock;
    frame.image = GrayImage(cfg.width, cfg.height);
    GrayImage& img = frame.image;

    const Background& bg = scene.background;
    for (std::size_t y = 0; y < cfg.height; ++y) {
        const double fy = static_cast<double>(y) / static_cast<double>(cfg.height) - 0.5;
        for (std::size_t x = 0; x < cfg.width; ++x) {
            const double fx = static_cast<double>(x) / static_cast<double>(cfg.width) - 0.5;
            img.pixels[y * cfg.width + x] = bg.base + bg.grad_x * fx + bg.grad_y * fy;
        }
    }
    for (const auto& spot : bg.debris) {
        const double s = 0.6 * spot.radius;
        detail::splat_cell(img, spot.x, spot.y, s, s, 1.0, 0.0, spot.intensity);
    }

    for (const auto& cell : scene.cells) {
        const double amp = cfg.cell_brightness * detail::cell_amp_factor(cell.id);
        const double r_eff = cell.radius * (0.85 + 0.3 * std::min(cell.phase, 1.0));
        const double sigma = 0.55 * r_eff;
        const double ux = std::cos(cell.orientation), uy = std::sin(cell.orientation);

        if (cell.phase < cfg.elongate_threshold) {
            detail::splat_cell(img, cell.x, cell.y, sigma, sigma, 1.0, 0.0, amp);
        } else if (cell.phase < cfg.pinch_threshold) {
            const double span = cfg.pinch_threshold - cfg.elongate_threshold;
            const double aspect = 1.0 + (cell.phase - cfg.elongate_threshold) / span;
            detail::splat_cell(img, cell.x, cell.y, sigma * aspect, sigma / std::sqrt(aspect), ux,
                               uy, amp);
        } else {
            // pinched dumbbell: two lobes separating toward the daughter layout
            const double u =
                std::min(1.0, (cell.phase - cfg.pinch_threshold) / (1.0 - cfg.pinch_threshold));
            const double offset = (0.25 + 0.75 * u) * cell.radius;
            const double lobe_sigma = 0.55 * cell.radius * 0.85;
            detail::splat_cell(img, cell.x + offset * ux, cell.y + offset * uy, lobe_sigma,
                               lobe_sigma, 1.0, 0.0, amp);
            detail::splat_cell(img, cell.x - offset * ux, cell.y - offset * uy, lobe_sigma,
                               lobe_sigma, 1.0, 0.0, amp);
        }
        frame.dots.push_back(grid::Dot{cell.x, cell.y});
    }

    if (bg.noise_amp > 0.0) {
        Rng noise(detail::clock_hash(cfg.seed, scene.clock));
        for (auto& p : img.pixels) p += noise.normal(0.0, bg.noise_amp);
    }
    img.clamp01();
    return frame;
}

}  // namespace lapsecount::sim
