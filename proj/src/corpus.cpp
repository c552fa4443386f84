#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "granulo/gradation.hpp"
#include "granulo/particles.hpp"
#include "granulo/synth.hpp"

namespace granulo {

namespace {

constexpr double kPixelPerMm = 14.2;

// Grain tones against the 235 paper. With the default blur and threshold the
// cut falls inside the blurred edge for local means between ~205 and ~233,
// i.e. from isolated grains to grains crowded by large neighbours.
constexpr int kToneLo = 45;
constexpr int kToneHi = 75;

// Keep grains farther from the marker than half the default block, so the
// marker never enters the default neighbourhood of a grain.
constexpr double kMarkerKeepout = 160.0;

struct Region {
    double x0, y0, x1, y1;
};

struct Layout {
    Region region;
    double gap_px;
};

/// True when `size_mm` is farther from every class boundary than the
/// per-grain size tolerance at `density` px/mm. Boundaries are the default
/// sieve openings plus the diameter of a disk at the default area floor.
/// Grains inside such a band have no well-defined class at the measurement
/// resolution, so the truth curve would hinge on sub-tolerance noise.
bool clear_of_openings(double size_mm, double density) {
    std::vector<double> bounds = SieveSpec{}.openings_mm;
    bounds.push_back(std::sqrt(4.0 * PipelineParams{}.min_area_mm2 / std::numbers::pi));
    for (double o : bounds) {
        const double band = std::max(2.0 / density, 0.03 * o);
        if (std::abs(size_mm - o) < band) return false;
    }
    return true;
}

double draw_size(std::mt19937_64& rng, double lo, double hi, double density) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (;;) {
        const double d = std::round(u(rng) * 1e4) / 1e4;
        if (clear_of_openings(d, density)) return d;
    }
}

/// Rejection-samples non-overlapping centers for circles of the given radii
/// (largest first), keeping `gap_px` between circles and the keepout from
/// the marker's bounding box.
std::vector<PointD> place(std::mt19937_64& rng, const std::vector<double>& radii, const Layout& layout,
                          const std::array<PointD, 4>& marker) {
    double mx0 = 1e300, my0 = 1e300, mx1 = -1e300, my1 = -1e300;
    for (const PointD& c : marker) {
        mx0 = std::min(mx0, c.x); my0 = std::min(my0, c.y);
        mx1 = std::max(mx1, c.x); my1 = std::max(my1, c.y);
    }
    std::vector<std::size_t> order(radii.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return radii[a] > radii[b]; });

    std::vector<PointD> centers(radii.size());
    std::vector<std::size_t> placed;
    for (std::size_t k : order) {
        const double r = radii[k];
        std::uniform_real_distribution<double> ux(layout.region.x0 + r, layout.region.x1 - r);
        std::uniform_real_distribution<double> uy(layout.region.y0 + r, layout.region.y1 - r);
        bool ok = false;
        for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
            const PointD c{std::round(ux(rng) * 4.0) / 4.0, std::round(uy(rng) * 4.0) / 4.0};
            const double dx = std::max({mx0 - c.x, 0.0, c.x - mx1});
            const double dy = std::max({my0 - c.y, 0.0, c.y - my1});
            if (std::hypot(dx, dy) < r + kMarkerKeepout) continue;
            ok = std::all_of(placed.begin(), placed.end(), [&](std::size_t j) {
                return std::hypot(c.x - centers[j].x, c.y - centers[j].y) >= r + radii[j] + layout.gap_px;
            });
            if (ok) centers[k] = c;
        }
        if (!ok) throw Error("corpus layout: could not place all shapes");
        placed.push_back(k);
    }
    return centers;
}

SceneSpec base_scene(std::uint64_t seed, int salt) {
    SceneSpec spec;
    spec.width_px = 3024;
    spec.height_px = 4032;
    spec.pixel_per_mm = kPixelPerMm;
    spec.noise_sigma = 5.0;
    spec.seed = seed * 1000 + static_cast<std::uint64_t>(salt);
    MarkerSpec m;
    m.id = static_cast<int>(seed % 10);
    m.side_px = 20.0 * spec.pixel_per_mm;
    m.top_left = PointD{400.0, 400.0};
    spec.marker = m;
    return spec;
}

CorpusScene finish(const std::string& name, SceneSpec spec, std::mt19937_64& rng, const std::vector<double>& radii,
                   const Layout& layout) {
    const auto centers = place(rng, radii, layout, marker_corners(*spec.marker));
    for (std::size_t i = 0; i < centers.size(); ++i) spec.shapes[i].center = centers[i];
    GroundTruth truth = ground_truth(spec);
    return CorpusScene{name, std::move(spec), std::move(truth)};
}

// `density` is the finest px/mm the scene is meant to be measured at.
CorpusScene disks(std::uint64_t seed, int salt, const std::string& name, double lo_mm, double hi_mm, double density,
                  const Layout& layout) {
    SceneSpec spec = base_scene(seed, salt);
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> tone(kToneLo, kToneHi);
    std::vector<double> radii;
    for (int i = 0; i < 30; ++i) {
        ShapeSpec s;
        s.kind = ShapeKind::disk;
        s.diameter_mm = draw_size(rng, lo_mm, hi_mm, density);
        s.intensity = tone(rng);
        spec.shapes.push_back(s);
        radii.push_back(s.diameter_mm * spec.pixel_per_mm / 2.0);
    }
    return finish(name, std::move(spec), rng, radii, layout);
}

CorpusScene ellipses(std::uint64_t seed, int salt, const Layout& layout) {
    SceneSpec spec = base_scene(seed, salt);
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> major(2.5, 9.5);
    std::uniform_real_distribution<double> ratio(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 180.0);
    std::uniform_int_distribution<int> tone(kToneLo, kToneHi);
    std::vector<double> radii;
    while (spec.shapes.size() < 20) {
        ShapeSpec s;
        s.kind = ShapeKind::ellipse;
        s.major_mm = std::round(major(rng) * 1e4) / 1e4;
        const double lo = std::max(2.0, 0.5 * s.major_mm);
        s.minor_mm = std::round((lo + ratio(rng) * (s.major_mm - lo)) * 1e4) / 1e4;
        s.angle_deg = std::round(angle(rng) * 100.0) / 100.0;
        s.intensity = tone(rng);
        if (!clear_of_openings((s.major_mm + s.minor_mm) / 2.0, kPixelPerMm)) continue;
        spec.shapes.push_back(s);
        radii.push_back(s.major_mm * spec.pixel_per_mm / 2.0);
    }
    return finish("mixed", std::move(spec), rng, radii, layout);
}

}  // namespace

std::vector<CorpusScene> standard_corpus(std::uint64_t seed) {
    const Layout pile{Region{300, 300, 2100, 2500}, 8.0};
    std::vector<CorpusScene> out;
    out.push_back(disks(seed, 1, "coarse", 2.0, 9.5, kPixelPerMm, pile));
    // The fine scene is also rendered at 4x density, so its sizes keep clear
    // of the openings at that resolution.
    out.push_back(disks(seed, 2, "fine", 0.1, 0.425, 4.0 * kPixelPerMm, Layout{Region{300, 860, 900, 1260}, 6.0}));
    out.push_back(ellipses(seed, 3, pile));
    return out;
}

}  // namespace granulo
