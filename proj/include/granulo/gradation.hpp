#pragma once

#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granulo/particles.hpp"

namespace granulo {

/// Sieve openings in mm, strictly decreasing.
struct SieveSpec {
    std::vector<double> openings_mm{9.5, 4.75, 2.36, 2.0, 0.85, 0.425, 0.25, 0.15, 0.075};

    void validate() const;
};

struct CurvePoint {
    double opening_mm = 0.0;
    double percent_finer = 0.0;
    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Percent finer against opening, ascending by opening (ties allowed for
/// vertical steps), non-decreasing, within [0, 100].
struct GradationCurve {
    std::vector<CurvePoint> points;

    void validate() const;
    friend bool operator==(const GradationCurve&, const GradationCurve&) = default;
};

/// A size and the projected area that weights it.
struct SizedArea {
    double size_mm = 0.0;
    double area_mm2 = 0.0;
};

std::vector<SizedArea> sized_areas(std::span<const Particle> particles);

/// percent_finer(d) = 100 * area(size <= d) / total area, at each opening.
/// Throws EmptySample when there is nothing to weigh.
GradationCurve build_curve(std::span<const SizedArea> items, const SieveSpec& sieves = {});
GradationCurve build_curve(std::span<const Particle> particles, const SieveSpec& sieves = {});

/// Cumulative curve stepping at every distinct size (two points per size),
/// i.e. the curve an infinitely fine sieve stack would give.
GradationCurve empirical_curve(std::span<const SizedArea> items);

struct GradationIndices {
    std::optional<double> d10_mm;
    std::optional<double> d30_mm;
    std::optional<double> d60_mm;
    std::optional<double> cu;
    std::optional<double> cc;
};

/// Opening at which the curve reaches `percent`, interpolated linearly in
/// log10(opening). Absent outside the curve's span.
std::optional<double> diameter_at(const GradationCurve& curve, double percent);
GradationIndices indices(const GradationCurve& curve);

/// Mean absolute percentage error over the openings both curves share,
/// skipping openings where the reference is 0.
/// Throws NoSharedSieves or AllReferenceZero.
double mape(const GradationCurve& measured, const GradationCurve& reference);

/// mape() restricted to shared openings in [lo_mm, hi_mm].
double band_mape(const GradationCurve& measured, const GradationCurve& reference, double lo_mm, double hi_mm);

double round_significant(double value, int digits);
GradationCurve round_curve(const GradationCurve& curve, int digits);

/// Reads `sieve_mm,percent_finer` CSV; any row order, normalized to ascending.
/// Throws ParseError.
GradationCurve parse_reference_csv(std::istream& in);
GradationCurve load_reference_csv(const std::string& path);

struct SweepRow {
    int block_size = 0;
    double c = 0.0;
    std::optional<double> mape;
};

struct SweepResult {
    std::vector<SweepRow> rows;           ///< ordered by (block, c)
    std::optional<std::size_t> argmin;    ///< first row with the lowest MAPE
};

struct SweepOptions {
    /// When > 0, measured curves are rounded to this many significant digits
    /// before comparison (the precision reports are written with).
    int curve_digits = 0;
    /// 0 uses the hardware concurrency.
    unsigned threads = 0;
};

/// Runs the measurement for every (block, c) pair and scores its curve
/// against `reference`. Cells whose pipeline fails get an empty mape.
SweepResult sweep(const GrayImage& img, const CalibrationResult& calib, const PipelineParams& base,
                  std::span<const int> blocks, std::span<const double> cs, const GradationCurve& reference,
                  const SieveSpec& sieves = {}, const SweepOptions& options = {});

}  // namespace granulo
