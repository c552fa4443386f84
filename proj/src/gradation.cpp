#include "granulo/gradation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace granulo {

namespace {

bool same_opening(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, int line) {
    const std::string t = trim(field);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (t.empty() || used != t.size() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line) + ": '" + t + "' is not a number");
    }
    return v;
}

/// Error terms at shared openings in [lo, hi]; returns {sum of relative
/// errors, count, shared}.
struct ErrorTally {
    double sum = 0.0;
    int count = 0;
    int shared = 0;
};

ErrorTally tally(const GradationCurve& measured, const GradationCurve& reference, double lo, double hi) {
    ErrorTally t;
    for (const CurvePoint& r : reference.points) {
        if (r.opening_mm < lo && !same_opening(r.opening_mm, lo)) continue;
        if (r.opening_mm > hi && !same_opening(r.opening_mm, hi)) continue;
        const auto m = std::find_if(measured.points.begin(), measured.points.end(),
                                    [&](const CurvePoint& p) { return same_opening(p.opening_mm, r.opening_mm); });
        if (m == measured.points.end()) continue;
        ++t.shared;
        if (r.percent_finer > 0.0) {
            t.sum += std::abs(m->percent_finer - r.percent_finer) / r.percent_finer;
            ++t.count;
        }
    }
    return t;
}

}  // namespace

void SieveSpec::validate() const {
    if (openings_mm.empty()) {
        throw InvalidArgument("sieve stack is empty");
    }
    for (std::size_t i = 0; i < openings_mm.size(); ++i) {
        if (!(openings_mm[i] > 0.0) || !std::isfinite(openings_mm[i])) {
            throw InvalidArgument("sieve openings must be positive");
        }
        if (i > 0 && !(openings_mm[i] < openings_mm[i - 1])) {
            throw InvalidArgument("sieve openings must be strictly decreasing");
        }
    }
}

void GradationCurve::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const CurvePoint& p = points[i];
        if (!(p.opening_mm > 0.0) || p.percent_finer < 0.0 || p.percent_finer > 100.0) {
            throw InvalidArgument("gradation point out of range");
        }
        if (i > 0 && (p.opening_mm < points[i - 1].opening_mm || p.percent_finer < points[i - 1].percent_finer)) {
            throw InvalidArgument("gradation curve must be ascending and non-decreasing");
        }
    }
}

std::vector<SizedArea> sized_areas(std::span<const Particle> particles) {
    std::vector<SizedArea> out;
    out.reserve(particles.size());
    for (const Particle& p : particles) out.push_back(SizedArea{p.size_mm, p.area_mm2});
    return out;
}

GradationCurve build_curve(std::span<const SizedArea> items, const SieveSpec& sieves) {
    sieves.validate();
    // Sum in a fixed order so the result does not depend on input order.
    std::vector<SizedArea> sorted(items.begin(), items.end());
    std::sort(sorted.begin(), sorted.end(), [](const SizedArea& a, const SizedArea& b) {
        return a.size_mm < b.size_mm || (a.size_mm == b.size_mm && a.area_mm2 < b.area_mm2);
    });
    double total = 0.0;
    for (const SizedArea& s : sorted) total += s.area_mm2;
    if (sorted.empty() || !(total > 0.0)) {
        throw EmptySample("no particle area to build a gradation curve from");
    }
    GradationCurve curve;
    std::vector<double> openings(sieves.openings_mm.rbegin(), sieves.openings_mm.rend());
    std::size_t next = 0;
    double passing = 0.0;
    for (double d : openings) {
        while (next < sorted.size() && sorted[next].size_mm <= d) {
            passing += sorted[next].area_mm2;
            ++next;
        }
        const double pct = next == sorted.size() ? 100.0 : std::min(100.0, 100.0 * passing / total);
        curve.points.push_back(CurvePoint{d, pct});
    }
    return curve;
}

GradationCurve build_curve(std::span<const Particle> particles, const SieveSpec& sieves) {
    const auto items = sized_areas(particles);
    return build_curve(std::span<const SizedArea>(items), sieves);
}

GradationCurve empirical_curve(std::span<const SizedArea> items) {
    std::vector<SizedArea> sorted(items.begin(), items.end());
    std::sort(sorted.begin(), sorted.end(), [](const SizedArea& a, const SizedArea& b) {
        return a.size_mm < b.size_mm || (a.size_mm == b.size_mm && a.area_mm2 < b.area_mm2);
    });
    double total = 0.0;
    for (const SizedArea& s : sorted) total += s.area_mm2;
    if (sorted.empty() || !(total > 0.0)) {
        throw EmptySample("no particle area to build a gradation curve from");
    }
    GradationCurve curve;
    double passing = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double d = sorted[i].size_mm;
        if (!(d > 0.0)) {
            throw InvalidArgument("particle sizes must be positive");
        }
        const double before = 100.0 * passing / total;
        while (i < sorted.size() && sorted[i].size_mm == d) {
            passing += sorted[i].area_mm2;
            ++i;
        }
        const double after = i == sorted.size() ? 100.0 : std::min(100.0, 100.0 * passing / total);
        curve.points.push_back(CurvePoint{d, before});
        curve.points.push_back(CurvePoint{d, after});
    }
    return curve;
}

std::optional<double> diameter_at(const GradationCurve& curve, double percent) {
    const auto& pts = curve.points;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (pts[j].percent_finer < percent) continue;
        if (j == 0) {
            if (pts[0].percent_finer == percent) return pts[0].opening_mm;
            return std::nullopt;
        }
        const CurvePoint& a = pts[j - 1];
        const CurvePoint& b = pts[j];
        if (percent == b.percent_finer) return b.opening_mm;
        const double t = (percent - a.percent_finer) / (b.percent_finer - a.percent_finer);
        const double la = std::log10(a.opening_mm);
        const double lb = std::log10(b.opening_mm);
        return std::pow(10.0, la + t * (lb - la));
    }
    return std::nullopt;
}

GradationIndices indices(const GradationCurve& curve) {
    curve.validate();
    GradationIndices out;
    out.d10_mm = diameter_at(curve, 10.0);
    out.d30_mm = diameter_at(curve, 30.0);
    out.d60_mm = diameter_at(curve, 60.0);
    if (out.d10_mm && out.d60_mm) {
        out.cu = *out.d60_mm / *out.d10_mm;
    }
    if (out.d10_mm && out.d30_mm && out.d60_mm) {
        out.cc = (*out.d30_mm * *out.d30_mm) / (*out.d10_mm * *out.d60_mm);
    }
    return out;
}

double mape(const GradationCurve& measured, const GradationCurve& reference) {
    const ErrorTally t = tally(measured, reference, -std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity());
    if (t.shared == 0) throw NoSharedSieves("curves share no sieve openings");
    if (t.count == 0) throw AllReferenceZero("reference is 0% finer at every shared opening");
    return 100.0 * t.sum / t.count;
}

double band_mape(const GradationCurve& measured, const GradationCurve& reference, double lo_mm, double hi_mm) {
    const ErrorTally t = tally(measured, reference, lo_mm, hi_mm);
    if (t.shared == 0) throw NoSharedSieves("curves share no sieve openings in the requested band");
    if (t.count == 0) throw AllReferenceZero("reference is 0% finer at every shared opening in the band");
    return 100.0 * t.sum / t.count;
}

double round_significant(double value, int digits) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return std::strtod(buf, nullptr);
}

GradationCurve round_curve(const GradationCurve& curve, int digits) {
    GradationCurve out = curve;
    for (CurvePoint& p : out.points) {
        p.opening_mm = round_significant(p.opening_mm, digits);
        p.percent_finer = round_significant(p.percent_finer, digits);
    }
    return out;
}

GradationCurve parse_reference_csv(std::istream& in) {
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    GradationCurve curve;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            std::string compact;
            for (char ch : t) {
                if (ch != ' ' && ch != '\t') compact.push_back(ch);
            }
            if (compact != "sieve_mm,percent_finer") {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected header 'sieve_mm,percent_finer', got '" + t + "'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected two comma-separated fields");
        }
        const double sieve = parse_number(t.substr(0, comma), line_no);
        const double pct = parse_number(t.substr(comma + 1), line_no);
        if (!(sieve > 0.0)) throw ParseError("line " + std::to_string(line_no) + ": sieve opening must be positive");
        if (pct < 0.0 || pct > 100.0) {
            throw ParseError("line " + std::to_string(line_no) + ": percent_finer must be within [0, 100]");
        }
        curve.points.push_back(CurvePoint{sieve, pct});
    }
    if (!header_seen) throw ParseError("reference CSV is empty (missing header)");
    if (curve.points.empty()) throw ParseError("reference CSV has no data rows");
    std::sort(curve.points.begin(), curve.points.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.opening_mm < b.opening_mm; });
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (same_opening(curve.points[i].opening_mm, curve.points[i - 1].opening_mm)) {
            throw ParseError("duplicate sieve opening in reference CSV");
        }
        if (curve.points[i].percent_finer < curve.points[i - 1].percent_finer) {
            throw ParseError("reference percent_finer must not decrease with sieve opening");
        }
    }
    return curve;
}

GradationCurve load_reference_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open reference CSV: " + path);
    return parse_reference_csv(in);
}

SweepResult sweep(const GrayImage& img, const CalibrationResult& calib, const PipelineParams& base,
                  std::span<const int> blocks, std::span<const double> cs, const GradationCurve& reference,
                  const SieveSpec& sieves, const SweepOptions& options) {
    if (blocks.empty() || cs.empty()) {
        throw InvalidArgument("sweep ranges must be non-empty");
    }
    for (int b : blocks) {
        if (b % 2 == 0) throw InvalidArgument("sweep block sizes must be odd, got " + std::to_string(b));
    }
    sieves.validate();
    base.blur.validate();

    // The blur does not depend on the swept threshold parameters.
    const GrayImage blurred = gaussian_blur(img, base.blur);

    SweepResult result;
    for (int b : blocks) {
        for (double c : cs) result.rows.push_back(SweepRow{b, c, std::nullopt});
    }

    auto run_cell = [&](SweepRow& row) {
        try {
            PipelineParams params = base;
            params.threshold.block_size = row.block_size;
            params.threshold.c = row.c;
            const AnalysisResult r = measure_binary(adaptive_threshold(blurred, params.threshold), calib, params);
            GradationCurve curve = build_curve(std::span<const Particle>(r.particles), sieves);
            if (options.curve_digits > 0) curve = round_curve(curve, options.curve_digits);
            row.mape = mape(curve, reference);
        } catch (const Error&) {
            row.mape = std::nullopt;
        }
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(result.rows.size()));
    if (threads <= 1) {
        for (SweepRow& row : result.rows) run_cell(row);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < result.rows.size(); i = next++) run_cell(result.rows[i]);
            });
        }
    }

    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& m = result.rows[i].mape;
        if (m && (!result.argmin || *m < *result.rows[*result.argmin].mape)) result.argmin = i;
    }
    return result;
}

}  // namespace granulo
