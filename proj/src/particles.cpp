#include "granulo/particles.hpp"

#include <cmath>
#include <limits>

namespace granulo {

namespace {

struct Interval {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

template <std::size_t N>
Interval project(const std::array<PointD, N>& pts, double ax, double ay) {
    Interval iv;
    for (const PointD& p : pts) {
        const double d = p.x * ax + p.y * ay;
        iv.lo = std::min(iv.lo, d);
        iv.hi = std::max(iv.hi, d);
    }
    return iv;
}

}  // namespace

void PipelineParams::validate() const {
    blur.validate();
    threshold.validate();
    if (!(min_area_mm2 >= 0.0) || !std::isfinite(min_area_mm2)) {
        throw InvalidArgument("min_area_mm2 must be >= 0");
    }
    if (marker_exclusion_margin_px < 0) {
        throw InvalidArgument("marker_exclusion_margin_px must be >= 0");
    }
}

std::int64_t AnalysisResult::rejected_total() const {
    std::int64_t total = 0;
    for (const auto& [reason, count] : rejected_count_by_reason) total += count;
    return total;
}

double size_mm_of(const RotatedRect& rect, const CalibrationResult& calib) {
    return ((rect.width + rect.height) / 2.0) / calib.pixel_per_mm;
}

std::array<PointD, 4> dilate_quad(const std::array<PointD, 4>& quad, double margin) {
    PointD centroid{0, 0};
    for (const PointD& q : quad) {
        centroid.x += q.x / 4.0;
        centroid.y += q.y / 4.0;
    }
    struct Edge {
        PointD p;
        PointD d;
    };
    std::array<Edge, 4> edges;
    for (std::size_t i = 0; i < 4; ++i) {
        const PointD a = quad[i];
        const PointD b = quad[(i + 1) % 4];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        PointD d{(b.x - a.x) / len, (b.y - a.y) / len};
        PointD n{d.y, -d.x};
        if ((centroid.x - a.x) * n.x + (centroid.y - a.y) * n.y > 0) n = PointD{-n.x, -n.y};
        edges[i] = Edge{PointD{a.x + n.x * margin, a.y + n.y * margin}, d};
    }
    std::array<PointD, 4> out;
    for (std::size_t i = 0; i < 4; ++i) {
        const Edge& e0 = edges[(i + 3) % 4];
        const Edge& e1 = edges[i];
        const double det = e0.d.x * e1.d.y - e0.d.y * e1.d.x;
        if (std::abs(det) < 1e-12) {
            out[i] = e1.p;
            continue;
        }
        const double dx = e1.p.x - e0.p.x, dy = e1.p.y - e0.p.y;
        const double t = (dx * e1.d.y - dy * e1.d.x) / det;
        out[i] = PointD{e0.p.x + t * e0.d.x, e0.p.y + t * e0.d.y};
    }
    return out;
}

bool box_intersects_quad(const Box& box, const std::array<PointD, 4>& quad) {
    // Pixels are unit squares around their centers.
    const std::array<PointD, 4> rect{PointD{box.x0 - 0.5, box.y0 - 0.5}, PointD{box.x1 + 0.5, box.y0 - 0.5},
                                     PointD{box.x1 + 0.5, box.y1 + 0.5}, PointD{box.x0 - 0.5, box.y1 + 0.5}};
    auto separated = [&](double ax, double ay) {
        const Interval a = project(rect, ax, ay);
        const Interval b = project(quad, ax, ay);
        return a.hi < b.lo || b.hi < a.lo;
    };
    if (separated(1, 0) || separated(0, 1)) return false;
    for (std::size_t i = 0; i < 4; ++i) {
        const PointD a = quad[i];
        const PointD b = quad[(i + 1) % 4];
        if (separated(-(b.y - a.y), b.x - a.x)) return false;
    }
    return true;
}

AnalysisResult measure_binary(const BinaryImage& bin, const CalibrationResult& calib, const PipelineParams& params) {
    if (bin.width() != calib.image_width || bin.height() != calib.image_height) {
        throw CalibrationMismatch("calibration was made on a " + std::to_string(calib.image_width) + "x" +
                                  std::to_string(calib.image_height) + " image, got " +
                                  std::to_string(bin.width()) + "x" + std::to_string(bin.height()));
    }
    if (!(calib.pixel_per_mm > 0.0)) {
        throw InvalidArgument("pixel_per_mm must be positive");
    }
    params.validate();

    AnalysisResult result;
    result.calibration = calib;
    result.params = params;
    for (const char* reason : {reject_reason::kMarker, reject_reason::kBorder, reject_reason::kArea}) {
        result.rejected_count_by_reason[reason] = 0;
    }

    const std::array<PointD, 4> exclusion = dilate_quad(calib.marker_quad, params.marker_exclusion_margin_px);
    const double p2 = calib.pixel_per_mm * calib.pixel_per_mm;
    const double min_area_px = params.min_area_mm2 * p2;

    for (Contour& contour : trace_external_contours(bin)) {
        const Box box = bounding_box(contour);
        if (box_intersects_quad(box, exclusion)) {
            ++result.rejected_count_by_reason[reject_reason::kMarker];
            continue;
        }
        if (params.exclude_border_touching &&
            (box.x0 == 0 || box.y0 == 0 || box.x1 == bin.width() - 1 || box.y1 == bin.height() - 1)) {
            ++result.rejected_count_by_reason[reject_reason::kBorder];
            continue;
        }
        if (static_cast<double>(contour.pixel_count) < min_area_px) {
            ++result.rejected_count_by_reason[reject_reason::kArea];
            continue;
        }
        Particle p;
        p.rect = min_area_rect(pixel_corners(contour));
        p.size_mm = size_mm_of(p.rect, calib);
        p.area_px = contour.pixel_count;
        p.area_mm2 = static_cast<double>(p.area_px) / p2;
        p.contour = std::move(contour);
        result.particles.push_back(std::move(p));
    }
    return result;
}

AnalysisResult measure(const GrayImage& img, const CalibrationResult& calib, const PipelineParams& params) {
    if (img.width() != calib.image_width || img.height() != calib.image_height) {
        throw CalibrationMismatch("calibration was made on a " + std::to_string(calib.image_width) + "x" +
                                  std::to_string(calib.image_height) + " image, got " +
                                  std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    params.validate();
    const GrayImage blurred = gaussian_blur(img, params.blur);
    return measure_binary(adaptive_threshold(blurred, params.threshold), calib, params);
}

}  // namespace granulo
