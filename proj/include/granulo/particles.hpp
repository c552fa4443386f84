#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "granulo/filter.hpp"
#include "granulo/geometry.hpp"
#include "granulo/marker.hpp"

namespace granulo {

struct PipelineParams {
    BlurParams blur;
    ThresholdParams threshold;
    double min_area_mm2 = 0.01;
    int marker_exclusion_margin_px = 10;
    bool exclude_border_touching = true;

    void validate() const;
};

namespace reject_reason {
inline constexpr const char* kMarker = "marker_exclusion";
inline constexpr const char* kBorder = "border_touching";
inline constexpr const char* kArea = "below_min_area";
}  // namespace reject_reason

struct Particle {
    Contour contour;
    RotatedRect rect;       ///< around the pixel footprint of the contour
    double size_mm = 0.0;   ///< mean rectangle side over pixel_per_mm
    double area_mm2 = 0.0;  ///< area_px / pixel_per_mm^2
    std::int64_t area_px = 0;
};

struct AnalysisResult {
    CalibrationResult calibration;
    std::vector<Particle> particles;
    std::map<std::string, std::int64_t> rejected_count_by_reason;
    PipelineParams params;

    std::int64_t rejected_total() const;
};

/// ((width + height) / 2) / pixel_per_mm.
double size_mm_of(const RotatedRect& rect, const CalibrationResult& calib);

/// blur -> threshold -> external contours -> rejection filters (marker,
/// border, area, checked in that order) -> rotated rectangles.
/// Throws CalibrationMismatch when calib was made on a different-sized image.
AnalysisResult measure(const GrayImage& img, const CalibrationResult& calib, const PipelineParams& params = {});

/// Same as measure() on an already thresholded image; exposed so a parameter
/// sweep can reuse one blurred raster across threshold settings.
AnalysisResult measure_binary(const BinaryImage& bin, const CalibrationResult& calib, const PipelineParams& params);

/// The marker quad pushed outward by `margin` pixels along each side normal.
std::array<PointD, 4> dilate_quad(const std::array<PointD, 4>& quad, double margin);

/// Separating-axis test between an axis-aligned pixel box and a convex quad.
bool box_intersects_quad(const Box& box, const std::array<PointD, 4>& quad);

}  // namespace granulo
