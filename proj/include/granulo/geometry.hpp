#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "granulo/raster.hpp"

namespace granulo {

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct PointD {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const PointD&, const PointD&) = default;
};

/// Outer boundary of one 8-connected foreground component: every boundary
/// pixel in tracing order (no chain compression), plus the number of
/// foreground pixels in the component.
struct Contour {
    std::vector<Point> points;
    std::int64_t pixel_count = 0;
};

/// Inclusive integer bounding box.
struct Box {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
};

/// Rotated rectangle. `width` runs along direction `angle` (degrees, in
/// [0, 90)), `height` along the perpendicular.
struct RotatedRect {
    PointD center;
    double width = 0.0;
    double height = 0.0;
    double angle = 0.0;

    double area() const noexcept { return width * height; }
    std::array<PointD, 4> corners() const;
};

/// External contours only (components nested inside holes of other
/// components are skipped), in raster-scan discovery order. Foreground is
/// 8-connected, background 4-connected. Points run counterclockwise as seen
/// on screen (y down), which makes the raw shoelace sum negative.
std::vector<Contour> trace_external_contours(const BinaryImage& img);

Box bounding_box(const Contour& contour);

/// Signed shoelace area of a closed polygon.
double signed_area(std::span<const PointD> polygon);
double polygon_area(std::span<const PointD> polygon);
double perimeter(std::span<const PointD> polygon);

/// |shoelace| over the contour's pixel centers. Not the pixel count.
double contour_area(const Contour& contour);

std::vector<PointD> to_points(const Contour& contour);

/// The four corners of every contour pixel's unit square, i.e. the point set
/// whose hull is the component's pixel footprint.
std::vector<PointD> pixel_corners(const Contour& contour);

/// Monotone chain, counterclockwise (positive signed area), collinear
/// vertices dropped. Duplicate inputs are tolerated.
std::vector<PointD> convex_hull(std::span<const PointD> points);

/// Rotating calipers over the hull edges.
RotatedRect min_area_rect(std::span<const PointD> points);

/// Ramer-Douglas-Peucker on a closed chain, followed by removal of vertices
/// within epsilon of the segment joining their neighbors.
std::vector<PointD> approx_polygon(std::span<const PointD> closed, double epsilon);
std::vector<PointD> approx_polygon(const Contour& contour, double epsilon);

bool is_convex(std::span<const PointD> polygon);

}  // namespace granulo
