#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "granulo/geometry.hpp"
#include "granulo/marker.hpp"
#include "granulo/raster.hpp"

namespace granulo {

enum class ShapeKind { disk, ellipse, polygon };

/// One dark grain. Dimensions are in mm, the center in pixels.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::disk;
    double diameter_mm = 0.0;           ///< disk
    double major_mm = 0.0;              ///< ellipse, full axis lengths
    double minor_mm = 0.0;
    double angle_deg = 0.0;             ///< ellipse major-axis direction
    std::vector<PointD> vertices_mm;    ///< polygon, relative to the center
    PointD center;
    int intensity = 80;
};

/// Marker placement. The square is rotated about its center; rotation is
/// clockwise on screen for positive angles.
struct MarkerSpec {
    int id = 0;
    double side_px = 284.0;
    PointD top_left{200.0, 200.0};
    double rotation_deg = 0.0;
};

struct SceneSpec {
    int width_px = 3024;
    int height_px = 4032;
    double pixel_per_mm = 14.2;
    int background_intensity = 235;
    int ink_intensity = 20;  ///< marker black cells
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::optional<MarkerSpec> marker = MarkerSpec{};
    std::vector<ShapeSpec> shapes;
};

struct ShapeTruth {
    double true_size_mm = 0.0;
    double true_area_mm2 = 0.0;
};

struct GroundTruth {
    std::vector<ShapeTruth> shapes;
    std::optional<std::array<PointD, 4>> marker_corners;  ///< TL, TR, BR, BL
    double pixel_per_mm = 0.0;
};

struct RenderedScene {
    GrayImage image;
    GroundTruth truth;
};

/// Analytic truth; never looks at pixels.
GroundTruth ground_truth(const SceneSpec& spec);

std::array<PointD, 4> marker_corners(const MarkerSpec& marker);

/// Hard-edged rasterization (pixel centers at integer coordinates), then
/// additive Gaussian noise from `seed`, clamped to [0, 255].
/// Throws InvalidArgument, OutOfBounds or OverlapError.
RenderedScene render(const SceneSpec& spec, const MarkerDictionary& dict);
RenderedScene render(const SceneSpec& spec);

/// Same scene at `factor` times the pixel density. With `crop`, the canvas is
/// cut down to the marker and shapes plus `margin_px` (at the new scale).
SceneSpec scale_scene(const SceneSpec& spec, double factor, bool crop = false, int margin_px = 200);

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);
std::string truth_to_json(const GroundTruth& truth);

struct CorpusScene {
    std::string name;
    SceneSpec spec;
    GroundTruth truth;
};

/// Deterministic scenes at 14.2 px/mm on a 3024 x 4032 canvas:
/// "coarse" (30 disks, 2-9.5 mm), "fine" (30 disks, 0.1-0.425 mm) and
/// "mixed" (20 ellipses, mean axis 2-9.5 mm). Grain sizes keep clear of the
/// default sieve openings by the per-grain size tolerance.
std::vector<CorpusScene> standard_corpus(std::uint64_t seed = 0);

}  // namespace granulo
