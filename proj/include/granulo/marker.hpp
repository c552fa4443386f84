#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "granulo/geometry.hpp"
#include "granulo/raster.hpp"

namespace granulo {

/// Square n x n bit codes. A bit value of 1 is a white cell, 0 a black cell.
struct MarkerDictionary {
    int grid = 4;
    int max_hamming_correction = 1;
    std::map<int, std::vector<std::uint8_t>> codes;  ///< row-major, grid * grid bits

    /// Throws InvalidArgument unless every pair of codes (and every code
    /// against its own non-trivial rotations) differs in more than
    /// 2 * max_hamming_correction bits under all four rotations.
    void validate() const;

    /// Smallest Hamming distance between distinct (code, rotation) pairs.
    int min_rotational_distance() const;

    static MarkerDictionary from_json(const std::string& text);
    static MarkerDictionary load(const std::filesystem::path& path);
};

/// Dictionary named by GRANULO_MARKER_DICT, or the bundled 4x4 table.
MarkerDictionary default_marker_dictionary();
std::filesystem::path bundled_marker_dictionary_path();

/// Rotates a row-major n x n bit matrix 90 degrees clockwise.
std::vector<std::uint8_t> rotate_bits_cw(const std::vector<std::uint8_t>& bits, int n);

struct MarkerDetection {
    int id = -1;
    /// Top-left, top-right, bottom-right, bottom-left of the marker's own
    /// (unrotated) frame.
    std::array<PointD, 4> corners{};
    double perimeter_px = 0.0;
    int image_width = 0;
    int image_height = 0;
};

struct CalibrationResult {
    double pixel_per_mm = 0.0;
    double min_resolvable_mm = 0.0;
    int marker_id = -1;
    std::array<PointD, 4> marker_quad{};
    int image_width = 0;
    int image_height = 0;
};

struct MarkerDetectorParams {
    /// 0 picks an odd block near min(width, height) / 8.
    int block_size = 0;
    double c = 40.0;
    double min_area_px = 400.0;
    /// RDP tolerance as a fraction of the contour length.
    double approx_epsilon_ratio = 0.03;
    int cell_px = 8;
    /// Cells must span at least this much intensity to be binarized.
    double min_cell_contrast = 30.0;
};

/// Threshold, trace, keep convex quadrilaterals, rectify each through an exact
/// 4-point homography, sample cell means, decode under four rotations.
/// Throws NoMarkerFound or AmbiguousMarker.
MarkerDetection detect_marker(const GrayImage& img, const MarkerDictionary& dict,
                              const MarkerDetectorParams& params = {});

/// pixel_per_mm = perimeter_px / (4 * marker_side_mm).
CalibrationResult calibrate(const MarkerDetection& det, double marker_side_mm = 20.0);

/// Row-major 3x3 matrix mapping (u, v, 1) to homogeneous image coordinates.
using Homography = std::array<double, 9>;

/// Exact homography taking src[i] to dst[i]. Throws InvalidArgument for
/// degenerate configurations.
Homography homography_from_quads(const std::array<PointD, 4>& src, const std::array<PointD, 4>& dst);
PointD map_point(const Homography& h, PointD p);

}  // namespace granulo
