#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "granulo/error.hpp"
#include "granulo/marker.hpp"
#include "granulo/synth.hpp"

using namespace granulo;

namespace {

SceneSpec marker_scene(int id, double side, PointD top_left, double rotation, int w = 1000, int h = 1000,
                       double noise = 0.0, std::uint64_t seed = 1) {
    SceneSpec s;
    s.width_px = w;
    s.height_px = h;
    s.noise_sigma = noise;
    s.seed = seed;
    s.marker = MarkerSpec{id, side, top_left, rotation};
    return s;
}

double dist(PointD a, PointD b) { return std::hypot(a.x - b.x, a.y - b.y); }

const MarkerDictionary& dict() {
    static const MarkerDictionary d = default_marker_dictionary();
    return d;
}

}  // namespace

TEST(Dictionary, BundledTableIsValid) {
    const auto& d = dict();
    EXPECT_EQ(d.grid, 4);
    EXPECT_EQ(d.max_hamming_correction, 1);
    EXPECT_EQ(d.codes.size(), 50u);
    EXPECT_NO_THROW(d.validate());
    EXPECT_GT(d.min_rotational_distance(), 2 * d.max_hamming_correction);
}

TEST(Dictionary, ParsesJson) {
    const auto d = MarkerDictionary::from_json(R"({"grid": 2, "max_hamming_correction": 0,
        "codes": {"3": [[1, 0], [0, 0]]}})");
    EXPECT_EQ(d.grid, 2);
    ASSERT_EQ(d.codes.count(3), 1u);
    EXPECT_EQ(d.codes.at(3), (std::vector<std::uint8_t>{1, 0, 0, 0}));
}

TEST(Dictionary, RejectsBadInput) {
    EXPECT_THROW(MarkerDictionary::from_json("{not json"), ParseError);
    EXPECT_THROW(MarkerDictionary::from_json(R"({"grid": 2, "codes": {"x": [[1,0],[0,0]]}})"), ParseError);
    EXPECT_THROW(MarkerDictionary::from_json(R"({"grid": 2, "codes": {"1": [[1,0,1],[0,0]]}})"), InvalidArgument);
    // A code that equals its own rotation cannot give a unique orientation.
    EXPECT_THROW(MarkerDictionary::from_json(R"({"grid": 2, "max_hamming_correction": 0,
        "codes": {"1": [[1,1],[1,1]]}})"), InvalidArgument);
    EXPECT_THROW(MarkerDictionary::from_json(R"({"grid": 2, "max_hamming_correction": 0,
        "codes": {"1": [[1,0],[0,0]], "2": [[0,1],[0,0]]}})"), InvalidArgument);
    EXPECT_THROW(MarkerDictionary::load("/nonexistent/dict.json"), ParseError);
}

TEST(Dictionary, RotationHasOrderFour) {
    const auto& bits = dict().codes.begin()->second;
    auto r = bits;
    for (int i = 0; i < 4; ++i) r = rotate_bits_cw(r, 4);
    EXPECT_EQ(r, bits);
    EXPECT_EQ(rotate_bits_cw({1, 0, 0, 0}, 2), (std::vector<std::uint8_t>{0, 1, 0, 0}));
}

TEST(Calibrate, PaperConfiguration) {
    MarkerDetection det;
    det.id = 4;
    det.perimeter_px = 1136.0;
    det.image_width = 3024;
    det.image_height = 4032;
    const auto c = calibrate(det, 20.0);
    EXPECT_DOUBLE_EQ(c.pixel_per_mm, 14.2);
    EXPECT_NEAR(c.min_resolvable_mm, 0.0704, 1e-4);
    EXPECT_DOUBLE_EQ(c.min_resolvable_mm * c.pixel_per_mm, 1.0);
    EXPECT_EQ(c.marker_id, 4);
    EXPECT_EQ(c.image_width, 3024);
}

TEST(Calibrate, UnitRatioAndLinearity) {
    MarkerDetection det;
    det.perimeter_px = 80.0;
    EXPECT_DOUBLE_EQ(calibrate(det).pixel_per_mm, 1.0);
    det.perimeter_px = 1000.0;
    EXPECT_DOUBLE_EQ(calibrate(det, 40.0).pixel_per_mm * 2.0, calibrate(det, 20.0).pixel_per_mm);
}

TEST(Calibrate, RejectsBadSide) {
    MarkerDetection det;
    det.perimeter_px = 100.0;
    EXPECT_THROW(calibrate(det, 0.0), InvalidSide);
    EXPECT_THROW(calibrate(det, -3.0), InvalidSide);
    det.perimeter_px = 0.0;
    EXPECT_THROW(calibrate(det, 20.0), InvalidArgument);
}

TEST(Homography, MapsCornersExactly) {
    const std::array<PointD, 4> src{PointD{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const std::array<PointD, 4> dst{PointD{10, 20}, {110, 25}, {105, 130}, {5, 118}};
    const auto h = homography_from_quads(src, dst);
    for (int i = 0; i < 4; ++i) {
        const auto p = map_point(h, src[i]);
        EXPECT_NEAR(p.x, dst[i].x, 1e-9);
        EXPECT_NEAR(p.y, dst[i].y, 1e-9);
    }
    // Straight lines stay straight: the midpoint of an edge maps onto the image edge.
    const auto m = map_point(h, {0.5, 0});
    const double cross = (dst[1].x - dst[0].x) * (m.y - dst[0].y) - (dst[1].y - dst[0].y) * (m.x - dst[0].x);
    EXPECT_NEAR(cross, 0.0, 1e-6);
}

TEST(Homography, DegenerateThrows) {
    const std::array<PointD, 4> src{PointD{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const std::array<PointD, 4> dst{PointD{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    EXPECT_THROW(homography_from_quads(src, dst), InvalidArgument);
}

TEST(Detect, BlankImage) {
    EXPECT_THROW(detect_marker(GrayImage(400, 300, 235), dict()), NoMarkerFound);
}

TEST(Detect, PaperSizedMarker) {
    const auto spec = marker_scene(0, 284.0, {400, 400}, 0.0, 3024, 4032, 5.0);
    const auto scene = render(spec, dict());
    const auto det = detect_marker(scene.image, dict());
    EXPECT_EQ(det.id, 0);
    ASSERT_TRUE(scene.truth.marker_corners);
    for (int i = 0; i < 4; ++i) EXPECT_LE(dist(det.corners[i], (*scene.truth.marker_corners)[i]), 1.5) << i;
    EXPECT_NEAR(det.perimeter_px, 1136.0, 11.36);
    const auto c = calibrate(det);
    EXPECT_NEAR(c.pixel_per_mm, 14.2, 0.14);
    EXPECT_EQ(det.image_width, 3024);
    EXPECT_EQ(det.image_height, 4032);
}

TEST(Detect, QuarterTurnTracksPhysicalCorner) {
    for (double rot : {90.0, 180.0, 270.0, 33.0}) {
        const auto spec = marker_scene(7, 250.0, {300, 300}, rot);
        const auto scene = render(spec, dict());
        const auto det = detect_marker(scene.image, dict());
        EXPECT_EQ(det.id, 7);
        for (int i = 0; i < 4; ++i)
            EXPECT_LE(dist(det.corners[i], (*scene.truth.marker_corners)[i]), 1.5) << "rot " << rot << " corner " << i;
    }
}

TEST(Detect, EveryTestIdDecodes) {
    for (int id = 0; id < 10; ++id) {
        const auto scene = render(marker_scene(id, 200.0, {150, 200}, 12.0 * id, 600, 600, 4.0, id), dict());
        EXPECT_EQ(detect_marker(scene.image, dict()).id, id);
    }
}

TEST(Detect, ScaleEquivariance) {
    const auto spec = marker_scene(3, 180.0, {200, 150}, 20.0, 800, 700);
    const auto p1 = calibrate(detect_marker(render(spec, dict()).image, dict())).pixel_per_mm;
    const auto p2 = calibrate(detect_marker(render(scale_scene(spec, 2.0), dict()).image, dict())).pixel_per_mm;
    EXPECT_NEAR(p2 / p1, 2.0, 0.02);
}

TEST(Detect, TwoMarkersAreAmbiguous) {
    const auto a = render(marker_scene(1, 200.0, {100, 100}, 0.0, 500, 500), dict()).image;
    const auto b = render(marker_scene(2, 200.0, {100, 100}, 0.0, 500, 500), dict()).image;
    GrayImage both(1000, 500);
    for (int y = 0; y < 500; ++y)
        for (int x = 0; x < 500; ++x) {
            both.at(x, y) = a.at(x, y);
            both.at(x + 500, y) = b.at(x, y);
        }
    EXPECT_THROW(detect_marker(both, dict()), AmbiguousMarker);
}

TEST(Detect, UnknownCodeIsNotAMarker) {
    // Same square, but an id missing from a one-entry dictionary.
    const auto scene = render(marker_scene(5, 220.0, {100, 100}, 0.0, 500, 500), dict());
    MarkerDictionary one;
    one.grid = 4;
    one.max_hamming_correction = 1;
    one.codes[9] = dict().codes.at(9);
    EXPECT_THROW(detect_marker(scene.image, one), NoMarkerFound);
}

TEST(Detect, RotationInvariantDecoding) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> id(0, 9);
    std::uniform_real_distribution<double> rot(0.0, 360.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = id(rng);
        const double base = rot(rng);
        for (int q = 0; q < 4; ++q) {
            const auto scene = render(marker_scene(k, 160.0, {170, 170}, base + 90.0 * q, 500, 500, 6.0, trial), dict());
            ASSERT_EQ(detect_marker(scene.image, dict()).id, k) << "trial " << trial << " quarter " << q;
        }
    }
}
