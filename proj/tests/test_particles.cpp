#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "granulo/error.hpp"
#include "granulo/filter.hpp"
#include "granulo/marker.hpp"
#include "granulo/particles.hpp"
#include "granulo/report.hpp"
#include "granulo/synth.hpp"
#include "support/oracles.hpp"

using namespace granulo;

namespace {

CalibrationResult calib_for(const GrayImage& img, double p = 14.2) {
    CalibrationResult c;
    c.pixel_per_mm = p;
    c.min_resolvable_mm = 1.0 / p;
    c.image_width = img.width();
    c.image_height = img.height();
    // A quad far outside the image keeps marker exclusion out of the way.
    c.marker_quad = {PointD{-1000, -1000}, {-990, -1000}, {-990, -990}, {-1000, -990}};
    return c;
}

CalibrationResult detect_and_calibrate(const GrayImage& img) {
    return calibrate(detect_marker(img, default_marker_dictionary()));
}

ShapeSpec disk(double d_mm, PointD c, int intensity = 60) {
    ShapeSpec s;
    s.kind = ShapeKind::disk;
    s.diameter_mm = d_mm;
    s.center = c;
    s.intensity = intensity;
    return s;
}

std::string serialize(const AnalysisResult& r) {
    return report_json(r, build_curve(std::span<const Particle>(r.particles)), {}, {});
}

}  // namespace

TEST(SizeOf, Examples) {
    CalibrationResult c;
    c.pixel_per_mm = 14.2;
    EXPECT_NEAR(size_mm_of({{0, 0}, 10, 20, 0}, c), 15.0 / 14.2, 1e-12);
    EXPECT_NEAR(size_mm_of({{0, 0}, 10, 20, 0}, c), 1.0563, 1e-4);
    EXPECT_DOUBLE_EQ(size_mm_of({{0, 0}, 14.2, 14.2, 0}, c), 1.0);
    EXPECT_DOUBLE_EQ(size_mm_of({{0, 0}, 0, 0, 0}, c), 0.0);
}

TEST(Measure, SingleDisk) {
    SceneSpec s;
    s.width_px = 800;
    s.height_px = 800;
    s.noise_sigma = 3.0;
    s.marker = MarkerSpec{0, 284.0, {40, 40}, 0.0};
    s.shapes = {disk(71.0 / 14.2, {560, 560})};
    const auto scene = render(s);
    EXPECT_NEAR(scene.truth.shapes[0].true_size_mm, 5.0, 1e-12);
    const auto calib = detect_and_calibrate(scene.image);
    const auto r = measure(scene.image, calib);
    ASSERT_EQ(r.particles.size(), 1u);
    EXPECT_NEAR(r.particles[0].size_mm, 5.0, 0.15);
    EXPECT_EQ(r.rejected_count_by_reason.at(reject_reason::kMarker), 1);
}

TEST(Measure, MarkerOnlyPage) {
    SceneSpec s;
    s.width_px = 900;
    s.height_px = 1200;
    s.noise_sigma = 5.0;
    const auto scene = render(s);
    const auto calib = detect_and_calibrate(scene.image);
    const auto r = measure(scene.image, calib);
    EXPECT_TRUE(r.particles.empty());
    ASSERT_TRUE(r.rejected_count_by_reason.count(reject_reason::kMarker));
    EXPECT_GE(r.rejected_count_by_reason.at(reject_reason::kMarker), 1);
    EXPECT_THROW(build_curve(std::span<const Particle>(r.particles)), EmptySample);
}

TEST(Measure, TwentyEllipses) {
    const auto corpus = standard_corpus(0);
    const auto& mixed = corpus.at(2);
    ASSERT_EQ(mixed.name, "mixed");
    ASSERT_EQ(mixed.spec.shapes.size(), 20u);
    const auto scene = render(mixed.spec);
    const auto calib = detect_and_calibrate(scene.image);
    const auto r = measure(scene.image, calib);
    ASSERT_EQ(r.particles.size(), 20u);
    const auto match = oracle::match_shapes(mixed.spec, r.particles);
    for (std::size_t i = 0; i < match.size(); ++i) {
        ASSERT_TRUE(match[i]) << "shape " << i << " unmatched";
        const double truth = mixed.truth.shapes[i].true_size_mm;
        const double tol = std::max(2.0 / calib.pixel_per_mm, 0.03 * truth);
        EXPECT_NEAR(r.particles[*match[i]].size_mm, truth, tol) << "shape " << i;
    }
}

TEST(Measure, BorderTouchingGrain) {
    GrayImage img(300, 300, 235);
    for (int y = 100; y < 140; ++y)
        for (int x = 0; x < 30; ++x) img.at(x, y) = 40;
    PipelineParams p;
    p.blur.ksize = 1;
    p.threshold.block_size = 101;
    const auto c = calib_for(img);
    const auto r = measure(img, c, p);
    EXPECT_TRUE(r.particles.empty());
    EXPECT_EQ(r.rejected_count_by_reason.at(reject_reason::kBorder), 1);

    p.exclude_border_touching = false;
    const auto kept = measure(img, c, p);
    ASSERT_EQ(kept.particles.size(), 1u);
    EXPECT_EQ(kept.particles[0].area_px, 40 * 30);
}

TEST(Measure, SpecksBelowAreaFloor) {
    GrayImage img(200, 200, 235);
    img.at(50, 50) = 0;
    for (int y = 100; y < 112; ++y)
        for (int x = 100; x < 112; ++x) img.at(x, y) = 40;
    PipelineParams p;
    p.blur.ksize = 1;
    p.threshold.block_size = 51;
    p.min_area_mm2 = 0.5;  // 0.5 * 14.2^2 = 100.8 px
    const auto r = measure(img, calib_for(img), p);
    ASSERT_EQ(r.particles.size(), 1u);
    EXPECT_EQ(r.particles[0].area_px, 144);
    EXPECT_NEAR(r.particles[0].area_mm2, 144 / (14.2 * 14.2), 1e-12);
    EXPECT_NEAR(r.particles[0].size_mm, 12.0 / 14.2, 1e-9);
    EXPECT_EQ(r.rejected_count_by_reason.at(reject_reason::kArea), 1);
}

TEST(Measure, SinglePixelIsAtLeastOnePixelWide) {
    GrayImage img(100, 100, 235);
    img.at(40, 40) = 0;
    PipelineParams p;
    p.blur.ksize = 1;
    p.threshold.block_size = 31;
    p.min_area_mm2 = 0.0;
    const auto c = calib_for(img);
    const auto r = measure(img, c, p);
    ASSERT_EQ(r.particles.size(), 1u);
    EXPECT_NEAR(r.particles[0].size_mm, 1.0 / 14.2, 1e-12);
    EXPECT_GE(r.particles[0].size_mm, c.min_resolvable_mm);
}

TEST(Measure, CountsBalance) {
    SceneSpec s;
    s.width_px = 900;
    s.height_px = 900;
    s.noise_sigma = 8.0;
    s.seed = 4;
    s.marker = MarkerSpec{2, 200.0, {30, 30}, 15.0};
    s.shapes = {disk(3.0, {500, 500}), disk(0.2, {700, 300}), disk(6.0, {300, 650}), disk(4.0, {880 - 14, 450})};
    const auto scene = render(s);
    const auto calib = detect_and_calibrate(scene.image);
    PipelineParams p;
    p.threshold.block_size = 151;
    const auto r = measure(scene.image, calib, p);
    const auto contours = trace_external_contours(adaptive_threshold(gaussian_blur(scene.image, p.blur), p.threshold));
    EXPECT_EQ(static_cast<std::int64_t>(r.particles.size()) + r.rejected_total(),
              static_cast<std::int64_t>(contours.size()));
    for (const auto& part : r.particles) EXPECT_GE(part.size_mm, calib.min_resolvable_mm);
}

TEST(Measure, MarkerQuadHoldsNoParticle) {
    const auto scene = render(standard_corpus(0).at(0).spec);
    const auto calib = detect_and_calibrate(scene.image);
    const auto r = measure(scene.image, calib);
    for (const auto& part : r.particles) {
        EXPECT_FALSE(box_intersects_quad(bounding_box(part.contour), calib.marker_quad));
    }
}

TEST(Measure, Deterministic) {
    SceneSpec s;
    s.width_px = 700;
    s.height_px = 700;
    s.noise_sigma = 5.0;
    s.marker = MarkerSpec{1, 200.0, {20, 20}, 0.0};
    s.shapes = {disk(4.0, {450, 450}), disk(2.5, {300, 550}), disk(7.0, {550, 200})};
    const auto scene = render(s);
    const auto calib = detect_and_calibrate(scene.image);
    EXPECT_EQ(serialize(measure(scene.image, calib)), serialize(measure(scene.image, calib)));
}

TEST(Measure, ScaleConsistency) {
    SceneSpec s;
    s.width_px = 1000;
    s.height_px = 800;
    s.noise_sigma = 5.0;
    s.marker = MarkerSpec{0, 284.0, {20, 20}, 0.0};
    s.shapes = {disk(3.0, {500, 150}), disk(5.0, {700, 300}), disk(8.0, {400, 550}), disk(9.0, {800, 600})};
    const auto one = render(s);
    const auto two = render(scale_scene(s, 2.0));
    PipelineParams p;
    const auto r1 = measure(one.image, detect_and_calibrate(one.image), p);
    const auto r2 = measure(two.image, detect_and_calibrate(two.image), p);
    ASSERT_EQ(r1.particles.size(), 4u);
    ASSERT_EQ(r2.particles.size(), 4u);
    // Both lists come out in raster discovery order, which scaling preserves.
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(r2.particles[i].size_mm / r1.particles[i].size_mm, 1.0, 0.02) << i;
    }
}

TEST(Measure, CalibrationFromAnotherImage) {
    GrayImage img(100, 80, 235);
    auto c = calib_for(img);
    c.image_width = 200;
    EXPECT_THROW(measure(img, c), CalibrationMismatch);
}

TEST(Measure, InvalidParams) {
    GrayImage img(50, 50, 235);
    PipelineParams p;
    p.min_area_mm2 = -1;
    EXPECT_THROW(measure(img, calib_for(img), p), InvalidArgument);
    p = {};
    p.threshold.block_size = 100;
    EXPECT_THROW(measure(img, calib_for(img), p), InvalidArgument);
}

TEST(QuadTest, SeparatingAxis) {
    const std::array<PointD, 4> quad{PointD{10, 0}, {20, 10}, {10, 20}, {0, 10}};
    EXPECT_TRUE(box_intersects_quad({8, 8, 12, 12}, quad));
    EXPECT_FALSE(box_intersects_quad({0, 0, 3, 3}, quad));  // in the bbox corner, outside the diamond
    EXPECT_TRUE(box_intersects_quad({-5, 9, 1, 11}, quad));
    const auto wide = dilate_quad(quad, 5.0);
    EXPECT_TRUE(box_intersects_quad({0, 0, 3, 3}, wide));
}
