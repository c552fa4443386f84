#include <gtest/gtest.h>

#include <json.hpp>

#include "granulo/error.hpp"
#include "granulo/report.hpp"

using namespace granulo;

namespace {

AnalysisResult sample_result() {
    AnalysisResult r;
    r.calibration.pixel_per_mm = 14.2;
    r.calibration.min_resolvable_mm = 1.0 / 14.2;
    r.calibration.marker_id = 4;
    r.calibration.marker_quad = {PointD{400, 400}, {684, 400}, {684, 684}, {400, 684}};
    r.calibration.image_width = 3024;
    r.calibration.image_height = 4032;
    Particle p;
    p.rect = {{1000.123456789, 2000.5}, 71.0, 70.0, 12.5};
    p.size_mm = 70.5 / 14.2;
    p.area_px = 3959;
    p.area_mm2 = 3959 / (14.2 * 14.2);
    r.particles.push_back(p);
    r.rejected_count_by_reason[reject_reason::kMarker] = 1;
    return r;
}

GradationCurve sample_curve() {
    GradationCurve c;
    c.points = {{0.075, 0}, {2.0, 100.0 / 3.0}, {9.5, 100}};
    return c;
}

}  // namespace

TEST(ReportJson, KeyOrderAndValues) {
    const auto text = report_json(sample_result(), sample_curve(), indices(sample_curve()), {});
    const auto j = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"tool", "calibration", "params", "particle_count", "particles", "rejected",
                                              "gradation", "indices"}));
    EXPECT_EQ(j["tool"]["version"], tool_version());
    EXPECT_DOUBLE_EQ(j["calibration"]["pixel_per_mm"].get<double>(), 14.2);
    EXPECT_DOUBLE_EQ(j["calibration"]["min_resolvable_mm"].get<double>(), 0.0704225);
    EXPECT_EQ(j["params"]["block"], 301);
    EXPECT_EQ(j["params"]["c"], 72);
    EXPECT_EQ(j["params"]["ksize"], 5);
    EXPECT_EQ(j["particle_count"], 1);
    EXPECT_DOUBLE_EQ(j["particles"][0]["rect"]["cx"].get<double>(), 1000.12);
    EXPECT_EQ(j["rejected"]["marker_exclusion"], 1);
    EXPECT_DOUBLE_EQ(j["gradation"][1]["percent_finer"].get<double>(), 33.3333);
    EXPECT_TRUE(j["indices"]["d10_mm"].is_number());
}

TEST(ReportJson, AbsentIndicesAreNull) {
    GradationCurve c;
    c.points = {{0.075, 50}, {9.5, 100}};
    const auto j = nlohmann::json::parse(report_json(sample_result(), c, indices(c), {}));
    EXPECT_TRUE(j["indices"]["d10_mm"].is_null());
    EXPECT_TRUE(j["indices"]["cu"].is_null());
    EXPECT_FALSE(j["indices"]["d60_mm"].is_null());
}

TEST(ReportJson, Deterministic) {
    const auto a = report_json(sample_result(), sample_curve(), indices(sample_curve()), {});
    EXPECT_EQ(a, report_json(sample_result(), sample_curve(), indices(sample_curve()), {}));
    EXPECT_EQ(a.find("time"), std::string::npos);
}

TEST(ReportJson, CurveRoundTrip) {
    const auto text = report_json(sample_result(), sample_curve(), {}, {});
    const auto c = curve_from_report(text);
    ASSERT_EQ(c.points.size(), 3u);
    EXPECT_DOUBLE_EQ(c.points[1].percent_finer, 33.3333);
    EXPECT_EQ(c, round_curve(sample_curve(), 6));
    EXPECT_THROW(curve_from_report("{\"nope\": 1}"), ParseError);
    EXPECT_THROW(curve_from_report("not json"), ParseError);
}

TEST(ReportCsv, Projections) {
    const auto p = particles_csv(sample_result());
    EXPECT_EQ(p.substr(0, p.find('\n')), "index,size_mm,area_mm2,area_px,cx,cy,width_px,height_px,angle_deg");
    EXPECT_NE(p.find("\n0,4.96479,19.634,3959,1000.12,2000.5,71,70,12.5\n"), std::string::npos) << p;
    EXPECT_EQ(curve_csv(sample_curve()), "sieve_mm,percent_finer\n0.075,0\n2,33.3333\n9.5,100\n");
}

TEST(ReportSvg, PlotsEveryPoint) {
    const auto svg = gradation_svg(sample_curve());
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    EXPECT_EQ(circles, 3u);
    EXPECT_NE(svg.find("Percent finer"), std::string::npos);
}

TEST(Format, SixSignificantDigits) {
    EXPECT_EQ(format_number(14.2), "14.2");
    EXPECT_EQ(format_number(1.0 / 14.2), "0.0704225");
    EXPECT_EQ(format_number(123456789.0), "1.23457e+08");
    EXPECT_EQ(format_number(0.171234567), "0.171235");
}
