#include "granulo/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace granulo {

namespace {

using nlohmann::ordered_json;

double r6(double v) { return round_significant(v, kReportDigits); }

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(r6(*v)) : ordered_json(nullptr);
}

ordered_json point_json(const PointD& p) { return ordered_json::array({r6(p.x), r6(p.y)}); }

}  // namespace

std::string tool_version() { return GRANULO_VERSION; }

std::string format_number(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string report_json(const AnalysisResult& result, const GradationCurve& curve, const GradationIndices& idx,
                        const ReportContext& ctx) {
    ordered_json j;
    j["tool"] = ordered_json{{"name", "granulo"}, {"version", tool_version()}};

    const CalibrationResult& cal = result.calibration;
    ordered_json corners = ordered_json::array();
    for (const PointD& p : cal.marker_quad) corners.push_back(point_json(p));
    j["calibration"] = ordered_json{{"pixel_per_mm", r6(cal.pixel_per_mm)},
                                    {"min_resolvable_mm", r6(cal.min_resolvable_mm)},
                                    {"marker_id", cal.marker_id},
                                    {"marker_corners", corners},
                                    {"image_width", cal.image_width},
                                    {"image_height", cal.image_height}};

    const PipelineParams& p = result.params;
    ordered_json sieves = ordered_json::array();
    for (double s : ctx.sieves.openings_mm) sieves.push_back(r6(s));
    j["params"] = ordered_json{{"marker_side_mm", r6(ctx.marker_side_mm)},
                               {"ksize", p.blur.ksize},
                               {"sigma", r6(p.blur.sigma)},
                               {"block", p.threshold.block_size},
                               {"c", r6(p.threshold.c)},
                               {"min_area_mm2", r6(p.min_area_mm2)},
                               {"marker_exclusion_margin_px", p.marker_exclusion_margin_px},
                               {"exclude_border_touching", p.exclude_border_touching},
                               {"sieves_mm", sieves}};

    ordered_json particles = ordered_json::array();
    for (const Particle& q : result.particles) {
        particles.push_back(ordered_json{
            {"size_mm", r6(q.size_mm)},
            {"area_mm2", r6(q.area_mm2)},
            {"area_px", q.area_px},
            {"rect", ordered_json{{"cx", r6(q.rect.center.x)},
                                  {"cy", r6(q.rect.center.y)},
                                  {"width", r6(q.rect.width)},
                                  {"height", r6(q.rect.height)},
                                  {"angle", r6(q.rect.angle)}}}});
    }
    j["particle_count"] = result.particles.size();
    j["particles"] = particles;

    ordered_json rejected;
    for (const auto& [reason, count] : result.rejected_count_by_reason) rejected[reason] = count;
    j["rejected"] = rejected;

    ordered_json points = ordered_json::array();
    for (const CurvePoint& c : curve.points) {
        points.push_back(ordered_json{{"sieve_mm", r6(c.opening_mm)}, {"percent_finer", r6(c.percent_finer)}});
    }
    j["gradation"] = points;
    j["indices"] = ordered_json{{"d10_mm", optional_number(idx.d10_mm)},
                                {"d30_mm", optional_number(idx.d30_mm)},
                                {"d60_mm", optional_number(idx.d60_mm)},
                                {"cu", optional_number(idx.cu)},
                                {"cc", optional_number(idx.cc)}};
    return j.dump(2) + "\n";
}

std::string particles_csv(const AnalysisResult& result) {
    std::ostringstream out;
    out << "index,size_mm,area_mm2,area_px,cx,cy,width_px,height_px,angle_deg\n";
    for (std::size_t i = 0; i < result.particles.size(); ++i) {
        const Particle& q = result.particles[i];
        out << i << ',' << format_number(q.size_mm) << ',' << format_number(q.area_mm2) << ',' << q.area_px << ','
            << format_number(q.rect.center.x) << ',' << format_number(q.rect.center.y) << ','
            << format_number(q.rect.width) << ',' << format_number(q.rect.height) << ','
            << format_number(q.rect.angle) << '\n';
    }
    return out.str();
}

std::string curve_csv(const GradationCurve& curve) {
    std::ostringstream out;
    out << "sieve_mm,percent_finer\n";
    for (const CurvePoint& c : curve.points) {
        out << format_number(c.opening_mm) << ',' << format_number(c.percent_finer) << '\n';
    }
    return out.str();
}

std::string gradation_svg(const GradationCurve& curve) {
    constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
    constexpr double kLogMin = -2.0, kLogMax = 2.0;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto sx = [&](double mm) {
        const double l = std::clamp(std::log10(mm), kLogMin, kLogMax);
        return kLeft + (l - kLogMin) / (kLogMax - kLogMin) * pw;
    };
    auto sy = [&](double pct) { return kTop + (1.0 - pct / 100.0) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    for (int e = -2; e <= 2; ++e) {
        for (int m = 1; m <= 9; ++m) {
            const double mm = m * std::pow(10.0, e);
            if (mm > 100.0) break;
            const double x = sx(mm);
            out << "<line x1=\"" << format_number(x) << "\" y1=\"" << kTop << "\" x2=\"" << format_number(x)
                << "\" y2=\"" << kTop + ph << "\" stroke=\"" << (m == 1 ? "#999" : "#ddd") << "\"/>\n";
        }
        out << "<text x=\"" << format_number(sx(std::pow(10.0, e))) << "\" y=\"" << kH - 30
            << "\" font-size=\"11\" text-anchor=\"middle\">" << format_number(std::pow(10.0, e)) << "</text>\n";
    }
    for (int pct = 0; pct <= 100; pct += 20) {
        out << "<line x1=\"" << kLeft << "\" y1=\"" << format_number(sy(pct)) << "\" x2=\"" << kLeft + pw
            << "\" y2=\"" << format_number(sy(pct)) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << format_number(sy(pct) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << pct << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 8
        << "\" font-size=\"12\" text-anchor=\"middle\">Particle size (mm)</text>\n";
    out << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << kTop + ph / 2 << ")\">Percent finer (%)</text>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) out << ' ';
        out << format_number(sx(curve.points[i].opening_mm)) << ',' << format_number(sy(curve.points[i].percent_finer));
    }
    out << "\"/>\n";
    for (const CurvePoint& c : curve.points) {
        out << "<circle cx=\"" << format_number(sx(c.opening_mm)) << "\" cy=\"" << format_number(sy(c.percent_finer))
            << "\" r=\"3\" fill=\"#1f4e9c\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

GradationCurve curve_from_report(const std::string& json_text) {
    GradationCurve curve;
    try {
        const auto j = nlohmann::json::parse(json_text);
        for (const auto& p : j.at("gradation")) {
            curve.points.push_back(CurvePoint{p.at("sieve_mm").get<double>(), p.at("percent_finer").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.opening_mm < b.opening_mm; });
    return curve;
}

}  // namespace granulo
