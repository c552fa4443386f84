#pragma once

#include <string>

#include "granulo/gradation.hpp"
#include "granulo/particles.hpp"

namespace granulo {

inline constexpr int kReportDigits = 6;

std::string tool_version();

/// Everything an analysis report echoes back besides the measurement itself.
struct ReportContext {
    double marker_side_mm = 20.0;
    SieveSpec sieves;
};

/// Canonical JSON report: fixed key order, numbers rounded to six
/// significant digits, no timestamps.
std::string report_json(const AnalysisResult& result, const GradationCurve& curve, const GradationIndices& idx,
                        const ReportContext& ctx);

/// One row per particle.
std::string particles_csv(const AnalysisResult& result);
/// One row per curve point, ascending opening.
std::string curve_csv(const GradationCurve& curve);

/// Percent finer against a log10 opening axis spanning 0.01 to 100 mm.
std::string gradation_svg(const GradationCurve& curve);

/// Gradation curve stored in a report produced by report_json().
GradationCurve curve_from_report(const std::string& json_text);

/// "%.6g"-style formatting used for every number the CLI prints.
std::string format_number(double v, int digits = kReportDigits);

}  // namespace granulo
