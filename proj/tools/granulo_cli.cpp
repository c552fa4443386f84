// granulo: soil gradation from a photograph with a square calibration marker.
//
//   granulo analyze <img> [flags]          report (JSON or CSV), optional SVG plot
//   granulo sweep <img> --ref <csv> ...    MAPE over a (block, c) grid
//   granulo synth <spec.json> --out <png> --truth <json>
//   granulo compare <report.json> <ref.csv> [--coarse lo:hi] [--fine lo:hi]
//
// stdout carries data only; diagnostics go to stderr.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "granulo/error.hpp"
#include "granulo/gradation.hpp"
#include "granulo/marker.hpp"
#include "granulo/particles.hpp"
#include "granulo/raster.hpp"
#include "granulo/report.hpp"
#include "granulo/synth.hpp"

namespace {

using namespace granulo;

namespace exit_code {
constexpr int kOk = 0;
constexpr int kDecode = 1;
constexpr int kNoMarker = 2;
constexpr int kEmptySample = 3;
constexpr int kBadRange = 4;
constexpr int kBadScene = 5;
constexpr int kCompare = 6;
constexpr int kUsage = 64;
constexpr int kInternal = 70;
}  // namespace exit_code

/// A failure that already knows its exit code.
struct CliFailure {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliFailure{code, message}; }

struct PipelineFlags {
    double marker_side_mm = 20.0;
    int block = 301;
    double c = 72.0;
    int ksize = 5;
    double sigma = 10.0;
    double min_area_mm2 = 0.01;
    bool keep_border = false;
    std::vector<double> sieves = SieveSpec{}.openings_mm;
    std::string marker_dict;

    PipelineParams params() const {
        PipelineParams p;
        p.blur.ksize = ksize;
        p.blur.sigma = sigma;
        p.threshold.block_size = block;
        p.threshold.c = c;
        p.min_area_mm2 = min_area_mm2;
        p.exclude_border_touching = !keep_border;
        return p;
    }
    SieveSpec sieve_spec() const { return SieveSpec{sieves}; }
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool with_threshold) {
    cmd->add_option("--marker-side-mm", f.marker_side_mm, "Marker side length in mm")->capture_default_str();
    if (with_threshold) {
        cmd->add_option("--block", f.block, "Adaptive threshold block size (odd)")->capture_default_str();
        cmd->add_option("--c", f.c, "Adaptive threshold offset")->capture_default_str();
    }
    cmd->add_option("--ksize", f.ksize, "Gaussian kernel size (odd)")->capture_default_str();
    cmd->add_option("--sigma", f.sigma, "Gaussian sigma in pixels")->capture_default_str();
    cmd->add_option("--min-area-mm2", f.min_area_mm2, "Smallest particle area kept")->capture_default_str();
    cmd->add_flag("--keep-border", f.keep_border, "Keep particles touching the image border");
    cmd->add_option("--sieves", f.sieves, "Sieve openings in mm, decreasing")->delimiter(',');
    cmd->add_option("--marker-dict", f.marker_dict, "Marker dictionary JSON (else $GRANULO_MARKER_DICT)");
}

MarkerDictionary load_dictionary(const PipelineFlags& f) {
    try {
        if (!f.marker_dict.empty()) return MarkerDictionary::load(f.marker_dict);
        return default_marker_dictionary();
    } catch (const Error& e) {
        fail(exit_code::kUsage, std::string("marker dictionary: ") + e.what());
    }
}

GrayImage load_gray(const std::string& path) {
    try {
        return to_grayscale(read_image(path));
    } catch (const DecodeError& e) {
        fail(exit_code::kDecode, path + ": " + e.what());
    } catch (const DimensionError& e) {
        fail(exit_code::kDecode, path + ": " + e.what());
    }
}

CalibrationResult locate_marker(const GrayImage& gray, const PipelineFlags& f) {
    const MarkerDictionary dict = load_dictionary(f);
    try {
        return calibrate(detect_marker(gray, dict), f.marker_side_mm);
    } catch (const NoMarkerFound& e) {
        fail(exit_code::kNoMarker, e.what());
    } catch (const AmbiguousMarker& e) {
        fail(exit_code::kNoMarker, e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) fail(exit_code::kInternal, "cannot write " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string curve_path_for(const std::string& out) {
    const auto dot = out.find_last_of('.');
    const auto slash = out.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + ".curve.csv";
    return out.substr(0, dot) + ".curve" + out.substr(dot);
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string image;
    PipelineFlags pipeline;
    std::string format = "json";
    std::string plot;
    std::string out;
    std::string curve_out;
};

int run_analyze(const AnalyzeArgs& a) {
    const PipelineParams params = a.pipeline.params();
    const SieveSpec sieves = a.pipeline.sieve_spec();
    try {
        params.validate();
        sieves.validate();
    } catch (const InvalidArgument& e) {
        fail(exit_code::kUsage, e.what());
    }

    const GrayImage gray = load_gray(a.image);
    const CalibrationResult calib = locate_marker(gray, a.pipeline);
    const AnalysisResult result = measure(gray, calib, params);

    GradationCurve curve;
    try {
        curve = build_curve(std::span<const Particle>(result.particles), sieves);
    } catch (const EmptySample& e) {
        fail(exit_code::kEmptySample, std::string(e.what()) + " (" + std::to_string(result.rejected_total()) +
                                          " contours rejected)");
    }
    const GradationIndices idx = indices(curve);

    if (a.format == "json") {
        const std::string text = report_json(result, curve, idx, ReportContext{a.pipeline.marker_side_mm, sieves});
        if (a.out.empty()) std::cout << text;
        else write_text(a.out, text);
    } else {
        const std::string parts = particles_csv(result);
        const std::string points = curve_csv(curve);
        std::string curve_target = a.curve_out;
        if (curve_target.empty() && !a.out.empty()) curve_target = curve_path_for(a.out);
        if (a.out.empty()) std::cout << parts;
        else write_text(a.out, parts);
        if (curve_target.empty()) std::cout << '\n' << points;
        else write_text(curve_target, points);
    }
    if (!a.plot.empty()) write_text(a.plot, gradation_svg(curve));

    std::cerr << result.particles.size() << " particles, P = " << format_number(calib.pixel_per_mm)
              << " px/mm (marker " << calib.marker_id << ")\n";
    return exit_code::kOk;
}

// ---- sweep -----------------------------------------------------------------

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;
};

/// "lo:hi:step" or a single value.
Range parse_range(const std::string& text, const char* what) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (!text.empty() && text.back() == ':') parts.push_back("");
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail(exit_code::kBadRange, std::string("malformed ") + what + " range '" + text + "'");
        }
        if (used != s.size() || !std::isfinite(v)) {
            fail(exit_code::kBadRange, std::string("malformed ") + what + " range '" + text + "'");
        }
        return v;
    };
    Range r;
    if (parts.size() == 1) {
        r.lo = r.hi = number(parts[0]);
    } else if (parts.size() == 3) {
        r.lo = number(parts[0]);
        r.hi = number(parts[1]);
        r.step = number(parts[2]);
    } else {
        fail(exit_code::kBadRange, std::string("malformed ") + what + " range '" + text + "' (want lo:hi:step)");
    }
    if (r.lo > r.hi) fail(exit_code::kBadRange, std::string(what) + " range '" + text + "' has lo > hi");
    if (!(r.step > 0.0)) fail(exit_code::kBadRange, std::string(what) + " range '" + text + "' needs step > 0");
    return r;
}

std::vector<double> expand(const Range& r) {
    const auto n = static_cast<long long>(std::floor((r.hi - r.lo) / r.step + 1e-9));
    if (n > 100000) fail(exit_code::kBadRange, "range has too many values");
    std::vector<double> out;
    for (long long i = 0; i <= n; ++i) out.push_back(r.lo + static_cast<double>(i) * r.step);
    return out;
}

std::vector<int> block_values(const std::string& text) {
    std::vector<int> out;
    for (double v : expand(parse_range(text, "block"))) {
        if (v != std::floor(v)) fail(exit_code::kBadRange, "block values must be integers");
        const int b = static_cast<int>(v);
        if (b < 3 || b % 2 == 0) {
            fail(exit_code::kBadRange, "block values must be odd and >= 3, got " + std::to_string(b));
        }
        out.push_back(b);
    }
    return out;
}

struct SweepArgs {
    std::string image;
    std::string ref;
    std::string block = "301";
    std::string c = "72";
    PipelineFlags pipeline;
    unsigned threads = 0;
};

int run_sweep(const SweepArgs& a) {
    const std::vector<int> blocks = block_values(a.block);
    const std::vector<double> cs = expand(parse_range(a.c, "c"));

    PipelineParams base = a.pipeline.params();
    const SieveSpec sieves = a.pipeline.sieve_spec();
    try {
        base.blur.validate();
        sieves.validate();
    } catch (const InvalidArgument& e) {
        fail(exit_code::kUsage, e.what());
    }

    GradationCurve reference;
    try {
        reference = load_reference_csv(a.ref);
    } catch (const ParseError& e) {
        fail(exit_code::kCompare, a.ref + ": " + e.what());
    }

    const GrayImage gray = load_gray(a.image);
    const CalibrationResult calib = locate_marker(gray, a.pipeline);

    SweepOptions options;
    options.curve_digits = kReportDigits;
    options.threads = a.threads;
    const SweepResult result = sweep(gray, calib, base, blocks, cs, reference, sieves, options);

    std::cout << "block,c,mape\n";
    for (const SweepRow& row : result.rows) {
        std::cout << row.block_size << ',' << format_number(row.c) << ','
                  << (row.mape ? format_number(*row.mape) : std::string("NA")) << '\n';
    }
    if (result.argmin) {
        const SweepRow& best = result.rows[*result.argmin];
        std::cout << "# argmin block=" << best.block_size << " c=" << format_number(best.c)
                  << " mape=" << format_number(*best.mape) << '\n';
    } else {
        std::cout << "# argmin NA\n";
    }
    return exit_code::kOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::string out;
    std::string truth;
    std::string marker_dict;
};

int run_synth(const SynthArgs& a) {
    MarkerDictionary dict;
    try {
        dict = a.marker_dict.empty() ? default_marker_dictionary() : MarkerDictionary::load(a.marker_dict);
    } catch (const Error& e) {
        fail(exit_code::kUsage, std::string("marker dictionary: ") + e.what());
    }
    RenderedScene scene;
    try {
        scene = render(scene_from_json(read_text(a.spec)), dict);
    } catch (const ParseError& e) {
        fail(exit_code::kBadScene, a.spec + ": " + e.what());
    } catch (const OverlapError& e) {
        fail(exit_code::kBadScene, a.spec + ": " + e.what());
    } catch (const OutOfBounds& e) {
        fail(exit_code::kBadScene, a.spec + ": " + e.what());
    } catch (const InvalidArgument& e) {
        fail(exit_code::kBadScene, a.spec + ": " + e.what());
    } catch (const DimensionError& e) {
        fail(exit_code::kBadScene, a.spec + ": " + e.what());
    }
    write_file(a.out, encode_png(scene.image));
    if (!a.truth.empty()) write_text(a.truth, truth_to_json(scene.truth));
    return exit_code::kOk;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
    std::string report;
    std::string ref;
    std::string coarse = "2:9.5";
    std::string fine = "0.075:0.425";
};

std::pair<double, double> parse_band(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    auto bad = [&]() { fail(exit_code::kUsage, std::string("malformed ") + what + " band '" + text + "' (want lo:hi)"); };
    if (colon == std::string::npos) bad();
    try {
        std::size_t u1 = 0, u2 = 0;
        const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
        const double lo = std::stod(a, &u1), hi = std::stod(b, &u2);
        if (u1 != a.size() || u2 != b.size() || lo > hi) bad();
        return {lo, hi};
    } catch (const std::invalid_argument&) {
        bad();
    } catch (const std::out_of_range&) {
        bad();
    }
    return {0.0, 0.0};
}

std::string band_text(const GradationCurve& measured, const GradationCurve& reference, double lo, double hi) {
    try {
        return format_number(band_mape(measured, reference, lo, hi));
    } catch (const AllReferenceZero&) {
        return "NA (no particles)";
    } catch (const NoSharedSieves&) {
        return "NA (no shared sieves)";
    }
}

int run_compare(const CompareArgs& a) {
    const auto coarse = parse_band(a.coarse, "coarse");
    const auto fine = parse_band(a.fine, "fine");
    GradationCurve measured, reference;
    try {
        measured = curve_from_report(read_text(a.report));
        reference = load_reference_csv(a.ref);
    } catch (const ParseError& e) {
        fail(exit_code::kCompare, e.what());
    }
    double overall = 0.0;
    try {
        overall = mape(measured, reference);
    } catch (const NoSharedSieves& e) {
        fail(exit_code::kCompare, e.what());
    } catch (const AllReferenceZero& e) {
        fail(exit_code::kCompare, e.what());
    }
    std::cout << "mape," << format_number(overall) << '\n';
    std::cout << "coarse[" << format_number(coarse.first) << ':' << format_number(coarse.second) << "],"
              << band_text(measured, reference, coarse.first, coarse.second) << '\n';
    std::cout << "fine[" << format_number(fine.first) << ':' << format_number(fine.second) << "],"
              << band_text(measured, reference, fine.first, fine.second) << '\n';
    return exit_code::kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soil gradation from a photograph with a square calibration marker"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* cmd_analyze = app.add_subcommand("analyze", "Measure particles and build the gradation curve");
    cmd_analyze->add_option("image", analyze.image, "PNG or JPEG photograph")->required();
    add_pipeline_flags(cmd_analyze, analyze.pipeline, true);
    cmd_analyze->add_option("--format", analyze.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd_analyze->add_option("--plot", analyze.plot, "Write an SVG gradation plot");
    cmd_analyze->add_option("--out", analyze.out, "Write the report here instead of stdout");
    cmd_analyze->add_option("--curve-out", analyze.curve_out, "CSV format: file for the curve rows");

    SweepArgs sweep_args;
    auto* cmd_sweep = app.add_subcommand("sweep", "MAPE over a grid of threshold parameters");
    cmd_sweep->add_option("image", sweep_args.image, "PNG or JPEG photograph")->required();
    cmd_sweep->add_option("--ref", sweep_args.ref, "Reference sieve CSV")->required();
    cmd_sweep->add_option("--block", sweep_args.block, "lo:hi:step or a single value")->capture_default_str();
    cmd_sweep->add_option("--c", sweep_args.c, "lo:hi:step or a single value")->capture_default_str();
    cmd_sweep->add_option("--threads", sweep_args.threads, "Worker threads (0 = all cores)");
    add_pipeline_flags(cmd_sweep, sweep_args.pipeline, false);

    SynthArgs synth_args;
    auto* cmd_synth = app.add_subcommand("synth", "Render a synthetic scene and its ground truth");
    cmd_synth->add_option("spec", synth_args.spec, "Scene JSON")->required();
    cmd_synth->add_option("--out", synth_args.out, "PNG output")->required();
    cmd_synth->add_option("--truth", synth_args.truth, "Ground-truth JSON output");
    cmd_synth->add_option("--marker-dict", synth_args.marker_dict, "Marker dictionary JSON");

    CompareArgs compare_args;
    auto* cmd_compare = app.add_subcommand("compare", "MAPE of a report's curve against sieve data");
    cmd_compare->add_option("report", compare_args.report, "Report JSON from analyze")->required();
    cmd_compare->add_option("ref", compare_args.ref, "Reference sieve CSV")->required();
    cmd_compare->add_option("--coarse", compare_args.coarse, "Coarse band lo:hi in mm")->capture_default_str();
    cmd_compare->add_option("--fine", compare_args.fine, "Fine band lo:hi in mm")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::kUsage;
    }

    try {
        if (cmd_analyze->parsed()) return run_analyze(analyze);
        if (cmd_sweep->parsed()) return run_sweep(sweep_args);
        if (cmd_synth->parsed()) return run_synth(synth_args);
        if (cmd_compare->parsed()) return run_compare(compare_args);
    } catch (const CliFailure& f) {
        std::cerr << "granulo: " << f.message << '\n';
        return f.code;
    } catch (const InvalidArgument& e) {
        std::cerr << "granulo: " << e.what() << '\n';
        return exit_code::kUsage;
    } catch (const std::exception& e) {
        std::cerr << "granulo: unexpected error: " << e.what() << '\n';
        return exit_code::kInternal;
    }
    return exit_code::kUsage;
}
