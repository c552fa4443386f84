#include "granulo/marker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <json.hpp>

#include "granulo/filter.hpp"

namespace granulo {

namespace {

int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

double sample_bilinear(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
    const double bottom = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
    return top * (1 - fy) + bottom * fy;
}

struct Line {
    PointD point;
    PointD dir;  // unit
};

std::optional<PointD> intersect(const Line& a, const Line& b) {
    const double det = a.dir.x * b.dir.y - a.dir.y * b.dir.x;
    if (std::abs(det) < 1e-12) {
        return std::nullopt;
    }
    const double dx = b.point.x - a.point.x;
    const double dy = b.point.y - a.point.y;
    const double t = (dx * b.dir.y - dy * b.dir.x) / det;
    return PointD{a.point.x + t * a.dir.x, a.point.y + t * a.dir.y};
}

/// Total-least-squares line through the contour points near the middle of
/// side a->b, moved outward by half the mean pixel-center inset.
Line fit_side(const std::vector<PointD>& contour, PointD a, PointD b, PointD centroid) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double ux = (b.x - a.x) / len, uy = (b.y - a.y) / len;
    const double band = std::max(2.0, 0.05 * len);

    double sx = 0, sy = 0;
    std::vector<PointD> sel;
    for (const PointD& p : contour) {
        const double px = p.x - a.x, py = p.y - a.y;
        const double t = (px * ux + py * uy) / len;
        const double d = std::abs(px * uy - py * ux);
        if (t >= 0.15 && t <= 0.85 && d <= band) {
            sel.push_back(p);
            sx += p.x;
            sy += p.y;
        }
    }
    Line line{a, PointD{ux, uy}};
    if (sel.size() >= 2) {
        const double mx = sx / static_cast<double>(sel.size());
        const double my = sy / static_cast<double>(sel.size());
        double sxx = 0, sxy = 0, syy = 0;
        for (const PointD& p : sel) {
            sxx += (p.x - mx) * (p.x - mx);
            sxy += (p.x - mx) * (p.y - my);
            syy += (p.y - my) * (p.y - my);
        }
        const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
        PointD dir{std::cos(theta), std::sin(theta)};
        if (dir.x * ux + dir.y * uy < 0) dir = PointD{-dir.x, -dir.y};
        line = Line{PointD{mx, my}, dir};
    }
    // Boundary pixel centers sit on average half a pixel step inside the
    // true edge, measured perpendicular to it.
    PointD normal{line.dir.y, -line.dir.x};
    const double to_centroid = (centroid.x - line.point.x) * normal.x + (centroid.y - line.point.y) * normal.y;
    if (to_centroid > 0) normal = PointD{-normal.x, -normal.y};
    const double inset = 0.5 * std::max(std::abs(line.dir.x), std::abs(line.dir.y));
    line.point = PointD{line.point.x + normal.x * inset, line.point.y + normal.y * inset};
    return line;
}

std::optional<std::array<PointD, 4>> refine_quad(const std::vector<PointD>& contour,
                                                 const std::vector<PointD>& quad) {
    PointD centroid{0, 0};
    for (const PointD& q : quad) {
        centroid.x += q.x / 4.0;
        centroid.y += q.y / 4.0;
    }
    std::array<Line, 4> lines;
    for (std::size_t i = 0; i < 4; ++i) {
        lines[i] = fit_side(contour, quad[i], quad[(i + 1) % 4], centroid);
    }
    std::array<PointD, 4> out;
    for (std::size_t i = 0; i < 4; ++i) {
        auto p = intersect(lines[(i + 3) % 4], lines[i]);
        if (!p) return std::nullopt;
        out[i] = *p;
    }
    return out;
}

struct Decoded {
    int id = -1;
    int errors = 0;
    std::array<PointD, 4> corners{};
};

/// Samples the (grid + 2)^2 cells of the quad whose corners are taken as
/// top-left, top-right, bottom-right, bottom-left.
std::optional<std::vector<std::uint8_t>> sample_bits(const GrayImage& img, const std::array<PointD, 4>& quad,
                                                     int grid, const MarkerDetectorParams& params) {
    const int cells = grid + 2;
    const double side = static_cast<double>(cells * params.cell_px);
    const std::array<PointD, 4> canonical{PointD{0, 0}, PointD{side, 0}, PointD{side, side}, PointD{0, side}};
    Homography h;
    try {
        h = homography_from_quads(canonical, quad);
    } catch (const InvalidArgument&) {
        return std::nullopt;
    }
    const int s = params.cell_px;
    const int lo = s / 4;
    const int hi = s - s / 4;
    std::vector<double> means(static_cast<std::size_t>(cells * cells));
    for (int r = 0; r < cells; ++r) {
        for (int c = 0; c < cells; ++c) {
            double total = 0;
            int count = 0;
            for (int j = lo; j < hi; ++j) {
                for (int i = lo; i < hi; ++i) {
                    const PointD p = map_point(h, PointD{c * s + i + 0.5, r * s + j + 0.5});
                    total += sample_bilinear(img, p.x, p.y);
                    ++count;
                }
            }
            means[static_cast<std::size_t>(r * cells + c)] = total / count;
        }
    }
    const auto [mn, mx] = std::minmax_element(means.begin(), means.end());
    if (*mx - *mn < params.min_cell_contrast) {
        return std::nullopt;
    }
    const double mid = (*mn + *mx) / 2.0;
    std::vector<std::uint8_t> bits;
    bits.reserve(static_cast<std::size_t>(grid * grid));
    for (int r = 0; r < cells; ++r) {
        for (int c = 0; c < cells; ++c) {
            const bool white = means[static_cast<std::size_t>(r * cells + c)] >= mid;
            const bool border = r == 0 || c == 0 || r == cells - 1 || c == cells - 1;
            if (border) {
                if (white) return std::nullopt;
            } else {
                bits.push_back(white ? 1 : 0);
            }
        }
    }
    return bits;
}

std::optional<Decoded> decode_quad(const GrayImage& img, const std::array<PointD, 4>& ordered,
                                   const MarkerDictionary& dict, const MarkerDetectorParams& params) {
    std::optional<Decoded> best;
    for (int k = 0; k < 4; ++k) {
        std::array<PointD, 4> quad;
        for (int i = 0; i < 4; ++i) quad[static_cast<std::size_t>(i)] = ordered[static_cast<std::size_t>((i + k) % 4)];
        const auto bits = sample_bits(img, quad, dict.grid, params);
        if (!bits) {
            continue;
        }
        for (const auto& [id, code] : dict.codes) {
            const int d = hamming(*bits, code);
            if (d <= dict.max_hamming_correction && (!best || d < best->errors)) {
                best = Decoded{id, d, quad};
            }
        }
    }
    return best;
}

int auto_block_size(const GrayImage& img) {
    int block = std::max(31, std::min(img.width(), img.height()) / 8);
    if (block % 2 == 0) ++block;
    return block;
}

}  // namespace

std::vector<std::uint8_t> rotate_bits_cw(const std::vector<std::uint8_t>& bits, int n) {
    std::vector<std::uint8_t> out(bits.size());
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            // (r, c) moves to (c, n - 1 - r)
            out[static_cast<std::size_t>(c * n + (n - 1 - r))] = bits[static_cast<std::size_t>(r * n + c)];
        }
    }
    return out;
}

int MarkerDictionary::min_rotational_distance() const {
    int best = std::numeric_limits<int>::max();
    for (auto a = codes.begin(); a != codes.end(); ++a) {
        std::vector<std::uint8_t> rot = a->second;
        for (int k = 0; k < 4; ++k) {
            if (k > 0) best = std::min(best, hamming(rot, a->second));
            for (auto b = std::next(a); b != codes.end(); ++b) {
                best = std::min(best, hamming(rot, b->second));
            }
            rot = rotate_bits_cw(rot, grid);
        }
    }
    return best;
}

void MarkerDictionary::validate() const {
    if (grid < 2) {
        throw InvalidArgument("marker dictionary grid must be >= 2");
    }
    if (max_hamming_correction < 0) {
        throw InvalidArgument("max_hamming_correction must be >= 0");
    }
    if (codes.empty()) {
        throw InvalidArgument("marker dictionary has no codes");
    }
    for (const auto& [id, code] : codes) {
        if (code.size() != static_cast<std::size_t>(grid * grid)) {
            throw InvalidArgument("marker code " + std::to_string(id) + " has the wrong size");
        }
        for (auto b : code) {
            if (b > 1) throw InvalidArgument("marker code " + std::to_string(id) + " is not binary");
        }
    }
    if (min_rotational_distance() <= 2 * max_hamming_correction) {
        throw InvalidArgument("marker codes are not separable at the configured correction distance");
    }
}

MarkerDictionary MarkerDictionary::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("marker dictionary: ") + e.what());
    }
    MarkerDictionary dict;
    try {
        dict.grid = j.at("grid").get<int>();
        dict.max_hamming_correction = j.value("max_hamming_correction", 1);
        for (const auto& [key, rows] : j.at("codes").items()) {
            std::vector<std::uint8_t> bits;
            if (rows.size() != static_cast<std::size_t>(dict.grid)) {
                throw InvalidArgument("marker code " + key + " has the wrong number of rows");
            }
            for (const auto& row : rows) {
                if (row.size() != static_cast<std::size_t>(dict.grid)) {
                    throw InvalidArgument("marker code " + key + " has a row of the wrong length");
                }
                for (const auto& b : row) bits.push_back(static_cast<std::uint8_t>(b.get<int>()));
            }
            dict.codes.emplace(std::stoi(key), std::move(bits));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("marker dictionary: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ParseError("marker dictionary: code ids must be integers");
    }
    dict.validate();
    return dict;
}

MarkerDictionary MarkerDictionary::load(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    return from_json(std::string(bytes.begin(), bytes.end()));
}

std::filesystem::path bundled_marker_dictionary_path() { return GRANULO_DEFAULT_DICT; }

MarkerDictionary default_marker_dictionary() {
    if (const char* env = std::getenv("GRANULO_MARKER_DICT"); env && *env) {
        return MarkerDictionary::load(env);
    }
    return MarkerDictionary::load(bundled_marker_dictionary_path());
}

Homography homography_from_quads(const std::array<PointD, 4>& src, const std::array<PointD, 4>& dst) {
    // h = [a b c; d e f; g h 1]; two equations per correspondence.
    double m[8][9] = {};
    for (int i = 0; i < 4; ++i) {
        const double u = src[static_cast<std::size_t>(i)].x, v = src[static_cast<std::size_t>(i)].y;
        const double x = dst[static_cast<std::size_t>(i)].x, y = dst[static_cast<std::size_t>(i)].y;
        double* r0 = m[2 * i];
        double* r1 = m[2 * i + 1];
        r0[0] = u; r0[1] = v; r0[2] = 1; r0[6] = -u * x; r0[7] = -v * x; r0[8] = x;
        r1[3] = u; r1[4] = v; r1[5] = 1; r1[6] = -u * y; r1[7] = -v * y; r1[8] = y;
    }
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) < 1e-12) {
            throw InvalidArgument("degenerate quadrilateral for homography");
        }
        if (pivot != col) {
            for (int k = 0; k < 9; ++k) std::swap(m[col][k], m[pivot][k]);
        }
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int k = col; k < 9; ++k) m[r][k] -= f * m[col][k];
        }
    }
    Homography h{};
    for (int i = 0; i < 8; ++i) h[static_cast<std::size_t>(i)] = m[i][8] / m[i][i];
    h[8] = 1.0;
    return h;
}

PointD map_point(const Homography& h, PointD p) {
    const double w = h[6] * p.x + h[7] * p.y + h[8];
    return PointD{(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

MarkerDetection detect_marker(const GrayImage& img, const MarkerDictionary& dict,
                              const MarkerDetectorParams& params) {
    ThresholdParams tp;
    tp.block_size = params.block_size > 0 ? params.block_size : auto_block_size(img);
    tp.c = params.c;
    const BinaryImage bin = adaptive_threshold(img, tp);
    const std::vector<Contour> contours = trace_external_contours(bin);

    std::vector<Decoded> found;
    for (const Contour& contour : contours) {
        if (contour.points.size() < 16) continue;
        const Box box = bounding_box(contour);
        const double box_area = static_cast<double>(box.x1 - box.x0 + 1) * (box.y1 - box.y0 + 1);
        if (box_area < params.min_area_px) continue;

        const std::vector<PointD> pts = to_points(contour);
        const double eps = params.approx_epsilon_ratio * static_cast<double>(pts.size());
        const std::vector<PointD> quad = approx_polygon(pts, eps);
        if (quad.size() != 4 || !is_convex(quad) || polygon_area(quad) < params.min_area_px) continue;

        auto refined = refine_quad(pts, quad);
        if (!refined || !is_convex(*refined)) continue;
        // The contour runs counterclockwise on screen; the canonical corner
        // order runs clockwise.
        const std::array<PointD, 4> ordered{(*refined)[0], (*refined)[3], (*refined)[2], (*refined)[1]};
        if (auto dec = decode_quad(img, ordered, dict, params)) {
            found.push_back(*dec);
        }
    }
    if (found.empty()) {
        throw NoMarkerFound("no marker from the dictionary was found in the image");
    }
    if (found.size() > 1) {
        throw AmbiguousMarker("found " + std::to_string(found.size()) + " decodable marker candidates");
    }
    MarkerDetection det;
    det.id = found.front().id;
    det.corners = found.front().corners;
    det.perimeter_px = perimeter(det.corners);
    det.image_width = img.width();
    det.image_height = img.height();
    return det;
}

CalibrationResult calibrate(const MarkerDetection& det, double marker_side_mm) {
    if (!(marker_side_mm > 0.0) || !std::isfinite(marker_side_mm)) {
        throw InvalidSide("marker side must be positive, got " + std::to_string(marker_side_mm));
    }
    if (!(det.perimeter_px > 0.0)) {
        throw InvalidArgument("marker perimeter must be positive");
    }
    CalibrationResult out;
    out.pixel_per_mm = det.perimeter_px / (4.0 * marker_side_mm);
    out.min_resolvable_mm = 1.0 / out.pixel_per_mm;
    out.marker_id = det.id;
    out.marker_quad = det.corners;
    out.image_width = det.image_width;
    out.image_height = det.image_height;
    return out;
}

}  // namespace granulo
