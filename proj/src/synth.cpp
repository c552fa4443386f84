#include "granulo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

namespace granulo {

namespace {

using nlohmann::ordered_json;

constexpr double kPi = std::numbers::pi;

PointD rotate(PointD p, double deg) {
    const double r = deg * kPi / 180.0;
    const double c = std::cos(r), s = std::sin(r);
    return PointD{c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Radius in pixels of a circle around the center that contains the shape.
double circumradius_px(const ShapeSpec& s, double ppm) {
    switch (s.kind) {
        case ShapeKind::disk:
            return s.diameter_mm * ppm / 2.0;
        case ShapeKind::ellipse:
            return std::max(s.major_mm, s.minor_mm) * ppm / 2.0;
        case ShapeKind::polygon: {
            double r = 0.0;
            for (const PointD& v : s.vertices_mm) r = std::max(r, std::hypot(v.x, v.y));
            return r * ppm;
        }
    }
    return 0.0;
}

void validate_shape(const ShapeSpec& s) {
    if (s.intensity < 0 || s.intensity > 255) throw InvalidArgument("shape intensity must be within [0, 255]");
    switch (s.kind) {
        case ShapeKind::disk:
            if (!(s.diameter_mm > 0.0)) throw InvalidArgument("disk diameter must be positive");
            break;
        case ShapeKind::ellipse:
            if (!(s.major_mm > 0.0) || !(s.minor_mm > 0.0)) throw InvalidArgument("ellipse axes must be positive");
            break;
        case ShapeKind::polygon:
            if (s.vertices_mm.size() < 3 || polygon_area(s.vertices_mm) <= 0.0) {
                throw InvalidArgument("polygon needs at least three non-collinear vertices");
            }
            break;
    }
}

bool point_in_polygon(const std::vector<PointD>& poly, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const PointD& a = poly[i];
        const PointD& b = poly[j];
        if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) inside = !inside;
    }
    return inside;
}

/// Calls fn(x, y) for every pixel whose center lies inside the shape.
template <typename Fn>
void for_each_shape_pixel(const ShapeSpec& s, double ppm, int w, int h, Fn&& fn) {
    const double rad = circumradius_px(s, ppm);
    const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - rad)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(s.center.x + rad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - rad)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(s.center.y + rad)));
    switch (s.kind) {
        case ShapeKind::disk: {
            const double r2 = rad * rad;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - s.center.x, dy = y - s.center.y;
                    if (dx * dx + dy * dy <= r2) fn(x, y);
                }
            break;
        }
        case ShapeKind::ellipse: {
            const double a = s.major_mm * ppm / 2.0, b = s.minor_mm * ppm / 2.0;
            const double r = s.angle_deg * kPi / 180.0;
            const double c = std::cos(r), sn = std::sin(r);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - s.center.x, dy = y - s.center.y;
                    const double u = c * dx + sn * dy, v = -sn * dx + c * dy;
                    if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) fn(x, y);
                }
            break;
        }
        case ShapeKind::polygon: {
            std::vector<PointD> poly;
            for (const PointD& v : s.vertices_mm) poly.push_back(PointD{s.center.x + v.x * ppm, s.center.y + v.y * ppm});
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    if (point_in_polygon(poly, x, y)) fn(x, y);
            break;
        }
    }
}

const char* kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::disk: return "disk";
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::polygon: return "polygon";
    }
    return "disk";
}

ordered_json point_json(PointD p) { return ordered_json::array({p.x, p.y}); }

PointD point_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("expected [x, y]");
    return PointD{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::array<PointD, 4> marker_corners(const MarkerSpec& m) {
    const PointD center{m.top_left.x + m.side_px / 2.0, m.top_left.y + m.side_px / 2.0};
    const double h = m.side_px / 2.0;
    std::array<PointD, 4> out;
    const std::array<PointD, 4> local{PointD{-h, -h}, PointD{h, -h}, PointD{h, h}, PointD{-h, h}};
    for (std::size_t i = 0; i < 4; ++i) {
        const PointD r = rotate(local[i], m.rotation_deg);
        out[i] = PointD{center.x + r.x, center.y + r.y};
    }
    return out;
}

GroundTruth ground_truth(const SceneSpec& spec) {
    GroundTruth t;
    t.pixel_per_mm = spec.pixel_per_mm;
    if (spec.marker) t.marker_corners = marker_corners(*spec.marker);
    for (const ShapeSpec& s : spec.shapes) {
        ShapeTruth st;
        switch (s.kind) {
            case ShapeKind::disk:
                st.true_size_mm = s.diameter_mm;
                st.true_area_mm2 = kPi * s.diameter_mm * s.diameter_mm / 4.0;
                break;
            case ShapeKind::ellipse:
                st.true_size_mm = (s.major_mm + s.minor_mm) / 2.0;
                st.true_area_mm2 = kPi * s.major_mm * s.minor_mm / 4.0;
                break;
            case ShapeKind::polygon: {
                const RotatedRect r = min_area_rect(s.vertices_mm);
                st.true_size_mm = (r.width + r.height) / 2.0;
                st.true_area_mm2 = polygon_area(s.vertices_mm);
                break;
            }
        }
        t.shapes.push_back(st);
    }
    return t;
}

RenderedScene render(const SceneSpec& spec, const MarkerDictionary& dict) {
    if (spec.width_px < 1 || spec.height_px < 1) throw InvalidArgument("scene dimensions must be positive");
    if (!(spec.pixel_per_mm > 0.0)) throw InvalidArgument("pixel_per_mm must be positive");
    if (spec.background_intensity < 0 || spec.background_intensity > 255 || spec.ink_intensity < 0 ||
        spec.ink_intensity > 255) {
        throw InvalidArgument("intensities must be within [0, 255]");
    }
    if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");

    const int w = spec.width_px, h = spec.height_px;
    GrayImage img(w, h, static_cast<std::uint8_t>(spec.background_intensity));
    // 0 = paper, 1 = marker, k + 2 = shape k.
    std::vector<std::uint16_t> owner(img.size(), 0);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };

    if (spec.marker) {
        const MarkerSpec& m = *spec.marker;
        const auto code = dict.codes.find(m.id);
        if (code == dict.codes.end()) throw InvalidArgument("marker id " + std::to_string(m.id) + " is not in the dictionary");
        if (!(m.side_px > 0.0)) throw InvalidArgument("marker side must be positive");
        const auto corners = marker_corners(m);
        double bx0 = 1e300, by0 = 1e300, bx1 = -1e300, by1 = -1e300;
        for (const PointD& c : corners) {
            if (c.x < -0.5 || c.y < -0.5 || c.x > w - 0.5 || c.y > h - 0.5) throw OutOfBounds("marker extends outside the image");
            bx0 = std::min(bx0, c.x); by0 = std::min(by0, c.y);
            bx1 = std::max(bx1, c.x); by1 = std::max(by1, c.y);
        }
        const int cells = dict.grid + 2;
        const double cell = m.side_px / cells;
        const PointD center{m.top_left.x + m.side_px / 2.0, m.top_left.y + m.side_px / 2.0};
        for (int y = std::max(0, static_cast<int>(std::floor(by0))); y <= std::min(h - 1, static_cast<int>(std::ceil(by1))); ++y) {
            for (int x = std::max(0, static_cast<int>(std::floor(bx0))); x <= std::min(w - 1, static_cast<int>(std::ceil(bx1))); ++x) {
                const PointD local = rotate(PointD{x - center.x, y - center.y}, -m.rotation_deg);
                const double u = local.x + m.side_px / 2.0, v = local.y + m.side_px / 2.0;
                if (u < 0.0 || v < 0.0 || u >= m.side_px || v >= m.side_px) continue;
                const int col = std::min(cells - 1, static_cast<int>(u / cell));
                const int row = std::min(cells - 1, static_cast<int>(v / cell));
                const bool border = row == 0 || col == 0 || row == cells - 1 || col == cells - 1;
                const bool white = !border && code->second[static_cast<std::size_t>((row - 1) * dict.grid + (col - 1))] == 1;
                img.at(x, y) = static_cast<std::uint8_t>(white ? spec.background_intensity : spec.ink_intensity);
                owner[idx(x, y)] = 1;
            }
        }
    }

    for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
        const ShapeSpec& s = spec.shapes[k];
        validate_shape(s);
        const double rad = circumradius_px(s, spec.pixel_per_mm);
        if (s.center.x - rad < 0.0 || s.center.y - rad < 0.0 || s.center.x + rad > w - 1 || s.center.y + rad > h - 1) {
            throw OutOfBounds("shape " + std::to_string(k) + " extends outside the image");
        }
        const auto tag = static_cast<std::uint16_t>(std::min<std::size_t>(k + 2, 65535));
        for_each_shape_pixel(s, spec.pixel_per_mm, w, h, [&](int x, int y) {
            auto& o = owner[idx(x, y)];
            if (o == 1) throw OverlapError("shape " + std::to_string(k) + " overlaps the marker");
            if (o != 0) throw OverlapError("shape " + std::to_string(k) + " overlaps shape " + std::to_string(o - 2));
            o = tag;
            img.at(x, y) = static_cast<std::uint8_t>(s.intensity);
        });
    }

    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (auto& p : img.pixels()) {
            const double v = std::floor(p + noise(rng) + 0.5);
            p = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return RenderedScene{std::move(img), ground_truth(spec)};
}

RenderedScene render(const SceneSpec& spec) { return render(spec, default_marker_dictionary()); }

SceneSpec scale_scene(const SceneSpec& spec, double factor, bool crop, int margin_px) {
    if (!(factor > 0.0)) throw InvalidArgument("scale factor must be positive");
    // Pixel i covers [i - 0.5, i + 0.5]; scale about the canvas corner.
    auto map = [factor](PointD p) { return PointD{(p.x + 0.5) * factor - 0.5, (p.y + 0.5) * factor - 0.5}; };
    SceneSpec out = spec;
    out.pixel_per_mm = spec.pixel_per_mm * factor;
    out.width_px = static_cast<int>(std::round(spec.width_px * factor));
    out.height_px = static_cast<int>(std::round(spec.height_px * factor));
    if (out.marker) {
        out.marker->side_px = spec.marker->side_px * factor;
        out.marker->top_left = map(spec.marker->top_left);
    }
    for (ShapeSpec& s : out.shapes) s.center = map(s.center);
    if (!crop) return out;

    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    auto grow = [&](PointD p, double r) {
        x0 = std::min(x0, p.x - r); y0 = std::min(y0, p.y - r);
        x1 = std::max(x1, p.x + r); y1 = std::max(y1, p.y + r);
    };
    if (out.marker) {
        for (const PointD& c : marker_corners(*out.marker)) grow(c, 0.0);
    }
    for (const ShapeSpec& s : out.shapes) grow(s.center, circumradius_px(s, out.pixel_per_mm));
    if (x0 > x1) return out;
    const int ox = std::max(0, static_cast<int>(std::floor(x0)) - margin_px);
    const int oy = std::max(0, static_cast<int>(std::floor(y0)) - margin_px);
    const int ex = std::min(out.width_px - 1, static_cast<int>(std::ceil(x1)) + margin_px);
    const int ey = std::min(out.height_px - 1, static_cast<int>(std::ceil(y1)) + margin_px);
    out.width_px = ex - ox + 1;
    out.height_px = ey - oy + 1;
    if (out.marker) out.marker->top_left = PointD{out.marker->top_left.x - ox, out.marker->top_left.y - oy};
    for (ShapeSpec& s : out.shapes) s.center = PointD{s.center.x - ox, s.center.y - oy};
    return out;
}

std::string scene_to_json(const SceneSpec& spec) {
    ordered_json j;
    j["width_px"] = spec.width_px;
    j["height_px"] = spec.height_px;
    j["pixel_per_mm"] = spec.pixel_per_mm;
    j["background_intensity"] = spec.background_intensity;
    j["ink_intensity"] = spec.ink_intensity;
    j["noise_sigma"] = spec.noise_sigma;
    j["seed"] = spec.seed;
    if (spec.marker) {
        const MarkerSpec& m = *spec.marker;
        j["marker"] = ordered_json{{"id", m.id}, {"side_px", m.side_px}, {"top_left", point_json(m.top_left)},
                                   {"rotation_deg", m.rotation_deg}};
    } else {
        j["marker"] = nullptr;
    }
    ordered_json shapes = ordered_json::array();
    for (const ShapeSpec& s : spec.shapes) {
        ordered_json o;
        o["kind"] = kind_name(s.kind);
        switch (s.kind) {
            case ShapeKind::disk:
                o["diameter_mm"] = s.diameter_mm;
                break;
            case ShapeKind::ellipse:
                o["major_mm"] = s.major_mm;
                o["minor_mm"] = s.minor_mm;
                o["angle_deg"] = s.angle_deg;
                break;
            case ShapeKind::polygon: {
                ordered_json v = ordered_json::array();
                for (const PointD& p : s.vertices_mm) v.push_back(point_json(p));
                o["vertices_mm"] = v;
                break;
            }
        }
        o["center"] = point_json(s.center);
        o["intensity"] = s.intensity;
        shapes.push_back(o);
    }
    j["shapes"] = shapes;
    return j.dump(2) + "\n";
}

SceneSpec scene_from_json(const std::string& text) {
    SceneSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        spec.width_px = j.at("width_px").get<int>();
        spec.height_px = j.at("height_px").get<int>();
        spec.pixel_per_mm = j.at("pixel_per_mm").get<double>();
        spec.background_intensity = j.value("background_intensity", 235);
        spec.ink_intensity = j.value("ink_intensity", 20);
        spec.noise_sigma = j.value("noise_sigma", 0.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("marker") && !j["marker"].is_null()) {
            const auto& m = j["marker"];
            MarkerSpec ms;
            ms.id = m.at("id").get<int>();
            ms.side_px = m.at("side_px").get<double>();
            ms.top_left = point_from(m.at("top_left"));
            ms.rotation_deg = m.value("rotation_deg", 0.0);
            spec.marker = ms;
        } else {
            spec.marker.reset();
        }
        for (const auto& o : j.value("shapes", nlohmann::json::array())) {
            ShapeSpec s;
            const std::string kind = o.at("kind").get<std::string>();
            if (kind == "disk") {
                s.kind = ShapeKind::disk;
                s.diameter_mm = o.at("diameter_mm").get<double>();
            } else if (kind == "ellipse") {
                s.kind = ShapeKind::ellipse;
                s.major_mm = o.at("major_mm").get<double>();
                s.minor_mm = o.at("minor_mm").get<double>();
                s.angle_deg = o.value("angle_deg", 0.0);
            } else if (kind == "polygon") {
                s.kind = ShapeKind::polygon;
                for (const auto& v : o.at("vertices_mm")) s.vertices_mm.push_back(point_from(v));
            } else {
                throw ParseError("unknown shape kind '" + kind + "'");
            }
            s.center = point_from(o.at("center"));
            s.intensity = o.value("intensity", 80);
            spec.shapes.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene spec: ") + e.what());
    }
    return spec;
}

std::string truth_to_json(const GroundTruth& truth) {
    ordered_json j;
    j["pixel_per_mm"] = truth.pixel_per_mm;
    if (truth.marker_corners) {
        ordered_json c = ordered_json::array();
        for (const PointD& p : *truth.marker_corners) c.push_back(point_json(p));
        j["marker_corners"] = c;
    } else {
        j["marker_corners"] = nullptr;
    }
    ordered_json shapes = ordered_json::array();
    for (const ShapeTruth& s : truth.shapes) {
        shapes.push_back(ordered_json{{"true_size_mm", s.true_size_mm}, {"true_area_mm2", s.true_area_mm2}});
    }
    j["shapes"] = shapes;
    return j.dump(2) + "\n";
}

}  // namespace granulo
