#include "granulo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace granulo {

namespace {

// Neighbor offsets in counterclockwise order as seen on screen (y down),
// starting from west.
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d) {
        if (kDx[d] == dx && kDy[d] == dy) {
            return d;
        }
    }
    return -1;
}

class BorderTracer {
public:
    explicit BorderTracer(const BinaryImage& img) : img_(img) {}

    bool foreground(int x, int y) const noexcept {
        return img_.contains(x, y) && img_.at(x, y) != 0;
    }

    /// One Moore-neighbor step from `cur`, scanning counterclockwise starting
    /// after the background neighbor `back`. Returns false for an isolated
    /// pixel.
    bool step(Point cur, int back, Point& next, int& next_back) const noexcept {
        for (int i = 1; i < 8; ++i) {
            const int d = (back + i) % 8;
            const Point cand{cur.x + kDx[d], cur.y + kDy[d]};
            if (foreground(cand.x, cand.y)) {
                const int prev = (d + 7) % 8;
                const Point bg{cur.x + kDx[prev], cur.y + kDy[prev]};
                next = cand;
                next_back = direction_of(bg.x - cand.x, bg.y - cand.y);
                return true;
            }
        }
        return false;
    }

    /// Traces the outer border starting at the component's first pixel in
    /// raster order, whose west neighbor is background. Stops once the
    /// start pixel is left again towards the same successor as the first
    /// time (Jacob's criterion).
    std::vector<Point> trace(Point start, std::int64_t component_pixels) const {
        std::vector<Point> points{start};
        Point next;
        int next_back = 0;
        if (!step(start, 0, next, next_back)) {
            return points;
        }
        const Point second = next;
        // A border pixel is visited at most four times.
        const std::int64_t limit = 4 * component_pixels + 8;
        for (std::int64_t guard = 0; guard < limit; ++guard) {
            const Point cur = next;
            const int back = next_back;
            step(cur, back, next, next_back);
            if (cur == start && next == second) {
                break;
            }
            points.push_back(cur);
        }
        return points;
    }

private:
    const BinaryImage& img_;
};

double cross(const PointD& o, const PointD& a, const PointD& b) noexcept {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double distance_to_segment(const PointD& p, const PointD& a, const PointD& b) noexcept {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) {
        return std::hypot(p.x - a.x, p.y - a.y);
    }
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Open-chain RDP over pts[first..last], marking kept vertices.
void rdp(std::span<const PointD> pts, std::size_t first, std::size_t last, double epsilon,
         std::vector<char>& keep) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        if (b <= a + 1) {
            continue;
        }
        double best = -1.0;
        std::size_t best_i = a;
        for (std::size_t i = a + 1; i < b; ++i) {
            const double d = distance_to_segment(pts[i], pts[a], pts[b]);
            if (d > best) {
                best = d;
                best_i = i;
            }
        }
        if (best > epsilon) {
            keep[best_i] = 1;
            stack.emplace_back(a, best_i);
            stack.emplace_back(best_i, b);
        }
    }
}

double normalize_degrees(double deg) {
    double a = std::fmod(deg, 180.0);
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a;
}

}  // namespace

std::array<PointD, 4> RotatedRect::corners() const {
    const double rad = angle * std::numbers::pi / 180.0;
    const double ux = std::cos(rad), uy = std::sin(rad);
    const double vx = -uy, vy = ux;
    const double hw = width / 2.0, hh = height / 2.0;
    return {PointD{center.x - ux * hw - vx * hh, center.y - uy * hw - vy * hh},
            PointD{center.x + ux * hw - vx * hh, center.y + uy * hw - vy * hh},
            PointD{center.x + ux * hw + vx * hh, center.y + uy * hw + vy * hh},
            PointD{center.x - ux * hw + vx * hh, center.y - uy * hw + vy * hh}};
}

std::vector<Contour> trace_external_contours(const BinaryImage& img) {
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.size();
    auto px = img.pixels();
    auto index = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };

    // Background reachable from outside the image through 4-connected
    // background. A component is external iff the pixel west of its first
    // raster pixel belongs to this region.
    std::vector<std::uint8_t> outside(n, 0);
    std::vector<std::size_t> stack;
    auto seed_outside = [&](int x, int y) {
        const std::size_t i = index(x, y);
        if (px[i] == 0 && !outside[i]) {
            outside[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed_outside(x, 0);
        seed_outside(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed_outside(0, y);
        seed_outside(w - 1, y);
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        if (x > 0) seed_outside(x - 1, y);
        if (x + 1 < w) seed_outside(x + 1, y);
        if (y > 0) seed_outside(x, y - 1);
        if (y + 1 < h) seed_outside(x, y + 1);
    }

    std::vector<std::uint8_t> visited(n, 0);
    const BorderTracer tracer(img);
    std::vector<Contour> contours;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = index(x, y);
            if (px[start] == 0 || visited[start]) {
                continue;
            }
            // 8-connected flood fill to count the component.
            std::int64_t count = 0;
            visited[start] = 1;
            stack.push_back(start);
            while (!stack.empty()) {
                const std::size_t i = stack.back();
                stack.pop_back();
                ++count;
                const int cx = static_cast<int>(i % static_cast<std::size_t>(w));
                const int cy = static_cast<int>(i / static_cast<std::size_t>(w));
                for (int d = 0; d < 8; ++d) {
                    const int nx = cx + kDx[d];
                    const int ny = cy + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t j = index(nx, ny);
                    if (px[j] != 0 && !visited[j]) {
                        visited[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
            const bool external = x == 0 || outside[start - 1];
            if (!external) {
                continue;
            }
            Contour c;
            c.points = tracer.trace(Point{x, y}, count);
            c.pixel_count = count;
            contours.push_back(std::move(c));
        }
    }
    return contours;
}

Box bounding_box(const Contour& contour) {
    Box b{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
          std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
    for (const Point& p : contour.points) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

double signed_area(std::span<const PointD> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const PointD& a = polygon[i];
        const PointD& b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return twice / 2.0;
}

double polygon_area(std::span<const PointD> polygon) { return std::abs(signed_area(polygon)); }

double perimeter(std::span<const PointD> polygon) {
    const std::size_t n = polygon.size();
    if (n < 2) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const PointD& a = polygon[i];
        const PointD& b = polygon[(i + 1) % n];
        total += std::hypot(b.x - a.x, b.y - a.y);
    }
    return total;
}

std::vector<PointD> to_points(const Contour& contour) {
    std::vector<PointD> out;
    out.reserve(contour.points.size());
    for (const Point& p : contour.points) {
        out.push_back(PointD{static_cast<double>(p.x), static_cast<double>(p.y)});
    }
    return out;
}

double contour_area(const Contour& contour) { return polygon_area(to_points(contour)); }

std::vector<PointD> pixel_corners(const Contour& contour) {
    std::vector<PointD> out;
    out.reserve(contour.points.size() * 4);
    for (const Point& p : contour.points) {
        const double x = p.x, y = p.y;
        out.push_back({x - 0.5, y - 0.5});
        out.push_back({x + 0.5, y - 0.5});
        out.push_back({x + 0.5, y + 0.5});
        out.push_back({x - 0.5, y + 0.5});
    }
    return out;
}

std::vector<PointD> convex_hull(std::span<const PointD> points) {
    std::vector<PointD> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const PointD& a, const PointD& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        return pts;
    }
    std::vector<PointD> hull(2 * pts.size());
    std::size_t k = 0;
    for (const PointD& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        const PointD& p = pts[i];
        while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

RotatedRect min_area_rect(std::span<const PointD> points) {
    if (points.empty()) {
        throw InvalidArgument("min_area_rect needs at least one point");
    }
    const std::vector<PointD> hull = convex_hull(points);
    const std::size_t h = hull.size();
    if (h == 1) {
        return RotatedRect{hull[0], 0.0, 0.0, 0.0};
    }
    if (h == 2) {
        const double dx = hull[1].x - hull[0].x;
        const double dy = hull[1].y - hull[0].y;
        const double len = std::hypot(dx, dy);
        const double deg = normalize_degrees(std::atan2(dy, dx) * 180.0 / std::numbers::pi);
        const PointD mid{(hull[0].x + hull[1].x) / 2.0, (hull[0].y + hull[1].y) / 2.0};
        if (deg >= 90.0) {
            return RotatedRect{mid, 0.0, len, deg - 90.0};
        }
        return RotatedRect{mid, len, 0.0, deg};
    }

    auto next = [h](std::size_t i) { return (i + 1) % h; };
    auto dot = [](const PointD& p, double ux, double uy) { return p.x * ux + p.y * uy; };

    RotatedRect best;
    double best_area = std::numeric_limits<double>::infinity();
    // Calipers: indices of the extreme points along the edge direction (max),
    // along the inward normal (max) and against the edge direction (min).
    std::size_t i_max_u = 1, i_max_v = 1, i_min_u = 1;
    for (std::size_t e = 0; e < h; ++e) {
        const PointD& a = hull[e];
        const PointD& b = hull[next(e)];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const double ux = (b.x - a.x) / len, uy = (b.y - a.y) / len;
        const double vx = -uy, vy = ux;

        if (e == 0) {
            for (std::size_t i = 0; i < h; ++i) {
                if (dot(hull[i], ux, uy) > dot(hull[i_max_u], ux, uy)) i_max_u = i;
                if (dot(hull[i], vx, vy) > dot(hull[i_max_v], vx, vy)) i_max_v = i;
                if (dot(hull[i], ux, uy) < dot(hull[i_min_u], ux, uy)) i_min_u = i;
            }
        } else {
            for (std::size_t guard = 0; guard < h && dot(hull[next(i_max_u)], ux, uy) > dot(hull[i_max_u], ux, uy); ++guard)
                i_max_u = next(i_max_u);
            for (std::size_t guard = 0; guard < h && dot(hull[next(i_max_v)], vx, vy) > dot(hull[i_max_v], vx, vy); ++guard)
                i_max_v = next(i_max_v);
            for (std::size_t guard = 0; guard < h && dot(hull[next(i_min_u)], ux, uy) < dot(hull[i_min_u], ux, uy); ++guard)
                i_min_u = next(i_min_u);
        }

        const double base_u = dot(a, ux, uy);
        const double base_v = dot(a, vx, vy);
        const double max_u = dot(hull[i_max_u], ux, uy) - base_u;
        const double min_u = dot(hull[i_min_u], ux, uy) - base_u;
        const double max_v = dot(hull[i_max_v], vx, vy) - base_v;
        const double width = max_u - min_u;
        const double height = max_v;
        const double area = width * height;

        double deg = normalize_degrees(std::atan2(uy, ux) * 180.0 / std::numbers::pi);
        double rw = width, rh = height;
        if (deg >= 90.0) {
            deg -= 90.0;
            std::swap(rw, rh);
        }
        const double tol = 1e-9 * std::max(1.0, area);
        const bool better = e == 0 || area < best_area - tol ||
                            (std::abs(area - best_area) <= tol && deg < best.angle);
        if (better) {
            best_area = area;
            const double cu = (max_u + min_u) / 2.0;
            const double cv = max_v / 2.0;
            best.center = PointD{a.x + ux * cu + vx * cv, a.y + uy * cu + vy * cv};
            best.width = rw;
            best.height = rh;
            best.angle = deg;
        }
    }
    return best;
}

std::vector<PointD> approx_polygon(std::span<const PointD> closed, double epsilon) {
    if (epsilon < 0.0) {
        throw InvalidArgument("approx_polygon epsilon must be non-negative");
    }
    std::vector<PointD> pts;
    pts.reserve(closed.size());
    for (const PointD& p : closed) {
        if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
    }
    while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    if (pts.size() < 3) {
        return pts;
    }

    // Split the closed chain at the start point and the point farthest from it.
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = std::hypot(pts[i].x - pts[0].x, pts[i].y - pts[0].y);
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    std::vector<PointD> ring(pts);
    ring.push_back(pts[0]);
    std::vector<char> keep(ring.size(), 0);
    keep[0] = keep[far] = keep[ring.size() - 1] = 1;
    rdp(ring, 0, far, epsilon, keep);
    rdp(ring, far, ring.size() - 1, epsilon, keep);

    std::vector<PointD> poly;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (keep[i]) poly.push_back(ring[i]);
    }

    // The split points are arbitrary; drop any vertex that lies within
    // epsilon of its neighbors' chord (exactly collinear when epsilon == 0).
    bool changed = true;
    while (changed && poly.size() > 2) {
        changed = false;
        for (std::size_t i = 0; i < poly.size() && poly.size() > 2; ++i) {
            const PointD& prev = poly[(i + poly.size() - 1) % poly.size()];
            const PointD& nxt = poly[(i + 1) % poly.size()];
            const double d = distance_to_segment(poly[i], prev, nxt);
            const bool collinear = epsilon == 0.0 ? cross(prev, poly[i], nxt) == 0.0 && d == 0.0 : d <= epsilon;
            if (collinear) {
                poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return poly;
}

std::vector<PointD> approx_polygon(const Contour& contour, double epsilon) {
    return approx_polygon(to_points(contour), epsilon);
}

bool is_convex(std::span<const PointD> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) {
        return false;
    }
    int sign = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = cross(polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]);
        if (c == 0.0) continue;
        const int s = c > 0.0 ? 1 : -1;
        if (sign == 0) {
            sign = s;
        } else if (s != sign) {
            return false;
        }
    }
    return sign != 0;
}

}  // namespace granulo
