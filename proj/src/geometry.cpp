#include "roamsim/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace roamsim {

std::string_view to_string(Rat rat) {
    switch (rat) {
        case Rat::Wifi: return "WIFI";
        case Rat::Cbrs: return "CBRS";
        case Rat::Macro: return "MACRO";
        case Rat::None: break;
    }
    return "NONE";
}

Rat parse_rat(std::string_view text) {
    if (text == "WIFI") return Rat::Wifi;
    if (text == "CBRS") return Rat::Cbrs;
    if (text == "MACRO") return Rat::Macro;
    if (text == "NONE") return Rat::None;
    throw std::invalid_argument("unknown RAT '" + std::string(text) + "'");
}

}  // namespace roamsim

namespace roamsim::geometry {

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(a, b, c);
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}

bool within_box(Vec2 p, Vec2 a, Vec2 b) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && within_box(c, a, b)) return true;
    if (o2 == 0 && within_box(d, a, b)) return true;
    if (o3 == 0 && within_box(a, c, d)) return true;
    if (o4 == 0 && within_box(b, c, d)) return true;
    return false;
}

bool on_segment(Vec2 p, Vec2 a, Vec2 b, double eps) {
    if (p.x < std::min(a.x, b.x) - eps || p.x > std::max(a.x, b.x) + eps || p.y < std::min(a.y, b.y) - eps ||
        p.y > std::max(a.y, b.y) + eps)
        return false;
    const double len = distance(a, b);
    if (len == 0.0) return distance(p, a) <= eps;
    if (std::abs(cross(a, b, p)) / len > eps) return false;
    const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    return dot >= -eps * len && dot <= len * len + eps * len;
}

bool on_boundary(std::span<const Vec2> poly, Vec2 p, double eps) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (on_segment(p, poly[i], poly[(i + 1) % n], eps)) return true;
    }
    return false;
}

int edge_crossings(std::span<const Vec2> poly, Vec2 a, Vec2 b) {
    int count = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 c = poly[i];
        const Vec2 d = poly[(i + 1) % n];
        // Strict crossing only; grazing a vertex or running along a wall does not count.
        const int o1 = orientation(a, b, c);
        const int o2 = orientation(a, b, d);
        const int o3 = orientation(c, d, a);
        const int o4 = orientation(c, d, b);
        if (o1 * o2 < 0 && o3 * o4 < 0) ++count;
    }
    return count;
}

bool contains_ray_cast(std::span<const Vec2> poly, Vec2 p) {
    if (on_boundary(poly, p)) return true;
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) inside = !inside;
        }
    }
    return inside;
}

bool contains_winding(std::span<const Vec2> poly, Vec2 p) {
    if (on_boundary(poly, p)) return true;
    int winding = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if (a.y <= p.y) {
            if (b.y > p.y && cross(a, b, p) > 0) ++winding;
        } else {
            if (b.y <= p.y && cross(a, b, p) < 0) --winding;
        }
    }
    return winding != 0;
}

int distinct_vertex_count(std::span<const Vec2> poly) {
    std::vector<Vec2> seen;
    for (const Vec2& v : poly) {
        if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    }
    return static_cast<int>(seen.size());
}

bool is_simple(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if (a == b) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

Vec2 centroid(std::span<const Vec2> poly) {
    double area2 = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        const double c = a.x * b.y - b.x * a.y;
        area2 += c;
        cx += (a.x + b.x) * c;
        cy += (a.y + b.y) * c;
    }
    return {cx / (3.0 * area2), cy / (3.0 * area2)};
}

}  // namespace roamsim::geometry
