#pragma once

#include <span>
#include <vector>

#include "roamsim/types.hpp"

namespace roamsim::geometry {

using Polygon = std::vector<Vec2>;

// Proper or touching intersection of closed segments [a,b] and [c,d].
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

bool on_segment(Vec2 p, Vec2 a, Vec2 b, double eps = 1e-9);
bool on_boundary(std::span<const Vec2> poly, Vec2 p, double eps = 1e-9);

// Number of polygon edges crossed by the open segment from a to b.
int edge_crossings(std::span<const Vec2> poly, Vec2 a, Vec2 b);

// Closed-set membership; boundary points are inside. The two routines are
// independent and must agree everywhere.
bool contains_ray_cast(std::span<const Vec2> poly, Vec2 p);
bool contains_winding(std::span<const Vec2> poly, Vec2 p);

int distinct_vertex_count(std::span<const Vec2> poly);
bool is_simple(std::span<const Vec2> poly);
Vec2 centroid(std::span<const Vec2> poly);

}  // namespace roamsim::geometry
