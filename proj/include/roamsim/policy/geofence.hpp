#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "roamsim/geometry.hpp"
#include "roamsim/types.hpp"

namespace roamsim::policy {

struct Circle {
    Vec2 center;
    double radius_m = 0.0;
};

using Shape = std::variant<geometry::Polygon, Circle>;

// Macro cell whose visibility hints that the private campus is near.
struct FootprintCell {
    std::int64_t cell_id = 0;
    std::optional<double> min_sinr_db;
    std::optional<int> min_cqi;
};

// Coordinates are in the simulator's planar frame (meters).
struct GeofenceSpec {
    std::string campus_name;
    std::vector<Shape> shapes;
    std::vector<FootprintCell> footprint_cells;

    void validate() const;
};

struct VisibleCell {
    std::int64_t cell_id = 0;
    double sinr_db = 0.0;
    int cqi = 0;
};

// Closed shapes: boundary points are inside.
bool geofence_contains(const GeofenceSpec& spec, Vec2 pos);
bool footprint_trigger(const GeofenceSpec& spec, std::span<const VisibleCell> visible);

}  // namespace roamsim::policy
