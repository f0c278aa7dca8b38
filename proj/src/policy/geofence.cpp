#include "roamsim/policy/geofence.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace roamsim::policy {

void GeofenceSpec::validate() const {
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const std::string where = "geofence shape " + std::to_string(i);
        if (const auto* poly = std::get_if<geometry::Polygon>(&shapes[i])) {
            for (const Vec2& v : *poly)
                if (!is_finite(v)) throw std::invalid_argument(where + ": vertex not finite");
            if (geometry::distinct_vertex_count(*poly) < 3)
                throw std::invalid_argument(where + ": polygon needs at least 3 distinct vertices");
            if (!geometry::is_simple(*poly)) throw std::invalid_argument(where + ": polygon self-intersects");
        } else {
            const Circle& c = std::get<Circle>(shapes[i]);
            if (!is_finite(c.center)) throw std::invalid_argument(where + ": center not finite");
            if (!(c.radius_m > 0.0) || !std::isfinite(c.radius_m))
                throw std::invalid_argument(where + ": radius must be > 0");
        }
    }
    std::set<std::int64_t> ids;
    for (const FootprintCell& c : footprint_cells) {
        if (!ids.insert(c.cell_id).second)
            throw std::invalid_argument("footprint cell id " + std::to_string(c.cell_id) + " listed twice");
    }
}

bool geofence_contains(const GeofenceSpec& spec, Vec2 pos) {
    for (const Shape& s : spec.shapes) {
        if (const auto* poly = std::get_if<geometry::Polygon>(&s)) {
            if (geometry::contains_ray_cast(*poly, pos)) return true;
        } else {
            const Circle& c = std::get<Circle>(s);
            if (distance(c.center, pos) <= c.radius_m) return true;
        }
    }
    return false;
}

bool footprint_trigger(const GeofenceSpec& spec, std::span<const VisibleCell> visible) {
    for (const VisibleCell& v : visible) {
        for (const FootprintCell& f : spec.footprint_cells) {
            if (f.cell_id != v.cell_id) continue;
            if (f.min_sinr_db && v.sinr_db < *f.min_sinr_db) continue;
            if (f.min_cqi && v.cqi < *f.min_cqi) continue;
            return true;
        }
    }
    return false;
}

}  // namespace roamsim::policy
