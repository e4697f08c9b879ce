#pragma once

#include <vector>

namespace cascsim {

inline constexpr double kEarthRadiusKm = 6378.0;

struct GeoPoint {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

// Axis-aligned rectangle in latitude/longitude space. Never wraps the
// antimeridian; case coordinates must stay clear of it.
struct GeoRect {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;

    bool contains(const GeoPoint& p) const {
        return p.lat_deg >= lat_min && p.lat_deg <= lat_max && p.lon_deg >= lon_min &&
               p.lon_deg <= lon_max;
    }
};

// Great-circle distance in kilometers on a sphere of radius 6378 km.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Disturbance rectangle around a center point. The half-extents are gamma
// times the full latitude/longitude span of the bus fleet, so gamma scales
// the affected share of the system footprint.
GeoRect build_area(const GeoPoint& center, double gamma, const std::vector<GeoPoint>& bus_positions);

// Fraction of a line's length lying inside the rectangle. The line is
// treated as a straight segment in lat/lon space for clipping; the clipped
// piece and the whole segment are both measured with the haversine formula,
// so the ratio is length-weighted on the sphere. Degenerate zero-length
// segments return 1 if inside, 0 otherwise.
double crossing_fraction(const GeoPoint& a, const GeoPoint& b, const GeoRect& area);

}  // namespace cascsim
