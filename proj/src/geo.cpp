#include "cascsim/geo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cascsim {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = a.lat_deg * kDegToRad;
    const double phi2 = b.lat_deg * kDegToRad;
    const double dphi = (b.lat_deg - a.lat_deg) * kDegToRad;
    const double dlam = (b.lon_deg - a.lon_deg) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoRect build_area(const GeoPoint& center, double gamma, const std::vector<GeoPoint>& bus_positions) {
    if (bus_positions.size() < 2) {
        throw std::invalid_argument("build_area: need at least two bus positions");
    }
    double lat_lo = bus_positions.front().lat_deg;
    double lat_hi = lat_lo;
    double lon_lo = bus_positions.front().lon_deg;
    double lon_hi = lon_lo;
    for (const GeoPoint& p : bus_positions) {
        lat_lo = std::min(lat_lo, p.lat_deg);
        lat_hi = std::max(lat_hi, p.lat_deg);
        lon_lo = std::min(lon_lo, p.lon_deg);
        lon_hi = std::max(lon_hi, p.lon_deg);
    }
    if (lat_hi - lat_lo <= 0.0 && lon_hi - lon_lo <= 0.0) {
        throw std::invalid_argument("build_area: degenerate network extent (all buses co-located)");
    }
    const double dlat = gamma * (lat_hi - lat_lo);
    const double dlon = gamma * (lon_hi - lon_lo);
    return GeoRect{center.lat_deg - dlat, center.lat_deg + dlat, center.lon_deg - dlon,
                   center.lon_deg + dlon};
}

double crossing_fraction(const GeoPoint& a, const GeoPoint& b, const GeoRect& area) {
    const double total_km = haversine_km(a, b);
    if (total_km <= 0.0) {
        return area.contains(a) ? 1.0 : 0.0;
    }

    // Liang-Barsky clip of the parametric segment a + t(b - a), t in [0,1],
    // against the rectangle's four half-planes.
    const double dx = b.lon_deg - a.lon_deg;
    const double dy = b.lat_deg - a.lat_deg;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.lon_deg - area.lon_min, area.lon_max - a.lon_deg,
                         a.lat_deg - area.lat_min, area.lat_max - a.lat_deg};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) {
                return 0.0;  // parallel to this edge and fully outside
            }
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0) {
            if (r > t1) {
                return 0.0;
            }
            t0 = std::max(t0, r);
        } else {
            if (r < t0) {
                return 0.0;
            }
            t1 = std::min(t1, r);
        }
    }
    if (t0 >= t1) {
        return 0.0;
    }

    const auto at = [&](double t) {
        return GeoPoint{a.lat_deg + t * dy, a.lon_deg + t * dx};
    };
    const double inside_km = haversine_km(at(t0), at(t1));
    return std::clamp(inside_km / total_km, 0.0, 1.0);
}

}  // namespace cascsim
