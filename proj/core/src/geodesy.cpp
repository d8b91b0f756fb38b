#include "leosim/geodesy.hpp"

#include <algorithm>

namespace leo {

Vec3 rotate_z(const Vec3& v, double angle_rad) {
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    return {v.x * c - v.y * s, v.x * s + v.y * c, v.z};
}

Vec3 geodetic_to_ecef(const GeodeticPoint& p) {
    const double lat = deg2rad(p.latitude_deg);
    const double lon = deg2rad(p.longitude_deg);
    const double r = kEarthRadiusKm + p.altitude_km;
    return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon), r * std::sin(lat)};
}

GeodeticPoint ecef_to_geodetic(const Vec3& v) {
    const double r = v.norm();
    GeodeticPoint p;
    p.latitude_deg = rad2deg(std::asin(std::clamp(v.z / r, -1.0, 1.0)));
    p.longitude_deg = rad2deg(std::atan2(v.y, v.x));
    p.altitude_km = r - kEarthRadiusKm;
    return p;
}

double central_angle(const GeodeticPoint& a, const GeodeticPoint& b) {
    const double lat1 = deg2rad(a.latitude_deg), lon1 = deg2rad(a.longitude_deg);
    const double lat2 = deg2rad(b.latitude_deg), lon2 = deg2rad(b.longitude_deg);
    const double sdlat = std::sin((lat2 - lat1) / 2.0);
    const double sdlon = std::sin((lon2 - lon1) / 2.0);
    const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
    return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

double great_circle_km(const GeodeticPoint& a, const GeodeticPoint& b) {
    return kEarthRadiusKm * central_angle(a, b);
}

GeodeticPoint move_towards(const GeodeticPoint& from, const GeodeticPoint& to, double distance_km) {
    const double sigma = central_angle(from, to);
    const double remaining_km = kEarthRadiusKm * sigma;
    if (distance_km >= remaining_km || sigma < 1e-15) {
        GeodeticPoint arrived = to;
        arrived.altitude_km = from.altitude_km;
        return arrived;
    }
    const double f = (distance_km / kEarthRadiusKm) / sigma;  // fraction of the arc
    // Slerp between the surface unit vectors.
    GeodeticPoint a0 = from, b0 = to;
    a0.altitude_km = 0.0;
    b0.altitude_km = 0.0;
    const Vec3 a = geodetic_to_ecef(a0).normalized();
    const Vec3 b = geodetic_to_ecef(b0).normalized();
    const double s = std::sin(sigma);
    const Vec3 p = a * (std::sin((1.0 - f) * sigma) / s) + b * (std::sin(f * sigma) / s);
    GeodeticPoint out = ecef_to_geodetic(p.normalized() * kEarthRadiusKm);
    out.altitude_km = from.altitude_km;
    return out;
}

}  // namespace leo
