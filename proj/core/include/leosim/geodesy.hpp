#pragma once

#include <cmath>

namespace leo {

// Spherical-Earth constants. Coverage geometry over a 15-minute horizon does
// not need an ellipsoid or J2.
inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMuEarth = 398600.4418;          // km^3 / s^2
inline constexpr double kEarthRotationRate = 7.2921159e-5;  // rad / s

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return {x / n, y / n, z / n};
    }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
};

// Rotation about the z (polar) axis by angle radians.
Vec3 rotate_z(const Vec3& v, double angle_rad);

struct GeodeticPoint {
    double latitude_deg = 0.0;   // [-90, 90]
    double longitude_deg = 0.0;  // [-180, 180]
    double altitude_km = 0.0;    // >= 0

    bool valid() const {
        return latitude_deg >= -90.0 && latitude_deg <= 90.0 &&
               longitude_deg >= -180.0 && longitude_deg <= 180.0 && altitude_km >= 0.0;
    }
};

// Geodetic <-> Earth-fixed cartesian on the spherical Earth, km.
Vec3 geodetic_to_ecef(const GeodeticPoint& p);
GeodeticPoint ecef_to_geodetic(const Vec3& v);

// Central angle between two surface points, radians.
double central_angle(const GeodeticPoint& a, const GeodeticPoint& b);

// Great-circle (haversine) surface distance at Earth radius, km.
double great_circle_km(const GeodeticPoint& a, const GeodeticPoint& b);

// Move from `from` towards `to` by `distance_km` along the great circle,
// clamping at `to`. Altitude of `from` is preserved.
GeodeticPoint move_towards(const GeodeticPoint& from, const GeodeticPoint& to, double distance_km);

}  // namespace leo
