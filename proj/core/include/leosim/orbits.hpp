#pragma once

#include <functional>
#include <string>
#include <vector>

#include "leosim/geodesy.hpp"

namespace leo::orbits {

// Walker-pattern shell. raan_spread_deg = 180 gives a Walker Star,
// 360 a Walker Delta. phase_offset is the inter-plane phasing as a
// fraction of the in-plane satellite spacing.
struct ConstellationSpec {
    int num_planes = 12;
    int sats_per_plane = 49;
    double altitude_km = 1200.0;
    double inclination_deg = 87.9;
    double raan_spread_deg = 180.0;
    double phase_offset = 0.0;

    void validate() const;  // throws std::invalid_argument naming the field
};

// One satellite on a circular orbit. The orbital elements are anchored at
// scenario start (t = 0); `position_ecef` is the Earth-fixed position at
// `epoch_time_s`. Earth rotation enters only through the ECI->ECEF
// conversion, the inertial elements are untouched by propagation.
struct SatelliteState {
    int sat_id = 0;
    int plane = 0;
    double raan_deg = 0.0;
    double inclination_deg = 0.0;
    double anomaly0_deg = 0.0;  // argument of latitude at t = 0
    double altitude_km = 0.0;
    double epoch_time_s = 0.0;
    Vec3 position_ecef;  // km

    double orbit_radius_km() const { return kEarthRadiusKm + altitude_km; }
};

// Inertial position of the satellite at its epoch time.
Vec3 eci_position(const SatelliteState& sat);

// Mean motion n = sqrt(mu / a^3) and the resulting period.
double mean_motion_rad_s(double altitude_km);
double orbital_period_s(double altitude_km);

// num_planes x sats_per_plane shell at t = 0. Planes are equally spaced in
// RAAN over raan_spread_deg, satellites equally spaced in anomaly per plane.
std::vector<SatelliteState> generate_walker(const ConstellationSpec& spec);

// State at absolute time t (seconds since scenario start), t >= 0.
SatelliteState propagate(const SatelliteState& sat, double t_s);

// Elevation of the satellite above the user's local horizon, degrees in
// [-90, 90]. Uses the satellite's Earth-fixed position at its epoch time.
double elevation_angle_deg(const GeodeticPoint& user, const SatelliteState& sat);

// Coverage indicator: elevation >= threshold.
bool is_covered(const GeodeticPoint& user, const SatelliteState& sat, double threshold_deg);

// Position of a (possibly moving) user at an absolute time.
using UserRoute = std::function<GeodeticPoint(double t_s)>;

// Largest m * dt such that coverage holds at t, t+dt, ..., t+m*dt
// consecutively, sampling no further than horizon_end_s. Returns 0 when the
// user is not covered at t.
double remaining_visible_time_s(const UserRoute& route, const SatelliteState& sat, double t_s,
                                double threshold_deg, double dt_s, double horizon_end_s);

// Orbital-elements file: one satellite per line,
//   sat_id, plane, raan_deg, anomaly_deg, altitude_km, inclination_deg
// comma-separated, UTF-8. Blank lines are ignored. Malformed lines raise
// std::runtime_error with the line number.
std::vector<SatelliteState> load_orbital_elements(const std::string& path);

}  // namespace leo::orbits
