#include "leosim/orbits.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace leo::orbits {

void ConstellationSpec::validate() const {
    if (num_planes < 1) throw std::invalid_argument("constellation.num_planes must be >= 1");
    if (sats_per_plane < 1) throw std::invalid_argument("constellation.sats_per_plane must be >= 1");
    if (altitude_km < 100.0 || altitude_km > 2000.0)
        throw std::invalid_argument("constellation.altitude_km must be in [100, 2000]");
    if (raan_spread_deg <= 0.0 || raan_spread_deg > 360.0)
        throw std::invalid_argument("constellation.raan_spread_deg must be in (0, 360]");
}

double mean_motion_rad_s(double altitude_km) {
    const double a = kEarthRadiusKm + altitude_km;
    return std::sqrt(kMuEarth / (a * a * a));
}

double orbital_period_s(double altitude_km) {
    return 2.0 * kPi / mean_motion_rad_s(altitude_km);
}

namespace {

// Inertial position from the circular elements at absolute time t.
Vec3 eci_at(const SatelliteState& sat, double t_s) {
    const double u = deg2rad(sat.anomaly0_deg) + mean_motion_rad_s(sat.altitude_km) * t_s;
    const double raan = deg2rad(sat.raan_deg);
    const double inc = deg2rad(sat.inclination_deg);
    const double r = sat.orbit_radius_km();
    const double xo = r * std::cos(u);
    const double yo = r * std::sin(u);
    return {xo * std::cos(raan) - yo * std::cos(inc) * std::sin(raan),
            xo * std::sin(raan) + yo * std::cos(inc) * std::cos(raan),
            yo * std::sin(inc)};
}

Vec3 eci_to_ecef(const Vec3& eci, double t_s) {
    return rotate_z(eci, -kEarthRotationRate * t_s);
}

}  // namespace

Vec3 eci_position(const SatelliteState& sat) {
    return eci_at(sat, sat.epoch_time_s);
}

std::vector<SatelliteState> generate_walker(const ConstellationSpec& spec) {
    spec.validate();
    std::vector<SatelliteState> sats;
    sats.reserve(static_cast<std::size_t>(spec.num_planes) * spec.sats_per_plane);
    const double plane_step = spec.raan_spread_deg / spec.num_planes;
    const double anomaly_step = 360.0 / spec.sats_per_plane;
    int id = 0;
    for (int p = 0; p < spec.num_planes; ++p) {
        for (int s = 0; s < spec.sats_per_plane; ++s) {
            SatelliteState sat;
            sat.sat_id = id++;
            sat.plane = p;
            sat.raan_deg = p * plane_step;
            sat.inclination_deg = spec.inclination_deg;
            sat.anomaly0_deg = std::fmod((s + p * spec.phase_offset) * anomaly_step, 360.0);
            sat.altitude_km = spec.altitude_km;
            sat.epoch_time_s = 0.0;
            sat.position_ecef = eci_to_ecef(eci_at(sat, 0.0), 0.0);
            sats.push_back(sat);
        }
    }
    return sats;
}

SatelliteState propagate(const SatelliteState& sat, double t_s) {
    if (t_s < 0.0) throw std::invalid_argument("propagate: t must be >= 0");
    SatelliteState out = sat;
    out.epoch_time_s = t_s;
    out.position_ecef = eci_to_ecef(eci_at(sat, t_s), t_s);
    return out;
}

double elevation_angle_deg(const GeodeticPoint& user, const SatelliteState& sat) {
    const Vec3 user_ecef = geodetic_to_ecef(user);
    const Vec3 up = user_ecef.normalized();
    const Vec3 d = sat.position_ecef - user_ecef;
    const double s = up.dot(d.normalized());
    return rad2deg(std::asin(std::max(-1.0, std::min(1.0, s))));
}

bool is_covered(const GeodeticPoint& user, const SatelliteState& sat, double threshold_deg) {
    return elevation_angle_deg(user, sat) >= threshold_deg;
}

double remaining_visible_time_s(const UserRoute& route, const SatelliteState& sat, double t_s,
                                double threshold_deg, double dt_s, double horizon_end_s) {
    if (!is_covered(route(t_s), propagate(sat, t_s), threshold_deg)) return 0.0;
    int m = 0;
    while (true) {
        const double next = t_s + (m + 1) * dt_s;
        if (next > horizon_end_s) break;
        if (!is_covered(route(next), propagate(sat, next), threshold_deg)) break;
        ++m;
    }
    return m * dt_s;
}

std::vector<SatelliteState> load_orbital_elements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open orbital-elements file: " + path);
    std::vector<SatelliteState> sats;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string field;
        double v[6];
        for (int i = 0; i < 6; ++i) {
            if (!std::getline(ls, field, ',')) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 6 comma-separated fields");
            }
            try {
                v[i] = std::stod(field);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": field " + std::to_string(i + 1) + " is not a number");
            }
        }
        SatelliteState sat;
        sat.sat_id = static_cast<int>(v[0]);
        sat.plane = static_cast<int>(v[1]);
        sat.raan_deg = v[2];
        sat.anomaly0_deg = v[3];
        sat.altitude_km = v[4];
        sat.inclination_deg = v[5];
        sat.epoch_time_s = 0.0;
        sat.position_ecef = eci_to_ecef(eci_at(sat, 0.0), 0.0);
        sats.push_back(sat);
    }
    return sats;
}

}  // namespace leo::orbits
