#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "leosim/geodesy.hpp"
#include "leosim/orbits.hpp"
#include "leosim/rng.hpp"

namespace leo::mobility {

// Paper order: i = 1..4 -> airplanes, eVTOLs, UAVs, ground terminals.
enum class UserType : int { Aircraft = 0, EVtol = 1, Uav = 2, GroundTerminal = 3 };
inline constexpr int kNumUserTypes = 4;

const char* to_string(UserType t);
bool is_flying_vehicle(UserType t);

struct UserState {
    int user_id = 0;
    UserType type = UserType::GroundTerminal;
    GeodeticPoint position;
    double speed_kmh = 0.0;
    std::optional<GeodeticPoint> destination;  // ground terminals have none
    double gt_over_t_db = 0.0;     // effective receive figure of merit
    double noise_temp_k = 290.0;   // drawn at spawn
};

struct LatLonBox {
    double lat_min_deg, lat_max_deg;
    double lon_min_deg, lon_max_deg;
};

struct Destination {
    std::string name;
    GeodeticPoint point;
    double weight;  // fraction of FVs routed there
};

struct SpawnCounts {
    int aircraft = 10;
    int evtol = 10;
    int uav = 10;
    int ground = 50;

    int total() const { return aircraft + evtol + uav + ground; }
    int fv_total() const { return aircraft + evtol + uav; }
};

// Stockholm-area boxes, FV cruise profile and destination table. Defaults
// follow the scenario geography; everything is overridable from the config.
struct SpawnParams {
    LatLonBox ground_box{59.25, 59.33, 17.91, 18.06};  // ground terminals + UAVs
    LatLonBox fv_box{59.25, 59.65, 17.91, 18.20};      // eVTOLs + aircraft start
    std::array<double, kNumUserTypes> speed_kmh{900.0, 240.0, 80.0, 0.0};
    std::array<double, kNumUserTypes> altitude_km{10.0, 1.0, 0.15, 0.0};
    // 0.45 m FV dish -> 15.0 dB (aircraft, eVTOL); 0.3 m -> 14.2 dB (UAV);
    // 0.54 m ground dish -> 15.4 dB.
    std::array<double, kNumUserTypes> gt_over_t_db{15.0, 15.0, 14.2, 15.4};
    std::vector<Destination> destinations{
        {"Helsinki", {60.17, 24.94, 0.0}, 0.2},
        {"Kiruna", {67.86, 20.23, 0.0}, 0.2},
        {"Copenhagen", {55.68, 12.57, 0.0}, 0.3},
        {"Oslo", {59.91, 10.75, 0.0}, 0.3},
    };
    double noise_temp_min_k = 213.15;
    double noise_temp_max_k = 273.15;
    // When set, the drawn noise temperature perturbs G/T by
    // 10*log10(290 / T_drawn); otherwise the table value is used as-is.
    bool perturb_gt_with_noise_temp = false;
};

// Largest-remainder apportionment of `count` items over `weights`.
std::vector<int> largest_remainder_split(int count, const std::vector<double>& weights);

// Deterministic placement: ground terminals first (user ids 0..K1-1), then
// aircraft, eVTOLs, UAVs. Each user draws from its own child stream of
// `root`, so changing one count never perturbs another type's draws.
std::vector<UserState> spawn_users(const Rng& root, const SpawnCounts& counts,
                                   const SpawnParams& params);

// Great-circle step towards the destination: distance min(speed * dt,
// distance-to-destination) at constant altitude. Ground terminals and
// arrived users are returned unchanged.
UserState advance(const UserState& user, double dt_s);

// Route giving the user's position at any absolute time >= t_now_s. The
// frozen state is advanced in whole `step_s` increments (motion is applied
// at section boundaries), so sampling at t_now + m*step reproduces m
// iterated advance() calls exactly.
orbits::UserRoute make_route(const UserState& user, double t_now_s, double step_s);

}  // namespace leo::mobility
