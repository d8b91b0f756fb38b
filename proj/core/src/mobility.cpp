#include "leosim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace leo::mobility {

const char* to_string(UserType t) {
    switch (t) {
        case UserType::Aircraft: return "aircraft";
        case UserType::EVtol: return "evtol";
        case UserType::Uav: return "uav";
        case UserType::GroundTerminal: return "ground";
    }
    return "?";
}

bool is_flying_vehicle(UserType t) { return t != UserType::GroundTerminal; }

std::vector<int> largest_remainder_split(int count, const std::vector<double>& weights) {
    const double total_w = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total_w > 0.0)) throw std::invalid_argument("largest_remainder_split: zero weights");
    std::vector<int> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = count * weights[i] / total_w;
        out[i] = static_cast<int>(std::floor(quota));
        assigned += out[i];
        remainders.push_back({quota - out[i], i});
    }
    // Largest fractional part first; ties broken by table order.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int r = 0; r < count - assigned; ++r) out[remainders[r].second] += 1;
    return out;
}

namespace {

GeodeticPoint draw_in_box(Rng& rng, const LatLonBox& box, double altitude_km) {
    GeodeticPoint p;
    p.longitude_deg = rng.uniform(box.lon_min_deg, box.lon_max_deg);
    p.latitude_deg = rng.uniform(box.lat_min_deg, box.lat_max_deg);
    p.altitude_km = altitude_km;
    return p;
}

}  // namespace

std::vector<UserState> spawn_users(const Rng& root, const SpawnCounts& counts,
                                   const SpawnParams& params) {
    if (counts.aircraft < 0 || counts.evtol < 0 || counts.uav < 0 || counts.ground < 0)
        throw std::invalid_argument("spawn_users: counts must be >= 0");

    std::vector<double> dest_weights;
    for (const auto& d : params.destinations) dest_weights.push_back(d.weight);

    // Destination lists per FV type, assigned in spawn order.
    auto build_dest_list = [&](int n) {
        std::vector<const Destination*> list;
        const auto split = largest_remainder_split(n, dest_weights);
        for (std::size_t j = 0; j < split.size(); ++j)
            for (int c = 0; c < split[j]; ++c) list.push_back(&params.destinations[j]);
        return list;
    };

    std::vector<UserState> users;
    users.reserve(counts.total());
    int next_id = 0;

    auto spawn_type = [&](UserType type, int n, const LatLonBox& box) {
        const int ti = static_cast<int>(type);
        std::vector<const Destination*> dests;
        if (is_flying_vehicle(type)) dests = build_dest_list(n);
        for (int i = 0; i < n; ++i) {
            Rng rng = root.child("user", static_cast<std::uint64_t>(ti),
                                 static_cast<std::uint64_t>(i));
            UserState u;
            u.user_id = next_id++;
            u.type = type;
            u.position = draw_in_box(rng, box, params.altitude_km[ti]);
            u.speed_kmh = params.speed_kmh[ti];
            if (is_flying_vehicle(type)) u.destination = dests[i]->point;
            u.noise_temp_k = rng.uniform(params.noise_temp_min_k, params.noise_temp_max_k);
            u.gt_over_t_db = params.gt_over_t_db[ti];
            if (params.perturb_gt_with_noise_temp)
                u.gt_over_t_db += 10.0 * std::log10(290.0 / u.noise_temp_k);
            users.push_back(u);
        }
    };

    // Paper's user set lists ground terminals first, then FVs.
    spawn_type(UserType::GroundTerminal, counts.ground, params.ground_box);
    spawn_type(UserType::Aircraft, counts.aircraft, params.fv_box);
    spawn_type(UserType::EVtol, counts.evtol, params.fv_box);
    spawn_type(UserType::Uav, counts.uav, params.ground_box);
    return users;
}

UserState advance(const UserState& user, double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("advance: dt must be > 0");
    if (!user.destination || user.speed_kmh <= 0.0) return user;
    UserState out = user;
    const double step_km = user.speed_kmh * dt_s / 3600.0;
    out.position = move_towards(user.position, *user.destination, step_km);
    return out;
}

orbits::UserRoute make_route(const UserState& user, double t_now_s, double step_s) {
    if (step_s <= 0.0) throw std::invalid_argument("make_route: step must be > 0");
    // Motion is applied at section boundaries, so the route replays whole
    // steps; route(t_now + m*step) is bit-identical to m iterated advances.
    return [user, t_now_s, step_s](double t_s) {
        GeodeticPoint pos = user.position;
        if (t_s <= t_now_s) return pos;
        UserState cur = user;
        double remaining = t_s - t_now_s;
        while (remaining >= step_s) {
            cur = advance(cur, step_s);
            remaining -= step_s;
        }
        if (remaining > 0.0) cur = advance(cur, remaining);
        return cur.position;
    };
}

}  // namespace leo::mobility
