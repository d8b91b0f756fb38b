#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "leosim/mobility.hpp"

using namespace leo;
using namespace leo::mobility;

TEST_CASE("largest remainder splits the paper's user mix") {
    // 10 FVs per type at weights 1/5, 1/5, 3/10, 3/10 -> 2/2/3/3.
    const std::vector<double> w{0.2, 0.2, 0.3, 0.3};
    CHECK(largest_remainder_split(10, w) == std::vector<int>{2, 2, 3, 3});
    CHECK(largest_remainder_split(0, w) == std::vector<int>{0, 0, 0, 0});
    const auto odd = largest_remainder_split(7, w);
    int sum = 0;
    for (int v : odd) sum += v;
    CHECK(sum == 7);
}

TEST_CASE("spawn produces the paper's counts and destination split") {
    SpawnCounts counts;  // 10/10/10/50
    SpawnParams params;
    const auto users = spawn_users(Rng(1), counts, params);
    REQUIRE(users.size() == 80);

    int fvs = 0;
    std::map<std::string, int> dest_count;
    for (const auto& u : users) {
        if (is_flying_vehicle(u.type)) {
            ++fvs;
            REQUIRE(u.destination.has_value());
            for (const auto& d : params.destinations)
                if (std::fabs(d.point.latitude_deg - u.destination->latitude_deg) < 1e-12)
                    dest_count[d.name] += 1;
        } else {
            CHECK(!u.destination.has_value());
            CHECK(u.speed_kmh == 0.0);
        }
    }
    CHECK(fvs == 30);
    CHECK(dest_count["Helsinki"] == 6);
    CHECK(dest_count["Kiruna"] == 6);
    CHECK(dest_count["Copenhagen"] == 9);
    CHECK(dest_count["Oslo"] == 9);

    // Boxes: ground terminals and UAVs in the small box, others in the big
    // box; per-type altitudes.
    for (const auto& u : users) {
        const auto& box = (u.type == UserType::GroundTerminal || u.type == UserType::Uav)
                              ? params.ground_box
                              : params.fv_box;
        CHECK(u.position.latitude_deg >= box.lat_min_deg);
        CHECK(u.position.latitude_deg <= box.lat_max_deg);
        CHECK(u.position.longitude_deg >= box.lon_min_deg);
        CHECK(u.position.longitude_deg <= box.lon_max_deg);
        CHECK(u.position.altitude_km ==
              params.altitude_km[static_cast<int>(u.type)]);
        CHECK(u.noise_temp_k >= params.noise_temp_min_k);
        CHECK(u.noise_temp_k <= params.noise_temp_max_k);
    }
    // Ground terminals take the low user ids (paper's index set).
    for (int k = 0; k < 50; ++k) CHECK(users[k].type == UserType::GroundTerminal);
}

TEST_CASE("single ground terminal spawn") {
    SpawnCounts counts{0, 0, 0, 1};
    const auto users = spawn_users(Rng(3), counts, SpawnParams{});
    REQUIRE(users.size() == 1);
    CHECK(users[0].type == UserType::GroundTerminal);
}

TEST_CASE("same seed spawns identical users") {
    SpawnCounts counts{3, 2, 4, 5};
    const auto a = spawn_users(Rng(99), counts, SpawnParams{});
    const auto b = spawn_users(Rng(99), counts, SpawnParams{});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].position.latitude_deg == b[i].position.latitude_deg);
        CHECK(a[i].position.longitude_deg == b[i].position.longitude_deg);
        CHECK(a[i].noise_temp_k == b[i].noise_temp_k);
    }
}

TEST_CASE("adding ground terminals does not move the aircraft") {
    SpawnParams params;
    const auto small = spawn_users(Rng(7), {2, 0, 0, 1}, params);
    const auto large = spawn_users(Rng(7), {2, 0, 0, 30}, params);
    // Aircraft draw from their own child streams keyed by type and index.
    const auto* a0 = &small[1];
    const auto* b0 = &large[30];
    CHECK(a0->type == UserType::Aircraft);
    CHECK(b0->type == UserType::Aircraft);
    CHECK(a0->position.latitude_deg == b0->position.latitude_deg);
    CHECK(a0->position.longitude_deg == b0->position.longitude_deg);
}

TEST_CASE("ground terminals never move") {
    UserState u;
    u.type = UserType::GroundTerminal;
    u.position = {59.3, 18.0, 0.0};
    u.speed_kmh = 0.0;
    const auto moved = advance(u, 3600.0);
    CHECK(moved.position.latitude_deg == u.position.latitude_deg);
    CHECK(moved.position.longitude_deg == u.position.longitude_deg);
}

TEST_CASE("aircraft covers speed * dt along the great circle") {
    UserState u;
    u.type = UserType::Aircraft;
    u.position = {59.3, 18.0, 10.0};
    u.speed_kmh = 900.0;
    u.destination = GeodeticPoint{60.17, 24.94, 0.0};
    const auto moved = advance(u, 60.0);
    // Oracle: haversine distance between successive positions.
    const double d = great_circle_km(u.position, moved.position);
    CHECK(d == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(moved.position.altitude_km == 10.0);
}

TEST_CASE("distance per step is min(speed dt, remaining)") {
    UserState u;
    u.type = UserType::EVtol;
    u.position = {59.3, 18.0, 1.0};
    u.speed_kmh = 240.0;
    u.destination = GeodeticPoint{59.32, 18.05, 0.0};
    const double remaining = great_circle_km(u.position, *u.destination);
    REQUIRE(remaining < 10.0);
    const auto moved = advance(u, 600.0);  // 40 km step, clamps at destination
    CHECK(moved.position.latitude_deg == doctest::Approx(59.32));
    CHECK(moved.position.longitude_deg == doctest::Approx(18.05));
    CHECK(moved.position.altitude_km == 1.0);
    // Arrived users stop.
    const auto again = advance(moved, 600.0);
    CHECK(again.position.latitude_deg == moved.position.latitude_deg);
    CHECK(again.position.longitude_deg == moved.position.longitude_deg);
}

TEST_CASE("positions stay in range over a long flight") {
    UserState u;
    u.type = UserType::Aircraft;
    u.position = {59.6, 18.1, 10.0};
    u.speed_kmh = 900.0;
    u.destination = GeodeticPoint{67.86, 20.23, 0.0};  // Kiruna
    for (int i = 0; i < 360; ++i) {
        u = advance(u, 10.0);
        CHECK(u.position.valid());
    }
}

TEST_CASE("route sampling equals iterated advances") {
    UserState u;
    u.type = UserType::Uav;
    u.position = {59.30, 18.00, 0.15};
    u.speed_kmh = 80.0;
    u.destination = GeodeticPoint{55.68, 12.57, 0.0};
    const auto route = make_route(u, 100.0, 10.0);
    UserState walked = u;
    for (int m = 1; m <= 30; ++m) {
        walked = advance(walked, 10.0);
        const auto sampled = route(100.0 + m * 10.0);
        CHECK(sampled.latitude_deg == walked.position.latitude_deg);
        CHECK(sampled.longitude_deg == walked.position.longitude_deg);
    }
}
