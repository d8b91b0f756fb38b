#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "leosim/orbits.hpp"
#include "leosim/rng.hpp"

using namespace leo;
using namespace leo::orbits;

namespace {

GeodeticPoint stockholm() { return {59.3, 18.0, 0.0}; }

ConstellationSpec small_spec(int planes, int sats, double alt = 1200.0) {
    ConstellationSpec s;
    s.num_planes = planes;
    s.sats_per_plane = sats;
    s.altitude_km = alt;
    s.inclination_deg = 87.9;
    s.raan_spread_deg = 180.0;
    return s;
}

}  // namespace

TEST_CASE("single satellite sits at the orbit radius") {
    const auto sats = generate_walker(small_spec(1, 1));
    REQUIRE(sats.size() == 1);
    CHECK(sats[0].position_ecef.norm() == doctest::Approx(kEarthRadiusKm + 1200.0).epsilon(1e-12));
}

TEST_CASE("2x2 walker star spacing") {
    auto spec = small_spec(2, 2);
    const auto sats = generate_walker(spec);
    REQUIRE(sats.size() == 4);
    CHECK(sats[0].raan_deg == doctest::Approx(0.0));
    CHECK(sats[2].raan_deg == doctest::Approx(90.0));
    CHECK(sats[0].anomaly0_deg == doctest::Approx(0.0));
    CHECK(sats[1].anomaly0_deg == doctest::Approx(180.0));
}

TEST_CASE("oneweb-like shell has pairwise distinct positions") {
    // Oracle: exhaustive pairwise check over all 588 satellites.
    const auto sats = generate_walker(small_spec(12, 49));
    REQUIRE(sats.size() == 588);
    for (std::size_t i = 0; i < sats.size(); ++i) {
        for (std::size_t j = i + 1; j < sats.size(); ++j) {
            const double d = (sats[i].position_ecef - sats[j].position_ecef).norm();
            CHECK(d > 1.0);  // km
        }
    }
}

TEST_CASE("spec invariants are enforced") {
    CHECK_THROWS_AS(generate_walker(small_spec(0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(generate_walker(small_spec(1, 0)), std::invalid_argument);
    CHECK_THROWS_AS(generate_walker(small_spec(1, 1, 50.0)), std::invalid_argument);
    CHECK_THROWS_AS(generate_walker(small_spec(1, 1, 2500.0)), std::invalid_argument);
}

TEST_CASE("propagation is periodic in the inertial frame") {
    const auto sats = generate_walker(small_spec(3, 4));
    const double T = orbital_period_s(1200.0);
    for (const auto& sat : sats) {
        const auto full = propagate(sat, T);
        CHECK((eci_position(full) - eci_position(sat)).norm() < 1e-6);
        const auto half = propagate(sat, T / 2.0);
        CHECK((eci_position(half) + eci_position(sat)).norm() < 1e-6);
    }
}

TEST_CASE("kepler period at 1200 km") {
    // Direct Kepler formula with mu = 398600.4418.
    CHECK(orbital_period_s(1200.0) == doctest::Approx(6556.028755536671).epsilon(1e-12));
}

TEST_CASE("orbit radius is conserved under propagation") {
    const auto sats = generate_walker(small_spec(2, 3));
    Rng rng(11);
    for (const auto& sat : sats) {
        for (int i = 0; i < 20; ++i) {
            const double t = rng.uniform(0.0, 20000.0);
            const auto moved = propagate(sat, t);
            CHECK(std::fabs(moved.position_ecef.norm() - sat.orbit_radius_km()) < 1e-6);
        }
    }
}

TEST_CASE("elevation at zenith and antipode") {
    SatelliteState sat;
    sat.altitude_km = 1200.0;
    sat.position_ecef = geodetic_to_ecef({59.3, 18.0, 1200.0});
    CHECK(elevation_angle_deg(stockholm(), sat) == doctest::Approx(90.0).epsilon(1e-9));
    sat.position_ecef = geodetic_to_ecef({-59.3, -162.0, 1200.0});
    CHECK(elevation_angle_deg(stockholm(), sat) == doctest::Approx(-90.0).epsilon(1e-9));
}

TEST_CASE("elevation is invariant under joint rotation about the pole") {
    const auto sats = generate_walker(small_spec(3, 5));
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto& sat = sats[rng.uniform_index(sats.size())];
        GeodeticPoint user{rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0), 0.0};
        const double delta = rng.uniform(-180.0, 180.0);
        const double e0 = elevation_angle_deg(user, sat);
        GeodeticPoint user_rot = user;
        user_rot.longitude_deg = std::fmod(user.longitude_deg + delta + 540.0, 360.0) - 180.0;
        SatelliteState sat_rot = sat;
        sat_rot.position_ecef = rotate_z(sat.position_ecef, deg2rad(delta));
        CHECK(elevation_angle_deg(user_rot, sat_rot) == doctest::Approx(e0).epsilon(1e-9));
    }
}

TEST_CASE("coverage boundary keeps >= at the threshold") {
    SatelliteState sat;
    sat.altitude_km = 1200.0;
    sat.position_ecef = geodetic_to_ecef({59.3, 18.0, 1200.0});
    CHECK(is_covered(stockholm(), sat, 15.0));
    CHECK(is_covered(stockholm(), sat, 90.0));  // exactly 90 degrees
}

TEST_CASE("coverage is monotone non-increasing in the threshold") {
    const auto sats = generate_walker(small_spec(4, 6));
    Rng rng(19);
    for (int i = 0; i < 200; ++i) {
        const auto& sat = sats[rng.uniform_index(sats.size())];
        GeodeticPoint user{rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0), 0.0};
        const double lo = rng.uniform(1.0, 45.0);
        const double hi = lo + rng.uniform(0.0, 44.0);
        if (is_covered(user, sat, hi)) CHECK(is_covered(user, sat, lo));
    }
}

TEST_CASE("coverage set matches a brute-force elevation scan") {
    const auto sats = generate_walker(small_spec(12, 49));
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const double t = rng.uniform(0.0, 900.0);
        std::set<int> covered;
        std::set<int> brute;
        for (const auto& sat : sats) {
            const auto moved = propagate(sat, t);
            if (is_covered(stockholm(), moved, 15.0)) covered.insert(sat.sat_id);
            if (elevation_angle_deg(stockholm(), moved) >= 15.0) brute.insert(sat.sat_id);
        }
        CHECK(covered == brute);
        CHECK(!covered.empty());
    }
}

TEST_CASE("remaining visible time follows the section-scan definition") {
    const auto sats = generate_walker(small_spec(3, 8, 1500.0));
    const double dt = 10.0;
    const double horizon = 900.0;
    const UserRoute fixed = [](double) { return GeodeticPoint{59.3, 18.0, 0.0}; };

    SUBCASE("zero when not covered") {
        // A satellite on the far side of the orbit cannot cover Stockholm.
        SatelliteState sat = sats[0];
        sat.anomaly0_deg = 180.0;
        if (!is_covered(fixed(0.0), propagate(sat, 0.0), 15.0))
            CHECK(remaining_visible_time_s(fixed, sat, 0.0, 15.0, dt, horizon) == 0.0);
    }

    SUBCASE("matches the brute-force scan everywhere") {
        for (const auto& sat : sats) {
            for (double t0 : {0.0, 120.0, 500.0}) {
                const double got = remaining_visible_time_s(fixed, sat, t0, 15.0, dt, horizon);
                // Oracle: scan every section up to the horizon.
                double expect = 0.0;
                if (is_covered(fixed(t0), propagate(sat, t0), 15.0)) {
                    int m = 0;
                    while (t0 + (m + 1) * dt <= horizon &&
                           is_covered(fixed(t0 + (m + 1) * dt), propagate(sat, t0 + (m + 1) * dt),
                                      15.0))
                        ++m;
                    expect = m * dt;
                }
                CHECK(got == expect);
            }
        }
    }

    SUBCASE("no teleporting visibility windows") {
        for (const auto& sat : sats) {
            for (double t0 = 0.0; t0 + dt <= horizon; t0 += dt) {
                if (!is_covered(fixed(t0), propagate(sat, t0), 15.0)) continue;
                const double now = remaining_visible_time_s(fixed, sat, t0, 15.0, dt, horizon);
                const double next =
                    remaining_visible_time_s(fixed, sat, t0 + dt, 15.0, dt, horizon);
                CHECK(now >= next - dt);
            }
        }
    }
}

TEST_CASE("orbital elements file round-trips") {
    const char* path = "orbits_test_elements.csv";
    {
        std::ofstream out(path);
        out << "0, 0, 0.0, 10.0, 1200.0, 87.9\n";
        out << "\n";
        out << "1, 1, 90.0, 190.0, 1200.0, 87.9\n";
    }
    const auto sats = load_orbital_elements(path);
    REQUIRE(sats.size() == 2);
    CHECK(sats[0].anomaly0_deg == doctest::Approx(10.0));
    CHECK(sats[1].raan_deg == doctest::Approx(90.0));
    CHECK(sats[1].position_ecef.norm() == doctest::Approx(kEarthRadiusKm + 1200.0));
    std::remove(path);

    {
        std::ofstream out(path);
        out << "0, 0, 0.0, 10.0\n";
    }
    CHECK_THROWS_WITH_AS(load_orbital_elements(path),
                         doctest::Contains(":1: expected 6 comma-separated fields"),
                         std::runtime_error);
    std::remove(path);
}
