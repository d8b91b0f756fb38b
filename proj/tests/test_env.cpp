#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "leosim/env.hpp"
#include "leosim/rng.hpp"

using namespace leo;
using namespace leo::env;

namespace {

// Polar-orbit satellite whose t=0 subpoint is (lat, lon): raan = lon,
// anomaly = lat.
orbits::SatelliteState sat_over(int id, double lat, double lon, double alt = 1200.0) {
    orbits::SatelliteState s;
    s.sat_id = id;
    s.plane = id;
    s.raan_deg = lon;
    s.inclination_deg = 90.0;
    s.anomaly0_deg = lat;
    s.altitude_km = alt;
    s.epoch_time_s = 0.0;
    s.position_ecef = geodetic_to_ecef({lat, lon, alt});
    return s;
}

mobility::UserState ground_user(int id, double lat, double lon) {
    mobility::UserState u;
    u.user_id = id;
    u.type = mobility::UserType::GroundTerminal;
    u.position = {lat, lon, 0.0};
    u.speed_kmh = 0.0;
    u.gt_over_t_db = 15.4;
    return u;
}

mobility::UserState fv_user(int id, double lat, double lon) {
    mobility::UserState u;
    u.user_id = id;
    u.type = mobility::UserType::Aircraft;
    u.position = {lat, lon, 10.0};
    u.speed_kmh = 0.0;  // parked: keeps the geometry static for fixtures
    u.gt_over_t_db = 15.0;
    return u;
}

struct EnvBuilder {
    std::vector<orbits::SatelliteState> sats;
    std::vector<mobility::UserState> users;
    link::LinkBudgetParams link_params;
    RewardParams reward;
    SimParams sim{10.0, 6};
    bool fv_priority = false;

    HandoverEnv build() const {
        return HandoverEnv(sats, users, link_params, reward, sim, fv_priority);
    }
};

EnvBuilder two_sat_fixture() {
    EnvBuilder b;
    b.sats = {sat_over(0, 59.3, 18.0), sat_over(1, 64.0, 18.0)};
    b.users = {ground_user(0, 59.3, 18.0)};
    b.reward.normalize = false;
    b.reward.channels_per_sat = 8;
    b.reward.cinr_threshold_db = -300.0;  // every link passes
    return b;
}

}  // namespace

TEST_CASE("reward case table covers all four cases with exact precedence") {
    const double beta = 1.0;

    SUBCASE("case 1: uncovered choice and no-service") {
        auto b = two_sat_fixture();
        b.sats.push_back(sat_over(2, -59.3, -162.0));  // antipodal, never covers
        auto e = b.build();
        auto out = e.step({{2}});
        CHECK(out[0].case_id == RewardCase::OutOfCoverage);
        CHECK(out[0].reward == -5.0 * beta);
        CHECK(out[0].handover == false);
        CHECK(out[0].blocked == false);
        CHECK(out[0].served_sat == kNoService);
        out = e.step({{kNoService}});
        CHECK(out[0].reward == -5.0 * beta);
    }

    SUBCASE("case 2 by congestion: only the excess beyond L is blocked") {
        auto b = two_sat_fixture();
        b.users = {ground_user(0, 59.30, 18.00), ground_user(1, 59.31, 18.01),
                   ground_user(2, 59.29, 18.02)};
        b.reward.channels_per_sat = 2;
        auto e = b.build();
        auto out = e.step({{0}, {0}, {0}});  // 3 users onto L=2
        int blocked = 0, served = 0;
        for (const auto& o : out) {
            if (o.blocked) {
                ++blocked;
                CHECK(o.case_id == RewardCase::Degraded);
                CHECK(o.reward == -beta);
                CHECK(o.served_sat == kNoService);
            } else {
                ++served;
                CHECK(o.case_id == RewardCase::Stay);
            }
        }
        CHECK(blocked == 1);
        CHECK(served == 2);
        CHECK(e.total_blocking() == 1);
        // Ties break by ascending user id: user 2 is the excess.
        CHECK(out[2].blocked);
    }

    SUBCASE("load exactly at L admits everyone") {
        auto b = two_sat_fixture();
        b.users = {ground_user(0, 59.30, 18.00), ground_user(1, 59.31, 18.01)};
        b.reward.channels_per_sat = 2;
        auto e = b.build();
        const auto out = e.step({{0}, {0}});
        CHECK(!out[0].blocked);
        CHECK(!out[1].blocked);
        CHECK(e.total_blocking() == 0);
    }

    SUBCASE("case 2 by CINR below threshold; equality stays reliable") {
        auto b = two_sat_fixture();
        auto probe = b.build();
        const double cinr = probe.observation(0).cinr_db[0];

        b.reward.cinr_threshold_db = cinr + 1e-6;  // strictly above -> degraded
        auto e_fail = b.build();
        auto out = e_fail.step({{0}});
        CHECK(out[0].case_id == RewardCase::Degraded);
        CHECK(out[0].reward == -beta);
        CHECK(out[0].blocked == false);  // quality failure is not blocking
        CHECK(out[0].has_cinr);

        b.reward.cinr_threshold_db = cinr;  // boundary: theta == threshold -> case 3
        auto e_edge = b.build();
        out = e_edge.step({{0}});
        CHECK(out[0].case_id == RewardCase::Stay);
    }

    SUBCASE("case 3 exact raw value and case 4 handover penalty") {
        auto b = two_sat_fixture();
        b.reward.w1 = 0.5;
        b.reward.w2 = 0.3;
        b.reward.w3 = 0.2;
        auto e = b.build();
        const auto& obs = e.observation(0);
        REQUIRE(obs.coverage[0]);
        REQUIRE(obs.coverage[1]);
        const int L = e.reward_params().channels_per_sat;

        // First association scores as case 3 (no handover penalty).
        const double expect0 = 0.5 * obs.visible_s[0] + 0.3 * obs.cinr_db[0] +
                               0.2 * static_cast<double>(L - obs.occupied_channels[0]);
        auto out = e.step({{0}});
        CHECK(out[0].case_id == RewardCase::Stay);
        CHECK(out[0].reward == doctest::Approx(expect0).epsilon(1e-12));
        CHECK(out[0].handover == false);

        // Staying is case 3 again; z now reflects the previous section.
        const auto& obs1 = e.observation(0);
        CHECK(obs1.occupied_channels[0] == 1);
        const double expect1 = 0.5 * obs1.visible_s[0] + 0.3 * obs1.cinr_db[0] +
                               0.2 * static_cast<double>(L - obs1.occupied_channels[0]);
        out = e.step({{0}});
        CHECK(out[0].case_id == RewardCase::Stay);
        CHECK(out[0].reward == doctest::Approx(expect1).epsilon(1e-12));

        // Switching satellites is case 4: case-3 value minus 0.5 beta.
        const auto& obs2 = e.observation(0);
        const double expect2 = 0.5 * obs2.visible_s[1] + 0.3 * obs2.cinr_db[1] +
                               0.2 * static_cast<double>(L - obs2.occupied_channels[1]) -
                               0.5 * beta;
        out = e.step({{1}});
        CHECK(out[0].case_id == RewardCase::Handover);
        CHECK(out[0].reward == doctest::Approx(expect2).epsilon(1e-12));
        CHECK(out[0].handover);
        CHECK(e.handover_counts()[0] == 1);
    }

    SUBCASE("normalized case 3 is bounded by beta") {
        auto b = two_sat_fixture();
        b.reward.normalize = true;
        b.reward.rho_scale_s = b.sim.episode_s();
        auto e = b.build();
        for (int t = 0; t < e.num_sections(); ++t) {
            const auto out = e.step({{0}});
            if (out[0].case_id == RewardCase::Stay) {
                CHECK(out[0].reward <= b.reward.beta + 1e-12);
                CHECK(out[0].reward >= 0.0);
            }
        }
    }
}

TEST_CASE("blocked users keep their association for handover counting") {
    auto b = two_sat_fixture();
    b.users = {ground_user(0, 59.30, 18.00), ground_user(1, 59.31, 18.01)};
    b.reward.channels_per_sat = 1;
    auto e = b.build();
    // Section 0: both want sat 0; user 1 blocked.
    auto out = e.step({{0}, {0}});
    CHECK(out[1].blocked);
    CHECK(e.previous_association(1) == kNoService);
    // Section 1: user 1 gets sat 1; first valid service scores as case 3.
    out = e.step({{0}, {1}});
    CHECK(out[1].case_id == RewardCase::Stay);
    CHECK(out[1].handover == false);
    // Section 2: user 1 back onto contested sat 0 while user 0 leaves:
    // association moved 1 -> 0, a real handover.
    out = e.step({{1}, {0}});
    CHECK(out[1].case_id == RewardCase::Handover);
    CHECK(e.handover_counts()[1] == 1);
}

TEST_CASE("FV priority controls who is admitted under s1 only") {
    auto make = [&](bool s1) {
        EnvBuilder b = two_sat_fixture();
        b.users = {ground_user(0, 59.30, 18.00), fv_user(1, 59.31, 18.01)};
        b.reward.channels_per_sat = 1;
        b.fv_priority = s1;
        return b.build();
    };
    auto e2 = make(false);
    auto out = e2.step({{0}, {0}});
    CHECK(!out[0].blocked);  // user id order admits the ground terminal
    CHECK(out[1].blocked);

    auto e1 = make(true);
    out = e1.step({{0}, {0}});
    CHECK(out[0].blocked);  // FVs admitted first under s1
    CHECK(!out[1].blocked);
}

TEST_CASE("observation matches element-wise recomputation from raw geometry") {
    EnvBuilder b;
    b.sats = {sat_over(0, 59.3, 18.0), sat_over(1, 63.0, 18.0), sat_over(2, 55.0, 10.0),
              sat_over(3, -59.3, -162.0)};
    b.users = {ground_user(0, 59.3, 18.0), ground_user(1, 59.25, 17.95)};
    b.sim = {10.0, 12};
    auto e = b.build();

    for (int t = 0; t < e.num_sections(); ++t) {
        for (int k = 0; k < e.num_users(); ++k) {
            const auto& obs = e.observation(k);
            const auto& user = e.user_state_at(t, k);
            // Recompute every entry independently through the link module.
            std::vector<double> cnr_lin(e.num_sats(), 0.0);
            for (int n = 0; n < e.num_sats(); ++n) {
                const auto sat_t = orbits::propagate(b.sats[n], t * b.sim.section_s);
                const auto cnr = link::cnr_db(user, sat_t, b.link_params);
                CHECK(static_cast<bool>(obs.coverage[n]) == cnr.has_value());
                if (cnr) cnr_lin[n] = link::db_to_linear(*cnr);
            }
            for (int n = 0; n < e.num_sats(); ++n) {
                if (!obs.coverage[n]) {
                    CHECK(std::isnan(obs.cinr_db[n]));
                    CHECK(obs.visible_s[n] == 0.0);
                    continue;
                }
                std::vector<double> interferers;
                for (int m = 0; m < e.num_sats(); ++m)
                    if (m != n && cnr_lin[m] > 0.0) interferers.push_back(cnr_lin[m]);
                const auto inr =
                    link::inr_db_from_terms(interferers, b.link_params.polarization_isolation_db);
                const double expect = link::cinr_db(link::linear_to_db(cnr_lin[n]), inr);
                CHECK(obs.cinr_db[n] == doctest::Approx(expect).epsilon(1e-9));

                const auto route = mobility::make_route(user, t * b.sim.section_s, b.sim.section_s);
                const double rho = orbits::remaining_visible_time_s(
                    route, b.sats[n], t * b.sim.section_s, b.link_params.min_elevation_deg,
                    b.sim.section_s, (e.num_sections() - 1) * b.sim.section_s);
                CHECK(obs.visible_s[n] == rho);
            }
        }
        std::vector<Action> stay(e.num_users(), Action{0});
        e.step(stay);
    }
}

TEST_CASE("blocking formula matches the trace recomputation on random runs") {
    Rng rng(91);
    for (int trial = 0; trial < 10; ++trial) {
        EnvBuilder b;
        b.sats = {sat_over(0, 59.3, 18.0), sat_over(1, 62.0, 18.0), sat_over(2, 57.0, 16.0)};
        const int K = 4 + static_cast<int>(rng.uniform_index(5));
        for (int k = 0; k < K; ++k)
            b.users.push_back(ground_user(k, rng.uniform(59.0, 59.6), rng.uniform(17.8, 18.2)));
        b.reward.channels_per_sat = 1 + static_cast<int>(rng.uniform_index(3));
        b.sim = {10.0, 8};
        auto e = b.build();
        while (!e.done()) {
            std::vector<Action> joint(K);
            for (int k = 0; k < K; ++k)
                joint[k] = {static_cast<int>(rng.uniform_index(e.num_sats()))};
            e.step(joint);
        }
        CHECK(blocking_from_trace(e.trace(), b.reward.channels_per_sat) == e.total_blocking());
    }
}

TEST_CASE("malformed joint actions are rejected atomically") {
    auto b = two_sat_fixture();
    auto e = b.build();
    CHECK_THROWS_AS(e.step({}), std::invalid_argument);
    CHECK_THROWS_AS(e.step({{5}}), std::invalid_argument);
    CHECK(e.section() == 0);
    CHECK(e.trace().empty());
    e.step({{0}});
    CHECK(e.section() == 1);
}

TEST_CASE("identical seeds and actions give bit-identical traces") {
    auto run_once = [&]() {
        EnvBuilder b;
        b.sats = {sat_over(0, 59.3, 18.0), sat_over(1, 62.0, 18.0)};
        b.users = {ground_user(0, 59.3, 18.0), ground_user(1, 59.28, 18.05)};
        b.sim = {10.0, 20};
        auto e = b.build();
        Rng rng(5);
        while (!e.done()) {
            std::vector<Action> joint(2);
            for (int k = 0; k < 2; ++k)
                joint[k] = {static_cast<int>(rng.uniform_index(e.num_sats()))};
            e.step(joint);
        }
        return e.trace();
    };
    const auto a = run_once();
    const auto c = run_once();
    REQUIRE(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].reward == c[i].reward);
        CHECK(a[i].case_id == c[i].case_id);
        CHECK(a[i].sat_id == c[i].sat_id);
        CHECK(std::memcmp(&a[i].cinr_db, &c[i].cinr_db, sizeof(double)) == 0);
    }
}

TEST_CASE("handover counts are recomputable from the trace") {
    EnvBuilder b;
    b.sats = {sat_over(0, 59.3, 18.0), sat_over(1, 62.0, 18.0)};
    b.users = {ground_user(0, 59.3, 18.0)};
    b.sim = {10.0, 10};
    auto e = b.build();
    Rng rng(8);
    while (!e.done()) e.step({{static_cast<int>(rng.uniform_index(2))}});
    int from_trace = 0;
    for (const auto& row : e.trace())
        if (row.handover) ++from_trace;
    CHECK(from_trace == e.handover_counts()[0]);
}
