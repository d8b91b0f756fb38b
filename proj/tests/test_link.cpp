#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>

#include "leosim/link.hpp"
#include "leosim/rng.hpp"

using namespace leo;
using namespace leo::link;

// Independent linear-domain ledger: everything converted to linear power
// ratios first, combined there, and read back in dB.
namespace oracle {

double cnr_linear(double eirp_dbm, double gt_db, double bandwidth_hz, double distance_km,
                  double frequency_ghz) {
    const double eirp_w = std::pow(10.0, (eirp_dbm - 30.0) / 10.0);
    const double gt = std::pow(10.0, gt_db / 10.0);
    const double fspl_lin =
        std::pow(10.0, (20.0 * std::log10(distance_km) + 20.0 * std::log10(frequency_ghz) + 92.45) / 10.0);
    return eirp_w * gt / (kBoltzmann * bandwidth_hz * fspl_lin);
}

}  // namespace oracle

TEST_CASE("fspl formula constants") {
    CHECK(fspl_db(1.0, 1.0) == doctest::Approx(92.45).epsilon(1e-12));
    CHECK(fspl_db(1200.0, 18.5) == doctest::Approx(179.37705948901277).epsilon(1e-12));
    CHECK(fspl_db(2.0, 1.0) - fspl_db(1.0, 1.0) ==
          doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(fspl_db(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(fspl_db(1.0, -2.0), std::domain_error);
}

TEST_CASE("fspl is strictly increasing in distance and frequency") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const double d = rng.uniform(1.0, 4000.0);
        const double f = rng.uniform(1.0, 40.0);
        CHECK(fspl_db(d * 1.01, f) > fspl_db(d, f));
        CHECK(fspl_db(d, f * 1.01) > fspl_db(d, f));
    }
}

TEST_CASE("cnr example from the table constants") {
    LinkBudgetParams params;
    // Covered user at 1200 km slant range with the ground-terminal G/T.
    CHECK(cnr_db_at(1200.0, 15.4, params) == doctest::Approx(23.742707597484525).epsilon(1e-12));
}

TEST_CASE("+3 dB EIRP moves CNR by exactly +3 dB") {
    LinkBudgetParams params;
    const double base = cnr_db_at(1500.0, 15.0, params);
    params.eirp_dbm += 3.0;
    CHECK(cnr_db_at(1500.0, 15.0, params) == doctest::Approx(base + 3.0).epsilon(1e-12));
}

TEST_CASE("uncovered pair yields the no-link sentinel") {
    LinkBudgetParams params;
    mobility::UserState user;
    user.position = {59.3, 18.0, 0.0};
    user.gt_over_t_db = 15.4;
    orbits::SatelliteState sat;
    sat.altitude_km = 1200.0;
    sat.position_ecef = geodetic_to_ecef({-59.3, -162.0, 1200.0});
    CHECK(!cnr_db(user, sat, params).has_value());
    sat.position_ecef = geodetic_to_ecef({59.3, 18.0, 1200.0});
    CHECK(cnr_db(user, sat, params).has_value());
}

TEST_CASE("inr cases") {
    LinkBudgetParams params;
    SUBCASE("no interferers -> none") {
        CHECK(!inr_db_from_terms({}, params.polarization_isolation_db).has_value());
    }
    SUBCASE("one interferer identical to the carrier -> CNR - isolation") {
        const double cnr = 23.7;
        const auto inr = inr_db_from_terms({db_to_linear(cnr)}, 12.0);
        REQUIRE(inr.has_value());
        CHECK(*inr == doctest::Approx(cnr - 12.0).epsilon(1e-9));
    }
    SUBCASE("m equal interferers add 10 log10(m)") {
        const double term = db_to_linear(20.0);
        for (int m : {2, 3, 7}) {
            const auto one = inr_db_from_terms({term}, 12.0);
            const auto many = inr_db_from_terms(std::vector<double>(m, term), 12.0);
            CHECK(*many == doctest::Approx(*one + 10.0 * std::log10(m)).epsilon(1e-9));
        }
    }
    SUBCASE("permutation invariance") {
        std::vector<double> terms{1.0e-2, 5.0e-3, 7.7e-4};
        const auto a = inr_db_from_terms(terms, 12.0);
        std::swap(terms[0], terms[2]);
        const auto b = inr_db_from_terms(terms, 12.0);
        CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
    }
    SUBCASE("never below the strongest single interferer") {
        Rng rng(33);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> terms;
            double best = -1e300;
            const int m = 1 + static_cast<int>(rng.uniform_index(6));
            for (int j = 0; j < m; ++j) {
                const double db = rng.uniform(-10.0, 30.0);
                terms.push_back(db_to_linear(db));
                best = std::max(best, db - 12.0);
            }
            CHECK(*inr_db_from_terms(terms, 12.0) >= best - 1e-9);
        }
    }
}

TEST_CASE("cinr composition") {
    CHECK(cinr_db(23.7, std::nullopt) == 23.7);
    // cnr_lin = 100, inr_lin = 1 -> 50.
    CHECK(cinr_db(20.0, 0.0) == doctest::Approx(10.0 * std::log10(50.0)).epsilon(1e-12));
}

TEST_CASE("cinr never exceeds cnr; equality iff no interference") {
    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        const double cnr = rng.uniform(-20.0, 40.0);
        if (rng.uniform() < 0.2) {
            CHECK(cinr_db(cnr, std::nullopt) == cnr);
        } else {
            const double inr = rng.uniform(-30.0, 30.0);
            CHECK(cinr_db(cnr, inr) < cnr);
        }
    }
}

TEST_CASE("db/linear round trip") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double db = rng.uniform(-120.0, 120.0);
        CHECK(linear_to_db(db_to_linear(db)) == doctest::Approx(db).epsilon(1e-12));
    }
}

TEST_CASE("randomized budget agrees with the linear-domain oracle to 1e-9 dB") {
    Rng rng(17);
    LinkBudgetParams params;
    for (int i = 0; i < 2000; ++i) {
        const double d = rng.uniform(500.0, 3500.0);
        const double f = rng.uniform(10.0, 30.0);
        const double gt = rng.uniform(10.0, 20.0);
        params.carrier_frequency_ghz = f;
        const double got = cnr_db_at(d, gt, params);
        const double expect = 10.0 * std::log10(oracle::cnr_linear(
                                  params.eirp_dbm, gt, params.bandwidth_hz(), d, f));
        CHECK(std::fabs(got - expect) < 1e-9);
    }
}
