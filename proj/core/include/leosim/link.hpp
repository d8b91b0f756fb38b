#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "leosim/mobility.hpp"
#include "leosim/orbits.hpp"

namespace leo::link {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Downlink radio constants. EIRP realizes the transmit-side product
// p_t * g_{i,1}; the per-type G/T realizes g_{i,2} / T_{e,i}.
struct LinkBudgetParams {
    double carrier_frequency_ghz = 18.5;
    double bandwidth_mhz = 250.0;
    double eirp_dbm = 73.1;
    double polarization_isolation_db = 12.0;
    double min_elevation_deg = 15.0;
    double cinr_threshold_db = 0.0;

    double bandwidth_hz() const { return bandwidth_mhz * 1e6; }
    double eirp_dbw() const { return eirp_dbm - 30.0; }
};

// One (user, satellite) budget line for the per-section CSV trace.
struct LinkSample {
    int user_id = 0;
    int sat_id = 0;
    double fspl_db = 0.0;
    double cnr_db = 0.0;
    std::optional<double> inr_db;  // empty: no interferers
    double cinr_db = 0.0;
};

// Free space path loss: 20 log10(d_km) + 20 log10(f_GHz) + 92.45 dB.
// Throws std::domain_error on non-positive inputs.
double fspl_db(double distance_km, double frequency_ghz);

// Downlink CNR in dB for a covered link of slant range `slant_km` and
// effective receive figure of merit `gt_db`.
double cnr_db_at(double slant_km, double gt_db, const LinkBudgetParams& params);

// CNR of the (user, sat) pair; empty when the satellite does not cover the
// user at the elevation threshold.
std::optional<double> cnr_db(const mobility::UserState& user, const orbits::SatelliteState& sat,
                             const LinkBudgetParams& params);

// Aggregate interference-to-noise ratio at user k served by `serving_sat_id`:
// the linear sum over every other covering satellite's carrier-to-noise
// term, each reduced by the polarization isolation. Empty when no other
// satellite covers the user (zero linear interference power).
std::optional<double> inr_db(const mobility::UserState& user, int serving_sat_id,
                             const std::vector<orbits::SatelliteState>& all_sats,
                             const LinkBudgetParams& params);

// Same aggregation over precomputed linear CNR terms.
std::optional<double> inr_db_from_terms(const std::vector<double>& interferer_cnr_linear,
                                        double polarization_isolation_db);

// CINR = CNR / (INR + 1), evaluated in the linear domain.
double cinr_db(double cnr_db, std::optional<double> inr_db);

}  // namespace leo::link
