#include "leosim/link.hpp"

#include <stdexcept>

namespace leo::link {

double fspl_db(double distance_km, double frequency_ghz) {
    if (distance_km <= 0.0 || frequency_ghz <= 0.0)
        throw std::domain_error("fspl: distance and frequency must be > 0");
    return 20.0 * std::log10(distance_km) + 20.0 * std::log10(frequency_ghz) + 92.45;
}

double cnr_db_at(double slant_km, double gt_db, const LinkBudgetParams& params) {
    const double loss = fspl_db(slant_km, params.carrier_frequency_ghz);
    return params.eirp_dbw() + gt_db - linear_to_db(kBoltzmann) -
           linear_to_db(params.bandwidth_hz()) - loss;
}

std::optional<double> cnr_db(const mobility::UserState& user, const orbits::SatelliteState& sat,
                             const LinkBudgetParams& params) {
    if (!orbits::is_covered(user.position, sat, params.min_elevation_deg)) return std::nullopt;
    const double slant = (sat.position_ecef - geodetic_to_ecef(user.position)).norm();
    return cnr_db_at(slant, user.gt_over_t_db, params);
}

std::optional<double> inr_db_from_terms(const std::vector<double>& interferer_cnr_linear,
                                        double polarization_isolation_db) {
    if (interferer_cnr_linear.empty()) return std::nullopt;
    const double iso = db_to_linear(polarization_isolation_db);
    double sum = 0.0;
    for (double c : interferer_cnr_linear) sum += c / iso;
    return linear_to_db(sum);
}

std::optional<double> inr_db(const mobility::UserState& user, int serving_sat_id,
                             const std::vector<orbits::SatelliteState>& all_sats,
                             const LinkBudgetParams& params) {
    std::vector<double> terms;
    for (const auto& sat : all_sats) {
        if (sat.sat_id == serving_sat_id) continue;
        if (auto c = cnr_db(user, sat, params)) terms.push_back(db_to_linear(*c));
    }
    return inr_db_from_terms(terms, params.polarization_isolation_db);
}

double cinr_db(double cnr_db_value, std::optional<double> inr_db_value) {
    if (!inr_db_value) return cnr_db_value;
    return cnr_db_value - linear_to_db(db_to_linear(*inr_db_value) + 1.0);
}

}  // namespace leo::link
