#include "leosim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace leo::env {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

HandoverEnv::HandoverEnv(std::vector<orbits::SatelliteState> sats,
                         std::vector<mobility::UserState> users,
                         link::LinkBudgetParams link_params, RewardParams reward_params,
                         SimParams sim, bool fv_priority)
    : sats_(std::move(sats)),
      users_(std::move(users)),
      link_params_(link_params),
      reward_params_(reward_params),
      sim_(sim),
      fv_priority_(fv_priority) {
    if (sats_.empty()) throw std::invalid_argument("env: need at least one satellite");
    if (users_.empty()) throw std::invalid_argument("env: need at least one user");
    if (sim_.num_sections < 1) throw std::invalid_argument("env: num_sections must be >= 1");
    if (sim_.section_s <= 0.0) throw std::invalid_argument("env: section_s must be > 0");
    if (reward_params_.beta <= 0.0) throw std::invalid_argument("env: beta must be > 0");
    if (reward_params_.channels_per_sat < 1)
        throw std::invalid_argument("env: channels_per_sat must be >= 1");
    std::set<int> ids;
    for (const auto& s : sats_) ids.insert(s.sat_id);
    if (ids.size() != sats_.size()) throw std::invalid_argument("env: duplicate sat_id");
    precompute();
    reset();
}

void HandoverEnv::precompute() {
    const int U = sim_.num_sections;
    const int K = num_users();
    const int N = num_sats();

    user_states_.assign(U, users_);
    for (int t = 1; t < U; ++t)
        for (int k = 0; k < K; ++k)
            user_states_[t][k] = mobility::advance(user_states_[t - 1][k], sim_.section_s);

    cnr_linear_.assign(static_cast<std::size_t>(U) * K * N, 0.0);
    coverage_.assign(cnr_linear_.size(), 0);
    visible_s_.assign(cnr_linear_.size(), 0.0);

    std::vector<orbits::SatelliteState> sats_t(sats_.size());
    max_covered_count_ = 0;
    for (int t = 0; t < U; ++t) {
        const double now = t * sim_.section_s;
        for (int n = 0; n < N; ++n) sats_t[n] = orbits::propagate(sats_[n], now);
        for (int k = 0; k < K; ++k) {
            const auto& user = user_states_[t][k];
            int covered = 0;
            for (int n = 0; n < N; ++n) {
                if (!orbits::is_covered(user.position, sats_t[n], link_params_.min_elevation_deg))
                    continue;
                const std::size_t i = idx(t, k, n);
                coverage_[i] = 1;
                ++covered;
                const double slant =
                    (sats_t[n].position_ecef - geodetic_to_ecef(user.position)).norm();
                cnr_linear_[i] =
                    link::db_to_linear(link::cnr_db_at(slant, user.gt_over_t_db, link_params_));
            }
            max_covered_count_ = std::max(max_covered_count_, covered);
        }
    }

    // Remaining visible time by backward recurrence over the section grid:
    // rho_t = dt + rho_{t+1} while the next section stays covered.
    for (int t = U - 2; t >= 0; --t) {
        for (int k = 0; k < num_users(); ++k) {
            for (int n = 0; n < N; ++n) {
                const std::size_t i = idx(t, k, n);
                if (coverage_[i] && coverage_[idx(t + 1, k, n)])
                    visible_s_[i] = sim_.section_s + visible_s_[idx(t + 1, k, n)];
            }
        }
    }
}

void HandoverEnv::reset() {
    section_ = 0;
    prev_assoc_.assign(num_users(), kNoService);
    occupancy_.assign(num_sats(), 0);
    handover_counts_.assign(num_users(), 0);
    trace_.clear();
    total_blocking_ = 0;
    assemble_observations();
}

double HandoverEnv::candidate_cinr_db(int t, int k, int n) const {
    // Interference at k served by n: every other covering satellite
    // contributes its carrier term through the polarization isolation.
    const int N = num_sats();
    double sum = 0.0;
    for (int m = 0; m < N; ++m) sum += cnr_linear_[idx(t, k, m)];
    const double own = cnr_linear_[idx(t, k, n)];
    const double inr_linear =
        (sum - own) / link::db_to_linear(link_params_.polarization_isolation_db);
    return link::linear_to_db(own / (inr_linear + 1.0));
}

void HandoverEnv::assemble_observations() {
    const int K = num_users();
    const int N = num_sats();
    observations_.assign(K, AgentObservation{});
    if (done()) return;
    const int t = section_;
    for (int k = 0; k < K; ++k) {
        AgentObservation& obs = observations_[k];
        obs.num_sats = N;
        obs.coverage.assign(N, 0);
        obs.occupied_channels.assign(N, 0);
        obs.cinr_db.assign(N, kNaN);
        obs.visible_s.assign(N, 0.0);
        for (int n = 0; n < N; ++n) {
            obs.occupied_channels[n] = occupancy_[n];
            if (!covered_at(t, k, n)) continue;
            obs.coverage[n] = 1;
            obs.cinr_db[n] = candidate_cinr_db(t, k, n);
            obs.visible_s[n] = visible_s_[idx(t, k, n)];
        }
    }
}

std::vector<SectionOutcome> HandoverEnv::step(const std::vector<Action>& joint_action) {
    const int K = num_users();
    const int N = num_sats();
    const int L = reward_params_.channels_per_sat;
    if (done()) throw std::logic_error("env: episode finished, call reset()");
    if (static_cast<int>(joint_action.size()) != K)
        throw std::invalid_argument("env: joint action must have one action per agent");
    for (const auto& a : joint_action)
        if (a.sat != kNoService && (a.sat < 0 || a.sat >= N))
            throw std::invalid_argument("env: action index out of range");

    const int t = section_;

    // Admission: per satellite, covered choosers beyond L are blocked.
    // Under the FV-priority scenario flying vehicles are admitted first;
    // ties break by ascending user id.
    std::vector<std::vector<int>> choosers(N);
    for (int k = 0; k < K; ++k) {
        const int n = joint_action[k].sat;
        if (n != kNoService && covered_at(t, k, n)) choosers[n].push_back(k);
    }
    std::vector<std::uint8_t> blocked(K, 0);
    for (int n = 0; n < N; ++n) {
        auto& group = choosers[n];
        if (static_cast<int>(group.size()) <= L) continue;
        if (fv_priority_) {
            std::stable_sort(group.begin(), group.end(), [&](int a, int b) {
                const bool fa = mobility::is_flying_vehicle(users_[a].type);
                const bool fb = mobility::is_flying_vehicle(users_[b].type);
                if (fa != fb) return fa;
                return a < b;
            });
        }
        for (std::size_t i = L; i < group.size(); ++i) blocked[group[i]] = 1;
        total_blocking_ += static_cast<long long>(group.size()) - L;
    }

    std::vector<SectionOutcome> outcomes(K);
    const auto& rp = reward_params_;
    for (int k = 0; k < K; ++k) {
        SectionOutcome& out = outcomes[k];
        const int n = joint_action[k].sat;
        out.chosen_sat = n;
        const bool covered = n != kNoService && covered_at(t, k, n);
        if (!covered) {
            out.case_id = RewardCase::OutOfCoverage;
            out.reward = -5.0 * rp.beta;
            continue;
        }
        const double cinr = candidate_cinr_db(t, k, n);
        if (blocked[k]) {
            out.case_id = RewardCase::Degraded;
            out.blocked = true;
            out.reward = -rp.beta;
            continue;
        }
        if (cinr < rp.cinr_threshold_db) {
            out.case_id = RewardCase::Degraded;
            out.reward = -rp.beta;
            out.cinr_db = cinr;
            out.has_cinr = true;
            continue;
        }
        // Reliable link: Case 3 on the kept satellite (or the very first
        // association), Case 4 with the handover penalty otherwise.
        const double rho = visible_s_[idx(t, k, n)];
        const int z = occupancy_[n];
        double value;
        if (rp.normalize) {
            const double nrho = std::clamp(rho / rp.rho_scale_s, 0.0, 1.0);
            const double ncinr = std::clamp(cinr / rp.cinr_scale_db, 0.0, 1.0);
            const double nidle = static_cast<double>(L - z) / L;
            value = rp.w1 * nrho + rp.w2 * ncinr + rp.w3 * nidle;
        } else {
            value = rp.w1 * rho + rp.w2 * cinr + rp.w3 * (L - z);
        }
        out.served_sat = n;
        out.cinr_db = cinr;
        out.has_cinr = true;
        if (prev_assoc_[k] == kNoService || prev_assoc_[k] == n) {
            out.case_id = RewardCase::Stay;
            out.reward = value;
        } else {
            out.case_id = RewardCase::Handover;
            out.reward = value - 0.5 * rp.beta;
            out.handover = true;
            handover_counts_[k] += 1;
        }
    }

    // Bookkeeping: occupancy for the next section's z row counts served
    // users; associations advance only on valid service.
    std::fill(occupancy_.begin(), occupancy_.end(), 0);
    for (int k = 0; k < K; ++k) {
        if (outcomes[k].served_sat != kNoService) {
            occupancy_[outcomes[k].served_sat] += 1;
            prev_assoc_[k] = outcomes[k].served_sat;
        }
        TraceRow row;
        row.t = t;
        row.user_id = users_[k].user_id;
        row.user_type = users_[k].type;
        row.sat_id = outcomes[k].chosen_sat == kNoService
                         ? kNoService
                         : sats_[outcomes[k].chosen_sat].sat_id;
        row.reward = outcomes[k].reward;
        row.case_id = static_cast<int>(outcomes[k].case_id);
        row.handover = outcomes[k].handover;
        row.blocked = outcomes[k].blocked;
        row.cinr_db = outcomes[k].cinr_db;
        row.has_cinr = outcomes[k].has_cinr;
        trace_.push_back(row);
    }

    ++section_;
    assemble_observations();
    return outcomes;
}

const mobility::UserState& HandoverEnv::user_state_at(int t, int k) const {
    return user_states_.at(t).at(k);
}

std::vector<link::LinkSample> HandoverEnv::link_samples(int t) const {
    std::vector<link::LinkSample> samples;
    const int K = num_users();
    const int N = num_sats();
    for (int k = 0; k < K; ++k) {
        const auto& user = user_states_.at(t)[k];
        for (int n = 0; n < N; ++n) {
            if (!covered_at(t, k, n)) continue;
            link::LinkSample s;
            s.user_id = user.user_id;
            s.sat_id = sats_[n].sat_id;
            const auto sat_t = orbits::propagate(sats_[n], t * sim_.section_s);
            const double slant = (sat_t.position_ecef - geodetic_to_ecef(user.position)).norm();
            s.fspl_db = link::fspl_db(slant, link_params_.carrier_frequency_ghz);
            s.cnr_db = link::linear_to_db(cnr_linear_[idx(t, k, n)]);
            double interferers = 0.0;
            for (int m = 0; m < N; ++m)
                if (m != n) interferers += cnr_linear_[idx(t, k, m)];
            if (interferers > 0.0) {
                s.inr_db = link::linear_to_db(
                    interferers / link::db_to_linear(link_params_.polarization_isolation_db));
            }
            s.cinr_db = link::cinr_db(s.cnr_db, s.inr_db);
            samples.push_back(s);
        }
    }
    return samples;
}

long long blocking_from_trace(const std::vector<TraceRow>& trace, int channels_per_sat) {
    std::map<std::pair<int, int>, int> load;  // (t, sat_id) -> attempts
    for (const auto& row : trace) {
        if (row.case_id == 1 || row.sat_id == kNoService) continue;
        load[{row.t, row.sat_id}] += 1;
    }
    long long total = 0;
    for (const auto& [key, count] : load) total += std::max(0, count - channels_per_sat);
    return total;
}

}  // namespace leo::env
