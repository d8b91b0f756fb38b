#pragma once

#include <cstdint>
#include <vector>

#include "leosim/link.hpp"
#include "leosim/mobility.hpp"
#include "leosim/orbits.hpp"

namespace leo::env {

inline constexpr int kNoService = -1;

// Dense encoding of the one-hot association vector: one satellite index, or
// kNoService when nothing is covered.
struct Action {
    int sat = kNoService;
};

// The 4 x N per-agent state matrix: coverage, occupied channels (previous
// section), candidate CINR and remaining visible time per satellite.
// coverage[n] == 0 implies cinr_db[n] is NaN and visible_s[n] == 0.
struct AgentObservation {
    int num_sats = 0;
    std::vector<std::uint8_t> coverage;
    std::vector<int> occupied_channels;
    std::vector<double> cinr_db;
    std::vector<double> visible_s;

    int covered_count() const {
        int c = 0;
        for (auto b : coverage) c += b;
        return c;
    }
};

enum class RewardCase : std::uint8_t {
    OutOfCoverage = 1,  // chosen satellite does not cover the user
    Degraded = 2,       // capacity-blocked or CINR below threshold
    Stay = 3,           // same satellite as previous association, link reliable
    Handover = 4,       // association changed, link reliable
};

// Case rewards: -5b / -b / weighted positive value / value - 0.5b. With
// `normalize` set, the Case-3 terms are scaled into [0, 1] so that
// w1+w2+w3 = 1 bounds Case 3 by beta; with it cleared the raw units of the
// reward definition are used.
struct RewardParams {
    double beta = 1.0;
    double w1 = 1.0 / 3.0;
    double w2 = 1.0 / 3.0;
    double w3 = 1.0 / 3.0;
    int channels_per_sat = 8;  // L
    double cinr_threshold_db = 0.0;
    bool normalize = true;
    double cinr_scale_db = 30.0;
    double rho_scale_s = 900.0;
};

struct SectionOutcome {
    double reward = 0.0;
    RewardCase case_id = RewardCase::OutOfCoverage;
    bool handover = false;
    bool blocked = false;
    int chosen_sat = kNoService;
    int served_sat = kNoService;  // set for Cases 3/4 only
    double cinr_db = 0.0;         // valid iff has_cinr
    bool has_cinr = false;
};

// One (section, user) record of the episode trace.
struct TraceRow {
    int t = 0;  // section index
    int user_id = 0;
    mobility::UserType user_type = mobility::UserType::GroundTerminal;
    int sat_id = kNoService;  // chosen satellite (kNoService = no-service action)
    double reward = 0.0;
    int case_id = 0;
    bool handover = false;
    bool blocked = false;
    double cinr_db = 0.0;
    bool has_cinr = false;
};

struct SimParams {
    double section_s = 10.0;
    int num_sections = 90;

    double episode_s() const { return section_s * num_sections; }
};

// Multi-agent handover environment. Satellite and user motion is
// action-independent, so all geometry (positions, coverage, CNR terms,
// remaining visible time) is precomputed for every section at reset; step()
// only performs admission, rewards and bookkeeping.
//
// step() is serialized; distinct seeds/episodes run in parallel only as
// whole independent instances.
class HandoverEnv {
public:
    HandoverEnv(std::vector<orbits::SatelliteState> sats, std::vector<mobility::UserState> users,
                link::LinkBudgetParams link_params, RewardParams reward_params, SimParams sim,
                bool fv_priority);

    void reset();

    int num_sats() const { return static_cast<int>(sats_.size()); }
    int num_users() const { return static_cast<int>(users_.size()); }
    int section() const { return section_; }
    int num_sections() const { return sim_.num_sections; }
    bool done() const { return section_ >= sim_.num_sections; }
    bool fv_priority() const { return fv_priority_; }

    const RewardParams& reward_params() const { return reward_params_; }
    const link::LinkBudgetParams& link_params() const { return link_params_; }
    const SimParams& sim_params() const { return sim_; }
    const std::vector<mobility::UserState>& users() const { return users_; }

    // Observation of agent k at the current section.
    const AgentObservation& observation(int k) const { return observations_.at(k); }
    const std::vector<AgentObservation>& observations() const { return observations_; }

    // Previous association of agent k (kNoService before the first valid
    // service).
    int previous_association(int k) const { return prev_assoc_.at(k); }

    // Applies the joint action, scores every agent, advances one section and
    // reassembles observations. A malformed joint action (wrong arity or an
    // out-of-range index) throws std::invalid_argument before any mutation.
    std::vector<SectionOutcome> step(const std::vector<Action>& joint_action);

    const std::vector<TraceRow>& trace() const { return trace_; }
    // Eq-7d accumulator: sum over sections and satellites of max(0, load - L).
    long long total_blocking() const { return total_blocking_; }
    const std::vector<int>& handover_counts() const { return handover_counts_; }

    // Largest per-(user, section) covered-satellite count; sizes the target
    // entropy of learned policies.
    int max_covered_count() const { return max_covered_count_; }

    // User state (position advanced) at a given section.
    const mobility::UserState& user_state_at(int t, int k) const;

    // Covered (user, satellite) budget lines of one section.
    std::vector<link::LinkSample> link_samples(int t) const;

private:
    double cnr_linear_at(int t, int k, int n) const { return cnr_linear_[idx(t, k, n)]; }
    bool covered_at(int t, int k, int n) const { return coverage_[idx(t, k, n)] != 0; }
    std::size_t idx(int t, int k, int n) const {
        return (static_cast<std::size_t>(t) * users_.size() + k) * sats_.size() + n;
    }
    void precompute();
    void assemble_observations();
    double candidate_cinr_db(int t, int k, int n) const;

    std::vector<orbits::SatelliteState> sats_;
    std::vector<mobility::UserState> users_;
    link::LinkBudgetParams link_params_;
    RewardParams reward_params_;
    SimParams sim_;
    bool fv_priority_;

    // Precomputed per (section, user, satellite).
    std::vector<double> cnr_linear_;
    std::vector<std::uint8_t> coverage_;
    std::vector<double> visible_s_;
    std::vector<std::vector<mobility::UserState>> user_states_;  // [t][k]
    int max_covered_count_ = 0;

    int section_ = 0;
    std::vector<int> prev_assoc_;
    std::vector<int> occupancy_;  // channels occupied per satellite, previous section
    std::vector<AgentObservation> observations_;
    std::vector<TraceRow> trace_;
    std::vector<int> handover_counts_;
    long long total_blocking_ = 0;
};

// Eq-7d blocking recomputation from a dumped trace: load counts every row
// whose chosen satellite covered the user (case != 1).
long long blocking_from_trace(const std::vector<TraceRow>& trace, int channels_per_sat);

}  // namespace leo::env
