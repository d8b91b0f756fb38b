#pragma once

#include <vector>

#include "leosim/rng.hpp"

namespace leo::agents {

// Congestion game over satellites: agent k's payoff for choosing n is
// values[k][n] when the resulting load stays within `capacity` channels,
// and values[k][n] - beta otherwise. Finite capacity-indicator games of
// this form admit an exact potential, so deterministic best-response sweeps
// reach a pure Nash equilibrium.
struct NashConfig {
    int capacity = 8;
    double beta = 1.0;
    int max_rounds = 64;
    // temperature > 0: each response is a Boltzmann draw over payoffs
    // instead of an argmax (training-time exploration; never converges in
    // the equilibrium sense and runs exactly `stochastic_rounds` sweeps).
    double temperature = 0.0;
    // Per-agent override of `temperature` (e.g. each agent's current SAC
    // alpha); empty means the scalar applies to everyone.
    std::vector<double> per_agent_temperature;
    // epsilon > 0: a response is uniform over available satellites with
    // this probability (the DQN-style exploration mode).
    double epsilon = 0.0;
    int stochastic_rounds = 2;
};

struct NashResult {
    std::vector<int> actions;  // per agent: satellite index or env::kNoService
    bool converged = false;
    int rounds = 0;
};

// values[k][n]: preference of agent k for satellite n; -infinity marks an
// unavailable (uncovered) satellite. `order` lists agent indices in
// best-response order (flying vehicles first under the priority scenario).
// `initial` seeds the joint action; unavailable or missing entries fall
// back to the agent's own argmax. On non-convergence the joint action with
// the highest social welfare (sum of chosen values) seen is returned.
//
// Agents with no available satellite keep env::kNoService.
NashResult nash_select(const std::vector<std::vector<double>>& values, const NashConfig& cfg,
                       const std::vector<int>& order, std::vector<int> initial = {},
                       Rng* rng = nullptr);

}  // namespace leo::agents
