#include "leosim/nash.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "leosim/env.hpp"

namespace leo::agents {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double welfare(const std::vector<std::vector<double>>& values, const std::vector<int>& actions) {
    double w = 0.0;
    for (std::size_t k = 0; k < actions.size(); ++k)
        if (actions[k] != env::kNoService) w += values[k][actions[k]];
    return w;
}

}  // namespace

NashResult nash_select(const std::vector<std::vector<double>>& values, const NashConfig& cfg,
                       const std::vector<int>& order, std::vector<int> initial, Rng* rng) {
    const int K = static_cast<int>(values.size());
    if (static_cast<int>(order.size()) != K)
        throw std::invalid_argument("nash_select: order must list every agent once");
    const int N = K == 0 ? 0 : static_cast<int>(values[0].size());
    if (!cfg.per_agent_temperature.empty() &&
        static_cast<int>(cfg.per_agent_temperature.size()) != K)
        throw std::invalid_argument("nash_select: per-agent temperature size mismatch");
    auto temperature_of = [&](int k) {
        return cfg.per_agent_temperature.empty() ? cfg.temperature : cfg.per_agent_temperature[k];
    };
    bool any_temperature = cfg.temperature > 0.0;
    for (double t : cfg.per_agent_temperature) any_temperature = any_temperature || t > 0.0;
    const bool stochastic = any_temperature || cfg.epsilon > 0.0;
    if (stochastic && rng == nullptr)
        throw std::invalid_argument("nash_select: stochastic mode needs an rng");

    auto own_argmax = [&](int k) {
        int best = env::kNoService;
        for (int n = 0; n < N; ++n) {
            if (values[k][n] == -kInf) continue;
            if (best == env::kNoService || values[k][n] > values[k][best]) best = n;
        }
        return best;
    };

    NashResult result;
    result.actions.assign(K, env::kNoService);
    for (int k = 0; k < K; ++k) {
        int seed_action = env::kNoService;
        if (k < static_cast<int>(initial.size())) seed_action = initial[k];
        if (seed_action < 0 || seed_action >= N || values[k][seed_action] == -kInf)
            seed_action = own_argmax(k);
        result.actions[k] = seed_action;
    }

    std::vector<int> load(N, 0);
    auto recount = [&]() {
        std::fill(load.begin(), load.end(), 0);
        for (int a : result.actions)
            if (a != env::kNoService) load[a] += 1;
    };
    recount();

    // Payoff of agent k moving to n given everyone else fixed.
    auto payoff = [&](int k, int n) {
        const int others = load[n] - (result.actions[k] == n ? 1 : 0);
        double p = values[k][n];
        if (others + 1 > cfg.capacity) p -= cfg.beta;
        return p;
    };

    auto respond = [&](int k) -> int {
        if (stochastic && cfg.epsilon > 0.0 && rng->uniform() < cfg.epsilon) {
            std::vector<int> avail;
            for (int n = 0; n < N; ++n)
                if (values[k][n] != -kInf) avail.push_back(n);
            if (avail.empty()) return env::kNoService;
            return avail[rng->uniform_index(avail.size())];
        }
        if (stochastic && temperature_of(k) > 0.0) {
            const double temp = temperature_of(k);
            std::vector<double> weights(N, 0.0);
            double max_p = -kInf;
            for (int n = 0; n < N; ++n)
                if (values[k][n] != -kInf) max_p = std::max(max_p, payoff(k, n));
            if (max_p == -kInf) return env::kNoService;
            for (int n = 0; n < N; ++n)
                if (values[k][n] != -kInf)
                    weights[n] = std::exp((payoff(k, n) - max_p) / temp);
            return static_cast<int>(rng->categorical(weights));
        }
        // Deterministic best response; ties keep the current action, then
        // the lowest index.
        int best = env::kNoService;
        double best_p = -kInf;
        const int cur = result.actions[k];
        for (int n = 0; n < N; ++n) {
            if (values[k][n] == -kInf) continue;
            const double p = payoff(k, n);
            if (p > best_p || (p == best_p && n == cur && best != cur)) {
                best = n;
                best_p = p;
            }
        }
        return best;
    };

    std::vector<int> best_seen = result.actions;
    double best_welfare = welfare(values, result.actions);

    const int rounds_limit = stochastic ? cfg.stochastic_rounds : cfg.max_rounds;
    for (int round = 0; round < rounds_limit; ++round) {
        bool changed = false;
        for (int k : order) {
            const int next = respond(k);
            if (next == result.actions[k]) continue;
            if (result.actions[k] != env::kNoService) load[result.actions[k]] -= 1;
            if (next != env::kNoService) load[next] += 1;
            result.actions[k] = next;
            changed = true;
        }
        result.rounds = round + 1;
        const double w = welfare(values, result.actions);
        if (w > best_welfare) {
            best_welfare = w;
            best_seen = result.actions;
        }
        if (!stochastic && !changed) {
            result.converged = true;
            return result;
        }
    }
    if (!stochastic) result.actions = best_seen;
    return result;
}

}  // namespace leo::agents
