#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "leosim/env.hpp"
#include "leosim/rng.hpp"

namespace leo::agents {

// Per-agent decision rule. `prev` is the agent's previous association
// (env::kNoService before the first valid service). Implementations must
// return a covered satellite whenever one exists.
class Policy {
public:
    virtual ~Policy() = default;
    virtual env::Action act(const env::AgentObservation& obs, env::Action prev) = 0;
};

// Candidate scans over the covered set; ties break towards the lowest index.
int argmax_visible(const env::AgentObservation& obs);
int argmax_cinr(const env::AgentObservation& obs);
// Most idle channels; ties -> highest CINR, then lowest index.
int argmax_idle(const env::AgentObservation& obs);

// Maximum remaining service time: keep the current satellite while covered,
// otherwise switch to the longest remaining pass.
class MrstPolicy : public Policy {
public:
    env::Action act(const env::AgentObservation& obs, env::Action prev) override;
};

// Maximum available channels.
class MacPolicy : public Policy {
public:
    env::Action act(const env::AgentObservation& obs, env::Action prev) override;
};

// Maximum instantaneous signal strength.
class MisPolicy : public Policy {
public:
    env::Action act(const env::AgentObservation& obs, env::Action prev) override;
};

// Tabular Q-learning core over pre-discretized states. Rows are
// zero-initialized on first touch; the map is ordered so iteration (and
// serialization) is deterministic.
struct QTableConfig {
    int num_actions = 0;
    double learning_rate = 0.1;
    double gamma = 0.99;
};

class QTable {
public:
    explicit QTable(QTableConfig cfg);

    int greedy(std::uint64_t state) const;  // ties -> lowest action index
    int select(std::uint64_t state, double epsilon, Rng& rng) const;
    void update(std::uint64_t s, int a, double r, std::uint64_t s2, bool terminal);
    double value(std::uint64_t s, int a) const;
    std::size_t num_states() const { return table_.size(); }
    const std::map<std::uint64_t, std::vector<double>>& rows() const { return table_; }
    void set_row(std::uint64_t s, std::vector<double> row);
    const QTableConfig& config() const { return cfg_; }

private:
    QTableConfig cfg_;
    std::map<std::uint64_t, std::vector<double>> table_;
};

// The raw 4xN observation is unhashable at tabular scale; the state key
// quantizes (coverage, remaining time, CINR, idle channels) for the current
// satellite and for the three argmax candidates, and actions select among
// that menu.
enum class MetaAction : int { Stay = 0, BestVisibility = 1, BestCinr = 2, BestIdle = 3 };
inline constexpr int kNumMetaActions = 4;

struct QFeaturizer {
    int channels_per_sat = 8;
    double rho_scale_s = 900.0;
    double cinr_scale_db = 30.0;

    std::uint64_t state_key(const env::AgentObservation& obs, int current_sat) const;
    // Concrete satellite for a meta action; env::kNoService when nothing is
    // covered. An uncovered "stay" falls back to the longest remaining pass.
    int resolve(MetaAction a, const env::AgentObservation& obs, int current_sat) const;
};

// Independent epsilon-greedy tabular agent (one per user).
class QLearningPolicy : public Policy {
public:
    QLearningPolicy(QTableConfig cfg, QFeaturizer featurizer, Rng rng);

    env::Action act(const env::AgentObservation& obs, env::Action prev) override;
    // Q-update for the transition closed by the last act() call.
    void learn(double reward, const env::AgentObservation& next_obs, int next_current,
               bool terminal);

    void set_epsilon(double eps) { epsilon_ = eps; }
    double epsilon() const { return epsilon_; }
    QTable& table() { return table_; }
    const QTable& table() const { return table_; }
    const QFeaturizer& featurizer() const { return featurizer_; }
    Rng& rng() { return rng_; }
    const Rng& rng() const { return rng_; }

private:
    QTable table_;
    QFeaturizer featurizer_;
    Rng rng_;
    double epsilon_ = 0.0;
    std::uint64_t last_state_ = 0;
    int last_meta_ = 0;
    bool has_last_ = false;
};

}  // namespace leo::agents
