#include "leosim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace leo::agents {

int argmax_visible(const env::AgentObservation& obs) {
    int best = env::kNoService;
    for (int n = 0; n < obs.num_sats; ++n) {
        if (!obs.coverage[n]) continue;
        if (best == env::kNoService || obs.visible_s[n] > obs.visible_s[best]) best = n;
    }
    return best;
}

int argmax_cinr(const env::AgentObservation& obs) {
    int best = env::kNoService;
    for (int n = 0; n < obs.num_sats; ++n) {
        if (!obs.coverage[n]) continue;
        if (best == env::kNoService || obs.cinr_db[n] > obs.cinr_db[best]) best = n;
    }
    return best;
}

int argmax_idle(const env::AgentObservation& obs) {
    int best = env::kNoService;
    for (int n = 0; n < obs.num_sats; ++n) {
        if (!obs.coverage[n]) continue;
        if (best == env::kNoService) {
            best = n;
            continue;
        }
        if (obs.occupied_channels[n] < obs.occupied_channels[best]) {
            best = n;
        } else if (obs.occupied_channels[n] == obs.occupied_channels[best] &&
                   obs.cinr_db[n] > obs.cinr_db[best]) {
            best = n;
        }
    }
    return best;
}

env::Action MrstPolicy::act(const env::AgentObservation& obs, env::Action prev) {
    if (prev.sat != env::kNoService && obs.coverage[prev.sat]) return prev;
    return {argmax_visible(obs)};
}

env::Action MacPolicy::act(const env::AgentObservation& obs, env::Action) {
    return {argmax_idle(obs)};
}

env::Action MisPolicy::act(const env::AgentObservation& obs, env::Action) {
    return {argmax_cinr(obs)};
}

QTable::QTable(QTableConfig cfg) : cfg_(cfg) {
    if (cfg_.num_actions < 1) throw std::invalid_argument("QTable: num_actions must be >= 1");
}

int QTable::greedy(std::uint64_t state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0;
    const auto& row = it->second;
    int best = 0;
    for (int a = 1; a < cfg_.num_actions; ++a)
        if (row[a] > row[best]) best = a;
    return best;
}

int QTable::select(std::uint64_t state, double epsilon, Rng& rng) const {
    if (rng.uniform() < epsilon)
        return static_cast<int>(rng.uniform_index(cfg_.num_actions));
    return greedy(state);
}

void QTable::update(std::uint64_t s, int a, double r, std::uint64_t s2, bool terminal) {
    auto& row = table_.try_emplace(s, std::vector<double>(cfg_.num_actions, 0.0)).first->second;
    double target = r;
    if (!terminal) {
        auto it = table_.find(s2);
        double best_next = 0.0;
        if (it != table_.end()) best_next = *std::max_element(it->second.begin(), it->second.end());
        target += cfg_.gamma * best_next;
    }
    row[a] += cfg_.learning_rate * (target - row[a]);
}

double QTable::value(std::uint64_t s, int a) const {
    auto it = table_.find(s);
    return it == table_.end() ? 0.0 : it->second.at(a);
}

void QTable::set_row(std::uint64_t s, std::vector<double> row) {
    if (static_cast<int>(row.size()) != cfg_.num_actions)
        throw std::invalid_argument("QTable::set_row: bad row size");
    table_[s] = std::move(row);
}

namespace {

int bin01(double x, int bins) {
    const int b = static_cast<int>(x * bins);
    return std::clamp(b, 0, bins - 1);
}

}  // namespace

std::uint64_t QFeaturizer::state_key(const env::AgentObservation& obs, int current_sat) const {
    // 6 bits per slot: current satellite + the three candidates.
    auto slot = [&](int n) -> std::uint64_t {
        if (n == env::kNoService || !obs.coverage[n]) return 0;
        const int rb = bin01(obs.visible_s[n] / rho_scale_s, 4);
        const int cb = bin01(obs.cinr_db[n] / cinr_scale_db, 4);
        const double idle =
            static_cast<double>(channels_per_sat - obs.occupied_channels[n]) / channels_per_sat;
        const int ib = bin01(idle, 3);
        return 1ull + (static_cast<std::uint64_t>(rb) | (static_cast<std::uint64_t>(cb) << 2) |
                       (static_cast<std::uint64_t>(ib) << 4));
    };
    std::uint64_t key = slot(current_sat);
    key = (key << 6) | slot(argmax_visible(obs));
    key = (key << 6) | slot(argmax_cinr(obs));
    key = (key << 6) | slot(argmax_idle(obs));
    return key;
}

int QFeaturizer::resolve(MetaAction a, const env::AgentObservation& obs, int current_sat) const {
    switch (a) {
        case MetaAction::Stay:
            if (current_sat != env::kNoService && obs.coverage[current_sat]) return current_sat;
            return argmax_visible(obs);
        case MetaAction::BestVisibility: return argmax_visible(obs);
        case MetaAction::BestCinr: return argmax_cinr(obs);
        case MetaAction::BestIdle: return argmax_idle(obs);
    }
    return env::kNoService;
}

QLearningPolicy::QLearningPolicy(QTableConfig cfg, QFeaturizer featurizer, Rng rng)
    : table_(cfg), featurizer_(featurizer), rng_(rng) {
    if (cfg.num_actions != kNumMetaActions)
        throw std::invalid_argument("QLearningPolicy expects the meta-action menu");
}

env::Action QLearningPolicy::act(const env::AgentObservation& obs, env::Action prev) {
    last_state_ = featurizer_.state_key(obs, prev.sat);
    last_meta_ = table_.select(last_state_, epsilon_, rng_);
    has_last_ = true;
    return {featurizer_.resolve(static_cast<MetaAction>(last_meta_), obs, prev.sat)};
}

void QLearningPolicy::learn(double reward, const env::AgentObservation& next_obs, int next_current,
                            bool terminal) {
    if (!has_last_) throw std::logic_error("QLearningPolicy::learn before act");
    const std::uint64_t s2 = featurizer_.state_key(next_obs, next_current);
    table_.update(last_state_, last_meta_, reward, s2, terminal);
    has_last_ = false;
}

}  // namespace leo::agents
