#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "leosim/checkpoint.hpp"
#include "leosim/env.hpp"
#include "leosim/nash.hpp"
#include "leosim/nn.hpp"
#include "leosim/policies.hpp"
#include "leosim/rng.hpp"

namespace leo::agents {

// Flattened, normalized 4xN observation matrix: coverage row, occupancy
// fraction row, scaled CINR row (0 where no link), scaled remaining-time
// row.
struct FeatureSpec {
    int num_sats = 0;
    int channels_per_sat = 8;
    double rho_scale_s = 900.0;
    double cinr_scale_db = 30.0;

    int dim() const { return 4 * num_sats; }
    std::vector<double> build(const env::AgentObservation& obs) const;
};

// Replay buffer element, stored after the environment step.
struct Transition {
    std::vector<double> s;
    std::vector<std::uint8_t> mask_s;
    int action = 0;
    double reward = 0.0;
    std::vector<double> s2;
    std::vector<std::uint8_t> mask_s2;
    bool terminal = false;
};

// FIFO ring with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& sample(Rng& rng) const;
    const Transition& at(std::size_t i) const { return data_.at(i); }
    void clear();

    void save(BinWriter& w) const;
    void load(BinReader& r);

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// --- discrete soft actor-critic quantities ------------------------------

// V(s) = pi(s)^T [Q(s) - alpha log pi(s)], summed over the support of pi.
double soft_state_value(std::span<const double> pi, std::span<const double> q, double alpha);

// Policy entropy over the support.
double policy_entropy(std::span<const double> pi);

// J(alpha) for one state: pi^T [-alpha (log pi + target_entropy)].
double temperature_loss(std::span<const double> pi, double alpha, double target_entropy);

struct SacHyper {
    std::vector<int> hidden{64, 64};
    double gamma = 0.99;
    double tau = 0.02;
    double lr_q = 3e-4;
    double lr_pi = 3e-4;
    double lr_alpha = 3e-4;
    double init_alpha = 0.2;
    int batch_size = 64;
    std::size_t buffer_capacity = 50000;
    std::size_t min_buffer = 256;  // gradient steps start once this is reached
    double target_entropy_scale = 0.6;
};

// Batch views used by the loss/gradient routines.
using TransitionBatch = std::vector<const Transition*>;

// J_pi = E[pi(s)^T (alpha log pi(s) - min_m Q_m(s))]; the critics enter as
// fixed targets.
double policy_loss(const TransitionBatch& batch, const nn::Mlp& pi, const nn::Mlp& q1,
                   const nn::Mlp& q2, double alpha);
// Same quantity with analytic gradients accumulated into `grads`; returns
// the loss and, via out parameters, the mean policy entropy.
double policy_loss_grad(const TransitionBatch& batch, const nn::Mlp& pi, const nn::Mlp& q1,
                        const nn::Mlp& q2, double alpha, nn::Gradients& grads,
                        double* mean_entropy);

// J_Q = E[ 1/2 (Q(s,a) - (r + gamma V_target(s')))^2 ] for one critic, with
// V from the target critics (element-wise min) and the current policy.
// Terminal transitions drop the bootstrap term.
double q_loss(const TransitionBatch& batch, const nn::Mlp& q, const nn::Mlp& target_q1,
              const nn::Mlp& target_q2, const nn::Mlp& pi, double alpha, double gamma);
double q_loss_grad(const TransitionBatch& batch, const nn::Mlp& q, const nn::Mlp& target_q1,
                   const nn::Mlp& target_q2, const nn::Mlp& pi, double alpha, double gamma,
                   nn::Gradients& grads);

// Batch temperature objective and its alpha-gradient (mean entropy minus
// target).
double temperature_loss_batch(const TransitionBatch& batch, const nn::Mlp& pi, double alpha,
                              double target_entropy, double* grad_alpha);

// target <- tau * online + (1 - tau) * target, parameter-wise.
void soft_update(nn::Mlp& target, const nn::Mlp& online, double tau);

// One agent's networks: policy, twin soft critics, twin targets and the
// auto-tuned temperature (optimized through log alpha to stay positive).
class SacAgent {
public:
    SacAgent(int feature_dim, int num_actions, const SacHyper& hyper, double target_entropy,
             Rng rng);

    std::vector<double> policy_probs(std::span<const double> features,
                                     std::span<const std::uint8_t> mask) const;
    // Best-response preferences: alpha * log pi(n|s) + min_m Q_m(s, n);
    // -infinity on masked satellites.
    std::vector<double> nash_values(std::span<const double> features,
                                    std::span<const std::uint8_t> mask) const;

    struct UpdateReport {
        double q1_loss = 0.0;
        double q2_loss = 0.0;
        double pi_loss = 0.0;
        double alpha_loss = 0.0;
        double entropy = 0.0;
    };
    // One gradient step on both critics, the policy and the temperature,
    // followed by the tau soft update of the targets.
    UpdateReport update(const TransitionBatch& batch);

    double alpha() const;
    double target_entropy() const { return target_entropy_; }
    const nn::Mlp& policy_net() const { return pi_; }
    const nn::Mlp& q1_net() const { return q1_; }
    const nn::Mlp& q2_net() const { return q2_; }
    const nn::Mlp& target_q1_net() const { return tq1_; }
    const nn::Mlp& target_q2_net() const { return tq2_; }
    Rng& rng() { return rng_; }
    ReplayBuffer& buffer() { return buffer_; }
    const SacHyper& hyper() const { return hyper_; }

    void save(BinWriter& w) const;
    void load(BinReader& r);

private:
    SacHyper hyper_;
    double target_entropy_;
    nn::Mlp pi_, q1_, q2_, tq1_, tq2_;
    nn::AdamState opt_pi_, opt_q1_, opt_q2_;
    double log_alpha_;
    nn::ScalarAdam opt_alpha_;
    Rng rng_;
    ReplayBuffer buffer_;
};

struct DqnHyper {
    std::vector<int> hidden{64, 64};
    double gamma = 0.99;
    double tau = 0.02;
    double lr = 3e-4;
    int batch_size = 64;
    std::size_t buffer_capacity = 50000;
    std::size_t min_buffer = 256;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_episodes = 30;
};

// Single Q-network agent with a soft-updated target; exploration happens
// through epsilon-greedy best responses in the joint selection.
class DqnAgent {
public:
    DqnAgent(int feature_dim, int num_actions, const DqnHyper& hyper, Rng rng);

    std::vector<double> q_values(std::span<const double> features) const;
    std::vector<double> nash_values(std::span<const double> features,
                                    std::span<const std::uint8_t> mask) const;
    double update(const TransitionBatch& batch);  // returns the TD loss

    const nn::Mlp& q_net() const { return q_; }
    const nn::Mlp& target_net() const { return tq_; }
    Rng& rng() { return rng_; }
    ReplayBuffer& buffer() { return buffer_; }
    const DqnHyper& hyper() const { return hyper_; }

    void save(BinWriter& w) const;
    void load(BinReader& r);

private:
    DqnHyper hyper_;
    nn::Mlp q_, tq_;
    nn::AdamState opt_;
    Rng rng_;
    ReplayBuffer buffer_;
};

struct QLearnHyper {
    double learning_rate = 0.1;
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_episodes = 200;
};

struct TrainConfig {
    int episodes = 30;      // nash-sac / nash-dqn
    int q_episodes = 300;   // tabular
    SacHyper sac;
    DqnHyper dqn;
    QLearnHyper qlearn;
    int nash_max_rounds_factor = 8;
    int nash_stochastic_rounds = 2;
    bool shared_weights = false;
};

// episode, mean_return, mean_entropy, alpha, q_loss, pi_loss
struct TrainingCurvePoint {
    int episode = 0;
    double mean_return = 0.0;
    double mean_entropy = 0.0;
    double alpha = 0.0;
    double q_loss = 0.0;
    double pi_loss = 0.0;
};

void write_training_curve_csv(const std::string& path,
                              const std::vector<TrainingCurvePoint>& curve);

// Best-response order: flying vehicles first under the priority scenario,
// ascending user index otherwise.
std::vector<int> response_order(const std::vector<mobility::UserState>& users, bool fv_priority);

// Algorithm tag ("nash-sac", "nash-dqn", "qlearning") stored in a trainer
// checkpoint directory.
std::string checkpoint_algorithm(const std::string& dir);

// --- trainers -------------------------------------------------------------

// Nash-SAC (Algorithm 1): per section, preferences from the per-agent soft
// values feed a best-response joint selection (Boltzmann draws at the
// current temperature during training), the environment is stepped, the
// transitions stored, and one gradient step per agent is taken on both
// critic losses, the policy loss and the temperature loss, followed by the
// tau soft update. Throws std::runtime_error if a loss turns non-finite.
class NashSacTrainer {
public:
    NashSacTrainer(const TrainConfig& cfg, const env::HandoverEnv& env, std::uint64_t seed);

    void run(env::HandoverEnv& env, int episodes);
    std::vector<env::Action> decide_eval(const env::HandoverEnv& env) const;

    const std::vector<TrainingCurvePoint>& curve() const { return curve_; }
    int episodes_done() const { return episodes_done_; }
    std::vector<SacAgent>& agents() { return agents_; }

    void save(const std::string& dir) const;
    void load(const std::string& dir);

private:
    SacAgent& agent_for(int k) { return cfg_.shared_weights ? agents_[0] : agents_[k]; }
    const SacAgent& agent_for(int k) const {
        return cfg_.shared_weights ? agents_[0] : agents_[k];
    }

    TrainConfig cfg_;
    std::uint64_t seed_ = 0;
    int num_users_ = 0;
    FeatureSpec features_;
    std::vector<SacAgent> agents_;
    std::vector<TrainingCurvePoint> curve_;
    int episodes_done_ = 0;
};

class NashDqnTrainer {
public:
    NashDqnTrainer(const TrainConfig& cfg, const env::HandoverEnv& env, std::uint64_t seed);

    void run(env::HandoverEnv& env, int episodes);
    std::vector<env::Action> decide_eval(const env::HandoverEnv& env) const;

    const std::vector<TrainingCurvePoint>& curve() const { return curve_; }
    int episodes_done() const { return episodes_done_; }
    std::vector<DqnAgent>& agents() { return agents_; }

    void save(const std::string& dir) const;
    void load(const std::string& dir);

private:
    DqnAgent& agent_for(int k) { return cfg_.shared_weights ? agents_[0] : agents_[k]; }
    const DqnAgent& agent_for(int k) const {
        return cfg_.shared_weights ? agents_[0] : agents_[k];
    }

    TrainConfig cfg_;
    std::uint64_t seed_ = 0;
    int num_users_ = 0;
    FeatureSpec features_;
    std::vector<DqnAgent> agents_;
    std::vector<TrainingCurvePoint> curve_;
    int episodes_done_ = 0;
};

class QLearningTrainer {
public:
    QLearningTrainer(const TrainConfig& cfg, const env::HandoverEnv& env, std::uint64_t seed);

    void run(env::HandoverEnv& env, int episodes);
    std::vector<env::Action> decide_eval(const env::HandoverEnv& env) const;

    const std::vector<TrainingCurvePoint>& curve() const { return curve_; }
    int episodes_done() const { return episodes_done_; }
    std::vector<QLearningPolicy>& agents() { return agents_; }

    void save(const std::string& dir) const;
    void load(const std::string& dir);

private:
    TrainConfig cfg_;
    int num_users_ = 0;
    std::vector<QLearningPolicy> agents_;
    std::vector<TrainingCurvePoint> curve_;
    int episodes_done_ = 0;
};

}  // namespace leo::agents
