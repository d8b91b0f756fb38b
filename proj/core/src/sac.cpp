#include "leosim/sac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>

namespace leo::agents {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stable log-probabilities over the mask; -inf on masked entries.
std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const std::uint8_t> mask) {
    double max_logit = -kInf;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    if (!std::isfinite(max_logit))
        throw std::invalid_argument("masked_log_softmax: empty support");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) sum += std::exp(logits[i] - max_logit);
    const double lse = max_logit + std::log(sum);
    std::vector<double> logp(logits.size(), -kInf);
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i]) logp[i] = logits[i] - lse;
    return logp;
}

std::vector<double> element_min(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
    return out;
}

bool empty_mask(std::span<const std::uint8_t> mask) {
    for (auto m : mask)
        if (m) return false;
    return true;
}

// Soft Bellman target r + gamma * V_target(s') (bootstrap dropped on
// terminal transitions or when s' has no covered satellite).
double bellman_target(const Transition& t, const nn::Mlp& target_q1, const nn::Mlp& target_q2,
                      const nn::Mlp& pi, double alpha, double gamma) {
    if (t.terminal || empty_mask(t.mask_s2)) return t.reward;
    const auto logits = forward(pi, t.s2);
    const auto logp = masked_log_softmax(logits, t.mask_s2);
    const auto qmin = element_min(forward(target_q1, t.s2), forward(target_q2, t.s2));
    double v = 0.0;
    for (std::size_t n = 0; n < logp.size(); ++n) {
        if (logp[n] == -kInf) continue;
        const double p = std::exp(logp[n]);
        v += p * (qmin[n] - alpha * logp[n]);
    }
    return t.reward + gamma * v;
}

void write_mlp(BinWriter& w, const nn::Mlp& net) {
    w.u32(static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        w.u32(static_cast<std::uint32_t>(l.in));
        w.u32(static_cast<std::uint32_t>(l.out));
        w.u8(static_cast<std::uint8_t>(l.activation));
        w.f64_vec(l.w);
        w.f64_vec(l.b);
    }
}

nn::Mlp read_mlp(BinReader& r) {
    nn::Mlp net;
    const auto layers = r.u32();
    for (std::uint32_t i = 0; i < layers; ++i) {
        nn::Layer l;
        l.in = static_cast<int>(r.u32());
        l.out = static_cast<int>(r.u32());
        l.activation = static_cast<nn::Activation>(r.u8());
        l.w = r.f64_vec();
        l.b = r.f64_vec();
        net.layers.push_back(std::move(l));
    }
    return net;
}

void write_adam(BinWriter& w, const nn::AdamState& s) {
    w.f64(s.lr);
    w.f64(s.beta1);
    w.f64(s.beta2);
    w.f64(s.eps);
    w.i64(s.step);
    auto vecs = {&s.m_w, &s.v_w, &s.m_b, &s.v_b};
    for (const auto* group : vecs) {
        w.u32(static_cast<std::uint32_t>(group->size()));
        for (const auto& v : *group) w.f64_vec(v);
    }
}

nn::AdamState read_adam(BinReader& r) {
    nn::AdamState s;
    s.lr = r.f64();
    s.beta1 = r.f64();
    s.beta2 = r.f64();
    s.eps = r.f64();
    s.step = r.i64();
    auto vecs = {&s.m_w, &s.v_w, &s.m_b, &s.v_b};
    for (auto* group : vecs) {
        const auto n = r.u32();
        group->resize(n);
        for (auto& v : *group) v = r.f64_vec();
    }
    return s;
}

void write_rng(BinWriter& w, const Rng& rng) { w.u64_vec(rng.save_state()); }

void read_rng(BinReader& r, Rng& rng) {
    const auto words = r.u64_vec();
    rng.restore_state(words);
}

}  // namespace

std::vector<double> FeatureSpec::build(const env::AgentObservation& obs) const {
    std::vector<double> f(static_cast<std::size_t>(dim()), 0.0);
    const int N = num_sats;
    for (int n = 0; n < N; ++n) {
        f[n] = obs.coverage[n] ? 1.0 : 0.0;
        f[N + n] = static_cast<double>(obs.occupied_channels[n]) / channels_per_sat;
        if (obs.coverage[n])
            f[2 * N + n] = std::clamp(obs.cinr_db[n] / cinr_scale_db, -1.0, 1.0);
        f[3 * N + n] = std::clamp(obs.visible_s[n] / rho_scale_s, 0.0, 1.0);
    }
    return f;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
    if (data_.empty()) throw std::logic_error("ReplayBuffer: sampling from empty buffer");
    return data_[rng.uniform_index(data_.size())];
}

void ReplayBuffer::clear() {
    data_.clear();
    next_ = 0;
}

void ReplayBuffer::save(BinWriter& w) const {
    w.u64(capacity_);
    w.u64(next_);
    w.u32(static_cast<std::uint32_t>(data_.size()));
    for (const auto& t : data_) {
        w.f64_vec(t.s);
        w.bytes(t.mask_s);
        w.u32(static_cast<std::uint32_t>(t.action));
        w.f64(t.reward);
        w.f64_vec(t.s2);
        w.bytes(t.mask_s2);
        w.u8(t.terminal ? 1 : 0);
    }
}

void ReplayBuffer::load(BinReader& r) {
    capacity_ = r.u64();
    next_ = r.u64();
    const auto n = r.u32();
    data_.assign(n, Transition{});
    for (auto& t : data_) {
        t.s = r.f64_vec();
        t.mask_s = r.bytes();
        t.action = static_cast<int>(r.u32());
        t.reward = r.f64();
        t.s2 = r.f64_vec();
        t.mask_s2 = r.bytes();
        t.terminal = r.u8() != 0;
    }
}

double soft_state_value(std::span<const double> pi, std::span<const double> q, double alpha) {
    double v = 0.0;
    for (std::size_t n = 0; n < pi.size(); ++n) {
        if (pi[n] <= 0.0) continue;  // 0 * log 0 := 0
        v += pi[n] * (q[n] - alpha * std::log(pi[n]));
    }
    return v;
}

double policy_entropy(std::span<const double> pi) {
    double h = 0.0;
    for (double p : pi)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double temperature_loss(std::span<const double> pi, double alpha, double target_entropy) {
    double j = 0.0;
    for (double p : pi)
        if (p > 0.0) j += p * (-alpha * (std::log(p) + target_entropy));
    return j;
}

double policy_loss(const TransitionBatch& batch, const nn::Mlp& pi, const nn::Mlp& q1,
                   const nn::Mlp& q2, double alpha) {
    if (batch.empty()) throw std::invalid_argument("policy_loss: empty batch");
    double loss = 0.0;
    for (const Transition* t : batch) {
        const auto logp = masked_log_softmax(forward(pi, t->s), t->mask_s);
        const auto qmin = element_min(forward(q1, t->s), forward(q2, t->s));
        for (std::size_t n = 0; n < logp.size(); ++n) {
            if (logp[n] == -kInf) continue;
            const double p = std::exp(logp[n]);
            loss += p * (alpha * logp[n] - qmin[n]);
        }
    }
    return loss / static_cast<double>(batch.size());
}

double policy_loss_grad(const TransitionBatch& batch, const nn::Mlp& pi, const nn::Mlp& q1,
                        const nn::Mlp& q2, double alpha, nn::Gradients& grads,
                        double* mean_entropy) {
    if (batch.empty()) throw std::invalid_argument("policy_loss_grad: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    double entropy = 0.0;
    for (const Transition* t : batch) {
        nn::ForwardCache cache;
        const auto logits = forward(pi, t->s, cache);
        const auto logp = masked_log_softmax(logits, t->mask_s);
        const auto qmin = element_min(forward(q1, t->s), forward(q2, t->s));
        // J_s = sum_n p_n f_n with f_n = alpha log p_n - qmin_n;
        // dJ_s / dlogit_j = p_j (f_j - J_s).
        double js = 0.0;
        double hs = 0.0;
        for (std::size_t n = 0; n < logp.size(); ++n) {
            if (logp[n] == -kInf) continue;
            const double p = std::exp(logp[n]);
            js += p * (alpha * logp[n] - qmin[n]);
            hs -= p * logp[n];
        }
        std::vector<double> dlogits(logits.size(), 0.0);
        for (std::size_t n = 0; n < logp.size(); ++n) {
            if (logp[n] == -kInf) continue;
            const double p = std::exp(logp[n]);
            const double f = alpha * logp[n] - qmin[n];
            dlogits[n] = p * (f - js) * inv_b;
        }
        backward(pi, cache, dlogits, grads);
        loss += js * inv_b;
        entropy += hs * inv_b;
    }
    if (mean_entropy) *mean_entropy = entropy;
    return loss;
}

double q_loss(const TransitionBatch& batch, const nn::Mlp& q, const nn::Mlp& target_q1,
              const nn::Mlp& target_q2, const nn::Mlp& pi, double alpha, double gamma) {
    if (batch.empty()) throw std::invalid_argument("q_loss: empty batch");
    double loss = 0.0;
    for (const Transition* t : batch) {
        const double y = bellman_target(*t, target_q1, target_q2, pi, alpha, gamma);
        const double err = forward(q, t->s)[t->action] - y;
        loss += 0.5 * err * err;
    }
    return loss / static_cast<double>(batch.size());
}

double q_loss_grad(const TransitionBatch& batch, const nn::Mlp& q, const nn::Mlp& target_q1,
                   const nn::Mlp& target_q2, const nn::Mlp& pi, double alpha, double gamma,
                   nn::Gradients& grads) {
    if (batch.empty()) throw std::invalid_argument("q_loss_grad: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const Transition* t : batch) {
        const double y = bellman_target(*t, target_q1, target_q2, pi, alpha, gamma);
        nn::ForwardCache cache;
        const auto out = forward(q, t->s, cache);
        const double err = out[t->action] - y;
        loss += 0.5 * err * err * inv_b;
        std::vector<double> dout(out.size(), 0.0);
        dout[t->action] = err * inv_b;
        backward(q, cache, dout, grads);
    }
    return loss;
}

double temperature_loss_batch(const TransitionBatch& batch, const nn::Mlp& pi, double alpha,
                              double target_entropy, double* grad_alpha) {
    if (batch.empty()) throw std::invalid_argument("temperature_loss_batch: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double mean_entropy = 0.0;
    for (const Transition* t : batch) {
        const auto logp = masked_log_softmax(forward(pi, t->s), t->mask_s);
        double hs = 0.0;
        for (double lp : logp)
            if (lp != -kInf) hs -= std::exp(lp) * lp;
        mean_entropy += hs * inv_b;
    }
    // J(alpha) = alpha * (H - target); dJ/dalpha = H - target.
    if (grad_alpha) *grad_alpha = mean_entropy - target_entropy;
    return alpha * (mean_entropy - target_entropy);
}

void soft_update(nn::Mlp& target, const nn::Mlp& online, double tau) {
    const std::size_t n = target.param_count();
    for (std::size_t i = 0; i < n; ++i)
        target.param_at(i) = tau * online.param_at(i) + (1.0 - tau) * target.param_at(i);
}

SacAgent::SacAgent(int feature_dim, int num_actions, const SacHyper& hyper, double target_entropy,
                   Rng rng)
    : hyper_(hyper), target_entropy_(target_entropy), rng_(rng), buffer_(hyper.buffer_capacity) {
    std::vector<int> sizes{feature_dim};
    sizes.insert(sizes.end(), hyper_.hidden.begin(), hyper_.hidden.end());
    sizes.push_back(num_actions);
    Rng init_pi = rng_.child("init-pi");
    Rng init_q1 = rng_.child("init-q1");
    Rng init_q2 = rng_.child("init-q2");
    pi_ = nn::make_mlp(sizes, nn::Activation::Tanh, init_pi);
    q1_ = nn::make_mlp(sizes, nn::Activation::Tanh, init_q1);
    q2_ = nn::make_mlp(sizes, nn::Activation::Tanh, init_q2);
    tq1_ = q1_;  // Algorithm 1 input line: targets start as copies
    tq2_ = q2_;
    opt_pi_ = nn::make_adam(pi_, hyper_.lr_pi);
    opt_q1_ = nn::make_adam(q1_, hyper_.lr_q);
    opt_q2_ = nn::make_adam(q2_, hyper_.lr_q);
    log_alpha_ = std::log(hyper_.init_alpha);
    opt_alpha_.lr = hyper_.lr_alpha;
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

std::vector<double> SacAgent::policy_probs(std::span<const double> features,
                                           std::span<const std::uint8_t> mask) const {
    return nn::masked_softmax(forward(pi_, features), mask);
}

std::vector<double> SacAgent::nash_values(std::span<const double> features,
                                          std::span<const std::uint8_t> mask) const {
    std::vector<double> v(mask.size(), -kInf);
    if (empty_mask(mask)) return v;
    const auto logp = masked_log_softmax(forward(pi_, features), mask);
    const auto qmin = element_min(forward(q1_, features), forward(q2_, features));
    const double a = alpha();
    for (std::size_t n = 0; n < mask.size(); ++n)
        if (mask[n]) v[n] = a * logp[n] + qmin[n];
    return v;
}

SacAgent::UpdateReport SacAgent::update(const TransitionBatch& batch) {
    UpdateReport report;

    nn::Gradients g1 = nn::make_gradients(q1_);
    report.q1_loss = q_loss_grad(batch, q1_, tq1_, tq2_, pi_, alpha(), hyper_.gamma, g1);
    nn::adam_step(q1_, g1, opt_q1_);

    nn::Gradients g2 = nn::make_gradients(q2_);
    report.q2_loss = q_loss_grad(batch, q2_, tq1_, tq2_, pi_, alpha(), hyper_.gamma, g2);
    nn::adam_step(q2_, g2, opt_q2_);

    nn::Gradients gp = nn::make_gradients(pi_);
    report.pi_loss = policy_loss_grad(batch, pi_, q1_, q2_, alpha(), gp, &report.entropy);
    nn::adam_step(pi_, gp, opt_pi_);

    double grad_alpha = 0.0;
    report.alpha_loss =
        temperature_loss_batch(batch, pi_, alpha(), target_entropy_, &grad_alpha);
    // Descend through log alpha so the temperature stays positive.
    log_alpha_ = nn::adam_step_scalar(log_alpha_, alpha() * grad_alpha, opt_alpha_);

    soft_update(tq1_, q1_, hyper_.tau);
    soft_update(tq2_, q2_, hyper_.tau);
    return report;
}

void SacAgent::save(BinWriter& w) const {
    w.f64(target_entropy_);
    write_mlp(w, pi_);
    write_mlp(w, q1_);
    write_mlp(w, q2_);
    write_mlp(w, tq1_);
    write_mlp(w, tq2_);
    write_adam(w, opt_pi_);
    write_adam(w, opt_q1_);
    write_adam(w, opt_q2_);
    w.f64(log_alpha_);
    w.f64(opt_alpha_.lr);
    w.i64(opt_alpha_.step);
    w.f64(opt_alpha_.m);
    w.f64(opt_alpha_.v);
    write_rng(w, rng_);
    buffer_.save(w);
}

void SacAgent::load(BinReader& r) {
    target_entropy_ = r.f64();
    pi_ = read_mlp(r);
    q1_ = read_mlp(r);
    q2_ = read_mlp(r);
    tq1_ = read_mlp(r);
    tq2_ = read_mlp(r);
    opt_pi_ = read_adam(r);
    opt_q1_ = read_adam(r);
    opt_q2_ = read_adam(r);
    log_alpha_ = r.f64();
    opt_alpha_.lr = r.f64();
    opt_alpha_.step = r.i64();
    opt_alpha_.m = r.f64();
    opt_alpha_.v = r.f64();
    read_rng(r, rng_);
    buffer_.load(r);
}

DqnAgent::DqnAgent(int feature_dim, int num_actions, const DqnHyper& hyper, Rng rng)
    : hyper_(hyper), rng_(rng), buffer_(hyper.buffer_capacity) {
    std::vector<int> sizes{feature_dim};
    sizes.insert(sizes.end(), hyper_.hidden.begin(), hyper_.hidden.end());
    sizes.push_back(num_actions);
    Rng init = rng_.child("init-q");
    q_ = nn::make_mlp(sizes, nn::Activation::Tanh, init);
    tq_ = q_;
    opt_ = nn::make_adam(q_, hyper_.lr);
}

std::vector<double> DqnAgent::q_values(std::span<const double> features) const {
    return forward(q_, features);
}

std::vector<double> DqnAgent::nash_values(std::span<const double> features,
                                          std::span<const std::uint8_t> mask) const {
    std::vector<double> v(mask.size(), -kInf);
    if (empty_mask(mask)) return v;
    const auto q = forward(q_, features);
    for (std::size_t n = 0; n < mask.size(); ++n)
        if (mask[n]) v[n] = q[n];
    return v;
}

double DqnAgent::update(const TransitionBatch& batch) {
    if (batch.empty()) throw std::invalid_argument("DqnAgent::update: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    nn::Gradients g = nn::make_gradients(q_);
    double loss = 0.0;
    for (const Transition* t : batch) {
        double y = t->reward;
        if (!t->terminal && !empty_mask(t->mask_s2)) {
            const auto qn = forward(tq_, t->s2);
            double best = -kInf;
            for (std::size_t n = 0; n < qn.size(); ++n)
                if (t->mask_s2[n]) best = std::max(best, qn[n]);
            y += hyper_.gamma * best;
        }
        nn::ForwardCache cache;
        const auto out = forward(q_, t->s, cache);
        const double err = out[t->action] - y;
        loss += 0.5 * err * err * inv_b;
        std::vector<double> dout(out.size(), 0.0);
        dout[t->action] = err * inv_b;
        backward(q_, cache, dout, g);
    }
    nn::adam_step(q_, g, opt_);
    soft_update(tq_, q_, hyper_.tau);
    return loss;
}

void DqnAgent::save(BinWriter& w) const {
    write_mlp(w, q_);
    write_mlp(w, tq_);
    write_adam(w, opt_);
    write_rng(w, rng_);
    buffer_.save(w);
}

void DqnAgent::load(BinReader& r) {
    q_ = read_mlp(r);
    tq_ = read_mlp(r);
    opt_ = read_adam(r);
    read_rng(r, rng_);
    buffer_.load(r);
}

void write_training_curve_csv(const std::string& path,
                              const std::vector<TrainingCurvePoint>& curve) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "episode,mean_return,mean_entropy,alpha,q_loss,pi_loss\n");
    for (const auto& p : curve) {
        std::fprintf(f, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", p.episode, p.mean_return,
                     p.mean_entropy, p.alpha, p.q_loss, p.pi_loss);
    }
    std::fclose(f);
}

std::vector<int> response_order(const std::vector<mobility::UserState>& users, bool fv_priority) {
    std::vector<int> order;
    order.reserve(users.size());
    if (fv_priority) {
        for (std::size_t k = 0; k < users.size(); ++k)
            if (mobility::is_flying_vehicle(users[k].type)) order.push_back(static_cast<int>(k));
        for (std::size_t k = 0; k < users.size(); ++k)
            if (!mobility::is_flying_vehicle(users[k].type)) order.push_back(static_cast<int>(k));
    } else {
        for (std::size_t k = 0; k < users.size(); ++k) order.push_back(static_cast<int>(k));
    }
    return order;
}

namespace {

FeatureSpec feature_spec_for(const env::HandoverEnv& env) {
    FeatureSpec spec;
    spec.num_sats = env.num_sats();
    spec.channels_per_sat = env.reward_params().channels_per_sat;
    spec.rho_scale_s = env.reward_params().rho_scale_s;
    spec.cinr_scale_db = env.reward_params().cinr_scale_db;
    return spec;
}

double linear_schedule(double start, double end, int episode, int decay_episodes) {
    if (decay_episodes <= 0) return end;
    const double f = std::min(1.0, static_cast<double>(episode) / decay_episodes);
    return start + (end - start) * f;
}

}  // namespace

NashSacTrainer::NashSacTrainer(const TrainConfig& cfg, const env::HandoverEnv& env,
                               std::uint64_t seed)
    : cfg_(cfg), seed_(seed), num_users_(env.num_users()), features_(feature_spec_for(env)) {
    const double target_entropy =
        cfg_.sac.target_entropy_scale * std::log(std::max(2, env.max_covered_count()));
    const Rng root(seed);
    const int banks = cfg_.shared_weights ? 1 : num_users_;
    for (int k = 0; k < banks; ++k)
        agents_.emplace_back(features_.dim(), env.num_sats(), cfg_.sac, target_entropy,
                             root.child("agent", static_cast<std::uint64_t>(k)));
}

void NashSacTrainer::run(env::HandoverEnv& env, int episodes) {
    const int K = num_users_;
    const auto order = response_order(env.users(), env.fv_priority());
    NashConfig nash_cfg;
    nash_cfg.capacity = env.reward_params().channels_per_sat;
    nash_cfg.beta = env.reward_params().beta;
    nash_cfg.max_rounds = cfg_.nash_max_rounds_factor * K;
    nash_cfg.stochastic_rounds = cfg_.nash_stochastic_rounds;
    Rng explore = Rng(seed_).child("explore", episodes_done_);

    for (int ep = 0; ep < episodes; ++ep) {
        env.reset();
        double episode_return = 0.0;
        double sum_entropy = 0.0, sum_alpha = 0.0, sum_qloss = 0.0, sum_piloss = 0.0;
        long long updates = 0;
        int section = 0;
        while (!env.done()) {
            std::vector<std::vector<double>> feats(K);
            std::vector<std::vector<std::uint8_t>> masks(K);
            std::vector<std::vector<double>> values(K);
            nash_cfg.per_agent_temperature.assign(K, 0.0);
            std::vector<int> initial(K, env::kNoService);
            for (int k = 0; k < K; ++k) {
                const auto& obs = env.observation(k);
                feats[k] = features_.build(obs);
                masks[k] = obs.coverage;
                values[k] = agent_for(k).nash_values(feats[k], masks[k]);
                nash_cfg.per_agent_temperature[k] = agent_for(k).alpha();
                initial[k] = env.previous_association(k);
            }
            const auto joint = nash_select(values, nash_cfg, order, initial, &explore);
            std::vector<env::Action> actions(K);
            for (int k = 0; k < K; ++k) actions[k] = {joint.actions[k]};
            const auto outcomes = env.step(actions);
            const bool terminal = env.done();

            for (int k = 0; k < K; ++k) {
                episode_return += outcomes[k].reward;
                if (joint.actions[k] == env::kNoService || empty_mask(masks[k])) continue;
                Transition t;
                t.s = std::move(feats[k]);
                t.mask_s = std::move(masks[k]);
                t.action = joint.actions[k];
                t.reward = outcomes[k].reward;
                t.terminal = terminal;
                if (terminal) {
                    t.s2 = t.s;
                    t.mask_s2 = t.mask_s;
                } else {
                    const auto& next_obs = env.observation(k);
                    t.s2 = features_.build(next_obs);
                    t.mask_s2 = next_obs.coverage;
                }
                agent_for(k).buffer().push(std::move(t));
            }

            const int banks = static_cast<int>(agents_.size());
            for (int b = 0; b < banks; ++b) {
                SacAgent& agent = agents_[b];
                if (agent.buffer().size() < agent.hyper().min_buffer) continue;
                TransitionBatch batch;
                batch.reserve(agent.hyper().batch_size);
                for (int i = 0; i < agent.hyper().batch_size; ++i)
                    batch.push_back(&agent.buffer().sample(agent.rng()));
                const auto report = agent.update(batch);
                const double probe =
                    report.q1_loss + report.q2_loss + report.pi_loss + report.alpha_loss;
                if (!std::isfinite(probe))
                    throw std::runtime_error("nash-sac diverged at episode " +
                                             std::to_string(episodes_done_) + " section " +
                                             std::to_string(section));
                sum_entropy += report.entropy;
                sum_alpha += agent.alpha();
                sum_qloss += 0.5 * (report.q1_loss + report.q2_loss);
                sum_piloss += report.pi_loss;
                ++updates;
            }
            ++section;
        }
        TrainingCurvePoint point;
        point.episode = episodes_done_;
        point.mean_return = episode_return / K;
        if (updates > 0) {
            point.mean_entropy = sum_entropy / updates;
            point.alpha = sum_alpha / updates;
            point.q_loss = sum_qloss / updates;
            point.pi_loss = sum_piloss / updates;
        }
        curve_.push_back(point);
        ++episodes_done_;
        explore = Rng(seed_).child("explore", episodes_done_);
    }
}

std::vector<env::Action> NashSacTrainer::decide_eval(const env::HandoverEnv& env) const {
    const int K = env.num_users();
    const FeatureSpec spec = feature_spec_for(env);
    std::vector<std::vector<double>> values(K);
    std::vector<int> initial(K, env::kNoService);
    for (int k = 0; k < K; ++k) {
        const auto& obs = env.observation(k);
        values[k] = agent_for(k).nash_values(spec.build(obs), obs.coverage);
        initial[k] = env.previous_association(k);
    }
    NashConfig nash_cfg;
    nash_cfg.capacity = env.reward_params().channels_per_sat;
    nash_cfg.beta = env.reward_params().beta;
    nash_cfg.max_rounds = cfg_.nash_max_rounds_factor * K;
    const auto joint =
        nash_select(values, nash_cfg, response_order(env.users(), env.fv_priority()), initial);
    std::vector<env::Action> actions(K);
    for (int k = 0; k < K; ++k) actions[k] = {joint.actions[k]};
    return actions;
}

namespace {
constexpr const char* kTrainerMagic = "LEOTRN1\n";
constexpr const char* kSacMagic = "LEOSAC1\n";
constexpr const char* kDqnMagic = "LEODQN1\n";
constexpr const char* kQtabMagic = "LEOQTB1\n";

std::string agent_path(const std::string& dir, int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "agent_%04d.ckpt", k);
    return dir + "/" + buf;
}

void save_trainer_meta(const std::string& dir, const std::string& algo, int episodes_done,
                       const std::vector<TrainingCurvePoint>& curve, int num_agents) {
    BinWriter w(dir + "/trainer.ckpt");
    w.str(kTrainerMagic);
    w.str(algo);
    w.u32(1);  // format version
    w.u32(static_cast<std::uint32_t>(num_agents));
    w.u32(static_cast<std::uint32_t>(episodes_done));
    w.u32(static_cast<std::uint32_t>(curve.size()));
    for (const auto& p : curve) {
        w.u32(static_cast<std::uint32_t>(p.episode));
        w.f64(p.mean_return);
        w.f64(p.mean_entropy);
        w.f64(p.alpha);
        w.f64(p.q_loss);
        w.f64(p.pi_loss);
    }
}

struct TrainerMeta {
    int num_agents = 0;
    int episodes_done = 0;
    std::vector<TrainingCurvePoint> curve;
};

TrainerMeta load_trainer_meta(const std::string& dir, const std::string& algo) {
    BinReader r(dir + "/trainer.ckpt");
    if (r.str() != kTrainerMagic) throw std::runtime_error("bad trainer checkpoint in " + dir);
    const std::string got_algo = r.str();
    if (got_algo != algo)
        throw std::runtime_error("checkpoint algorithm mismatch: expected " + algo + ", found " +
                                 got_algo);
    const auto version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    TrainerMeta meta;
    meta.num_agents = static_cast<int>(r.u32());
    meta.episodes_done = static_cast<int>(r.u32());
    const auto n = r.u32();
    meta.curve.resize(n);
    for (auto& p : meta.curve) {
        p.episode = static_cast<int>(r.u32());
        p.mean_return = r.f64();
        p.mean_entropy = r.f64();
        p.alpha = r.f64();
        p.q_loss = r.f64();
        p.pi_loss = r.f64();
    }
    return meta;
}

}  // namespace

std::string checkpoint_algorithm(const std::string& dir) {
    BinReader r(dir + "/trainer.ckpt");
    if (r.str() != kTrainerMagic) throw std::runtime_error("bad trainer checkpoint in " + dir);
    return r.str();
}

void NashSacTrainer::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    save_trainer_meta(dir, "nash-sac", episodes_done_, curve_, static_cast<int>(agents_.size()));
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinWriter w(agent_path(dir, static_cast<int>(k)));
        w.str(kSacMagic);
        agents_[k].save(w);
    }
}

void NashSacTrainer::load(const std::string& dir) {
    const auto meta = load_trainer_meta(dir, "nash-sac");
    if (meta.num_agents != static_cast<int>(agents_.size()))
        throw std::runtime_error("checkpoint agent count mismatch");
    episodes_done_ = meta.episodes_done;
    curve_ = meta.curve;
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinReader r(agent_path(dir, static_cast<int>(k)));
        if (r.str() != kSacMagic) throw std::runtime_error("bad agent checkpoint");
        agents_[k].load(r);
    }
}

NashDqnTrainer::NashDqnTrainer(const TrainConfig& cfg, const env::HandoverEnv& env,
                               std::uint64_t seed)
    : cfg_(cfg), seed_(seed), num_users_(env.num_users()), features_(feature_spec_for(env)) {
    const Rng root(seed);
    const int banks = cfg_.shared_weights ? 1 : num_users_;
    for (int k = 0; k < banks; ++k)
        agents_.emplace_back(features_.dim(), env.num_sats(), cfg_.dqn,
                             root.child("agent", static_cast<std::uint64_t>(k)));
}

void NashDqnTrainer::run(env::HandoverEnv& env, int episodes) {
    const int K = num_users_;
    const auto order = response_order(env.users(), env.fv_priority());
    NashConfig nash_cfg;
    nash_cfg.capacity = env.reward_params().channels_per_sat;
    nash_cfg.beta = env.reward_params().beta;
    nash_cfg.max_rounds = cfg_.nash_max_rounds_factor * K;
    nash_cfg.stochastic_rounds = cfg_.nash_stochastic_rounds;
    Rng explore = Rng(seed_).child("explore", episodes_done_);

    for (int ep = 0; ep < episodes; ++ep) {
        env.reset();
        nash_cfg.epsilon = linear_schedule(cfg_.dqn.epsilon_start, cfg_.dqn.epsilon_end,
                                           episodes_done_, cfg_.dqn.epsilon_decay_episodes);
        double episode_return = 0.0;
        double sum_qloss = 0.0;
        long long updates = 0;
        while (!env.done()) {
            std::vector<std::vector<double>> feats(K);
            std::vector<std::vector<std::uint8_t>> masks(K);
            std::vector<std::vector<double>> values(K);
            std::vector<int> initial(K, env::kNoService);
            for (int k = 0; k < K; ++k) {
                const auto& obs = env.observation(k);
                feats[k] = features_.build(obs);
                masks[k] = obs.coverage;
                values[k] = agent_for(k).nash_values(feats[k], masks[k]);
                initial[k] = env.previous_association(k);
            }
            const auto joint = nash_select(values, nash_cfg, order, initial, &explore);
            std::vector<env::Action> actions(K);
            for (int k = 0; k < K; ++k) actions[k] = {joint.actions[k]};
            const auto outcomes = env.step(actions);
            const bool terminal = env.done();

            for (int k = 0; k < K; ++k) {
                episode_return += outcomes[k].reward;
                if (joint.actions[k] == env::kNoService || empty_mask(masks[k])) continue;
                Transition t;
                t.s = std::move(feats[k]);
                t.mask_s = std::move(masks[k]);
                t.action = joint.actions[k];
                t.reward = outcomes[k].reward;
                t.terminal = terminal;
                if (terminal) {
                    t.s2 = t.s;
                    t.mask_s2 = t.mask_s;
                } else {
                    const auto& next_obs = env.observation(k);
                    t.s2 = features_.build(next_obs);
                    t.mask_s2 = next_obs.coverage;
                }
                agent_for(k).buffer().push(std::move(t));
            }

            const int banks = static_cast<int>(agents_.size());
            for (int b = 0; b < banks; ++b) {
                DqnAgent& agent = agents_[b];
                if (agent.buffer().size() < agent.hyper().min_buffer) continue;
                TransitionBatch batch;
                batch.reserve(agent.hyper().batch_size);
                for (int i = 0; i < agent.hyper().batch_size; ++i)
                    batch.push_back(&agent.buffer().sample(agent.rng()));
                const double loss = agent.update(batch);
                if (!std::isfinite(loss))
                    throw std::runtime_error("nash-dqn diverged at episode " +
                                             std::to_string(episodes_done_));
                sum_qloss += loss;
                ++updates;
            }
        }
        TrainingCurvePoint point;
        point.episode = episodes_done_;
        point.mean_return = episode_return / K;
        if (updates > 0) point.q_loss = sum_qloss / updates;
        curve_.push_back(point);
        ++episodes_done_;
        explore = Rng(seed_).child("explore", episodes_done_);
    }
}

std::vector<env::Action> NashDqnTrainer::decide_eval(const env::HandoverEnv& env) const {
    const int K = env.num_users();
    const FeatureSpec spec = feature_spec_for(env);
    std::vector<std::vector<double>> values(K);
    std::vector<int> initial(K, env::kNoService);
    for (int k = 0; k < K; ++k) {
        const auto& obs = env.observation(k);
        values[k] = agent_for(k).nash_values(spec.build(obs), obs.coverage);
        initial[k] = env.previous_association(k);
    }
    NashConfig nash_cfg;
    nash_cfg.capacity = env.reward_params().channels_per_sat;
    nash_cfg.beta = env.reward_params().beta;
    nash_cfg.max_rounds = cfg_.nash_max_rounds_factor * K;
    const auto joint =
        nash_select(values, nash_cfg, response_order(env.users(), env.fv_priority()), initial);
    std::vector<env::Action> actions(K);
    for (int k = 0; k < K; ++k) actions[k] = {joint.actions[k]};
    return actions;
}

void NashDqnTrainer::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    save_trainer_meta(dir, "nash-dqn", episodes_done_, curve_, static_cast<int>(agents_.size()));
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinWriter w(agent_path(dir, static_cast<int>(k)));
        w.str(kDqnMagic);
        agents_[k].save(w);
    }
}

void NashDqnTrainer::load(const std::string& dir) {
    const auto meta = load_trainer_meta(dir, "nash-dqn");
    if (meta.num_agents != static_cast<int>(agents_.size()))
        throw std::runtime_error("checkpoint agent count mismatch");
    episodes_done_ = meta.episodes_done;
    curve_ = meta.curve;
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinReader r(agent_path(dir, static_cast<int>(k)));
        if (r.str() != kDqnMagic) throw std::runtime_error("bad agent checkpoint");
        agents_[k].load(r);
    }
}

QLearningTrainer::QLearningTrainer(const TrainConfig& cfg, const env::HandoverEnv& env,
                                   std::uint64_t seed)
    : cfg_(cfg), num_users_(env.num_users()) {
    QTableConfig qcfg;
    qcfg.num_actions = kNumMetaActions;
    qcfg.learning_rate = cfg_.qlearn.learning_rate;
    qcfg.gamma = cfg_.qlearn.gamma;
    QFeaturizer feat;
    feat.channels_per_sat = env.reward_params().channels_per_sat;
    feat.rho_scale_s = env.reward_params().rho_scale_s;
    feat.cinr_scale_db = env.reward_params().cinr_scale_db;
    const Rng root(seed);
    for (int k = 0; k < num_users_; ++k)
        agents_.emplace_back(qcfg, feat, root.child("agent", static_cast<std::uint64_t>(k)));
}

void QLearningTrainer::run(env::HandoverEnv& env, int episodes) {
    const int K = num_users_;
    for (int ep = 0; ep < episodes; ++ep) {
        env.reset();
        const double eps = linear_schedule(cfg_.qlearn.epsilon_start, cfg_.qlearn.epsilon_end,
                                           episodes_done_, cfg_.qlearn.epsilon_decay_episodes);
        double episode_return = 0.0;
        while (!env.done()) {
            std::vector<env::Action> actions(K);
            for (int k = 0; k < K; ++k) {
                agents_[k].set_epsilon(eps);
                actions[k] = agents_[k].act(env.observation(k), {env.previous_association(k)});
            }
            const auto snapshot = env.observations();
            const auto outcomes = env.step(actions);
            const bool terminal = env.done();
            for (int k = 0; k < K; ++k) {
                episode_return += outcomes[k].reward;
                const auto& next_obs = terminal ? snapshot[k] : env.observation(k);
                agents_[k].learn(outcomes[k].reward, next_obs, env.previous_association(k),
                                 terminal);
            }
        }
        TrainingCurvePoint point;
        point.episode = episodes_done_;
        point.mean_return = episode_return / K;
        curve_.push_back(point);
        ++episodes_done_;
    }
}

std::vector<env::Action> QLearningTrainer::decide_eval(const env::HandoverEnv& env) const {
    const int K = env.num_users();
    std::vector<env::Action> actions(K);
    for (int k = 0; k < K; ++k) {
        const auto& agent = agents_[k];
        const auto& obs = env.observation(k);
        const int current = env.previous_association(k);
        const auto key = agent.featurizer().state_key(obs, current);
        const int meta = agent.table().greedy(key);
        actions[k] = {agent.featurizer().resolve(static_cast<MetaAction>(meta), obs, current)};
    }
    return actions;
}

void QLearningTrainer::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    save_trainer_meta(dir, "qlearning", episodes_done_, curve_, static_cast<int>(agents_.size()));
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinWriter w(agent_path(dir, static_cast<int>(k)));
        w.str(kQtabMagic);
        const auto& agent = agents_[k];
        w.u64_vec(agent.rng().save_state());
        const auto& rows = agent.table().rows();
        w.u32(static_cast<std::uint32_t>(rows.size()));
        for (const auto& [state, row] : rows) {
            w.u64(state);
            w.f64_vec(row);
        }
    }
}

void QLearningTrainer::load(const std::string& dir) {
    const auto meta = load_trainer_meta(dir, "qlearning");
    if (meta.num_agents != static_cast<int>(agents_.size()))
        throw std::runtime_error("checkpoint agent count mismatch");
    episodes_done_ = meta.episodes_done;
    curve_ = meta.curve;
    for (std::size_t k = 0; k < agents_.size(); ++k) {
        BinReader r(agent_path(dir, static_cast<int>(k)));
        if (r.str() != kQtabMagic) throw std::runtime_error("bad agent checkpoint");
        auto& agent = agents_[k];
        const auto words = r.u64_vec();
        agent.rng().restore_state(words);
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto state = r.u64();
            agent.table().set_row(state, r.f64_vec());
        }
    }
}

}  // namespace leo::agents
