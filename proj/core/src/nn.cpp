#include "leosim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace leo::nn {

namespace {

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Tanh: return std::tanh(x);
    }
    return x;
}

// Derivative expressed through the activation output.
double activation_grad(Activation a, double y) {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - y * y;
    }
    return 1.0;
}

}  // namespace

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

double& Mlp::param_at(std::size_t i) {
    for (auto& l : layers) {
        if (i < l.w.size()) return l.w[i];
        i -= l.w.size();
        if (i < l.b.size()) return l.b[i];
        i -= l.b.size();
    }
    throw std::out_of_range("Mlp::param_at");
}

double Mlp::param_at(std::size_t i) const {
    return const_cast<Mlp*>(this)->param_at(i);
}

Mlp make_mlp(std::span<const int> sizes, Activation hidden, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need input and output sizes");
    Mlp net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        Layer l;
        l.in = sizes[i];
        l.out = sizes[i + 1];
        l.activation = (i + 2 == sizes.size()) ? Activation::Identity : hidden;
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.assign(l.out, 0.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (auto& w : l.w) w = rng.uniform(-scale, scale);
        net.layers.push_back(std::move(l));
    }
    return net;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    ForwardCache cache;
    return forward(net, input, cache);
}

std::vector<double> forward(const Mlp& net, std::span<const double> input, ForwardCache& cache) {
    if (static_cast<int>(input.size()) != net.input_size())
        throw std::invalid_argument("forward: input dimension mismatch");
    cache.act.assign(net.layers.size() + 1, {});
    cache.act[0].assign(input.begin(), input.end());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const auto& x = cache.act[li];
        auto& y = cache.act[li + 1];
        y.assign(l.out, 0.0);
        for (int o = 0; o < l.out; ++o) {
            double s = l.b[o];
            const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
            for (int i = 0; i < l.in; ++i) s += wrow[i] * x[i];
            y[o] = apply_activation(l.activation, s);
        }
    }
    return cache.act.back();
}

void Gradients::zero() {
    for (auto& g : dw) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : db) std::fill(g.begin(), g.end(), 0.0);
}

void Gradients::axpy(double scale, const Gradients& other) {
    for (std::size_t li = 0; li < dw.size(); ++li) {
        for (std::size_t i = 0; i < dw[li].size(); ++i) dw[li][i] += scale * other.dw[li][i];
        for (std::size_t i = 0; i < db[li].size(); ++i) db[li][i] += scale * other.db[li][i];
    }
}

double Gradients::at(std::size_t i) const {
    for (std::size_t li = 0; li < dw.size(); ++li) {
        if (i < dw[li].size()) return dw[li][i];
        i -= dw[li].size();
        if (i < db[li].size()) return db[li][i];
        i -= db[li].size();
    }
    throw std::out_of_range("Gradients::at");
}

Gradients make_gradients(const Mlp& net) {
    Gradients g;
    for (const auto& l : net.layers) {
        g.dw.emplace_back(l.w.size(), 0.0);
        g.db.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> output_gradient, Gradients& grads) {
    if (cache.act.size() != net.layers.size() + 1)
        throw std::invalid_argument("backward: cache does not match network");
    std::vector<double> delta(output_gradient.begin(), output_gradient.end());
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const Layer& l = net.layers[li];
        const auto& x = cache.act[li];
        const auto& y = cache.act[li + 1];
        // d pre-activation = d output * activation'(pre), expressed via y.
        for (int o = 0; o < l.out; ++o) delta[o] *= activation_grad(l.activation, y[o]);
        auto& dw = grads.dw[li];
        auto& db = grads.db[li];
        std::vector<double> dx(l.in, 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            db[o] += d;
            double* dwrow = &dw[static_cast<std::size_t>(o) * l.in];
            const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
            for (int i = 0; i < l.in; ++i) {
                dwrow[i] += d * x[i];
                dx[i] += d * wrow[i];
            }
        }
        delta = std::move(dx);
    }
    return delta;
}

AdamState make_adam(const Mlp& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& l : net.layers) {
        s.m_w.emplace_back(l.w.size(), 0.0);
        s.v_w.emplace_back(l.w.size(), 0.0);
        s.m_b.emplace_back(l.b.size(), 0.0);
        s.v_b.emplace_back(l.b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const AdamState& s, double c1, double c2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        adam_update(net.layers[li].w, grads.dw[li], state.m_w[li], state.v_w[li], state, c1, c2);
        adam_update(net.layers[li].b, grads.db[li], state.m_b[li], state.v_b[li], state, c1, c2);
    }
}

double adam_step_scalar(double value, double grad, ScalarAdam& s) {
    s.step += 1;
    s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
    s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad * grad;
    const double mhat = s.m / (1.0 - std::pow(s.beta1, static_cast<double>(s.step)));
    const double vhat = s.v / (1.0 - std::pow(s.beta2, static_cast<double>(s.step)));
    return value - s.lr * mhat / (std::sqrt(vhat) + s.eps);
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask) {
    if (logits.size() != mask.size())
        throw std::invalid_argument("masked_softmax: mask size mismatch");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    if (!std::isfinite(max_logit))
        throw std::invalid_argument("masked_softmax: empty support");
    std::vector<double> p(logits.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!mask[i]) continue;
        p[i] = std::exp(logits[i] - max_logit);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

}  // namespace leo::nn
