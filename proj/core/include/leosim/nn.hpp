#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leosim/rng.hpp"

namespace leo::nn {

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1 };

struct Layer {
    int in = 0;
    int out = 0;
    Activation activation = Activation::Identity;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
};

// Small dense network, 64-bit everywhere. Gradients are hand-derived per
// layer; there is no general autodiff graph.
struct Mlp {
    std::vector<Layer> layers;

    int input_size() const { return layers.empty() ? 0 : layers.front().in; }
    int output_size() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t param_count() const;
    // Flat parameter indexing (layer 0 weights, layer 0 biases, layer 1
    // weights, ...) used by the optimizer, checkpoints and gradient checks.
    double& param_at(std::size_t i);
    double param_at(std::size_t i) const;
};

// sizes = {input, hidden..., output}; hidden layers use `hidden`, the output
// layer is linear. Weights are uniform with fan-in scaling, biases zero.
Mlp make_mlp(std::span<const int> sizes, Activation hidden, Rng& rng);

struct ForwardCache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[i+1] = layer i output
};

// Deterministic forward pass; throws std::invalid_argument on a dimension
// mismatch.
std::vector<double> forward(const Mlp& net, std::span<const double> input);
std::vector<double> forward(const Mlp& net, std::span<const double> input, ForwardCache& cache);

struct Gradients {
    std::vector<std::vector<double>> dw;
    std::vector<std::vector<double>> db;

    void zero();
    void axpy(double scale, const Gradients& other);  // this += scale * other
    double at(std::size_t i) const;                   // flat view matching Mlp::param_at
};

Gradients make_gradients(const Mlp& net);

// Reverse pass for the cached forward; accumulates parameter gradients into
// `grads` and returns the gradient with respect to the input.
std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> output_gradient, Gradients& grads);

// Bias-corrected Adam over the Mlp parameters.
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

AdamState make_adam(const Mlp& net, double lr);
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

// Single-parameter Adam (temperature).
struct ScalarAdam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    double m = 0.0;
    double v = 0.0;
};

double adam_step_scalar(double value, double grad, ScalarAdam& state);

// Probabilities over the unmasked entries; masked entries are exactly 0.
// Throws std::invalid_argument when the mask clears everything.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask);

}  // namespace leo::nn
