#include "leosim/rng.hpp"

#include <cassert>
#include <stdexcept>

namespace leo {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    assert(n >= 1);
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

Rng Rng::child(std::string_view label, std::uint64_t a, std::uint64_t b) const {
    std::uint64_t h = fnv1a(label);
    std::uint64_t mix = seed_;
    std::uint64_t aa = a;
    std::uint64_t bb = b + 0x632be59bd9b4e019ULL;
    mix ^= h + 0x9e3779b97f4a7c15ULL + (mix << 6) + (mix >> 2);
    mix ^= splitmix64(aa) + (mix << 6) + (mix >> 2);
    mix ^= splitmix64(bb) + (mix << 6) + (mix >> 2);
    return Rng(mix);
}

std::vector<std::uint64_t> Rng::save_state() const {
    return {seed_, s_[0], s_[1], s_[2], s_[3]};
}

void Rng::restore_state(std::span<const std::uint64_t> words) {
    if (words.size() != 5) throw std::invalid_argument("Rng state must be 5 words");
    seed_ = words[0];
    for (int i = 0; i < 4; ++i) s_[i] = words[i + 1];
}

}  // namespace leo
