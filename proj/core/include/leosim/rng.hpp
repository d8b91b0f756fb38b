#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace leo {

// Deterministic xoshiro256++ generator. The standard library engines and
// distributions are implementation-defined across platforms; every draw in
// the simulator goes through this class so that a manifest hash pins the
// full output byte-for-byte.
//
// Stream splitting: one top-level seed fans out into independent child
// streams keyed by small integer tags, e.g.
//   Rng root(seed);
//   Rng user_rng = root.child("user", type_index, index_in_type);
// Adding a user or an agent re-keys only its own stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform();
    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_index(std::uint64_t n);

    // Index drawn from unnormalized non-negative weights (at least one > 0).
    std::size_t categorical(std::span<const double> weights);

    // Derive an independent child stream. The tag words are hashed together
    // with the parent's seed; the parent's state is not consumed.
    Rng child(std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0) const;

    // Serialized state, 5 words: seed + 4 state words.
    std::vector<std::uint64_t> save_state() const;
    void restore_state(std::span<const std::uint64_t> words);

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

}  // namespace leo
