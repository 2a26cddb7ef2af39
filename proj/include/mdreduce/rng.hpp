// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace mdreduce {

// Splittable counter-based stream. Output i is
//
//   mix64(key + i * 0x9e3779b97f4a7c15)
//
// with key = mix64(seed ^ mix64(fnv1a64(label))) and mix64 the splitmix64
// finalizer. Identical (seed, label) pairs give identical sequences on any
// platform (pure uint64 arithmetic); distinct labels give statistically
// independent streams from one seed. Every random draw in this repository
// flows through streams derived here.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view label);

    std::uint64_t next_u64();

    // 53-bit uniform in [0, 1).
    double next_double();

    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; always consumes exactly two draws.
    double normal();

    // Uniform index in [0, n). Modulo bias is negligible for the small n
    // used here and keeps the draw count fixed at one.
    std::uint64_t next_index(std::uint64_t n);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline RngStream derive_rng(std::uint64_t seed, std::string_view label) {
    return RngStream(seed, label);
}

} // namespace mdreduce
