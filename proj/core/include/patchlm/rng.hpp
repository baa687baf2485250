// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace patchlm {

// Deterministic xoshiro256** stream. The standard <random> distributions are
// implementation-defined, so everything that feeds a golden file or a
// byte-reproducible output draws from this generator instead.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Box-Muller; two uniforms per draw, no cached spare.
    double normal(double mean = 0.0, double stddev = 1.0);

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::uint64_t i = items.size() - 1; i > 0; --i) {
            std::uint64_t j = below(i + 1);
            std::swap(items[i], items[j]);
        }
    }

    // k distinct indices out of [0, n), order randomized. k <= n.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    // Stable sub-stream key so independent pipeline stages do not share state.
    static std::uint64_t derive(std::uint64_t seed, std::string_view stream);

  private:
    std::uint64_t state_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace patchlm
