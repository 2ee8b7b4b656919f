#pragma once

#include <array>
#include <cstdint>

#include "xtrem/types.hpp"

namespace xtrem {

inline constexpr const char* kRngName = "xoshiro256** seeded by splitmix64(seed, stream)";

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// xoshiro256** with an explicit (seed, stream) pair so each Monte Carlo
/// replication owns an independent, platform-stable stream. Variates use
/// only integer arithmetic and inverse-CDF transforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next() noexcept;
    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() noexcept;
    /// Uniform integer on [low, high].
    Count uniform_int(Count low, Count high) noexcept;
    double normal(double mean, double sd);
    bool bernoulli(double p) noexcept { return uniform() < p; }
    /// Exact binomial draw. Sequential inversion from zero for n <= 1000,
    /// inversion outward from the mode above that.
    Count binomial(Count n, double p);

private:
    std::array<std::uint64_t, 4> s_{};
};

} // namespace xtrem
