#include "xtrem/rng.hpp"

#include <algorithm>
#include <cmath>

#include "xtrem/errors.hpp"
#include "xtrem/normal.hpp"

namespace xtrem {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

constexpr Count kInversionLimit = 1000;

double log_binomial_pmf(Count n, Count k, double log_p, double log_q) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0) + static_cast<double>(k) * log_p +
           static_cast<double>(n - k) * log_q;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t a = seed;
    std::uint64_t b = stream ^ 0xD1B54A32D192ED03ULL;
    std::uint64_t state = splitmix64(a) ^ rotl(splitmix64(b), 17);
    for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept {
    // (k + 0.5) / 2^53 never hits either endpoint.
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

Count Rng::uniform_int(Count low, Count high) noexcept {
    const auto range = static_cast<std::uint64_t>(high - low) + 1;
    if (range == 0) return low + static_cast<Count>(next());
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t draw = next();
    while (draw >= limit) draw = next();
    return low + static_cast<Count>(draw % range);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal_quantile(uniform()); }

Count Rng::binomial(Count n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
        throw DomainError("binomial: need n >= 0 and p in [0, 1]");
    }
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);

    double u = uniform();
    const double q = 1.0 - p;
    if (n <= kInversionLimit) {
        const double odds = p / q;
        double pmf = std::pow(q, static_cast<double>(n));
        for (Count k = 0; k < n; ++k) {
            if (u <= pmf) return k;
            u -= pmf;
            pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
        }
        return n;
    }

    // Inversion outward from the mode; the next cell visited is the more
    // probable of the two frontier cells.
    const double log_p = std::log(p);
    const double log_q = std::log(q);
    const Count mode = std::min(n, static_cast<Count>(std::floor(static_cast<double>(n + 1) * p)));
    const double pmf_mode = std::exp(log_binomial_pmf(n, mode, log_p, log_q));
    if (u <= pmf_mode) return mode;
    u -= pmf_mode;
    Count lo = mode - 1;
    Count hi = mode + 1;
    double pmf_lo = lo >= 0 ? pmf_mode * static_cast<double>(mode) / static_cast<double>(n - mode + 1) * (q / p) : 0.0;
    double pmf_hi = hi <= n ? pmf_mode * static_cast<double>(n - mode) / static_cast<double>(mode + 1) * (p / q) : 0.0;
    while (lo >= 0 || hi <= n) {
        if (hi > n || (lo >= 0 && pmf_lo >= pmf_hi)) {
            if (u <= pmf_lo) return lo;
            u -= pmf_lo;
            pmf_lo = lo > 0 ? pmf_lo * static_cast<double>(lo) / static_cast<double>(n - lo + 1) * (q / p) : 0.0;
            --lo;
        } else {
            if (u <= pmf_hi) return hi;
            u -= pmf_hi;
            pmf_hi = hi < n ? pmf_hi * static_cast<double>(n - hi) / static_cast<double>(hi + 1) * (p / q) : 0.0;
            ++hi;
        }
        if (pmf_lo == 0.0 && pmf_hi == 0.0) break;
    }
    return mode;
}

} // namespace xtrem
