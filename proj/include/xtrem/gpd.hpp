#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "xtrem/errors.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

/// Below this |xi| the exponential limit of the GPD is used.
inline constexpr double kGpdXiSwitch = 1e-8;
inline constexpr double kGpdXiMax = 5.0;
/// Tail samples smaller than this carry a low-sample warning.
inline constexpr std::size_t kGpdLowSampleSize = 5;

/// Log-density of GPD(xi, beta) at an excess y > 0. Returns -inf beyond the
/// finite upper endpoint -beta/xi when xi < 0.
template <typename Scalar>
Scalar gpd_logpdf(Scalar y, Scalar xi, Scalar beta) {
    using std::abs;
    using std::log;
    using std::log1p;
    if (!(y > Scalar(0))) {
        throw DomainError("gpd_logpdf: excess must be positive");
    }
    if (!(beta > Scalar(0))) {
        throw DomainError("gpd_logpdf: scale must be positive");
    }
    if (abs(xi) <= Scalar(kGpdXiSwitch)) {
        return -log(beta) - y / beta;
    }
    const Scalar z = xi * y / beta;
    if (!(z > Scalar(-1))) {
        return -std::numeric_limits<Scalar>::infinity();
    }
    return -log(beta) - (Scalar(1) / xi + Scalar(1)) * log1p(z);
}

inline double gpd_logpdf(double y, const GpdParams& params) {
    return gpd_logpdf(y, params.xi(), params.beta());
}

/// Distribution function of the excess, 1 - (1 + xi y / beta)^(-1/xi).
double gpd_cdf(double y, const GpdParams& params);

/// Positive excesses over a threshold u.
class GpdSample {
public:
    GpdSample(std::vector<double> excesses, double threshold_value);

    std::span<const double> excesses() const noexcept { return excesses_; }
    double threshold_value() const noexcept { return threshold_; }
    std::size_t size() const noexcept { return excesses_.size(); }
    double max() const noexcept { return max_; }
    double mean() const noexcept;

private:
    std::vector<double> excesses_;
    double threshold_;
    double max_;
};

double gpd_loglik(const GpdSample& sample, const GpdParams& params);
double gpd_loglik(std::span<const double> excesses, double xi, double beta);

struct GpdFit {
    GpdParams params;
    double loglik = 0.0;
    bool converged = true;
    int iterations = 0;
    bool low_sample = false;
};

/// Maximum likelihood over xi in (-1, 5], beta > 0. Starts from the method
/// of moments and from (0.1, mean), keeping the better optimum.
GpdFit gpd_fit(const GpdSample& sample);

struct GpdQuantile {
    double value = 0.0;
    bool clamped = false;
};

/// Proportion-scale quantile u + F^{-1}(p), clamped to 1 with a flag.
GpdQuantile gpd_quantile(const GpdParams& params, double threshold_value, double p);

/// Inverse-CDF draws of excesses, deterministic for a given seed.
std::vector<double> gpd_sample(const GpdParams& params, std::size_t n, std::uint64_t rng_seed);

} // namespace xtrem
