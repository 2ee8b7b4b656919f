#pragma once

#include <cmath>
#include <numbers>

namespace xtrem {

/// Standard normal quantile (Wichura's AS 241 rational approximation,
/// relative accuracy about 1e-16). Throws DomainError outside (0, 1).
double normal_quantile(double p);

double normal_cdf(double x);

template <typename Scalar>
Scalar normal_logpdf(Scalar x, Scalar mean, Scalar variance) {
    using std::log;
    const Scalar r = x - mean;
    return Scalar(-0.5) * (log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) + r * r / variance);
}

} // namespace xtrem
