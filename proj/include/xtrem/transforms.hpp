#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "xtrem/errors.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

/// ln(p / (1 - p)) for p in (0, 1).
template <typename Scalar>
Scalar logit(Scalar p) {
    if (!(p > Scalar(0) && p < Scalar(1))) {
        throw DomainError("logit: argument must lie in (0, 1)");
    }
    using std::log;
    using std::log1p;
    return log(p) - log1p(-p);
}

/// 1 / (1 + exp(-x)), evaluated without overflow for either sign of x.
template <typename Scalar>
Scalar invlogit(Scalar x) {
    using std::exp;
    if (x >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + exp(-x));
    }
    const Scalar e = exp(x);
    return e / (Scalar(1) + e);
}

inline constexpr double kDefaultContinuityCorrection = 0.5;

/// Logit-transformed proportion theta with its within-study variance.
class LogitObservation {
public:
    LogitObservation(double theta, double sigma2, bool corrected = false);

    double theta() const noexcept { return theta_; }
    double sigma2() const noexcept { return sigma2_; }
    bool corrected() const noexcept { return corrected_; }

private:
    double theta_;
    double sigma2_;
    bool corrected_;
};

/// Plug-in variance 1/r + 1/(n - r) of logit(r/n). When r is 0 or n the
/// correction is added to both the event and non-event cells first.
LogitObservation within_variance(Count events, Count size,
                                 double correction = kDefaultContinuityCorrection);

LogitObservation within_variance(const StudyRecord& study,
                                 double correction = kDefaultContinuityCorrection);

std::vector<LogitObservation> logit_observations(
    const Dataset& data, double correction = kDefaultContinuityCorrection);

/// Observations for a subset of studies, in the order of `indices`.
std::vector<LogitObservation> logit_observations(
    const Dataset& data, std::span<const std::size_t> indices,
    double correction = kDefaultContinuityCorrection);

} // namespace xtrem
