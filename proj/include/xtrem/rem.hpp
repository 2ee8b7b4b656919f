#pragma once

#include <span>
#include <utility>
#include <vector>

#include "xtrem/transforms.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

struct RemFitDiagnostics {
    std::vector<double> weights;  ///< 1 / (tau^2 + sigma_i^2) at the optimum
    double se_mu = 0.0;
    double loglik = 0.0;
    bool converged = true;
    int iterations = 0;
};

/// Normal random-effects log-likelihood on the logit scale,
/// sum_i log N(theta_i | mu, tau^2 + sigma_i^2).
double rem_loglik(const RemParams& params, std::span<const LogitObservation> obs);

/// Inverse-variance weighted mean of theta for a given tau^2; the profile
/// maximizer of the likelihood in mu.
double rem_weighted_mean(std::span<const LogitObservation> obs, double tau2);

/// Maximum-likelihood (mu, tau^2). tau^2 is profiled: mu is the weighted
/// mean at each tau^2 and the bounded optimizer searches tau^2 >= 0.
/// Estimates of tau^2 below 1e-8 are reported as exactly 0.
std::pair<RemParams, RemFitDiagnostics> rem_fit(std::span<const LogitObservation> obs);

/// Wald interval mu +/- z_{(1+level)/2} * se_mu on the logit scale.
Interval rem_confidence_interval(const RemParams& params, const RemFitDiagnostics& diag,
                                 double level = 0.95);

Interval rem_confidence_interval(double mu, double se_mu, double level = 0.95);

} // namespace xtrem
