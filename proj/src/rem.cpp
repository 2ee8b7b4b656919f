#include "xtrem/rem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xtrem/errors.hpp"
#include "xtrem/normal.hpp"
#include "xtrem/optim.hpp"

namespace xtrem {

namespace {

constexpr double kTau2ReportedZero = 1e-8;

// DerSimonian-Laird moment estimate, used only as a starting value.
double moment_tau2(std::span<const LogitObservation> obs) {
    double sw = 0.0, sw2 = 0.0, swt = 0.0;
    for (const auto& o : obs) {
        const double w = 1.0 / o.sigma2();
        sw += w;
        sw2 += w * w;
        swt += w * o.theta();
    }
    const double mean = swt / sw;
    double q = 0.0;
    for (const auto& o : obs) {
        const double r = o.theta() - mean;
        q += r * r / o.sigma2();
    }
    const double denom = sw - sw2 / sw;
    const double df = static_cast<double>(obs.size()) - 1.0;
    return denom > 0.0 ? std::max(0.0, (q - df) / denom) : 0.0;
}

double sample_variance(std::span<const LogitObservation> obs) {
    double mean = 0.0;
    for (const auto& o : obs) mean += o.theta();
    mean /= static_cast<double>(obs.size());
    double ss = 0.0;
    for (const auto& o : obs) ss += (o.theta() - mean) * (o.theta() - mean);
    return ss / static_cast<double>(obs.size() - 1);
}

} // namespace

double rem_loglik(const RemParams& params, std::span<const LogitObservation> obs) {
    if (obs.empty()) throw DomainError("rem_loglik: no observations");
    double sum = 0.0;
    for (const auto& o : obs) {
        sum += normal_logpdf(o.theta(), params.mu(), params.tau2() + o.sigma2());
    }
    return sum;
}

double rem_weighted_mean(std::span<const LogitObservation> obs, double tau2) {
    if (obs.empty()) throw DomainError("rem_weighted_mean: no observations");
    double sw = 0.0, swt = 0.0;
    for (const auto& o : obs) {
        const double w = 1.0 / (tau2 + o.sigma2());
        sw += w;
        swt += w * o.theta();
    }
    return swt / sw;
}

std::pair<RemParams, RemFitDiagnostics> rem_fit(std::span<const LogitObservation> obs) {
    if (obs.size() < 2) {
        throw InsufficientDataError("rem_fit: at least 2 studies required, got " +
                                    std::to_string(obs.size()));
    }
    const Objective profile = [obs](const Vector& x) {
        const double tau2 = x[0];
        if (!(tau2 >= 0.0)) return -std::numeric_limits<double>::infinity();
        return rem_loglik(RemParams(rem_weighted_mean(obs, tau2), tau2), obs);
    };

    std::vector<double> starts{moment_tau2(obs)};
    const double v = sample_variance(obs);
    if (std::abs(v - starts.front()) > 1e-12) starts.push_back(v);

    OptimOutcome best;
    for (double s : starts) {
        OptimProblem problem;
        problem.objective = profile;
        problem.lower = Vector::Constant(1, 0.0);
        problem.upper = Vector::Constant(1, std::numeric_limits<double>::infinity());
        problem.start = Vector::Constant(1, s);
        OptimOutcome outcome = maximize(problem);
        if (best.argmax.size() == 0 || outcome.value > best.value ||
            (outcome.value == best.value && outcome.converged && !best.converged)) {
            best = std::move(outcome);
        }
    }

    double tau2 = best.argmax[0];
    if (tau2 < kTau2ReportedZero) tau2 = 0.0;
    const RemParams params(rem_weighted_mean(obs, tau2), tau2);

    RemFitDiagnostics diag;
    diag.weights.reserve(obs.size());
    double sw = 0.0;
    for (const auto& o : obs) {
        diag.weights.push_back(1.0 / (tau2 + o.sigma2()));
        sw += diag.weights.back();
    }
    diag.se_mu = std::sqrt(1.0 / sw);
    diag.loglik = rem_loglik(params, obs);
    diag.converged = best.converged;
    diag.iterations = best.iterations;
    return {params, std::move(diag)};
}

Interval rem_confidence_interval(double mu, double se_mu, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("rem_confidence_interval: level must lie in (0, 1)");
    }
    if (!(se_mu >= 0.0)) throw DomainError("rem_confidence_interval: negative standard error");
    const double half = normal_quantile(0.5 * (1.0 + level)) * se_mu;
    return {mu - half, mu + half};
}

Interval rem_confidence_interval(const RemParams& params, const RemFitDiagnostics& diag,
                                 double level) {
    return rem_confidence_interval(params.mu(), diag.se_mu, level);
}

} // namespace xtrem
