#include "xtrem/gpd.hpp"

#include <algorithm>
#include <numeric>

#include "xtrem/optim.hpp"
#include "xtrem/rng.hpp"

namespace xtrem {

namespace {

constexpr double kXiLowerBound = -1.0 + 1e-6;

// Excess-scale inverse CDF.
double excess_quantile(double xi, double beta, double p) {
    const double log_survival = std::log1p(-p);
    if (std::abs(xi) <= kGpdXiSwitch) return -beta * log_survival;
    return beta / xi * std::expm1(-xi * log_survival);
}

} // namespace

double gpd_cdf(double y, const GpdParams& params) {
    if (y <= 0.0) return 0.0;
    const double xi = params.xi();
    const double beta = params.beta();
    if (std::abs(xi) <= kGpdXiSwitch) return -std::expm1(-y / beta);
    const double z = xi * y / beta;
    if (z <= -1.0) return 1.0;
    return -std::expm1(-std::log1p(z) / xi);
}

GpdSample::GpdSample(std::vector<double> excesses, double threshold_value)
    : excesses_(std::move(excesses)), threshold_(threshold_value), max_(0.0) {
    if (!(threshold_value >= 0.0 && threshold_value < 1.0)) {
        throw DomainError("GPD sample: threshold must lie in [0, 1)");
    }
    for (double y : excesses_) {
        if (!(y > 0.0) || !std::isfinite(y)) {
            throw DomainError("GPD sample: excesses must be positive and finite");
        }
        max_ = std::max(max_, y);
    }
}

double GpdSample::mean() const noexcept {
    if (excesses_.empty()) return 0.0;
    return std::accumulate(excesses_.begin(), excesses_.end(), 0.0) /
           static_cast<double>(excesses_.size());
}

double gpd_loglik(std::span<const double> excesses, double xi, double beta) {
    if (excesses.empty()) throw DomainError("gpd_loglik: empty sample");
    double sum = 0.0;
    for (double y : excesses) {
        const double term = gpd_logpdf(y, xi, beta);
        if (!std::isfinite(term)) return -std::numeric_limits<double>::infinity();
        sum += term;
    }
    return sum;
}

double gpd_loglik(const GpdSample& sample, const GpdParams& params) {
    return gpd_loglik(sample.excesses(), params.xi(), params.beta());
}

GpdFit gpd_fit(const GpdSample& sample) {
    const std::size_t n = sample.size();
    if (n < 2) {
        throw InsufficientDataError("gpd_fit: at least 2 excesses required, got " +
                                    std::to_string(n));
    }
    const auto y = sample.excesses();
    const double scale = sample.mean();
    const double y_max = sample.max();

    // Optimized over (xi, beta / mean) so both coordinates are of order one.
    const Objective objective = [y, scale](const Vector& x) {
        const double beta = x[1] * scale;
        if (!(x[0] > -1.0) || !(beta > 0.0)) return -std::numeric_limits<double>::infinity();
        return gpd_loglik(y, x[0], beta);
    };

    std::vector<std::pair<double, double>> starts;
    double ss = 0.0;
    for (double v : y) ss += (v - scale) * (v - scale);
    const double var = ss / static_cast<double>(n - 1);
    if (var > 0.0) {
        const double ratio = scale * scale / var;
        double xi0 = std::clamp(0.5 * (1.0 - ratio), -0.9, kGpdXiMax - 0.1);
        double beta0 = 0.5 * scale * (1.0 + ratio);
        if (xi0 < 0.0 && y_max >= -beta0 / xi0) beta0 = -xi0 * y_max * 1.05;
        starts.emplace_back(xi0, beta0);
    }
    starts.emplace_back(0.1, scale);

    OptimOutcome best;
    for (const auto& [xi0, beta0] : starts) {
        OptimProblem problem;
        problem.objective = objective;
        problem.lower = Vector{{kXiLowerBound, 1e-8}};
        problem.upper = Vector{{kGpdXiMax, std::numeric_limits<double>::infinity()}};
        problem.start = Vector{{xi0, beta0 / scale}};
        OptimOutcome outcome = maximize(problem);
        if (best.argmax.size() == 0 || outcome.value > best.value) best = std::move(outcome);
    }

    GpdFit fit{GpdParams(best.argmax[0], best.argmax[1] * scale)};
    fit.loglik = best.value;
    fit.converged = best.converged;
    fit.iterations = best.iterations;
    fit.low_sample = n < kGpdLowSampleSize;
    return fit;
}

GpdQuantile gpd_quantile(const GpdParams& params, double threshold_value, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("gpd_quantile: p must lie in (0, 1)");
    const double q = threshold_value + excess_quantile(params.xi(), params.beta(), p);
    if (q > 1.0) return {1.0, true};
    return {q, false};
}

std::vector<double> gpd_sample(const GpdParams& params, std::size_t n, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    std::vector<double> draws(n);
    for (auto& d : draws) d = excess_quantile(params.xi(), params.beta(), rng.uniform());
    return draws;
}

} // namespace xtrem
