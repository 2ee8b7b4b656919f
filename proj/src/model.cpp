#include "xtrem/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "xtrem/errors.hpp"
#include "xtrem/optim.hpp"

namespace xtrem {

namespace {

double standard_error(std::span<const LogitObservation> obs, double tau2) {
    double sw = 0.0;
    for (const auto& o : obs) sw += 1.0 / (tau2 + o.sigma2());
    return std::sqrt(1.0 / sw);
}

std::string format_count_warning(const char* what, std::size_t count, const char* tail) {
    std::ostringstream out;
    out << what << count << tail;
    return out.str();
}

void add_tail_quantiles(FitResult& fit, const GpdParams& gpd, double u,
                        const std::vector<double>& percentiles) {
    for (double p : percentiles) {
        const GpdQuantile q = gpd_quantile(gpd, u, p);
        fit.diag.tail_quantiles.push_back({p, q.value, q.clamped});
        if (q.clamped) {
            std::ostringstream out;
            out << "tail quantile at " << p << " exceeds 1 and was clamped";
            fit.diag.warnings.push_back(out.str());
        }
    }
}

struct BlockEstimates {
    RemParams rem;
    GpdParams gpd;
    bool converged;
    int iterations;
};

// All four parameters in one bounded problem; beta is scaled by the mean
// excess as in gpd_fit.
BlockEstimates joint_maximize(const Segmentation& seg, std::span<const LogitObservation> bulk) {
    const std::vector<double>& y = seg.excesses();
    double scale = 0.0;
    for (double v : y) scale += v;
    scale /= static_cast<double>(y.size());

    const Objective objective = [&](const Vector& x) {
        if (!(x[1] >= 0.0) || !(x[2] > -1.0) || !(x[3] > 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        return xtrem_loglik(RemParams(x[0], x[1]), GpdParams(x[2], x[3] * scale), seg, bulk);
    };

    OptimProblem problem;
    problem.objective = objective;
    const double inf = std::numeric_limits<double>::infinity();
    problem.lower = Vector{{-inf, 0.0, -1.0 + 1e-6, 1e-8}};
    problem.upper = Vector{{inf, inf, kGpdXiMax, inf}};
    // Started from crude moments rather than the block optimum so the two
    // routes stay independent.
    double mean_theta = 0.0;
    for (const auto& o : bulk) mean_theta += o.theta();
    mean_theta /= static_cast<double>(bulk.size());
    double var_theta = 0.0;
    for (const auto& o : bulk) var_theta += (o.theta() - mean_theta) * (o.theta() - mean_theta);
    var_theta /= static_cast<double>(bulk.size() - 1);
    problem.start = Vector{{mean_theta, std::max(0.05, 0.5 * var_theta), 0.1, 1.0}};
    problem.max_iter = 2000;
    const OptimOutcome out = maximize(problem);
    double tau2 = out.argmax[1] < 1e-8 ? 0.0 : out.argmax[1];
    return {RemParams(out.argmax[0], tau2), GpdParams(out.argmax[2], out.argmax[3] * scale),
            out.converged, out.iterations};
}

} // namespace

Threshold resolve_threshold(const ThresholdRequest& request, const Dataset& data,
                            double correction) {
    if (request.kind == ThresholdKind::Fixed) {
        return Threshold::fixed(request.fixed_value);
    }
    const auto obs = logit_observations(data, correction);
    const auto [params, diag] = rem_fit(obs);
    (void)diag;
    return Threshold::dynamic(params.mu(), params.tau(), request.percentile_z);
}

Segmentation segment(const Dataset& data, const Threshold& threshold) {
    const double u = threshold.value();
    std::vector<std::size_t> bulk;
    std::vector<std::size_t> tail;
    std::vector<double> excesses;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = data[i].proportion();
        if (p <= u) {
            bulk.push_back(i);
        } else {
            tail.push_back(i);
            excesses.push_back(p - u);
        }
    }
    return Segmentation(std::move(bulk), std::move(tail), std::move(excesses), threshold,
                        data.size());
}

double xtrem_loglik(const RemParams& rem, const std::optional<GpdParams>& gpd,
                    const Segmentation& seg, std::span<const LogitObservation> bulk_obs) {
    if (bulk_obs.size() != seg.n_bulk()) {
        throw ConsistencyError("xtrem_loglik: " + std::to_string(bulk_obs.size()) +
                               " bulk observations for " + std::to_string(seg.n_bulk()) +
                               " bulk studies");
    }
    if (seg.n_tail() > 0 && !gpd) {
        throw ConsistencyError("xtrem_loglik: tail studies present but no GPD parameters");
    }
    const double bulk_term = bulk_obs.empty() ? 0.0 : rem_loglik(rem, bulk_obs);
    const double tail_term = seg.n_tail() == 0 ? 0.0 : gpd_loglik(seg.excesses(), gpd->xi(), gpd->beta());
    return bulk_term + tail_term;
}

FitResult xtrem_fit(const Dataset& data, const ThresholdRequest& request,
                    const XtremOptions& options) {
    const Threshold threshold = resolve_threshold(request, data, options.correction);
    Segmentation seg = segment(data, threshold);
    if (seg.n_bulk() < 2) {
        throw InsufficientDataError(format_count_warning(
            "xtrem_fit: at least 2 bulk studies required below the threshold, got ", seg.n_bulk(),
            ""));
    }
    const auto bulk = logit_observations(data, seg.bulk_indices(), options.correction);
    const double u = threshold.value();

    if (seg.n_tail() < 2) {
        const auto [rem, diag] = rem_fit(bulk);
        FitResult fit(ModelKind::XTREM, data.label(), rem, std::nullopt, diag.loglik);
        fit.diag.degraded_to_rem = true;
        fit.diag.se_mu = diag.se_mu;
        fit.diag.ci95_mu = rem_confidence_interval(rem, diag);
        fit.diag.converged = diag.converged;
        fit.diag.n_iterations = diag.iterations;
        fit.diag.warnings.push_back(format_count_warning(
            "degraded to REM: ", seg.n_tail(),
            seg.n_tail() == 1 ? " exceedance (at least 2 needed); the tail study is left out of the likelihood"
                              : " exceedances (at least 2 needed)"));
        if (!diag.converged) fit.diag.warnings.push_back("REM optimizer did not converge");
        fit.diag.segmentation = std::move(seg);
        fit.diag.threshold = threshold;
        return fit;
    }

    std::optional<RemParams> rem;
    std::optional<GpdParams> gpd;
    bool converged = true;
    int iterations = 0;
    if (options.joint) {
        const BlockEstimates est = joint_maximize(seg, bulk);
        rem = est.rem;
        gpd = est.gpd;
        converged = est.converged;
        iterations = est.iterations;
    } else {
        const auto [rem_params, rem_diag] = rem_fit(bulk);
        const GpdFit tail = gpd_fit(GpdSample(seg.excesses(), u));
        rem = rem_params;
        gpd = tail.params;
        converged = rem_diag.converged && tail.converged;
        iterations = rem_diag.iterations + tail.iterations;
    }

    FitResult fit(ModelKind::XTREM, data.label(), *rem, gpd, xtrem_loglik(*rem, gpd, seg, bulk));
    fit.diag.se_mu = standard_error(bulk, rem->tau2());
    fit.diag.ci95_mu = rem_confidence_interval(rem->mu(), fit.diag.se_mu);
    fit.diag.converged = converged;
    fit.diag.n_iterations = iterations;
    fit.diag.low_tail_sample = seg.n_tail() < kGpdLowSampleSize;
    if (fit.diag.low_tail_sample) {
        fit.diag.warnings.push_back(format_count_warning(
            "only ", seg.n_tail(), " exceedances; GPD estimates are unstable"));
    }
    if (!converged) fit.diag.warnings.push_back("optimizer did not converge");
    add_tail_quantiles(fit, *gpd, u, options.quantiles);
    fit.diag.segmentation = std::move(seg);
    fit.diag.threshold = threshold;
    return fit;
}

FitResult rem_only_fit(const Dataset& data, double correction) {
    const auto obs = logit_observations(data, correction);
    const auto [rem, diag] = rem_fit(obs);
    FitResult fit(ModelKind::REM, data.label(), rem, std::nullopt, diag.loglik);
    fit.diag.se_mu = diag.se_mu;
    fit.diag.ci95_mu = rem_confidence_interval(rem, diag);
    fit.diag.converged = diag.converged;
    fit.diag.n_iterations = diag.iterations;
    if (!diag.converged) fit.diag.warnings.push_back("REM optimizer did not converge");
    return fit;
}

const FitResult* ComparisonReport::preferred_fit() const {
    switch (preferred) {
    case Preference::First:
        return &first;
    case Preference::Second:
        return &second;
    case Preference::Tie:
        break;
    }
    return nullptr;
}

ComparisonReport compare(const FitResult& first, const FitResult& second) {
    if (first.dataset_label() != second.dataset_label()) {
        throw ValidationError("compare: fits come from different datasets ('" +
                              first.dataset_label() + "' vs '" + second.dataset_label() + "')");
    }
    ComparisonReport report{first.dataset_label(), first, second,
                            first.aic() - second.aic(), first.loglik() - second.loglik(),
                            Preference::Tie};
    constexpr double kTieTolerance = 1e-9;
    if (report.delta_aic < -kTieTolerance) {
        report.preferred = Preference::First;
    } else if (report.delta_aic > kTieTolerance) {
        report.preferred = Preference::Second;
    }
    return report;
}

} // namespace xtrem
