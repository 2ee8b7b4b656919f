#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtrem/gpd.hpp"
#include "xtrem/rem.hpp"
#include "xtrem/transforms.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

/// Fixed thresholds are validated and returned. Dynamic thresholds run a
/// REM fit on every study and place u at invlogit(mu + z * tau).
Threshold resolve_threshold(const ThresholdRequest& request, const Dataset& data,
                            double correction = kDefaultContinuityCorrection);

/// Bulk {i : p_i <= u}, tail {i : p_i > u}. Ties go to the bulk.
Segmentation segment(const Dataset& data, const Threshold& threshold);

/// REM term over the bulk plus GPD term over the tail excesses. `bulk_obs`
/// must hold one observation per bulk index, in segmentation order. With an
/// empty tail the GPD term is exactly zero and `gpd` may be absent.
double xtrem_loglik(const RemParams& rem, const std::optional<GpdParams>& gpd,
                    const Segmentation& seg, std::span<const LogitObservation> bulk_obs);

struct XtremOptions {
    std::vector<double> quantiles{0.99};
    double correction = kDefaultContinuityCorrection;
    /// Optimize all four parameters in one problem instead of two blocks.
    bool joint = false;
};

/// Two-component fit. The bulk is fitted by REM and the tail by GPD; the
/// likelihood factorizes so the blocks are maximized separately unless
/// `options.joint` is set. With fewer than two exceedances the GPD block is
/// dropped and the result is flagged as degraded to REM.
FitResult xtrem_fit(const Dataset& data, const ThresholdRequest& threshold,
                    const XtremOptions& options = {});

/// Classical REM over every study, no segmentation.
FitResult rem_only_fit(const Dataset& data, double correction = kDefaultContinuityCorrection);

enum class Preference { First, Second, Tie };

struct ComparisonReport {
    std::string dataset_label;
    FitResult first;
    FitResult second;
    double delta_aic = 0.0;     ///< first.aic - second.aic
    double delta_loglik = 0.0;  ///< first.loglik - second.loglik
    Preference preferred = Preference::Tie;

    const FitResult* preferred_fit() const;
};

/// Side-by-side summary; lower AIC is preferred. Both fits must come from
/// the same dataset label.
ComparisonReport compare(const FitResult& first, const FitResult& second);

} // namespace xtrem
