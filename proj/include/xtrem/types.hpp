#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace xtrem {

using Count = std::int64_t;

/// One study's event count r and sample size n. The proportion r/n is
/// always recomputed from the counts.
class StudyRecord {
public:
    StudyRecord(Count events, Count size, std::string id = {});

    Count events() const noexcept { return events_; }
    Count size() const noexcept { return size_; }
    double proportion() const noexcept {
        return static_cast<double>(events_) / static_cast<double>(size_);
    }
    const std::string& id() const noexcept { return id_; }

private:
    Count events_;
    Count size_;
    std::string id_;
};

StudyRecord make_study(Count events, Count size);

/// Non-empty ordered collection of studies. Study index i is positional.
class Dataset {
public:
    Dataset(std::vector<StudyRecord> studies, std::string label);

    std::span<const StudyRecord> studies() const noexcept { return studies_; }
    std::size_t size() const noexcept { return studies_.size(); }
    const StudyRecord& operator[](std::size_t i) const { return studies_.at(i); }
    const std::string& label() const noexcept { return label_; }
    std::vector<double> proportions() const;

private:
    std::vector<StudyRecord> studies_;
    std::string label_;
};

enum class ThresholdKind { Fixed, DynamicPercentile };

/// z-score of the 90th percentile of the standard normal, as used for the
/// dynamic threshold.
inline constexpr double kDefaultPercentileZ = 1.2816;

/// How the caller wants the threshold chosen; resolved into a Threshold.
struct ThresholdRequest {
    ThresholdKind kind = ThresholdKind::Fixed;
    double fixed_value = 0.0;
    double percentile_z = kDefaultPercentileZ;

    static ThresholdRequest fixed(double u);
    static ThresholdRequest dynamic(double z = kDefaultPercentileZ);

    /// Parses "fixed:0.09", "dynamic" or "dynamic:1.645".
    static ThresholdRequest parse(const std::string& text);
    std::string to_string() const;
};

/// A resolved threshold u in (0, 1). Dynamic thresholds keep the (mu, tau)
/// they were resolved from so the value can always be recomputed.
class Threshold {
public:
    static Threshold fixed(double u);
    static Threshold dynamic(double mu, double tau, double z = kDefaultPercentileZ);

    ThresholdKind kind() const noexcept { return kind_; }
    double value() const noexcept { return value_; }
    double percentile_z() const noexcept { return z_; }
    /// (mu, tau) of the preliminary fit; only set for dynamic thresholds.
    std::optional<std::pair<double, double>> source() const noexcept { return source_; }

private:
    Threshold(ThresholdKind kind, double value, double z,
              std::optional<std::pair<double, double>> source)
        : kind_(kind), value_(value), z_(z), source_(source) {}

    ThresholdKind kind_;
    double value_;
    double z_;
    std::optional<std::pair<double, double>> source_;
};

/// Partition of study indices into bulk (p <= u) and tail (p > u), with the
/// tail excesses p - u. Indices are zero-based.
class Segmentation {
public:
    Segmentation(std::vector<std::size_t> bulk_indices,
                 std::vector<std::size_t> tail_indices,
                 std::vector<double> excesses,
                 Threshold threshold,
                 std::size_t n_total);

    const std::vector<std::size_t>& bulk_indices() const noexcept { return bulk_; }
    const std::vector<std::size_t>& tail_indices() const noexcept { return tail_; }
    const std::vector<double>& excesses() const noexcept { return excesses_; }
    const Threshold& threshold() const noexcept { return threshold_; }
    std::size_t n_tail() const noexcept { return tail_.size(); }
    std::size_t n_bulk() const noexcept { return bulk_.size(); }
    std::size_t n_total() const noexcept { return bulk_.size() + tail_.size(); }
    bool is_tail(std::size_t index) const;

private:
    std::vector<std::size_t> bulk_;
    std::vector<std::size_t> tail_;
    std::vector<double> excesses_;
    Threshold threshold_;
};

/// Logit-scale mean mu and between-study variance tau^2 >= 0.
class RemParams {
public:
    RemParams(double mu, double tau2);

    double mu() const noexcept { return mu_; }
    double tau2() const noexcept { return tau2_; }
    double tau() const;

private:
    double mu_;
    double tau2_;
};

/// Shape xi > -1 and scale beta > 0 of a generalized Pareto law.
class GpdParams {
public:
    GpdParams(double xi, double beta);

    double xi() const noexcept { return xi_; }
    double beta() const noexcept { return beta_; }

private:
    double xi_;
    double beta_;
};

enum class ModelKind { REM, XTREM };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct TailQuantile {
    double percentile = 0.99;
    double value = 0.0;
    bool clamped = false;
};

/// Estimation diagnostics that do not take part in the model invariants.
struct FitDiagnostics {
    Interval ci95_mu;
    double se_mu = 0.0;
    bool converged = true;
    int n_iterations = 0;
    bool degraded_to_rem = false;
    bool low_tail_sample = false;
    std::vector<TailQuantile> tail_quantiles;
    std::optional<Segmentation> segmentation;
    std::optional<Threshold> threshold;
    std::vector<std::string> warnings;
};

/// Result of a REM or XT-REM fit. AIC, parameter count and aggregate
/// proportion are derived from the stored estimates, never set directly.
class FitResult {
public:
    FitResult(ModelKind model, std::string dataset_label, RemParams rem,
              std::optional<GpdParams> gpd, double loglik);

    ModelKind model() const noexcept { return model_; }
    const std::string& dataset_label() const noexcept { return label_; }
    const RemParams& rem() const noexcept { return rem_; }
    const std::optional<GpdParams>& gpd() const noexcept { return gpd_; }
    double loglik() const noexcept { return loglik_; }

    int k_params() const noexcept { return gpd_ ? 4 : 2; }
    double aic() const noexcept { return 2.0 * k_params() - 2.0 * loglik_; }
    double aggregate_proportion() const;

    FitDiagnostics diag;

private:
    ModelKind model_;
    std::string label_;
    RemParams rem_;
    std::optional<GpdParams> gpd_;
    double loglik_;
};

double aic(double loglik, int k_params);

} // namespace xtrem
