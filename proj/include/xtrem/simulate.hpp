#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtrem/rng.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

/// How extreme studies are chosen: an independent coin per study, or a
/// fixed number round(extreme_prob * K) placed at random positions.
enum class ExtremeMode { Bernoulli, FixedCount };

const char* to_string(ExtremeMode mode);
ExtremeMode extreme_mode_from_string(const std::string& text);

struct SimScenario {
    std::string name = "custom";
    Count k_studies = 30;
    Count n_low = 100;
    Count n_high = 1000;
    double mu = 0.0;
    double tau = 0.0;
    double threshold_u = 0.09;
    double extreme_prob = 0.0;
    GpdParams gpd{0.6, 0.05};
    std::size_t replications = 500;
    std::uint64_t seed = 1;
    ExtremeMode extreme_mode = ExtremeMode::Bernoulli;

    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;
    /// invlogit(mu), the target of the aggregate estimate.
    double true_proportion() const;
};

/// "s1", "s2", "s3" (5/15/30 % extremes) and "additional".
SimScenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

struct SimulatedDataset {
    Dataset data;
    std::vector<bool> extreme;       ///< generated by the GPD branch
    std::vector<double> true_proportion;
};

/// Deterministic in (scenario.seed, replication_index).
SimulatedDataset generate_dataset(const SimScenario& scenario, std::size_t replication_index);

struct ReplicationRecord {
    std::size_t replication = 0;
    std::size_t n_tail = 0;
    bool rem_ok = false;
    bool xtrem_ok = false;
    bool rem_converged = false;
    bool xtrem_converged = false;
    bool degraded = false;
    double rem_estimate = 0.0;
    double xtrem_estimate = 0.0;
    double rem_loglik = 0.0;
    double xtrem_loglik = 0.0;
    double rem_aic = 0.0;
    double xtrem_aic = 0.0;
    bool rem_covers = false;
    bool xtrem_covers = false;
    std::optional<double> tail_q99;
};

struct SimMetrics {
    ModelKind model = ModelKind::REM;
    std::size_t n_used = 0;
    std::size_t n_failed = 0;
    std::size_t n_nonconverged = 0;
    double bias = 0.0;
    double rmse = 0.0;
    double variance = 0.0;  ///< population variance of the estimates
    double mean_aic = 0.0;
    double mean_loglik = 0.0;
    double coverage95 = 0.0;
    std::optional<double> mean_tail_q99;
    std::size_t n_tail_q99 = 0;
};

/// Aggregates one model's columns over the successful replications, in
/// replication order.
SimMetrics summarize(ModelKind model, std::span<const ReplicationRecord> rows,
                     double true_proportion);

struct MonteCarloResult {
    SimScenario scenario;
    SimMetrics rem;
    SimMetrics xtrem;
    std::vector<ReplicationRecord> replications;
    /// More than 20 % of either model's fits failed.
    bool unstable = false;
    std::string rng = kRngName;
};

/// Fits REM and XT-REM (fixed threshold) on every replication. Replications
/// run on up to `threads` workers; the reduction is by replication index so
/// results do not depend on the thread count.
MonteCarloResult run_monte_carlo(const SimScenario& scenario, unsigned threads = 1);

/// Writes aic_table.csv, estimates.csv and example_dataset.csv into `dir`.
void emit_plot_data(std::span<const MonteCarloResult> results, const std::filesystem::path& dir);

} // namespace xtrem
