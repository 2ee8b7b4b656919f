#include "xtrem/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "xtrem/errors.hpp"
#include "xtrem/gpd.hpp"
#include "xtrem/model.hpp"
#include "xtrem/transforms.hpp"

namespace xtrem {

namespace {

constexpr int kMaxTailRedraws = 100;
constexpr double kUnstableFailureShare = 0.2;

SimScenario main_scenario(std::string name, double extreme_prob) {
    SimScenario s;
    s.name = std::move(name);
    s.k_studies = 30;
    s.n_low = 100;
    s.n_high = 1000;
    s.mu = logit(0.035);
    s.tau = 0.4;
    s.threshold_u = 0.09;
    s.extreme_prob = extreme_prob;
    s.gpd = GpdParams(0.6, 0.05);
    s.replications = 500;
    return s;
}

bool covers(const Interval& logit_ci, double p_true) {
    return invlogit(logit_ci.low) <= p_true && p_true <= invlogit(logit_ci.high);
}

ReplicationRecord run_replication(const SimScenario& scenario, std::size_t index) {
    ReplicationRecord row;
    row.replication = index;
    const SimulatedDataset sim = generate_dataset(scenario, index);
    const double p_true = scenario.true_proportion();

    try {
        const FitResult rem = rem_only_fit(sim.data);
        row.rem_ok = true;
        row.rem_converged = rem.diag.converged;
        row.rem_estimate = rem.aggregate_proportion();
        row.rem_loglik = rem.loglik();
        row.rem_aic = rem.aic();
        row.rem_covers = covers(rem.diag.ci95_mu, p_true);
    } catch (const std::exception&) {
        row.rem_ok = false;
    }

    try {
        const FitResult xt = xtrem_fit(sim.data, ThresholdRequest::fixed(scenario.threshold_u));
        row.xtrem_ok = true;
        row.xtrem_converged = xt.diag.converged;
        row.degraded = xt.diag.degraded_to_rem;
        row.n_tail = xt.diag.segmentation ? xt.diag.segmentation->n_tail() : 0;
        row.xtrem_estimate = xt.aggregate_proportion();
        row.xtrem_loglik = xt.loglik();
        row.xtrem_aic = xt.aic();
        row.xtrem_covers = covers(xt.diag.ci95_mu, p_true);
        for (const auto& q : xt.diag.tail_quantiles) {
            if (q.percentile == 0.99) row.tail_q99 = q.value;
        }
    } catch (const std::exception&) {
        row.xtrem_ok = false;
    }
    return row;
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(12);
    return out;
}

} // namespace

const char* to_string(ExtremeMode mode) {
    return mode == ExtremeMode::Bernoulli ? "bernoulli" : "fixed";
}

ExtremeMode extreme_mode_from_string(const std::string& text) {
    if (text == "bernoulli") return ExtremeMode::Bernoulli;
    if (text == "fixed" || text == "fixed_count") return ExtremeMode::FixedCount;
    throw ValidationError("unknown extreme mode '" + text + "' (expected bernoulli or fixed)");
}

void SimScenario::validate() const {
    if (k_studies < 1) throw ValidationError("scenario: k_studies must be >= 1");
    if (n_low < 1 || n_low > n_high) {
        throw ValidationError("scenario: need 1 <= n_low <= n_high");
    }
    if (!std::isfinite(mu)) throw ValidationError("scenario: mu must be finite");
    if (!std::isfinite(tau) || tau < 0.0) throw ValidationError("scenario: tau must be >= 0");
    if (!(threshold_u > 0.0 && threshold_u < 1.0)) {
        throw ValidationError("scenario: threshold_u must lie in (0, 1)");
    }
    if (!(extreme_prob >= 0.0 && extreme_prob < 1.0)) {
        throw ValidationError("scenario: extreme_prob must lie in [0, 1)");
    }
    if (replications < 1) throw ValidationError("scenario: replications must be >= 1");
}

double SimScenario::true_proportion() const { return invlogit(mu); }

SimScenario builtin_scenario(const std::string& name) {
    if (name == "s1") return main_scenario("s1", 0.05);
    if (name == "s2") return main_scenario("s2", 0.15);
    if (name == "s3") return main_scenario("s3", 0.30);
    if (name == "additional") {
        SimScenario s = main_scenario("additional", 0.10);
        s.mu = -2.5;
        s.tau = 0.6;
        s.gpd = GpdParams(0.15, 0.03);
        return s;
    }
    throw ValidationError("unknown scenario '" + name + "' (expected s1, s2, s3 or additional)");
}

std::vector<std::string> builtin_scenario_names() { return {"s1", "s2", "s3", "additional"}; }

SimulatedDataset generate_dataset(const SimScenario& scenario, std::size_t replication_index) {
    scenario.validate();
    Rng rng(scenario.seed, replication_index);
    const auto k = static_cast<std::size_t>(scenario.k_studies);

    std::vector<bool> extreme(k, false);
    if (scenario.extreme_mode == ExtremeMode::FixedCount) {
        const auto count = static_cast<std::size_t>(
            std::llround(scenario.extreme_prob * static_cast<double>(k)));
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = 0; i < count; ++i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<Count>(i), static_cast<Count>(k - 1)));
            std::swap(order[i], order[j]);
            extreme[order[i]] = true;
        }
    }

    std::vector<StudyRecord> studies;
    std::vector<double> truth;
    studies.reserve(k);
    truth.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Count n = rng.uniform_int(scenario.n_low, scenario.n_high);
        if (scenario.extreme_mode == ExtremeMode::Bernoulli) {
            extreme[i] = rng.bernoulli(scenario.extreme_prob);
        }
        double p = 0.0;
        if (extreme[i]) {
            bool found = false;
            for (int attempt = 0; attempt < kMaxTailRedraws && !found; ++attempt) {
                const GpdQuantile q = gpd_quantile(scenario.gpd, scenario.threshold_u, rng.uniform());
                if (!q.clamped && q.value < 1.0) {
                    p = q.value;
                    found = true;
                }
            }
            if (!found) p = 1.0 - 1.0 / (2.0 * static_cast<double>(n));
        } else {
            p = invlogit(rng.normal(scenario.mu, scenario.tau));
        }
        truth.push_back(p);
        studies.emplace_back(rng.binomial(n, p), n, std::to_string(i + 1));
    }
    return {Dataset(std::move(studies), scenario.name + "#" + std::to_string(replication_index)),
            std::move(extreme), std::move(truth)};
}

SimMetrics summarize(ModelKind model, std::span<const ReplicationRecord> rows,
                     double true_proportion) {
    const bool rem = model == ModelKind::REM;
    SimMetrics m;
    m.model = model;
    std::vector<double> est;
    double aic_sum = 0.0, ll_sum = 0.0, q_sum = 0.0;
    std::size_t covered = 0;
    for (const auto& row : rows) {
        if (!(rem ? row.rem_ok : row.xtrem_ok)) {
            ++m.n_failed;
            continue;
        }
        if (!(rem ? row.rem_converged : row.xtrem_converged)) ++m.n_nonconverged;
        est.push_back(rem ? row.rem_estimate : row.xtrem_estimate);
        aic_sum += rem ? row.rem_aic : row.xtrem_aic;
        ll_sum += rem ? row.rem_loglik : row.xtrem_loglik;
        covered += (rem ? row.rem_covers : row.xtrem_covers) ? 1 : 0;
        if (!rem && row.tail_q99) {
            q_sum += *row.tail_q99;
            ++m.n_tail_q99;
        }
    }
    m.n_used = est.size();
    if (m.n_used == 0) return m;

    const double count = static_cast<double>(m.n_used);
    double err_sum = 0.0, sq_sum = 0.0, mean = 0.0;
    for (double e : est) {
        err_sum += e - true_proportion;
        sq_sum += (e - true_proportion) * (e - true_proportion);
        mean += e;
    }
    mean /= count;
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    m.bias = err_sum / count;
    m.rmse = std::max(std::sqrt(sq_sum / count), std::abs(m.bias));
    m.variance = var / count;
    m.mean_aic = aic_sum / count;
    m.mean_loglik = ll_sum / count;
    m.coverage95 = static_cast<double>(covered) / count;
    if (m.n_tail_q99 > 0) m.mean_tail_q99 = q_sum / static_cast<double>(m.n_tail_q99);
    return m;
}

MonteCarloResult run_monte_carlo(const SimScenario& scenario, unsigned threads) {
    scenario.validate();
    MonteCarloResult result;
    result.scenario = scenario;
    result.replications.resize(scenario.replications);

    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenario.replications)));
    if (workers == 1) {
        for (std::size_t r = 0; r < scenario.replications; ++r) {
            result.replications[r] = run_replication(scenario, r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < scenario.replications; r = next++) {
                    result.replications[r] = run_replication(scenario, r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    const double p_true = scenario.true_proportion();
    result.rem = summarize(ModelKind::REM, result.replications, p_true);
    result.xtrem = summarize(ModelKind::XTREM, result.replications, p_true);
    const double limit = kUnstableFailureShare * static_cast<double>(scenario.replications);
    result.unstable = static_cast<double>(result.rem.n_failed) > limit ||
                      static_cast<double>(result.xtrem.n_failed) > limit;
    return result;
}

void emit_plot_data(std::span<const MonteCarloResult> results, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

    auto aic = open_csv(dir / "aic_table.csv");
    aic << "scenario,model,n_used,mean_aic,mean_loglik,bias,rmse,coverage95\n";
    auto est = open_csv(dir / "estimates.csv");
    est << "scenario,replication,model,aggregate_proportion,true_proportion\n";
    auto example = open_csv(dir / "example_dataset.csv");
    example << "scenario,index,proportion,regime,rem_estimate,evt_q99\n";

    for (const auto& res : results) {
        const std::string& name = res.scenario.name;
        const double p_true = res.scenario.true_proportion();
        for (const SimMetrics* m : {&res.rem, &res.xtrem}) {
            aic << name << ',' << to_string(m->model) << ',' << m->n_used << ',' << m->mean_aic << ','
                << m->mean_loglik << ',' << m->bias << ',' << m->rmse << ',' << m->coverage95 << '\n';
        }
        for (const auto& row : res.replications) {
            if (row.rem_ok) {
                est << name << ',' << row.replication << ",REM," << row.rem_estimate << ',' << p_true
                    << '\n';
            }
            if (row.xtrem_ok) {
                est << name << ',' << row.replication << ",XT-REM," << row.xtrem_estimate << ','
                    << p_true << '\n';
            }
        }

        const SimulatedDataset sim = generate_dataset(res.scenario, 0);
        const Threshold u = Threshold::fixed(res.scenario.threshold_u);
        const Segmentation seg = segment(sim.data, u);
        std::optional<FitResult> fit;
        try {
            fit = xtrem_fit(sim.data, ThresholdRequest::fixed(res.scenario.threshold_u));
        } catch (const std::exception&) {
        }
        std::optional<double> q99;
        if (fit) {
            for (const auto& q : fit->diag.tail_quantiles) {
                if (q.percentile == 0.99) q99 = q.value;
            }
        }
        for (std::size_t i = 0; i < sim.data.size(); ++i) {
            example << name << ',' << i + 1 << ',' << sim.data[i].proportion() << ','
                    << (seg.is_tail(i) ? "tail" : "bulk") << ',';
            if (fit) example << fit->aggregate_proportion();
            example << ',';
            if (q99) example << *q99;
            example << '\n';
        }
    }
    for (auto* f : {&aic, &est, &example}) {
        f->flush();
        if (!*f) throw IoError("failed writing plot data into '" + dir.string() + "'");
    }
}

} // namespace xtrem
