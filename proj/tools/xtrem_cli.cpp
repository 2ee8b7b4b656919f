// Command-line front end: fit, simulate and segment.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "xtrem/errors.hpp"
#include "xtrem/io.hpp"
#include "xtrem/model.hpp"
#include "xtrem/simulate.hpp"
#include "xtrem/transforms.hpp"

namespace fs = std::filesystem;
using namespace xtrem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitFit = 3;

std::string pct(double p) { return fmt::format("{:.2f}%", 100.0 * p); }
std::string lg(double v) { return fmt::format("{:.4f}", v); }

std::vector<double> parse_quantiles(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double p = 0.0;
        try {
            p = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !(p > 0.0 && p < 1.0)) {
            throw ValidationError("--quantiles: '" + item + "' is not a probability in (0, 1)");
        }
        out.push_back(p);
    }
    if (out.empty()) throw ValidationError("--quantiles: no values given");
    return out;
}

void print_threshold(const Threshold& t) {
    if (t.kind() == ThresholdKind::Fixed) {
        fmt::print("Threshold: fixed u = {}\n", lg(t.value()));
        return;
    }
    const auto [mu, tau] = *t.source();
    fmt::print("Threshold: dynamic u = invlogit(mu + z*tau) = invlogit({} + {}*{}) = {} ({})\n", lg(mu),
               lg(t.percentile_z()), lg(tau), lg(t.value()), pct(t.value()));
}

void print_fit(const FitResult& fit) {
    const auto& d = fit.diag;
    fmt::print("\n{} fit\n", to_string(fit.model()));
    fmt::print("  mu (logit)         {:>10}   95% CI [{}, {}]\n", lg(fit.rem().mu()), lg(d.ci95_mu.low),
               lg(d.ci95_mu.high));
    fmt::print("  tau^2              {:>10}\n", lg(fit.rem().tau2()));
    if (fit.gpd()) {
        fmt::print("  xi                 {:>10}\n", lg(fit.gpd()->xi()));
        fmt::print("  beta               {:>10}\n", lg(fit.gpd()->beta()));
    }
    fmt::print("  aggregate          {:>10}   95% CI [{}, {}]\n", pct(fit.aggregate_proportion()),
               pct(invlogit(d.ci95_mu.low)), pct(invlogit(d.ci95_mu.high)));
    for (const auto& q : d.tail_quantiles) {
        fmt::print("  tail q{:<12} {:>10}{}\n", fmt::format("{:g}", 100.0 * q.percentile), pct(q.value),
                   q.clamped ? "   (clamped at 1)" : "");
    }
    fmt::print("  log-likelihood     {:>10}\n", lg(fit.loglik()));
    fmt::print("  AIC (k = {})        {:>10}\n", fit.k_params(), lg(fit.aic()));
    fmt::print("  converged          {:>10}   ({} iterations)\n", d.converged ? "yes" : "no", d.n_iterations);
    for (const auto& w : d.warnings) fmt::print("  warning: {}\n", w);
}

int run_fit(const std::string& data_path, const std::string& threshold_text, const std::string& model,
            const std::string& quantiles_text, std::string out_path, bool joint, double correction) {
    const Dataset data = read_dataset(data_path);
    const ThresholdRequest request = ThresholdRequest::parse(threshold_text);
    XtremOptions options;
    options.quantiles = parse_quantiles(quantiles_text);
    options.joint = joint;
    options.correction = correction;

    Provenance prov;
    prov.input_checksum = file_checksum(data_path);
    prov.threshold_spec = request.to_string();
    if (out_path.empty()) out_path = data.label() + "_result.json";

    fmt::print("Dataset: {} ({} studies, {})\n", data.label(), data.size(), prov.input_checksum);

    std::optional<FitResult> xt;
    std::optional<FitResult> rem;
    if (model == "xtrem" || model == "both") {
        xt = xtrem_fit(data, request, options);
        print_threshold(*xt->diag.threshold);
        const auto& seg = *xt->diag.segmentation;
        fmt::print("Segmentation: {} bulk, {} tail\n", seg.n_bulk(), seg.n_tail());
        print_fit(*xt);
    }
    if (model == "rem" || model == "both") {
        rem = rem_only_fit(data, correction);
        print_fit(*rem);
    }

    if (xt && rem) {
        const ComparisonReport report = compare(*xt, *rem);
        const FitResult* best = report.preferred_fit();
        fmt::print("\nComparison (XT-REM minus REM)\n");
        fmt::print("  delta AIC          {:>10}\n", lg(report.delta_aic));
        fmt::print("  delta loglik       {:>10}\n", lg(report.delta_loglik));
        fmt::print("  aggregate          {:>10} vs {}\n", pct(xt->aggregate_proportion()),
                   pct(rem->aggregate_proportion()));
        fmt::print("  preferred by AIC   {:>10}\n", best ? to_string(best->model()) : "tie");
        write_result(report, out_path, prov);
    } else {
        write_result(xt ? *xt : *rem, out_path, prov);
    }
    fmt::print("\nResult written to {}\n", out_path);
    return kExitOk;
}

int run_segment(const std::string& data_path, const std::string& threshold_text, double correction) {
    const Dataset data = read_dataset(data_path);
    const Threshold threshold = resolve_threshold(ThresholdRequest::parse(threshold_text), data, correction);
    const Segmentation seg = segment(data, threshold);
    print_threshold(threshold);
    fmt::print("{:>4}  {:<16} {:>8} {:>8} {:>11}  {:<6} {:>10}\n", "#", "study", "events", "size",
               "proportion", "regime", "excess");
    std::size_t t = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        const bool tail = t < seg.n_tail() && seg.tail_indices()[t] == i;
        fmt::print("{:>4}  {:<16} {:>8} {:>8} {:>11}  {:<6} {:>10}\n", i + 1, s.id(), s.events(), s.size(),
                   pct(s.proportion()), tail ? "tail" : "bulk",
                   tail ? fmt::format("{:.6f}", seg.excesses()[t]) : std::string("-"));
        if (tail) ++t;
    }
    fmt::print("bulk: {}  tail: {}\n", seg.n_bulk(), seg.n_tail());
    return kExitOk;
}

void print_metrics_row(const std::string& label, const SimMetrics& m) {
    fmt::print("{:<18} {:<7} {:>8.4f} {:>8.4f} {:>8.2f} {:>8.2f} {:>7.3f} {:>8} {:>5}\n", label,
               to_string(m.model), m.bias, m.rmse, m.mean_aic, m.mean_loglik, m.coverage95,
               m.mean_tail_q99 ? pct(*m.mean_tail_q99) : std::string("-"), m.n_used);
}

int run_simulate(const std::vector<std::string>& names, const std::string& config,
                 std::optional<std::size_t> reps, std::optional<std::uint64_t> seed, const std::string& out_dir,
                 unsigned threads, const std::string& extreme_mode) {
    std::vector<SimScenario> scenarios;
    for (const auto& name : names) {
        if (name == "custom") {
            if (config.empty()) throw ValidationError("--scenario custom requires --config <path>");
            const Json j = [&] {
                try {
                    std::ifstream in(config);
                    if (!in) throw IoError("cannot open config '" + config + "'");
                    return Json::parse(in);
                } catch (const Json::parse_error& e) {
                    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
                }
            }();
            SimScenario base = builtin_scenario("s1");
            base.name = "custom";
            scenarios.push_back(scenario_from_json(j, base));
        } else if (name == "all") {
            for (const auto& n : {"s1", "s2", "s3"}) scenarios.push_back(builtin_scenario(n));
        } else {
            scenarios.push_back(builtin_scenario(name));
        }
    }
    for (auto& s : scenarios) {
        if (reps) s.replications = *reps;
        if (seed) s.seed = *seed;
        if (!extreme_mode.empty()) s.extreme_mode = extreme_mode_from_string(extreme_mode);
        s.validate();
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

    std::vector<MonteCarloResult> results;
    fmt::print("{:<18} {:<7} {:>8} {:>8} {:>8} {:>8} {:>7} {:>8} {:>5}\n", "Scenario", "Model", "Bias", "RMSE",
               "AIC", "LogLik", "Cov95", "q99", "used");
    for (const auto& s : scenarios) {
        MonteCarloResult r = run_monte_carlo(s, threads);
        const std::string label = fmt::format("{} ({:g}%)", s.name, 100.0 * s.extreme_prob);
        print_metrics_row(label, r.rem);
        print_metrics_row("", r.xtrem);
        if (r.unstable) fmt::print("  warning: scenario {} is unstable (more than 20% failed fits)\n", s.name);
        write_result(r, fs::path(out_dir) / ("metrics_" + s.name + ".json"));
        write_replications_csv(r, fs::path(out_dir) / ("replications_" + s.name + ".csv"));
        results.push_back(std::move(r));
    }
    emit_plot_data(results, out_dir);
    fmt::print("Generator: {}\nOutput written to {}\n", kRngName, out_dir);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"XT-REM: random-effects meta-analysis of proportions with a GPD tail"};
    app.set_version_flag("--version", fmt::format("xtrem {} (result schema {})", kToolVersion, kSchemaVersion));
    app.require_subcommand(1);

    double correction = kDefaultContinuityCorrection;
    app.add_option("--correction", correction, "Continuity correction for zero or full cells")
        ->capture_default_str();

    auto* fit = app.add_subcommand("fit", "Fit REM and/or XT-REM to a CSV dataset");
    std::string data_path, threshold_text = "fixed:0.09", model = "both", quantiles = "0.99", out_path;
    bool joint = false;
    fit->add_option("--data", data_path, "CSV with columns study,events,size")->required();
    fit->add_option("--threshold", threshold_text, "fixed:<u> or dynamic[:z]")->capture_default_str();
    fit->add_option("--model", model, "rem, xtrem or both")
        ->check(CLI::IsMember({"rem", "xtrem", "both"}))
        ->capture_default_str();
    fit->add_option("--quantiles", quantiles, "Comma-separated tail percentiles")->capture_default_str();
    fit->add_option("--out", out_path, "Result JSON path (default <label>_result.json)");
    fit->add_flag("--joint", joint, "Optimize all four parameters jointly");

    auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo study");
    std::vector<std::string> scenarios{"s1"};
    std::string config, out_dir = "simulation", extreme_mode;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    sim->add_option("--scenario", scenarios, "s1, s2, s3, additional, all or custom (repeatable)")
        ->capture_default_str();
    sim->add_option("--config", config, "Scenario JSON for --scenario custom");
    sim->add_option("--reps", reps, "Monte Carlo replications M")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "Base seed");
    sim->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sim->add_option("--extreme-mode", extreme_mode, "bernoulli or fixed")
        ->check(CLI::IsMember({"bernoulli", "fixed"}));

    auto* seg = app.add_subcommand("segment", "Show the bulk/tail split of a dataset");
    std::string seg_data, seg_threshold = "fixed:0.09";
    seg->add_option("--data", seg_data, "CSV with columns study,events,size")->required();
    seg->add_option("--threshold", seg_threshold, "fixed:<u> or dynamic[:z]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*fit) return run_fit(data_path, threshold_text, model, quantiles, out_path, joint, correction);
        if (*sim) return run_simulate(scenarios, config, reps, seed, out_dir, threads, extreme_mode);
        if (*seg) return run_segment(seg_data, seg_threshold, correction);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "fit failed: " << e.what() << '\n';
        return kExitFit;
    }
    return kExitOk;
}
