#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xtrem/errors.hpp"
#include "xtrem/simulate.hpp"
#include "xtrem/transforms.hpp"

using namespace xtrem;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("builtin scenarios") {
    const SimScenario s1 = builtin_scenario("s1");
    CHECK(s1.k_studies == 30);
    CHECK(s1.mu == doctest::Approx(-3.316780039849572).epsilon(1e-14));
    CHECK(s1.tau == 0.4);
    CHECK(s1.threshold_u == 0.09);
    CHECK(s1.extreme_prob == 0.05);
    CHECK(s1.gpd.xi() == 0.6);
    CHECK(s1.gpd.beta() == 0.05);
    CHECK(s1.true_proportion() == doctest::Approx(0.035).epsilon(1e-14));
    CHECK(builtin_scenario("s2").extreme_prob == 0.15);
    CHECK(builtin_scenario("s3").extreme_prob == 0.30);
    const SimScenario add = builtin_scenario("additional");
    CHECK(add.mu == -2.5);
    CHECK(add.tau == 0.6);
    CHECK(add.extreme_prob == 0.10);
    CHECK(add.gpd.xi() == 0.15);
    CHECK(add.gpd.beta() == 0.03);
    CHECK_THROWS_AS(builtin_scenario("s4"), ValidationError);

    SimScenario bad = s1;
    bad.extreme_prob = 1.0;
    CHECK_THROWS(bad.validate());
    bad = s1;
    bad.n_low = 2000;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("dataset generation") {
    const SimScenario s1 = builtin_scenario("s1");
    const SimulatedDataset a = generate_dataset(s1, 4);
    const SimulatedDataset b = generate_dataset(s1, 4);
    REQUIRE(a.data.size() == 30);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data[i].events() == b.data[i].events());
        CHECK(a.data[i].size() == b.data[i].size());
        CHECK(a.data[i].size() >= 100);
        CHECK(a.data[i].size() <= 1000);
        if (a.extreme[i]) CHECK(a.true_proportion[i] > 0.09);
    }
    CHECK(a.extreme == b.extreme);
    CHECK(a.data.label() == "s1#4");

    std::size_t extremes = 0;
    const std::size_t reps = 2000;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto sim = generate_dataset(s1, r);
        for (bool e : sim.extreme) extremes += e;
    }
    CHECK(static_cast<double>(extremes) / reps == doctest::Approx(1.5).epsilon(0.1));

    SimScenario fixed = builtin_scenario("s3");
    fixed.extreme_mode = ExtremeMode::FixedCount;
    for (std::size_t r = 0; r < 20; ++r) {
        const auto sim = generate_dataset(fixed, r);
        CHECK(std::count(sim.extreme.begin(), sim.extreme.end(), true) == 9);
    }
}

TEST_CASE("clean generation centres on the latent mean") {
    SimScenario s = builtin_scenario("s1");
    s.extreme_prob = 0.0;
    s.k_studies = 100000;
    s.n_low = s.n_high = 1000;
    const auto sim = generate_dataset(s, 0);
    double mean_p = 0.0;
    double mean_theta = 0.0;
    for (double p : sim.true_proportion) {
        mean_p += p;
        mean_theta += logit(p);
    }
    mean_p /= static_cast<double>(s.k_studies);
    mean_theta /= static_cast<double>(s.k_studies);
    CHECK(std::abs(mean_theta - s.mu) < 0.01);
    // E[invlogit(theta)] sits slightly above invlogit(mu) for a low baseline.
    CHECK(mean_p > invlogit(s.mu));
    CHECK(mean_p < invlogit(s.mu + 0.5 * s.tau * s.tau));
}

TEST_CASE("monte carlo metrics") {
    SimScenario s = builtin_scenario("s2");
    s.replications = 60;
    const MonteCarloResult a = run_monte_carlo(s, 1);
    const MonteCarloResult b = run_monte_carlo(s, 3);
    CHECK(a.rem.bias == b.rem.bias);
    CHECK(a.xtrem.rmse == b.xtrem.rmse);
    CHECK(a.xtrem.mean_aic == b.xtrem.mean_aic);
    CHECK(a.rem.coverage95 == b.rem.coverage95);
    CHECK(a.replications.size() == 60);
    CHECK_FALSE(a.unstable);
    CHECK(a.rng == kRngName);

    for (const SimMetrics& m : {a.rem, a.xtrem}) {
        CHECK(m.n_used + m.n_failed == 60);
        CHECK(m.rmse >= std::abs(m.bias));
        CHECK(std::abs(m.rmse * m.rmse - (m.bias * m.bias + m.variance)) < 1e-10);
        CHECK(m.coverage95 >= 0.0);
        CHECK(m.coverage95 <= 1.0);
    }
    CHECK(a.xtrem.mean_aic < a.rem.mean_aic);
    CHECK(std::abs(a.xtrem.bias) < std::abs(a.rem.bias));
    REQUIRE(a.xtrem.mean_tail_q99);
    CHECK_FALSE(a.rem.mean_tail_q99);

    SimScenario one = s;
    one.replications = 1;
    const MonteCarloResult single = run_monte_carlo(one);
    CHECK(single.rem.variance == 0.0);
    CHECK(std::abs(single.rem.rmse - std::abs(single.rem.bias)) < 1e-15);
}

TEST_CASE("summaries count failures separately") {
    std::vector<ReplicationRecord> rows(4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].replication = i;
        rows[i].rem_ok = i != 2;
        rows[i].rem_converged = i != 1;
        rows[i].rem_estimate = 0.03 + 0.01 * static_cast<double>(i);
        rows[i].rem_aic = 10.0;
        rows[i].rem_covers = true;
    }
    const SimMetrics m = summarize(ModelKind::REM, rows, 0.04);
    CHECK(m.n_used == 3);
    CHECK(m.n_failed == 1);
    CHECK(m.n_nonconverged == 1);
    CHECK(m.bias == doctest::Approx((0.03 + 0.04 + 0.06) / 3 - 0.04));
    CHECK(m.coverage95 == 1.0);
    const SimMetrics none = summarize(ModelKind::XTREM, rows, 0.04);
    CHECK(none.n_used == 0);
    CHECK(none.n_failed == 4);
}

TEST_CASE("plot data files") {
    const auto dir = std::filesystem::temp_directory_path() / "xtrem_plot_test";
    std::filesystem::remove_all(dir);
    std::vector<MonteCarloResult> results;
    for (const char* name : {"s1", "additional"}) {
        SimScenario s = builtin_scenario(name);
        s.replications = 5;
        results.push_back(run_monte_carlo(s));
    }
    emit_plot_data(results, dir);

    const auto aic = read_lines(dir / "aic_table.csv");
    REQUIRE(aic.size() == 5);
    CHECK(aic[0] == "scenario,model,n_used,mean_aic,mean_loglik,bias,rmse,coverage95");
    CHECK(split(aic[1])[0] == "s1");

    const auto est = read_lines(dir / "estimates.csv");
    CHECK(est.size() == 1 + 2 * 5 * 2);

    const auto ex = read_lines(dir / "example_dataset.csv");
    REQUIRE(ex.size() == 1 + 30 + 30);
    CHECK(ex[0] == "scenario,index,proportion,regime,rem_estimate,evt_q99");
    const SimulatedDataset sim = generate_dataset(results[0].scenario, 0);
    for (std::size_t i = 0; i < 30; ++i) {
        const auto cells = split(ex[1 + i]);
        REQUIRE(cells.size() == 6);
        const bool tail = sim.data[i].proportion() > 0.09;
        CHECK(cells[3] == (tail ? "tail" : "bulk"));
    }
    std::filesystem::remove_all(dir);

    const std::filesystem::path blocked = std::filesystem::temp_directory_path() / "xtrem_plot_blocker";
    std::ofstream(blocked) << "x";
    CHECK_THROWS_AS(emit_plot_data(results, blocked / "sub"), IoError);
    std::filesystem::remove(blocked);
}
