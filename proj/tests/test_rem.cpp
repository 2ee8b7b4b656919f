#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "xtrem/errors.hpp"
#include "xtrem/normal.hpp"
#include "xtrem/rem.hpp"

using namespace xtrem;

namespace {

double direct_loglik(double mu, double tau2, const std::vector<LogitObservation>& obs) {
    double total = 0.0;
    for (const auto& o : obs) {
        const double v = tau2 + o.sigma2();
        total += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (o.theta() - mu) * (o.theta() - mu) / v;
    }
    return total;
}

} // namespace

TEST_CASE("rem log-likelihood") {
    const std::vector<LogitObservation> one{{0.3, 1.0}};
    CHECK(rem_loglik(RemParams(0.3, 0.0), one) == doctest::Approx(-0.9189385332046727).epsilon(1e-15));

    const std::vector<LogitObservation> pair{{-1.0, 0.5}, {1.0, 0.5}};
    const double half = rem_loglik(RemParams(0.0, 0.2), std::span(pair).first(1));
    CHECK(rem_loglik(RemParams(0.0, 0.2), pair) == doctest::Approx(2.0 * half).epsilon(1e-15));

    const std::vector<LogitObservation> five{
        {-3.1, 0.21}, {-2.7, 0.09}, {-3.6, 0.35}, {-2.2, 0.12}, {-3.3, 0.05}};
    for (double tau2 : {0.0, 0.1, 0.37, 2.0}) {
        const double got = rem_loglik(RemParams(-3.0, tau2), five);
        CHECK(std::abs(got - direct_loglik(-3.0, tau2, five)) < 1e-10);
    }
    CHECK_THROWS_AS(rem_loglik(RemParams(0, 0), std::vector<LogitObservation>{}), DomainError);
}

TEST_CASE("rem fit degenerate cases") {
    const std::vector<LogitObservation> same{{-2.0, 0.3}, {-2.0, 0.1}, {-2.0, 0.7}};
    const auto [p, d] = rem_fit(same);
    CHECK(p.mu() == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(p.tau2() == 0.0);
    CHECK(d.converged);
    CHECK_THROWS_AS(rem_fit(std::span(same).first(1)), InsufficientDataError);
}

TEST_CASE("rem fit satisfies its optimality conditions") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const auto obs = testing::random_observations(rng, 30, -3.0, 0.5);
        const auto [p, d] = rem_fit(obs);
        CHECK(d.converged);
        CHECK(p.mu() == doctest::Approx(rem_weighted_mean(obs, p.tau2())).epsilon(1e-9));
        REQUIRE(d.weights.size() == obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) {
            CHECK(std::abs(d.weights[i] - 1.0 / (p.tau2() + obs[i].sigma2())) < 1e-10);
        }
        const double best = rem_loglik(p, obs);
        CHECK(best == doctest::Approx(d.loglik).epsilon(1e-12));
        for (double dm : {-0.05, 0.05}) {
            CHECK(rem_loglik(RemParams(p.mu() + dm, p.tau2()), obs) < best);
        }
        for (double t : {0.5, 0.9, 1.1, 2.0}) {
            const double tau2 = p.tau2() == 0.0 ? 0.01 * t : p.tau2() * t;
            const RemParams alt(rem_weighted_mean(obs, tau2), tau2);
            CHECK(rem_loglik(alt, obs) <= best + 1e-9);
        }
    }
}

TEST_CASE("rem fit is location equivariant") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const auto obs = testing::random_observations(rng, 25, -2.0, 0.6);
        const double shift = 3.0 * rng.uniform() - 1.5;
        std::vector<LogitObservation> moved;
        for (const auto& o : obs) moved.emplace_back(o.theta() + shift, o.sigma2());
        const auto a = rem_fit(obs).first;
        const auto b = rem_fit(moved).first;
        CHECK(std::abs(b.mu() - a.mu() - shift) < 1e-6);
        CHECK(std::abs(b.tau2() - a.tau2()) < 1e-6);
    }
}

TEST_CASE("rem fit recovers the truth on a large sample") {
    Rng rng(3);
    const double mu = logit(0.035);
    std::vector<LogitObservation> obs;
    for (int i = 0; i < 5000; ++i) {
        const Count n = 100000;
        const Count r = rng.binomial(n, invlogit(rng.normal(mu, 0.4)));
        obs.push_back(within_variance(r, n));
    }
    const auto [p, d] = rem_fit(obs);
    CHECK(d.converged);
    CHECK(std::abs(p.mu() - mu) < 0.02);
    CHECK(std::abs(p.tau() - 0.4) < 0.02);
}

TEST_CASE("wald interval") {
    const Interval z = rem_confidence_interval(0.0, 1.0);
    CHECK(z.low == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(z.high == doctest::Approx(1.959963984540054).epsilon(1e-12));
    const Interval point = rem_confidence_interval(-2.0, 0.0);
    CHECK(point.low == -2.0);
    CHECK(point.high == -2.0);
    CHECK(rem_confidence_interval(0.0, 1.0, 0.9).high == doctest::Approx(1.6448536269514722));
    CHECK_THROWS_AS(rem_confidence_interval(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(rem_confidence_interval(0.0, 1.0, 0.0), DomainError);

    const std::vector<LogitObservation> obs{{-3.0, 0.2}, {-2.5, 0.1}, {-2.8, 0.3}};
    const auto [p, d] = rem_fit(obs);
    double sw = 0.0;
    for (double w : d.weights) sw += w;
    CHECK(d.se_mu == doctest::Approx(std::sqrt(1.0 / sw)).epsilon(1e-12));
    const Interval ci = rem_confidence_interval(p, d);
    CHECK(ci.high - p.mu() == doctest::Approx(p.mu() - ci.low).epsilon(1e-12));
}

TEST_CASE("wald interval covers under the model itself") {
    // Observations drawn straight from the marginal normal, so only the
    // interval's own approximation is being measured.
    Rng rng(99);
    int covered = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
        const auto obs = testing::random_observations(rng, 30, -3.0, 0.4);
        const auto [p, d] = rem_fit(obs);
        const Interval ci = rem_confidence_interval(p, d);
        covered += ci.low <= -3.0 && -3.0 <= ci.high;
    }
    const double coverage = static_cast<double>(covered) / reps;
    CHECK(coverage >= 0.92);
    CHECK(coverage <= 0.98);
}
