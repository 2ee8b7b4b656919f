#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "xtrem/rng.hpp"
#include "xtrem/transforms.hpp"
#include "xtrem/types.hpp"

namespace xtrem::testing {

// 16 studies, sizes 58..917, proportions 0.006..0.101, two above 0.09.
inline Dataset synthetic16() {
    const std::vector<std::pair<Count, Count>> counts{
        {5, 833}, {2, 58},  {28, 917}, {4, 212}, {9, 340},  {3, 145}, {12, 265}, {6, 410},
        {15, 288}, {7, 96}, {11, 109}, {11, 116}, {8, 180}, {13, 620}, {5, 74},  {18, 510}};
    std::vector<StudyRecord> studies;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        studies.emplace_back(counts[i].first, counts[i].second, "S" + std::to_string(i + 1));
    }
    return Dataset(std::move(studies), "synthetic16");
}

inline Dataset random_dataset(Rng& rng, std::size_t k, double mu, double tau, const std::string& label) {
    std::vector<StudyRecord> studies;
    for (std::size_t i = 0; i < k; ++i) {
        const Count n = rng.uniform_int(50, 1000);
        const double p = invlogit(rng.normal(mu, tau));
        studies.emplace_back(rng.binomial(n, p), n);
    }
    return Dataset(std::move(studies), label);
}

inline std::vector<LogitObservation> random_observations(Rng& rng, std::size_t k, double mu,
                                                         double tau) {
    std::vector<LogitObservation> obs;
    for (std::size_t i = 0; i < k; ++i) {
        const double s2 = 0.02 + 0.3 * rng.uniform();
        obs.emplace_back(rng.normal(mu, std::sqrt(tau * tau + s2)), s2);
    }
    return obs;
}

} // namespace xtrem::testing
