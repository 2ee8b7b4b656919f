#include "xtrem/transforms.hpp"

#include <string>

namespace xtrem {

LogitObservation::LogitObservation(double theta, double sigma2, bool corrected)
    : theta_(theta), sigma2_(sigma2), corrected_(corrected) {
    if (!std::isfinite(theta)) throw DomainError("logit observation: theta must be finite");
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
        throw DomainError("logit observation: sigma2 must be positive");
    }
}

LogitObservation within_variance(Count events, Count size, double correction) {
    if (size < 1 || events < 0 || events > size) {
        throw DomainError("within_variance: need 0 <= r <= n and n >= 1 (r=" +
                          std::to_string(events) + ", n=" + std::to_string(size) + ")");
    }
    if (!(correction > 0.0) || !std::isfinite(correction)) {
        throw DomainError("within_variance: continuity correction must be positive");
    }
    if (events > 0 && events < size) {
        const double r = static_cast<double>(events);
        const double nr = static_cast<double>(size - events);
        return {std::log(r / nr), 1.0 / r + 1.0 / nr, false};
    }
    const double r = static_cast<double>(events) + correction;
    const double nr = static_cast<double>(size - events) + correction;
    return {std::log(r / nr), 1.0 / r + 1.0 / nr, true};
}

LogitObservation within_variance(const StudyRecord& study, double correction) {
    return within_variance(study.events(), study.size(), correction);
}

std::vector<LogitObservation> logit_observations(const Dataset& data, double correction) {
    std::vector<LogitObservation> obs;
    obs.reserve(data.size());
    for (const auto& s : data.studies()) obs.push_back(within_variance(s, correction));
    return obs;
}

std::vector<LogitObservation> logit_observations(const Dataset& data,
                                                 std::span<const std::size_t> indices,
                                                 double correction) {
    std::vector<LogitObservation> obs;
    obs.reserve(indices.size());
    for (std::size_t i : indices) obs.push_back(within_variance(data[i], correction));
    return obs;
}

} // namespace xtrem
