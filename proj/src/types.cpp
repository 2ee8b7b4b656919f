#include "xtrem/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xtrem/errors.hpp"
#include "xtrem/transforms.hpp"

namespace xtrem {

StudyRecord::StudyRecord(Count events, Count size, std::string id)
    : events_(events), size_(size), id_(std::move(id)) {
    const std::string who = id_.empty() ? std::string("study") : "study '" + id_ + "'";
    if (size_ < 1) {
        throw ValidationError(who + ": size must be >= 1 (got " + std::to_string(size_) + ")");
    }
    if (events_ < 0) {
        throw ValidationError(who + ": events must be >= 0 (got " + std::to_string(events_) + ")");
    }
    if (events_ > size_) {
        throw ValidationError(who + ": events (" + std::to_string(events_) +
                              ") must not exceed size (" + std::to_string(size_) + ")");
    }
}

StudyRecord make_study(Count events, Count size) { return StudyRecord(events, size); }

Dataset::Dataset(std::vector<StudyRecord> studies, std::string label)
    : studies_(std::move(studies)), label_(std::move(label)) {
    if (studies_.empty()) {
        throw ValidationError("dataset '" + label_ + "' has no studies");
    }
}

std::vector<double> Dataset::proportions() const {
    std::vector<double> p;
    p.reserve(studies_.size());
    for (const auto& s : studies_) p.push_back(s.proportion());
    return p;
}

ThresholdRequest ThresholdRequest::fixed(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw ValidationError("fixed threshold must lie in (0, 1)");
    }
    return {ThresholdKind::Fixed, u, kDefaultPercentileZ};
}

ThresholdRequest ThresholdRequest::dynamic(double z) {
    if (!std::isfinite(z)) {
        throw ValidationError("dynamic threshold z-score must be finite");
    }
    return {ThresholdKind::DynamicPercentile, 0.0, z};
}

ThresholdRequest ThresholdRequest::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) {
            throw ValidationError("threshold: cannot parse number '" + s + "' in '" + text + "'");
        }
        return v;
    };
    if (head == "fixed") {
        if (tail.empty()) throw ValidationError("threshold: 'fixed' needs a value, e.g. fixed:0.09");
        return fixed(number(tail));
    }
    if (head == "dynamic") {
        return tail.empty() ? dynamic() : dynamic(number(tail));
    }
    throw ValidationError("threshold: expected 'fixed:<u>' or 'dynamic[:z]', got '" + text + "'");
}

std::string ThresholdRequest::to_string() const {
    std::ostringstream out;
    out.precision(12);
    if (kind == ThresholdKind::Fixed) {
        out << "fixed:" << fixed_value;
    } else {
        out << "dynamic:" << percentile_z;
    }
    return out.str();
}

Threshold Threshold::fixed(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw ValidationError("threshold value must lie in (0, 1)");
    }
    return Threshold(ThresholdKind::Fixed, u, kDefaultPercentileZ, std::nullopt);
}

Threshold Threshold::dynamic(double mu, double tau, double z) {
    if (!std::isfinite(mu) || !std::isfinite(tau) || tau < 0.0 || !std::isfinite(z)) {
        throw ValidationError("dynamic threshold needs finite mu, z and tau >= 0");
    }
    const double u = invlogit(mu + z * tau);
    if (!(u > 0.0 && u < 1.0)) {
        throw ValidationError("dynamic threshold resolved outside (0, 1)");
    }
    return Threshold(ThresholdKind::DynamicPercentile, u, z, std::make_pair(mu, tau));
}

Segmentation::Segmentation(std::vector<std::size_t> bulk_indices,
                           std::vector<std::size_t> tail_indices,
                           std::vector<double> excesses, Threshold threshold,
                           std::size_t n_total)
    : bulk_(std::move(bulk_indices)),
      tail_(std::move(tail_indices)),
      excesses_(std::move(excesses)),
      threshold_(threshold) {
    if (tail_.size() != excesses_.size()) {
        throw ValidationError("segmentation: one excess per tail study required");
    }
    if (bulk_.size() + tail_.size() != n_total) {
        throw ValidationError("segmentation: bulk and tail must cover every study");
    }
    std::vector<bool> seen(n_total, false);
    auto mark = [&](std::size_t i) {
        if (i >= n_total || seen[i]) {
            throw ValidationError("segmentation: index sets must be disjoint and in range");
        }
        seen[i] = true;
    };
    std::for_each(bulk_.begin(), bulk_.end(), mark);
    std::for_each(tail_.begin(), tail_.end(), mark);
    for (double y : excesses_) {
        if (!(y > 0.0)) throw ValidationError("segmentation: excesses must be positive");
    }
}

bool Segmentation::is_tail(std::size_t index) const {
    return std::find(tail_.begin(), tail_.end(), index) != tail_.end();
}

RemParams::RemParams(double mu, double tau2) : mu_(mu), tau2_(tau2) {
    if (!std::isfinite(mu)) throw ValidationError("REM mu must be finite");
    if (!std::isfinite(tau2) || tau2 < 0.0) throw ValidationError("REM tau2 must be >= 0");
}

double RemParams::tau() const { return std::sqrt(tau2_); }

GpdParams::GpdParams(double xi, double beta) : xi_(xi), beta_(beta) {
    if (!std::isfinite(xi) || !(xi > -1.0)) throw ValidationError("GPD xi must be finite and > -1");
    if (!std::isfinite(beta) || !(beta > 0.0)) throw ValidationError("GPD beta must be > 0");
}

const char* to_string(ModelKind kind) {
    return kind == ModelKind::REM ? "REM" : "XT-REM";
}

ModelKind model_kind_from_string(const std::string& text) {
    if (text == "REM" || text == "rem") return ModelKind::REM;
    if (text == "XT-REM" || text == "XTREM" || text == "xtrem") return ModelKind::XTREM;
    throw ValidationError("unknown model '" + text + "'");
}

FitResult::FitResult(ModelKind model, std::string dataset_label, RemParams rem,
                     std::optional<GpdParams> gpd, double loglik)
    : model_(model), label_(std::move(dataset_label)), rem_(rem), gpd_(gpd), loglik_(loglik) {
    if (model_ == ModelKind::REM && gpd_) {
        throw ValidationError("a REM fit carries no GPD parameters");
    }
    if (!std::isfinite(loglik_)) {
        throw ValidationError("fit log-likelihood must be finite");
    }
}

double FitResult::aggregate_proportion() const { return invlogit(rem_.mu()); }

double aic(double loglik, int k_params) { return 2.0 * k_params - 2.0 * loglik; }

} // namespace xtrem
