#pragma once

#include <stdexcept>
#include <string>

namespace xtrem {

/// Input that violates a data invariant (counts, thresholds, labels).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Too few observations for the requested estimator.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Objective not finite at the optimizer's starting point.
class OptimStartError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Index sets or parameter blocks that do not line up.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace xtrem
