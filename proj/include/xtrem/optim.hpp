#pragma once

#include <functional>
#include <limits>

#include <Eigen/Core>

namespace xtrem {

using Vector = Eigen::VectorXd;

/// Objective to be maximized. May return -inf (or NaN) for infeasible points.
using Objective = std::function<double(const Vector&)>;

struct OptimProblem {
    Objective objective;
    Vector lower;  ///< -inf allowed
    Vector upper;  ///< +inf allowed
    Vector start;
    /// Convergence when the projected gradient's infinity norm drops below this.
    double tol = 1e-7;
    /// Relative objective change that also counts as convergence, as in
    /// L-BFGS-B's factr * epsmch stopping rule.
    double ftol = 1e7 * std::numeric_limits<double>::epsilon();
    int max_iter = 500;
    int memory = 8;

    /// Box with all coordinates unbounded, of the same size as `start`.
    static OptimProblem unbounded(Objective f, Vector start);
};

struct OptimOutcome {
    Vector argmax;
    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    double grad_norm = std::numeric_limits<double>::infinity();
};

/// Box-constrained limited-memory BFGS with gradient projection and a
/// backtracking Armijo search along the projected path.
///
/// Every accepted step strictly increases the objective and every iterate
/// stays inside the box. Throws OptimStartError when the objective is not
/// finite at the (clamped) start.
OptimOutcome maximize(const OptimProblem& problem);

/// Central differences with step max(1e-7, 1e-7 |x_j|), switching to a
/// one-sided stencil at the bounds or when one side is not finite. Throws
/// DomainError if no finite stencil is found after three step halvings.
Vector numeric_gradient(const Objective& f, const Vector& x,
                        const Vector& lower, const Vector& upper);

Vector numeric_gradient(const Objective& f, const Vector& x);

/// Infinity norm of x - P(x + g), the first-order optimality measure for
/// maximization over the box.
double projected_gradient_norm(const Vector& x, const Vector& gradient,
                               const Vector& lower, const Vector& upper);

} // namespace xtrem
