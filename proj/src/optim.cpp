#include "xtrem/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "xtrem/errors.hpp"

namespace xtrem {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxBacktracks = 40;
constexpr int kMaxStepHalvings = 3;

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

// Coordinates pinned at a bound by a gradient pointing outward.
std::vector<bool> active_set(const Vector& x, const Vector& g, const Vector& lower,
                             const Vector& upper) {
    std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        active[j] = (x[j] <= lower[j] && g[j] < 0.0) || (x[j] >= upper[j] && g[j] > 0.0);
    }
    return active;
}

void zero_active(Vector& v, const std::vector<bool>& active) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (active[j]) v[j] = 0.0;
    }
}

struct Correction {
    Vector s;
    Vector y;
    double rho;
};

// Two-loop recursion: applies the inverse-Hessian approximation of -f to q.
Vector apply_inverse_hessian(const std::deque<Correction>& memory, Vector q) {
    if (memory.empty()) return q;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
        alpha[i] = memory[i].rho * memory[i].s.dot(q);
        q -= alpha[i] * memory[i].y;
    }
    const auto& last = memory.back();
    Vector r = (last.s.dot(last.y) / last.y.squaredNorm()) * q;
    for (std::size_t i = 0; i < memory.size(); ++i) {
        const double b = memory[i].rho * memory[i].y.dot(r);
        r += (alpha[i] - b) * memory[i].s;
    }
    return r;
}

} // namespace

OptimProblem OptimProblem::unbounded(Objective f, Vector start) {
    OptimProblem p;
    const auto n = start.size();
    p.objective = std::move(f);
    p.lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
    p.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
    p.start = std::move(start);
    return p;
}

double projected_gradient_norm(const Vector& x, const Vector& gradient, const Vector& lower,
                               const Vector& upper) {
    return (project(x + gradient, lower, upper) - x).lpNorm<Eigen::Infinity>();
}

Vector numeric_gradient(const Objective& f, const Vector& x, const Vector& lower,
                        const Vector& upper) {
    const double fx = f(x);
    if (!std::isfinite(fx)) {
        throw DomainError("numeric_gradient: objective not finite at the evaluation point");
    }
    Vector grad(x.size());
    Vector probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        double h = std::max(1e-7, 1e-7 * std::abs(x[j]));
        bool done = false;
        for (int attempt = 0; attempt <= kMaxStepHalvings && !done; ++attempt, h *= 0.5) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            double fp = nan;
            double fm = nan;
            if (x[j] + h <= upper[j]) {
                probe[j] = x[j] + h;
                fp = f(probe);
            }
            if (x[j] - h >= lower[j]) {
                probe[j] = x[j] - h;
                fm = f(probe);
            }
            probe[j] = x[j];
            if (std::isfinite(fp) && std::isfinite(fm)) {
                grad[j] = (fp - fm) / (2.0 * h);
                done = true;
            } else if (std::isfinite(fp)) {
                grad[j] = (fp - fx) / h;
                done = true;
            } else if (std::isfinite(fm)) {
                grad[j] = (fx - fm) / h;
                done = true;
            }
        }
        if (!done) {
            throw DomainError("numeric_gradient: no finite difference stencil for coordinate " +
                              std::to_string(j));
        }
    }
    return grad;
}

Vector numeric_gradient(const Objective& f, const Vector& x) {
    const auto n = x.size();
    return numeric_gradient(f, x, Vector::Constant(n, -std::numeric_limits<double>::infinity()),
                            Vector::Constant(n, std::numeric_limits<double>::infinity()));
}

OptimOutcome maximize(const OptimProblem& problem) {
    const auto n = problem.start.size();
    if (problem.lower.size() != n || problem.upper.size() != n) {
        throw ValidationError("maximize: bounds and start differ in dimension");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(problem.lower[j] <= problem.upper[j])) {
            throw ValidationError("maximize: lower bound exceeds upper bound");
        }
    }
    const auto& f = problem.objective;
    const Vector& lo = problem.lower;
    const Vector& hi = problem.upper;

    OptimOutcome out;
    Vector x = project(problem.start, lo, hi);
    double fx = f(x);
    if (!std::isfinite(fx)) {
        throw OptimStartError("maximize: objective is not finite at the start point");
    }
    out.argmax = x;
    out.value = fx;

    Vector g;
    try {
        g = numeric_gradient(f, x, lo, hi);
    } catch (const DomainError&) {
        return out;
    }

    std::deque<Correction> memory;
    bool gradient_current = true;
    for (int iter = 0; iter < problem.max_iter; ++iter) {
        out.grad_norm = projected_gradient_norm(x, g, lo, hi);
        if (out.grad_norm <= problem.tol) {
            out.converged = true;
            break;
        }

        const auto active = active_set(x, g, lo, hi);
        Vector free_grad = g;
        zero_active(free_grad, active);
        Vector d = apply_inverse_hessian(memory, free_grad);
        zero_active(d, active);
        if (!(d.dot(free_grad) > 0.0)) {
            memory.clear();
            d = free_grad;
        }
        double alpha = memory.empty() ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;

        bool accepted = false;
        Vector x_new;
        double f_new = fx;
        for (int b = 0; b <= kMaxBacktracks; ++b, alpha *= kShrink) {
            x_new = project(x + alpha * d, lo, hi);
            const Vector step = x_new - x;
            if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
            f_new = f(x_new);
            if (std::isfinite(f_new) && f_new > fx && f_new >= fx + kArmijoC1 * g.dot(step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            break;
        }

        Vector g_new;
        bool gradient_ok = true;
        try {
            g_new = numeric_gradient(f, x_new, lo, hi);
        } catch (const DomainError&) {
            gradient_ok = false;
        }
        const double rel_change = (f_new - fx) / std::max({std::abs(fx), std::abs(f_new), 1.0});
        const Vector s = x_new - x;
        x = x_new;
        fx = f_new;
        out.argmax = x;
        out.value = fx;
        out.iterations = iter + 1;
        if (!gradient_ok) {
            gradient_current = false;
            break;
        }

        const Vector y = g - g_new;  // gradient change of -f
        const double sy = s.dot(y);
        if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
            memory.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(memory.size()) > problem.memory) memory.pop_front();
        }
        g = g_new;

        if (rel_change <= problem.ftol) {
            out.grad_norm = projected_gradient_norm(x, g, lo, hi);
            out.converged = true;
            break;
        }
    }
    if (gradient_current) {
        out.grad_norm = projected_gradient_norm(x, g, lo, hi);
        if (out.grad_norm <= problem.tol) out.converged = true;
    } else {
        out.grad_norm = std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace xtrem
