#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tfw {

struct DescentOptions {
    std::size_t max_steps = 100000;
    /// Stop once the sup-norm of the gradient drops to this value.
    double grad_tol = 1e-7;
    double step_init = 1e-3;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    bool record_values = false;
    /// Replace every trial point by its absolute value. For objectives with
    /// f(|x|) <= f(x) this keeps the descent property and confines the
    /// iteration to x >= 0.
    bool fold_nonnegative = false;
};

struct DescentResult {
    std::vector<double> x;
    double value = 0.0;
    double grad_norm = 0.0;
    std::size_t steps = 0;
    std::size_t evaluations = 0;
    double last_step = 0.0;
    bool converged = false;
    bool stalled = false;
    std::string diagnostics;
    /// Objective after each accepted step (index 0 is the starting value), if recorded.
    std::vector<double> values;
};

namespace detail {

inline double sup_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

/// Steepest descent with backtracking line search.
///
/// `f(x, grad)` returns the objective and writes its gradient with respect to
/// the inner product <a, b> = weight * sum(a_i b_i). A trial step t is
/// accepted under the Armijo condition f(x - t g) <= f(x) - c t <g, g>, read
/// as a strict decrease so that steps lost to rounding do not count. Close
/// to a minimizer that decrease falls below the rounding error of f, so a
/// step is also accepted when f did not rise by more than 1e-12 |f| and the
/// sufficient-decrease condition holds for the quadratic model of f along the
/// ray, which reads <g(x - t g), g(x)> >= -(1 - 2c) <g, g>.
/// The trial step starts at the last accepted one and doubles after any step
/// accepted without backtracking. With fold_nonnegative the same tests are
/// applied to the folded trial point.
template <class Objective>
DescentResult gradient_descent(std::vector<double> x, Objective&& f, double weight, const DescentOptions& opts)
{
    const std::size_t n = x.size();
    DescentResult res;
    std::vector<double> g(n), x_new(n), g_new(n);
    double fx = f(std::span<const double>(x), std::span<double>(g));
    res.evaluations = 1;
    if (opts.record_values) res.values.push_back(fx);
    double t = opts.step_init;
    bool grow = false;
    const double t_floor = 1e-16 * opts.step_init;

    for (;;) {
        res.grad_norm = detail::sup_norm(g);
        if (res.grad_norm <= opts.grad_tol) {
            res.converged = true;
            break;
        }
        if (res.steps >= opts.max_steps) break;

        double gg = 0.0;
        for (double gi : g) gg += gi * gi;
        gg *= weight;

        double trial = grow ? 2.0 * t : t;
        bool accepted = false;
        bool backtracked = false;
        for (;;) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - trial * g[i];
            if (opts.fold_nonnegative)
                for (double& xi : x_new) xi = std::abs(xi);
            const double f_new = f(std::span<const double>(x_new), std::span<double>(g_new));
            ++res.evaluations;
            bool ok = std::isfinite(f_new) && f_new <= fx - opts.armijo_c * trial * gg && f_new < fx;
            // A step lost to rounding is never progress.
            if (!ok && std::isfinite(f_new) && f_new <= fx + 1e-12 * std::abs(fx) && x_new != x) {
                double slope = 0.0;
                for (std::size_t i = 0; i < n; ++i) slope += g_new[i] * g[i];
                slope *= weight;
                ok = slope >= -(1.0 - 2.0 * opts.armijo_c) * gg && slope <= gg;
            }
            if (ok) {
                x.swap(x_new);
                g.swap(g_new);
                fx = f_new;
                accepted = true;
                break;
            }
            backtracked = true;
            trial *= opts.backtrack_factor;
            if (trial < t_floor) break;
        }
        if (!accepted) {
            res.stalled = true;
            res.diagnostics = "line search found no decrease down to step " + std::to_string(trial) +
                              " (|grad|_inf = " + std::to_string(res.grad_norm) + ", f = " + std::to_string(fx) +
                              ")";
            break;
        }
        t = trial;
        grow = !backtracked;
        ++res.steps;
        if (opts.record_values) res.values.push_back(fx);
    }
    res.last_step = t;
    res.value = fx;
    res.x = std::move(x);
    return res;
}

}  // namespace tfw
