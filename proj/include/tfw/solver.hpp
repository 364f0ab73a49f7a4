#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tfw/descent.hpp"
#include "tfw/functional.hpp"

namespace tfw {

struct SolverOptions {
    /// Bound on |int (u^2 - m)| / total charge.
    double tol_constraint = 1e-8;
    /// Bound on the sup-norm of the Euler-Lagrange residual.
    double tol_residual = 1e-6;
    std::size_t max_outer = 500;
    /// Gradient steps allowed per outer iteration.
    std::size_t max_inner = 200000;
    double inner_grad_tol = 1e-7;
    double step_init = 1.0;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    std::uint64_t seed = 0;

    double mu0 = 0.0;
    double c0 = 1.0;
    double kappa = 0.5;
    double c_min = 1e-2;
    CoulombCoupling coupling = CoulombCoupling::SelfConsistent;

    void validate() const
    {
        if (!(tol_constraint > 0.0) || !(tol_residual > 0.0) || !(inner_grad_tol > 0.0))
            throw InvalidArgument("solver tolerances must be positive");
        if (max_outer < 1 || max_inner < 1) throw InvalidArgument("solver iteration counts must be >= 1");
        if (!(step_init > 0.0)) throw InvalidArgument("solver step_init must be positive");
        if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("solver armijo_c must lie in (0, 1)");
        if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
            throw InvalidArgument("solver backtrack_factor must lie in (0, 1)");
        AlmState{mu0, c0, kappa, c_min}.validate();
    }

    DescentOptions descent(double grad_tol) const
    {
        DescentOptions d;
        d.max_steps = max_inner;
        d.grad_tol = grad_tol;
        d.step_init = step_init;
        d.armijo_c = armijo_c;
        d.backtrack_factor = backtrack_factor;
        d.fold_nonnegative = true;
        return d;
    }
};

struct OuterRecord {
    std::size_t outer_iter = 0;
    double energy = 0.0;
    double charge_residual = 0.0;  ///< Q = int (u^2 - m)
    double mu = 0.0;
    double c = 0.0;
    std::size_t inner_steps = 0;
    double el_residual = 0.0;
};

struct SolveResult {
    FieldState state;
    double mu_final = 0.0;
    double energy = 0.0;
    std::size_t outer_iterations = 0;
    /// |Q| / total charge.
    double constraint_violation = 0.0;
    double el_residual = 0.0;
    bool converged = false;
    /// Mean removed from the last Poisson source; tends to zero with Q.
    double poisson_source_mean = 0.0;
    std::vector<OuterRecord> trace;
    std::string diagnostics;

    /// phi + mu, the potential in which the Euler-Lagrange equation carries no multiplier.
    Field absorbed_potential() const
    {
        Field p = state.phi;
        p += mu_final;
        return p;
    }
};

struct InnerResult {
    Field u;
    double value = 0.0;
    double grad_norm = 0.0;
    std::size_t steps = 0;
    bool converged = false;
    bool stalled = false;
    std::string diagnostics;
    /// Augmented Lagrangian after each step, starting with L(u0).
    std::vector<double> values;
};

namespace detail {

inline double sup(const Field& f) { return f.max_abs(); }

inline void check_inputs(const Field& u, const NuclearDensity& m)
{
    if (!same_grid(u, m.field)) throw InvalidArgument("grid mismatch between u and nuclear density");
    require_finite(u, "u");
}

}  // namespace detail

/// Gradient descent on the augmented Lagrangian with phi frozen, starting at u0.
inline InnerResult minimize_u(const Field& u0, const NuclearDensity& m, const Field& phi, const AlmState& alm,
                              const ModelParams& params, const SolverOptions& opts, bool record_values = false)
{
    detail::check_inputs(u0, m);
    if (!same_grid(u0, phi)) throw InvalidArgument("grid mismatch between u and potential");
    params.validate();
    alm.validate();
    opts.validate();

    const PoissonSolver poisson(u0.grid_ptr());
    AlmObjective objective(m, params, poisson, CoulombCoupling::Frozen);
    objective.set_alm(alm.mu, alm.c);
    objective.set_frozen_potential(phi.values());
    DescentOptions d = opts.descent(opts.inner_grad_tol);
    d.record_values = record_values;
    DescentResult r = gradient_descent(u0.data(), objective, u0.grid().spacing(), d);
    InnerResult out{Field(u0.grid_ptr(), std::move(r.x)), r.value, r.grad_norm, r.steps, r.converged, r.stalled,
                    std::move(r.diagnostics), std::move(r.values)};
    return out;
}

/// Constant initial guess sqrt(total charge / length).
inline Field uniform_guess(const NuclearDensity& m)
{
    if (!(m.total_charge > 0.0)) throw InvalidArgument("nuclear density must carry positive total charge");
    return Field(m.grid_ptr(), std::sqrt(m.total_charge / m.grid().length()));
}

/// Smooth, strictly positive random initial guess: the uniform guess modulated
/// by four random cosine modes of relative amplitude at most 0.15 each.
inline Field random_guess(const NuclearDensity& m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-0.15, 0.15);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    double a[4], th[4];
    for (int j = 0; j < 4; ++j) {
        a[j] = amp(rng);
        th[j] = phase(rng);
    }
    const double base = std::sqrt(m.total_charge / m.grid().length());
    const double L = m.grid().half_width();
    return Field::sample(m.grid_ptr(), [&](double z) {
        double s = 1.0;
        for (int j = 0; j < 4; ++j) s += a[j] * std::cos((j + 1) * std::numbers::pi * z / L + th[j]);
        return base * s;
    });
}

/// Staggered augmented-Lagrangian solve of the TFW(D) ground state.
///
/// Each outer iteration minimizes L(u; mu, c) by gradient descent, updates
/// mu <- mu + Q/c and c <- max(kappa c, c_min), then re-solves the Poisson
/// problem for phi. The run stops when the relative charge violation and the
/// Euler-Lagrange residual (multiplier absorbed) both meet their tolerances.
///
/// With CoulombCoupling::Frozen the inner problem uses the potential from the
/// previous outer iteration. That iteration amplifies long-wavelength charge
/// oscillations (charge sloshing) unless max_inner is kept small, so the
/// default is SelfConsistent, which re-solves phi inside every evaluation.
///
/// Trial points are folded onto u >= 0. Replacing u by |u| never raises the
/// augmented Lagrangian, and without the fold an early long step through
/// u = 0 can trap the descent at a stationary state with a node.
inline SolveResult staggered_solve(const NuclearDensity& m, const ModelParams& params, const SolverOptions& opts,
                                   const std::optional<FieldState>& init = std::nullopt)
{
    params.validate();
    opts.validate();
    if (!(m.total_charge > 0.0)) throw InvalidArgument("nuclear density must carry positive total charge");

    const GridPtr& grid = m.grid_ptr();
    const double h = grid->spacing();
    Field u = init ? init->u : uniform_guess(m);
    Field phi = init ? init->phi : Field(grid, 0.0);
    detail::check_inputs(u, m);
    if (!same_grid(phi, m.field)) throw InvalidArgument("grid mismatch between initial potential and density");

    const PoissonSolver poisson(grid);
    AlmObjective objective(m, params, poisson, opts.coupling);
    double mu = opts.mu0;
    double c = opts.c0;

    SolveResult result;
    std::vector<double> scratch(grid->size() - 1);
    double inner_tol = std::max(opts.inner_grad_tol, 1e-2);

    for (std::size_t k = 0; k < opts.max_outer; ++k) {
        objective.set_alm(mu, c);
        if (opts.coupling == CoulombCoupling::Frozen) objective.set_frozen_potential(phi.values());
        DescentResult inner = gradient_descent(u.data(), objective, h, opts.descent(inner_tol));
        u = Field(grid, std::move(inner.x));

        const double q = charge_residual(u, m);
        mu += q / c;
        c = std::max(opts.kappa * c, opts.c_min);

        Field source(grid);
        for (std::size_t i = 0; i < u.size(); ++i) source[i] = u[i] * u[i] - m.field[i];
        result.poisson_source_mean = poisson.solve_into(source.values(), phi.values(), scratch);

        const double violation = std::abs(q) / m.total_charge;
        const double el = euler_lagrange_residual(u, phi, mu, params).max_abs();
        const double e = energy(u, m, params);
        result.trace.push_back({k + 1, e, q, mu, c, inner.steps, el});
        result.outer_iterations = k + 1;
        result.constraint_violation = violation;
        result.el_residual = el;
        result.energy = e;

        if (violation <= opts.tol_constraint && el <= opts.tol_residual) {
            result.converged = true;
            break;
        }
        if (inner.stalled && inner_tol <= opts.inner_grad_tol) {
            result.diagnostics = "inner minimization stalled: " + inner.diagnostics;
            break;
        }
        // Tighten the inner tolerance geometrically as the multiplier settles.
        inner_tol = std::max(opts.inner_grad_tol, 0.1 * inner_tol);
    }

    if (mean(u) < 0.0) u *= -1.0;
    result.state = FieldState{std::move(u), std::move(phi)};
    result.mu_final = mu;
    if (!result.converged && result.diagnostics.empty())
        result.diagnostics = "no convergence after " + std::to_string(result.outer_iterations) +
                             " outer iterations (constraint " + std::to_string(result.constraint_violation) +
                             ", residual " + std::to_string(result.el_residual) + ")";
    return result;
}

struct UniquenessProbe {
    /// max over pairs of || |u_a| - |u_b| ||_inf
    double spread = 0.0;
    double relative_spread = 0.0;
    std::vector<SolveResult> runs;
};

/// Solves from `trials` random positive initial guesses (seeds opts.seed, opts.seed+1, ...)
/// and reports how far apart the resulting densities are.
inline UniquenessProbe uniqueness_probe(const NuclearDensity& m, const ModelParams& params,
                                        const SolverOptions& opts, std::size_t trials)
{
    if (trials < 2) throw InvalidArgument("uniqueness probe needs at least 2 trials");
    UniquenessProbe probe;
    for (std::size_t t = 0; t < trials; ++t) {
        const Field u0 = random_guess(m, opts.seed + t);
        SolveResult r = staggered_solve(m, params, opts, FieldState{u0, Field(m.grid_ptr(), 0.0)});
        if (!r.converged)
            throw ConvergenceError("uniqueness probe trial " + std::to_string(t) + " did not converge: " +
                                   r.diagnostics);
        probe.runs.push_back(std::move(r));
    }
    double umax = 0.0;
    for (const auto& r : probe.runs) umax = std::max(umax, r.state.u.max_abs());
    for (std::size_t a = 0; a < probe.runs.size(); ++a)
        for (std::size_t b = a + 1; b < probe.runs.size(); ++b) {
            const Field& ua = probe.runs[a].state.u;
            const Field& ub = probe.runs[b].state.u;
            for (std::size_t i = 0; i < ua.size(); ++i)
                probe.spread = std::max(probe.spread, std::abs(std::abs(ua[i]) - std::abs(ub[i])));
        }
    probe.relative_spread = umax > 0.0 ? probe.spread / umax : probe.spread;
    return probe;
}

}  // namespace tfw
