#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tfw/descent.hpp"
#include "tfw/functional.hpp"
#include "tfw/solver.hpp"

namespace tfw {

/// Difference fields between a perturbed and a reference ground state.
///
/// Potentials are taken with the multiplier absorbed (Phi = phi + mu), the
/// gauge in which the Euler-Lagrange equation reads
/// -2 C_W u'' + (10/3) C_TF u^{7/3} + 2 Phi u = 0. Only in that gauge does the
/// defect potential phi_d decay away from the defect, and only there does the
/// relative-energy formula reproduce the energy difference.
struct DefectFields {
    Field v;       ///< u2 - u1
    Field phi_d;   ///< Phi2 - Phi1
    FieldState reference;
    double reference_multiplier = 0.0;
    double perturbed_multiplier = 0.0;
    NuclearDensity perturbation;

    /// Phi1 = phi1 + mu1.
    Field reference_potential() const
    {
        Field p = reference.phi;
        p += reference_multiplier;
        return p;
    }
    /// Nominal defect width L0 = 2 * defect_half_width.
    double defect_width() const noexcept { return 2.0 * perturbation.defect_half_width; }
};

inline DefectFields make_defect_fields(const SolveResult& reference, const SolveResult& perturbed,
                                       const NuclearDensity& nu, bool require_converged = true)
{
    if (require_converged && (!reference.converged || !perturbed.converged))
        throw InvalidArgument("defect fields need converged reference and perturbed states");
    const Field& u1 = reference.state.u;
    const Field& u2 = perturbed.state.u;
    if (!same_grid(u1, u2) || !same_grid(u1, nu.field))
        throw InvalidArgument("grid mismatch between reference, perturbed state and perturbation");
    DefectFields d;
    d.v = u2 - u1;
    d.phi_d = perturbed.absorbed_potential() - reference.absorbed_potential();
    d.reference = reference.state;
    d.reference_multiplier = reference.mu_final;
    d.perturbed_multiplier = perturbed.mu_final;
    d.perturbation = nu;
    return d;
}

/// Pointwise integrand of the relative energy,
///   C_W (v')^2 + C_TF [|u1+v|^{10/3} - u1^{10/3} - (10/3) u1^{7/3} v]
///   - C_D [|u1+v|^{8/3} - u1^{8/3} - (8/3) u1^{5/3} v]
///   + (1/2) phi_d ((u1+v)^2 - u1^2 - nu) + Phi1 (v^2 - nu).
inline Field relative_energy_density(const DefectFields& d, const ModelParams& params)
{
    const Field& u1 = d.reference.u;
    const Field& v = d.v;
    const Field& nu = d.perturbation.field;
    if (!same_grid(u1, v) || !same_grid(u1, d.phi_d) || !same_grid(u1, nu))
        throw InvalidArgument("grid mismatch in defect fields");
    const Field phi1 = d.reference_potential();
    const Field dv = forward_difference(v);
    Field e(u1.grid_ptr());
    for (std::size_t i = 0; i < u1.size(); ++i) {
        const double a = u1[i], w = v[i], s = a + w;
        const double aa = std::abs(a), as = std::abs(s);
        double val = params.c_w * dv[i] * dv[i];
        val += params.c_tf *
               (std::pow(as, 10.0 / 3.0) - std::pow(aa, 10.0 / 3.0) - (10.0 / 3.0) * std::pow(aa, 4.0 / 3.0) * a * w);
        if (params.c_d != 0.0)
            val -= params.c_d *
                   (std::pow(as, 8.0 / 3.0) - std::pow(aa, 8.0 / 3.0) - (8.0 / 3.0) * std::pow(aa, 2.0 / 3.0) * a * w);
        val += 0.5 * d.phi_d[i] * (w * (2.0 * a + w) - nu[i]);
        val += phi1[i] * (w * w - nu[i]);
        e[i] = val;
    }
    return e;
}

/// Relative energy of the defect per unit cross-sectional area.
inline double relative_energy(const DefectFields& d, const ModelParams& params)
{
    return integrate(relative_energy_density(d, params));
}

/// Relative-energy integrand restricted to the slab |z| <= K/2.
inline double truncated_relative_energy(const DefectFields& d, const ModelParams& params, double K)
{
    const Grid1D& g = d.v.grid();
    const double L0 = d.defect_width();
    if (!(K > L0) || K > g.length())
        throw InvalidArgument("truncation width K = " + std::to_string(K) + " must lie in (L0, 2L] = (" +
                              std::to_string(L0) + ", " + std::to_string(g.length()) + "]");
    const Field e = relative_energy_density(d, params);
    const double half = 0.5 * K * (1.0 + 1e-12);
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (std::abs(g.z(i)) <= half) s += e[i];
    return g.spacing() * s;
}

/// |int (v^2 + 2 u1 v - nu)| / max(1, int |nu|).
inline double check_charge_neutrality(const DefectFields& d)
{
    const Field& u1 = d.reference.u;
    const Field& nu = d.perturbation.field;
    double s = 0.0, nu_abs = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) {
        s += d.v[i] * (d.v[i] + 2.0 * u1[i]) - nu[i];
        nu_abs += std::abs(nu[i]);
    }
    const double h = u1.grid().spacing();
    return std::abs(h * s) / std::max(1.0, h * nu_abs);
}

// --- decay fits -----------------------------------------------------------

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
    std::size_t samples = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs >= 2 paired samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("linear fit needs at least two distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.samples = x.size();
    return f;
}

enum class Tail { Both, Left, Right };

/// |f| ~ k1 exp(-k2 dist) with dist = |z| - core_half_width.
struct DecayFit {
    double k1 = 0.0;
    double k2 = 0.0;
    double window_lo = 0.0;  ///< smallest |z| used
    double window_hi = 0.0;  ///< largest |z| used
    double correlation = 0.0;  ///< R^2 of the log-linear fit
    std::size_t samples = 0;
};

inline constexpr double kDecayNoiseFloor = 1e-13;

/// Least-squares fit of log|f| against distance from the core slab over
/// core_half_width + h <= |z| <= L - boundary_buffer, both tails pooled
/// unless one side is selected. Samples with |f| <= 1e-13 are dropped.
inline DecayFit fit_decay(const Field& f, double core_half_width, double boundary_buffer, Tail side = Tail::Both)
{
    const Grid1D& g = f.grid();
    const double lo = core_half_width + g.spacing();
    const double hi = g.half_width() - boundary_buffer;
    if (!(hi > lo)) throw InvalidArgument("decay fit window is empty");
    std::vector<double> xs, ys;
    std::size_t in_window = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = g.z(i);
        if ((side == Tail::Left && z >= 0.0) || (side == Tail::Right && z <= 0.0)) continue;
        const double az = std::abs(z);
        if (az < lo - 1e-12 * g.spacing() || az > hi) continue;
        ++in_window;
        const double a = std::abs(f[i]);
        if (!(a > kDecayNoiseFloor)) continue;
        xs.push_back(az - core_half_width);
        ys.push_back(std::log(a));
    }
    if (in_window < 10) throw InvalidArgument("decay fit window holds fewer than 10 samples");
    if (xs.size() < 10) throw InvalidArgument("decay fit: fewer than 10 samples above the noise floor");
    const LinearFit lf = linear_fit(xs, ys);
    DecayFit out;
    out.k1 = std::exp(lf.intercept);
    out.k2 = -lf.slope;
    out.window_lo = lo;
    out.window_hi = hi;
    out.correlation = lf.r_squared;
    out.samples = lf.samples;
    return out;
}

/// fit_decay for a field that may vanish altogether (no defect): a field
/// entirely at or below the noise floor gives a fit with NaN parameters.
inline DecayFit fit_decay_or_empty(const Field& f, double core_half_width, double boundary_buffer,
                                   Tail side = Tail::Both)
{
    if (f.max_abs() > kDecayNoiseFloor) return fit_decay(f, core_half_width, boundary_buffer, side);
    const double lo = core_half_width + f.grid().spacing();
    const double hi = f.grid().half_width() - boundary_buffer;
    if (!(hi > lo)) throw InvalidArgument("decay fit window is empty");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return DecayFit{nan, nan, lo, hi, nan, 0};
}

// --- variational principle ------------------------------------------------

/// Relative-energy functional of a trial perturbation w of the reference
/// square-root density, with its charge constraint handled by an augmented
/// Lagrangian (lambda, c):
///   E(w) = C_W int (w')^2 + C_TF int [|u1+w|^{10/3} - u1^{10/3} - (10/3) u1^{7/3} w]
///          - C_D int [...]^{8/3} + int Phi1 (w^2 - nu) + (1/2) int phi_w delta,
///   delta = (u1+w)^2 - u1^2 - nu,  -phi_w'' = 4 pi delta,
///   C(w) = int delta = 0.
class RelativeEnergyObjective {
public:
    RelativeEnergyObjective(const Field& u1, const Field& phi1_absorbed, const NuclearDensity& nu,
                            const ModelParams& params, const PoissonSolver& poisson)
        : u1_(u1.values()),
          phi1_(phi1_absorbed.values()),
          nu_(nu.field.values()),
          params_(params),
          poisson_(poisson),
          h_(u1.grid().spacing()),
          delta_(u1.size()),
          phi_w_(u1.size()),
          scratch_(u1.size() - 1)
    {
        const std::size_t n = u1.size();
        base_tf_.resize(n);
        base_dir_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::abs(u1_[i]);
            base_tf_[i] = std::pow(a, 4.0 / 3.0) * u1_[i];
            base_dir_[i] = std::pow(a, 2.0 / 3.0) * u1_[i];
        }
    }

    void set_alm(double lambda, double c) noexcept
    {
        lambda_ = lambda;
        c_ = c;
    }
    /// E(w) without the multiplier and penalty terms, from the last evaluation.
    double functional_value() const noexcept { return functional_; }
    double constraint() const noexcept { return constraint_; }

    double operator()(std::span<const double> w, std::span<double> grad)
    {
        const std::size_t n = w.size();
        const double cw = params_.c_w, ctf = params_.c_tf, cd = params_.c_d;
        double cst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            delta_[i] = w[i] * (2.0 * u1_[i] + w[i]) - nu_[i];
            cst += delta_[i];
        }
        cst *= h_;
        constraint_ = cst;
        poisson_.solve_into(delta_, phi_w_, scratch_);

        const double inv_h2 = 1.0 / (h_ * h_);
        const double shift = lambda_ + cst / c_;
        double kin = 0.0, tf = 0.0, dir = 0.0, ext = 0.0, hart = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = u1_[i], wi = w[i], s = a + wi;
            const double left = w[i == 0 ? n - 1 : i - 1];
            const double right = w[i + 1 == n ? 0 : i + 1];
            const double d = right - wi;
            kin += d * d;
            const double as = std::abs(s), aa = std::abs(a);
            const double rs = std::cbrt(as), ra = std::cbrt(aa);
            tf += s * s * as * rs - a * a * aa * ra - (10.0 / 3.0) * base_tf_[i] * wi;
            double gi = -2.0 * cw * (left - 2.0 * wi + right) * inv_h2 + (10.0 / 3.0) * ctf * (as * rs * s - base_tf_[i]);
            if (cd != 0.0) {
                dir += s * s * rs * rs - a * a * ra * ra - (8.0 / 3.0) * base_dir_[i] * wi;
                gi -= (8.0 / 3.0) * cd * (rs * rs * s - base_dir_[i]);
            }
            ext += phi1_[i] * (wi * wi - nu_[i]);
            hart += phi_w_[i] * delta_[i];
            grad[i] = gi + 2.0 * phi1_[i] * wi + 2.0 * (phi_w_[i] + shift) * s;
        }
        functional_ = cw * kin / h_ + h_ * (ctf * tf - cd * dir + ext + 0.5 * hart);
        return functional_ + lambda_ * cst + cst * cst / (2.0 * c_);
    }

private:
    std::span<const double> u1_, phi1_, nu_;
    ModelParams params_;
    const PoissonSolver& poisson_;
    double h_;
    double lambda_ = 0.0, c_ = 1.0;
    double functional_ = 0.0, constraint_ = 0.0;
    std::vector<double> base_tf_, base_dir_;
    std::vector<double> delta_, phi_w_, scratch_;
};

struct VariationalResult {
    double value = 0.0;
    Field minimizer;
    /// |C(w*)| / max(1, int |nu|)
    double constraint_violation = 0.0;
    double stationarity = 0.0;
    double multiplier = 0.0;
    std::size_t outer_iterations = 0;
    bool converged = false;
};

/// Minimizes the relative-energy functional over charge-neutral perturbations
/// of the reference state, starting from w = 0. The reference multiplier is
/// needed to put its potential in the absorbed gauge.
inline VariationalResult variational_cross_check(const FieldState& reference, double reference_multiplier,
                                                 const NuclearDensity& nu, const ModelParams& params,
                                                 const SolverOptions& opts)
{
    params.validate();
    opts.validate();
    const Field& u1 = reference.u;
    if (!same_grid(u1, nu.field) || !same_grid(u1, reference.phi))
        throw InvalidArgument("grid mismatch between reference state and perturbation");
    const GridPtr& grid = u1.grid_ptr();
    Field phi1 = reference.phi;
    phi1 += reference_multiplier;

    const PoissonSolver poisson(grid);
    RelativeEnergyObjective objective(u1, phi1, nu, params, poisson);
    double nu_abs = 0.0;
    for (double x : nu.field.values()) nu_abs += std::abs(x);
    const double scale = std::max(1.0, grid->spacing() * nu_abs);

    VariationalResult out;
    std::vector<double> w(u1.size(), 0.0);
    double lambda = opts.mu0, c = opts.c0;
    double inner_tol = std::max(opts.inner_grad_tol, 1e-2);
    for (std::size_t k = 0; k < opts.max_outer; ++k) {
        objective.set_alm(lambda, c);
        DescentOptions dopts = opts.descent(inner_tol);
        dopts.fold_nonnegative = false;  // w is a signed perturbation
        DescentResult inner = gradient_descent(std::move(w), objective, grid->spacing(), dopts);
        w = std::move(inner.x);
        // Re-evaluate at the accepted point so the cached parts match w.
        std::vector<double> g(w.size());
        objective(w, g);
        const double cst = objective.constraint();
        lambda += cst / c;
        c = std::max(opts.kappa * c, opts.c_min);
        out.outer_iterations = k + 1;
        out.value = objective.functional_value();
        out.constraint_violation = std::abs(cst) / scale;
        out.stationarity = inner.grad_norm;
        if (out.constraint_violation <= opts.tol_constraint && out.stationarity <= opts.tol_residual &&
            inner_tol <= opts.inner_grad_tol) {
            out.converged = true;
            break;
        }
        if (inner.stalled && inner_tol <= opts.inner_grad_tol) break;
        inner_tol = std::max(opts.inner_grad_tol, 0.1 * inner_tol);
    }
    out.multiplier = lambda;
    out.minimizer = Field(grid, std::move(w));
    return out;
}

// --- report ---------------------------------------------------------------

struct AnalysisOptions {
    /// Truncation widths; empty selects eight evenly spaced values in (L0, L].
    std::vector<double> truncation_widths;
    /// Boundary buffer for decay fits as a fraction of the box length 2L.
    double boundary_buffer_fraction = 0.1;
    /// Core excluded from decay fits; defaults to the perturbation's half-width.
    std::optional<double> core_half_width;
    bool variational = false;
};

struct RelativeEnergyReport {
    double gamma = 0.0;
    /// Direct difference of the two ground-state energies on the same box.
    double energy_difference = 0.0;
    std::vector<std::pair<double, double>> truncated;  ///< (K, gamma_K)
    double neutrality_defect = 0.0;
    DecayFit decay_u;
    DecayFit decay_phi;
    std::optional<double> variational_value;
    /// variational_value / gamma
    std::optional<double> variational_agreement;
};

inline std::vector<double> default_truncation_widths(const DefectFields& d)
{
    const double L0 = d.defect_width();
    const double L = d.v.grid().half_width();
    std::vector<double> ks;
    for (int j = 1; j <= 8; ++j) ks.push_back(L0 + j * (L - L0) / 8.0);
    return ks;
}

inline RelativeEnergyReport build_report(const SolveResult& reference, const SolveResult& perturbed,
                                         const NuclearDensity& m1, const NuclearDensity& m2,
                                         const NuclearDensity& nu, const ModelParams& params,
                                         const AnalysisOptions& aopts, const SolverOptions& sopts)
{
    const DefectFields d = make_defect_fields(reference, perturbed, nu);
    RelativeEnergyReport rep;
    rep.gamma = relative_energy(d, params);
    rep.energy_difference = energy(perturbed.state.u, m2, params) - energy(reference.state.u, m1, params);
    std::vector<double> ks = aopts.truncation_widths.empty() ? default_truncation_widths(d) : aopts.truncation_widths;
    std::sort(ks.begin(), ks.end());
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
        if (!(ks[i + 1] > ks[i])) throw InvalidArgument("truncation widths must be strictly increasing");
    for (double K : ks) rep.truncated.emplace_back(K, truncated_relative_energy(d, params, K));
    rep.neutrality_defect = check_charge_neutrality(d);
    const double buffer = aopts.boundary_buffer_fraction * d.v.grid().length();
    const double core = aopts.core_half_width.value_or(nu.defect_half_width);
    rep.decay_u = fit_decay_or_empty(d.v, core, buffer);
    rep.decay_phi = fit_decay_or_empty(d.phi_d, core, buffer);
    if (aopts.variational) {
        const VariationalResult vr = variational_cross_check(reference.state, reference.mu_final, nu, params, sopts);
        if (!vr.converged) throw ConvergenceError("variational cross-check did not converge");
        rep.variational_value = vr.value;
        rep.variational_agreement = rep.gamma != 0.0 ? vr.value / rep.gamma : 1.0;
    }
    return rep;
}

}  // namespace tfw
