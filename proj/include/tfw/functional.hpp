#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "tfw/grid.hpp"
#include "tfw/nuclear.hpp"
#include "tfw/poisson.hpp"

namespace tfw {

/// Dirac exchange coefficient (3/4)(3/pi)^(1/3).
inline const double kDiracCoefficient = 0.75 * std::cbrt(3.0 / std::numbers::pi);

struct ModelParams {
    double c_w = 1.0;
    double c_tf = 3.2;
    double c_d = 0.0;

    static ModelParams tfw() { return {1.0, 3.2, 0.0}; }
    static ModelParams tfwd() { return {1.0, 3.2, kDiracCoefficient}; }

    bool has_dirac() const noexcept { return c_d > 0.0; }

    void validate() const
    {
        if (!(c_w > 0.0)) throw InvalidArgument("model c_w must be positive");
        if (!(c_tf > 0.0)) throw InvalidArgument("model c_tf must be positive");
        if (!(c_d >= 0.0)) throw InvalidArgument("model c_d must be non-negative");
    }
};

/// Square-root density u and electrostatic potential phi.
///
/// Sign convention: -phi'' = 4 pi (u^2 - m), phi with zero mean. With this
/// sign the Coulomb energy (1/2) int phi (u^2 - m) equals (1/8pi) int (phi')^2.
struct FieldState {
    Field u;
    Field phi;
};

/// Multiplier and penalty of the charge constraint Q = int (u^2 - m) = 0.
struct AlmState {
    double mu = 0.0;
    double c = 1.0;
    double kappa = 0.5;
    double c_min = 1e-2;

    void validate() const
    {
        if (!(c > 0.0)) throw InvalidArgument("penalty parameter c must be positive");
        if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
        if (!(c_min > 0.0)) throw InvalidArgument("c_min must be positive");
    }
};

struct EnergyTerms {
    double kinetic = 0.0;       ///< C_W int (u')^2
    double thomas_fermi = 0.0;  ///< C_TF int |u|^{10/3}
    double dirac = 0.0;         ///< C_D int |u|^{8/3} (enters with a minus sign)
    double coulomb = 0.0;       ///< (1/2) int phi_u (u^2 - m)

    double total() const noexcept { return kinetic + thomas_fermi - dirac + coulomb; }
};

namespace detail {

inline void require_same_grid(const Field& a, const Field& b, const char* what)
{
    if (!same_grid(a, b)) throw InvalidArgument(std::string("grid mismatch: ") + what);
}

inline double kinetic_form(const Field& u)
{
    const std::size_t n = u.size();
    const double h = u.grid().spacing();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = u[i + 1 == n ? 0 : i + 1] - u[i];
        s += d * d;
    }
    return s / h;
}

inline double power_integral(const Field& u, double p)
{
    double s = 0.0;
    for (double v : u.values()) s += std::pow(std::abs(v), p);
    return u.grid().spacing() * s;
}

}  // namespace detail

/// Charge residual Q = int (u^2 - m).
inline double charge_residual(const Field& u, const NuclearDensity& m)
{
    detail::require_same_grid(u, m.field, "u vs nuclear density");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * u[i] - m.field[i];
    return u.grid().spacing() * s;
}

/// phi solving -phi'' = 4 pi (u^2 - m - mean), zero mean.
inline PoissonSolution potential_of(const Field& u, const NuclearDensity& m, const PoissonSolver& poisson)
{
    detail::require_same_grid(u, m.field, "u vs nuclear density");
    Field source(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) source[i] = u[i] * u[i] - m.field[i];
    return poisson.solve(source);
}

inline PoissonSolution potential_of(const Field& u, const NuclearDensity& m)
{
    return potential_of(u, m, PoissonSolver(u.grid_ptr()));
}

inline EnergyTerms energy_terms(const Field& u, const NuclearDensity& m, const ModelParams& params)
{
    detail::require_same_grid(u, m.field, "u vs nuclear density");
    require_finite(u, "u");
    EnergyTerms t;
    t.kinetic = params.c_w * detail::kinetic_form(u);
    t.thomas_fermi = params.c_tf * detail::power_integral(u, 10.0 / 3.0);
    if (params.c_d != 0.0) t.dirac = params.c_d * detail::power_integral(u, 8.0 / 3.0);
    const Field phi = potential_of(u, m).phi;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += phi[i] * (u[i] * u[i] - m.field[i]);
    t.coulomb = 0.5 * u.grid().spacing() * s;
    return t;
}

/// Physical TFW(D) energy of the state u in the nuclear background m.
inline double energy(const Field& u, const NuclearDensity& m, const ModelParams& params)
{
    return energy_terms(u, m, params).total();
}

/// Augmented Lagrangian at a frozen potential phi:
///   C_W int u'^2 + C_TF int |u|^{10/3} - C_D int |u|^{8/3} + int (u^2 - m) phi
///   + mu Q + Q^2 / (2c),  Q = int (u^2 - m).
inline double augmented_lagrangian(const Field& u, const NuclearDensity& m, const Field& phi,
                                   const AlmState& alm, const ModelParams& params)
{
    detail::require_same_grid(u, m.field, "u vs nuclear density");
    detail::require_same_grid(u, phi, "u vs potential");
    if (!(alm.c > 0.0)) throw InvalidArgument("penalty parameter c must be positive");
    const double h = u.grid().spacing();
    double coul = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) coul += (u[i] * u[i] - m.field[i]) * phi[i];
    const double q = charge_residual(u, m);
    double value = params.c_w * detail::kinetic_form(u) + params.c_tf * detail::power_integral(u, 10.0 / 3.0);
    if (params.c_d != 0.0) value -= params.c_d * detail::power_integral(u, 8.0 / 3.0);
    return value + h * coul + alm.mu * q + q * q / (2.0 * alm.c);
}

/// Gradient of augmented_lagrangian with respect to u in the h-weighted inner
/// product, i.e. d/de L(u + e d) = <grad, d>_h exactly for the discrete L.
inline Field grad_augmented_lagrangian(const Field& u, const NuclearDensity& m, const Field& phi,
                                       const AlmState& alm, const ModelParams& params)
{
    detail::require_same_grid(u, m.field, "u vs nuclear density");
    detail::require_same_grid(u, phi, "u vs potential");
    if (!(alm.c > 0.0)) throw InvalidArgument("penalty parameter c must be positive");
    const double q = charge_residual(u, m);
    const double shift = alm.mu + q / alm.c;
    Field g = second_derivative(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]);
        double gi = -2.0 * params.c_w * g[i];
        gi += (10.0 / 3.0) * params.c_tf * std::pow(a, 4.0 / 3.0) * u[i];
        if (params.c_d != 0.0) gi -= (8.0 / 3.0) * params.c_d * std::pow(a, 2.0 / 3.0) * u[i];
        gi += 2.0 * (phi[i] + shift) * u[i];
        g[i] = gi;
    }
    return g;
}

/// Discrete Euler-Lagrange residual with the multiplier folded into phi:
///   -2 C_W u'' + (10/3) C_TF |u|^{4/3} u - (8/3) C_D |u|^{2/3} u + 2 (phi + mu) u.
inline Field euler_lagrange_residual(const Field& u, const Field& phi, double mu, const ModelParams& params)
{
    detail::require_same_grid(u, phi, "u vs potential");
    Field r = second_derivative(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]);
        double ri = -2.0 * params.c_w * r[i] + (10.0 / 3.0) * params.c_tf * std::pow(a, 4.0 / 3.0) * u[i];
        if (params.c_d != 0.0) ri -= (8.0 / 3.0) * params.c_d * std::pow(a, 2.0 / 3.0) * u[i];
        r[i] = ri + 2.0 * (phi[i] + mu) * u[i];
    }
    return r;
}

/// How the Coulomb term enters the objective minimized over u.
enum class CoulombCoupling {
    /// phi is held fixed; the term is linear, int (u^2 - m) phi.
    Frozen,
    /// phi = phi[u] is re-solved at every evaluation; the term is (1/2) int phi[u](u^2 - m).
    SelfConsistent,
};

/// Allocation-free evaluator of the augmented Lagrangian and its gradient on
/// raw sample arrays; used in the inner loops of the solver.
class AlmObjective {
public:
    AlmObjective(const NuclearDensity& m, const ModelParams& params, const PoissonSolver& poisson,
                 CoulombCoupling coupling)
        : m_(m.field.values()),
          params_(params),
          poisson_(poisson),
          coupling_(coupling),
          h_(m.grid().spacing()),
          source_(m.grid().size()),
          phi_(m.grid().size(), 0.0),
          scratch_(m.grid().size() - 1)
    {
    }

    void set_alm(double mu, double c) noexcept
    {
        mu_ = mu;
        c_ = c;
    }
    void set_frozen_potential(std::span<const double> phi) { phi_.assign(phi.begin(), phi.end()); }

    double h() const noexcept { return h_; }
    /// Potential used in the last evaluation.
    std::span<const double> potential() const noexcept { return phi_; }
    /// Charge residual of the last evaluation.
    double charge() const noexcept { return q_; }

    double operator()(std::span<const double> u, std::span<double> grad)
    {
        const std::size_t n = u.size();
        const double cw = params_.c_w, ctf = params_.c_tf, cd = params_.c_d;
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            source_[i] = u[i] * u[i] - m_[i];
            q += source_[i];
        }
        q *= h_;
        q_ = q;

        double coulomb_weight = 1.0;
        if (coupling_ == CoulombCoupling::SelfConsistent) {
            poisson_.solve_into(source_, phi_, scratch_);
            coulomb_weight = 0.5;
        }
        const double shift = mu_ + q / c_;
        const double inv_h2 = 1.0 / (h_ * h_);
        double kin = 0.0, tf = 0.0, dir = 0.0, coul = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ui = u[i];
            const double left = u[i == 0 ? n - 1 : i - 1];
            const double right = u[i + 1 == n ? 0 : i + 1];
            const double d = right - ui;
            kin += d * d;
            const double a = std::abs(ui);
            const double r3 = std::cbrt(a);
            const double a43 = a * r3;
            tf += ui * ui * a43;
            double gi = -2.0 * cw * (left - 2.0 * ui + right) * inv_h2 + (10.0 / 3.0) * ctf * a43 * ui;
            if (cd != 0.0) {
                const double a23 = r3 * r3;
                dir += ui * ui * a23;
                gi -= (8.0 / 3.0) * cd * a23 * ui;
            }
            coul += phi_[i] * source_[i];
            grad[i] = gi + 2.0 * (phi_[i] + shift) * ui;
        }
        return cw * kin / h_ + h_ * (ctf * tf - cd * dir + coulomb_weight * coul) + mu_ * q +
               q * q / (2.0 * c_);
    }

private:
    std::span<const double> m_;
    ModelParams params_;
    const PoissonSolver& poisson_;
    CoulombCoupling coupling_;
    double h_;
    double mu_ = 0.0;
    double c_ = 1.0;
    double q_ = 0.0;
    std::vector<double> source_;
    std::vector<double> phi_;
    std::vector<double> scratch_;
};

}  // namespace tfw
