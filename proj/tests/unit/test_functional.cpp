#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tfw/functional.hpp"

using namespace tfw;

namespace {

constexpr double kPi = std::numbers::pi;

Field smooth_positive(const GridPtr& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> a(-0.2, 0.2), ph(0.0, 2.0 * kPi);
    const double a1 = a(rng), a2 = a(rng), p1 = ph(rng), p2 = ph(rng);
    const double k = kPi / g->half_width();
    return Field::sample(g, [&](double z) { return 1.0 + a1 * std::cos(k * z + p1) + a2 * std::cos(3.0 * k * z + p2); });
}

Field noise(const GridPtr& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(g);
    for (std::size_t i = 0; i < g->size(); ++i) f[i] = d(rng);
    return f;
}

}  // namespace

TEST(Model, PresetsAndValidation)
{
    EXPECT_NEAR(kDiracCoefficient, 0.7385587663820224, 1e-15);
    EXPECT_EQ(ModelParams::tfw().c_d, 0.0);
    EXPECT_EQ(ModelParams::tfwd().c_d, kDiracCoefficient);
    EXPECT_THROW((ModelParams{0.0, 3.2, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((ModelParams{1.0, -1.0, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((ModelParams{1.0, 3.2, -0.1}.validate()), InvalidArgument);
    EXPECT_THROW((AlmState{0.0, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((AlmState{0.0, 1.0, 1.0}.validate()), InvalidArgument);
}

TEST(Energy, UniformJellium)
{
    for (double rho : {1.0, 8.0}) {
        const auto g = make_grid(3.0, 96);
        const NuclearDensity m = jellium(g, rho);
        const EnergyTerms t = energy_terms(Field(g, std::sqrt(rho)), m, ModelParams::tfw());
        EXPECT_NEAR(t.kinetic, 0.0, 1e-14);
        EXPECT_NEAR(t.coulomb, 0.0, 1e-12);
        EXPECT_NEAR(t.total(), 3.2 * std::pow(rho, 5.0 / 3.0) * 6.0, 1e-10 * t.total());
    }
}

TEST(Energy, TermByTermAgainstClosedForms)
{
    // u = a + b cos(kz) and m = u^2 - eps cos(kz), so u^2 - m = eps cos(kz).
    const double L = 2.0, a = 1.3, b = 0.4, eps = 0.25;
    const std::size_t n = 200;
    const auto g = make_grid(L, n);
    const double h = g->spacing();
    const double k = 3.0 * kPi / L;
    const Field u = Field::sample(g, [&](double z) { return a + b * std::cos(k * z); });
    Field mf = Field::sample(g, [&](double z) {
        const double uz = a + b * std::cos(k * z);
        return uz * uz - eps * std::cos(k * z);
    });
    const NuclearDensity m{mf, 0.0, integrate(mf)};
    const ModelParams p{1.5, 3.2, 0.6};
    const EnergyTerms t = energy_terms(u, m, p);

    // h sum (D+ u)^2 = (b^2 / h) N (1 - cos kh).
    EXPECT_NEAR(t.kinetic, p.c_w * b * b / h * static_cast<double>(n) * (1.0 - std::cos(k * h)), 1e-11);
    // phi = 4 pi eps cos(kz) / lambda with lambda = (2 - 2 cos kh) / h^2, and h sum cos^2 = L.
    const double lambda = (2.0 - 2.0 * std::cos(k * h)) / (h * h);
    EXPECT_NEAR(t.coulomb, 0.5 * 4.0 * kPi * eps * eps / lambda * L, 1e-11);
    long double tf = 0.0L, dir = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        tf += std::pow(static_cast<long double>(u[i]), 10.0L / 3.0L);
        dir += std::pow(static_cast<long double>(u[i]), 8.0L / 3.0L);
    }
    EXPECT_NEAR(t.thomas_fermi, p.c_tf * h * static_cast<double>(tf), 1e-11);
    EXPECT_NEAR(t.dirac, p.c_d * h * static_cast<double>(dir), 1e-11);
    EXPECT_NEAR(energy(u, m, p), t.kinetic + t.thomas_fermi - t.dirac + t.coulomb, 1e-12);
}

TEST(Energy, IsEvenInU)
{
    std::mt19937_64 rng(11);
    const auto g = make_grid(2.0, 64);
    const Field u = smooth_positive(g, rng);
    const NuclearDensity m = jellium(g, 1.0);
    for (const ModelParams& p : {ModelParams::tfw(), ModelParams::tfwd()})
        EXPECT_DOUBLE_EQ(energy(u, m, p), energy(-u, m, p));
}

TEST(Energy, CoulombTermIsNonNegative)
{
    std::mt19937_64 rng(5);
    const auto g = make_grid(2.0, 64);
    const NuclearDensity m = gaussian_comb(g, 0.1, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Field u = noise(g, rng);
        EXPECT_GE(energy_terms(u, m, ModelParams::tfw()).coulomb, 0.0);
    }
}

namespace {

struct FdCheck {
    double analytic;
    double err_coarse;  // eps = 1e-3
    double err_fine;    // eps = 1e-4
};

template <class F>
FdCheck directional(F&& f, const Field& u, const Field& d, double analytic)
{
    auto fd = [&](double e) { return (f(u + e * d) - f(u - e * d)) / (2.0 * e); };
    return {analytic, std::abs(fd(1e-3) - analytic), std::abs(fd(1e-4) - analytic)};
}

void expect_fd_agreement(const FdCheck& c)
{
    const double scale = std::max(1.0, std::abs(c.analytic));
    EXPECT_LE(c.err_fine / scale, 1e-6);
    // Central differences are O(eps^2): a tenfold smaller step should cut the
    // error about a hundredfold until rounding takes over.
    if (c.err_fine > 1e-11 * scale) {
        EXPECT_GT(c.err_coarse / c.err_fine, 30.0);
    }
}

}  // namespace

TEST(Gradient, AugmentedLagrangianMatchesCentralDifferences)
{
    std::mt19937_64 rng(2024);
    const auto g = make_grid(2.0, 80);
    const NuclearDensity m = gaussian_comb(g, 0.1, 1.0);
    for (const ModelParams& p : {ModelParams::tfw(), ModelParams::tfwd()}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Field u = smooth_positive(g, rng);
            const Field d = noise(g, rng);
            const Field phi = solve_periodic_poisson(noise(g, rng)).phi;
            const AlmState alm{-1.3, 0.7};
            auto L = [&](const Field& x) { return augmented_lagrangian(x, m, phi, alm, p); };
            const double analytic = inner(grad_augmented_lagrangian(u, m, phi, alm, p), d);
            expect_fd_agreement(directional(L, u, d, analytic));
        }
    }
}

TEST(Gradient, SelfConsistentObjectiveMatchesCentralDifferences)
{
    std::mt19937_64 rng(77);
    const auto g = make_grid(2.0, 80);
    const NuclearDensity m = jellium(g, 1.0);
    const PoissonSolver poisson(g);
    for (const ModelParams& p : {ModelParams::tfw(), ModelParams::tfwd()}) {
        AlmObjective obj(m, p, poisson, CoulombCoupling::SelfConsistent);
        obj.set_alm(0.4, 2.0);
        std::vector<double> scratch(g->size());
        auto f = [&](const Field& x) { return obj(x.values(), scratch); };
        for (int trial = 0; trial < 5; ++trial) {
            const Field u = smooth_positive(g, rng);
            const Field d = noise(g, rng);
            Field grad(g);
            obj(u.values(), grad.values());
            expect_fd_agreement(directional(f, u, d, inner(grad, d)));
        }
    }
}

TEST(AlmObjective, FrozenModeReproducesTheReferenceFormulas)
{
    std::mt19937_64 rng(9);
    const auto g = make_grid(2.0, 64);
    const NuclearDensity m = gaussian_comb(g, 0.1, 1.0);
    const PoissonSolver poisson(g);
    const ModelParams p = ModelParams::tfwd();
    const Field u = smooth_positive(g, rng);
    const Field phi = solve_periodic_poisson(noise(g, rng)).phi;
    AlmObjective obj(m, p, poisson, CoulombCoupling::Frozen);
    obj.set_alm(0.3, 0.5);
    obj.set_frozen_potential(phi.values());
    Field grad(g);
    const double value = obj(u.values(), grad.values());
    const AlmState alm{0.3, 0.5};
    EXPECT_NEAR(value, augmented_lagrangian(u, m, phi, alm, p), 1e-12 * std::abs(value));
    EXPECT_LE((grad - grad_augmented_lagrangian(u, m, phi, alm, p)).max_abs(), 1e-10);
    EXPECT_NEAR(obj.charge(), charge_residual(u, m), 1e-13);
}

TEST(AlmObjective, SelfConsistentValueIsEnergyPlusConstraintTerms)
{
    std::mt19937_64 rng(10);
    const auto g = make_grid(2.0, 64);
    const NuclearDensity m = gaussian_comb(g, 0.1, 1.0);
    const PoissonSolver poisson(g);
    const ModelParams p = ModelParams::tfw();
    const Field u = smooth_positive(g, rng);
    AlmObjective obj(m, p, poisson, CoulombCoupling::SelfConsistent);
    obj.set_alm(-2.0, 0.25);
    Field grad(g);
    const double value = obj(u.values(), grad.values());
    const double q = charge_residual(u, m);
    EXPECT_NEAR(value, energy(u, m, p) - 2.0 * q + q * q / 0.5, 1e-11 * std::abs(value));
}

TEST(EulerLagrange, VanishesForUniformJellium)
{
    for (double rho : {1.0, 8.0}) {
        const auto g = make_grid(2.0, 64);
        const double mu = -(5.0 / 3.0) * 3.2 * std::pow(rho, 2.0 / 3.0);
        const Field r = euler_lagrange_residual(Field(g, std::sqrt(rho)), Field(g, 0.0), mu, ModelParams::tfw());
        EXPECT_LE(r.max_abs(), 1e-12);
    }
}

TEST(EulerLagrange, IsTheAugmentedGradientWithTheUpdatedMultiplier)
{
    std::mt19937_64 rng(12);
    const auto g = make_grid(2.0, 64);
    const NuclearDensity m = jellium(g, 1.0);
    const Field u = smooth_positive(g, rng);
    const Field phi = solve_periodic_poisson(noise(g, rng)).phi;
    const AlmState alm{0.5, 0.2};
    const double mu_next = alm.mu + charge_residual(u, m) / alm.c;
    const Field a = grad_augmented_lagrangian(u, m, phi, alm, ModelParams::tfwd());
    const Field b = euler_lagrange_residual(u, phi, mu_next, ModelParams::tfwd());
    EXPECT_LE((a - b).max_abs(), 1e-10);
}

TEST(Functional, RejectsMismatchedGrids)
{
    const auto g = make_grid(1.0, 32);
    const auto other = make_grid(1.0, 64);
    const NuclearDensity m = jellium(g, 1.0);
    EXPECT_THROW(energy(Field(other, 1.0), m, ModelParams::tfw()), InvalidArgument);
    EXPECT_THROW(augmented_lagrangian(Field(g, 1.0), m, Field(other, 0.0), AlmState{}, ModelParams::tfw()),
                 InvalidArgument);
    EXPECT_THROW(euler_lagrange_residual(Field(g, 1.0), Field(other, 0.0), 0.0, ModelParams::tfw()),
                 InvalidArgument);
}

TEST(ClosedForms, ConstantStatesOnALengthTenBox)
{
    const auto g = make_grid(5.0, 200);
    const ModelParams p = ModelParams::tfw();
    EXPECT_NEAR(energy(Field(g, 1.0), jellium(g, 1.0), p), 32.0, 1e-11);
    EXPECT_NEAR(energy(Field(g, 2.0 * std::sqrt(2.0)), jellium(g, 8.0), p), 1024.0, 1e-9);
    // Q = -10 gives mu Q + Q^2 / (2c) = -10 + 50 with mu = c = 1.
    EXPECT_NEAR(augmented_lagrangian(Field(g, 0.0), jellium(g, 1.0), Field(g, 0.0), AlmState{1.0, 1.0}, p), 40.0,
                1e-11);
    EXPECT_NEAR(augmented_lagrangian(Field(g, 1.0), jellium(g, 1.0), Field(g, 0.0), AlmState{7.0, 0.3}, p), 32.0,
                1e-11);
    // (10/3) C_TF + 2 mu = 0 at u = 1.
    EXPECT_LE(grad_augmented_lagrangian(Field(g, 1.0), jellium(g, 1.0), Field(g, 0.0), AlmState{-16.0 / 3.0, 1.0}, p)
                  .max_abs(),
              1e-12);
}
