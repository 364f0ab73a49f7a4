#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "tfw/nuclear.hpp"

using namespace tfw;

TEST(Jellium, UniformCharge)
{
    const auto g = make_grid(5.0, 100);
    const NuclearDensity m = jellium(g, 2.5);
    EXPECT_NEAR(m.total_charge, 25.0, 1e-12);
    EXPECT_EQ(m.defect_half_width, 0.0);
    EXPECT_THROW(jellium(g, 0.0), InvalidArgument);
    EXPECT_THROW(jellium(g, -1.0), InvalidArgument);
}

TEST(Bump, ChargeIsHeightTimesWidthWhenEdgesAreOnTheGrid)
{
    const auto g = make_grid(10.0, 1600);  // h = 0.0125, edges at +-0.025
    const NuclearDensity nu = uniform_bump(g, 0.0, 0.05, 11.0);
    EXPECT_NEAR(nu.total_charge, 0.55, 1e-13);
    EXPECT_DOUBLE_EQ(nu.defect_half_width, 0.025);
    EXPECT_DOUBLE_EQ(nu.field[800], 11.0);     // z = 0
    EXPECT_DOUBLE_EQ(nu.field[798], 5.5);      // z = -0.025, on the edge
    EXPECT_DOUBLE_EQ(nu.field[802], 5.5);      // z = +0.025
    EXPECT_DOUBLE_EQ(nu.field[797], 0.0);
}

TEST(Bump, IsSymmetricAboutItsCentre)
{
    const auto g = make_grid(4.0, 320);
    const NuclearDensity nu = uniform_bump(g, 0.0, 0.3, 2.0);
    for (std::size_t i = 1; i < g->size(); ++i) EXPECT_EQ(nu.field[i], nu.field[g->size() - i]);
}

TEST(Bump, RejectsBumpsOutsideTheBox)
{
    const auto g = make_grid(1.0, 80);
    EXPECT_THROW(uniform_bump(g, 0.95, 0.2, 1.0), InvalidArgument);
    EXPECT_THROW(uniform_bump(g, -0.95, 0.2, 1.0), InvalidArgument);
    EXPECT_THROW(uniform_bump(g, 0.0, 0.0, 1.0), InvalidArgument);
    EXPECT_DOUBLE_EQ(uniform_bump(g, 0.5, 0.2, 1.0).defect_half_width, 0.6);
}

TEST(Comb, ToothChargeMatchesGaussianIntegral)
{
    // Each tooth integrates to sqrt(pi) sigma (2 pi sigma^2)^(-1/2) = 1/sqrt(2).
    const auto g = make_grid(5.0, 2000);
    const NuclearDensity m = gaussian_comb(g, 0.1, 1.0);
    EXPECT_NEAR(m.total_charge, 10.0 / std::sqrt(2.0), 1e-10);
    EXPECT_EQ(m.defect_half_width, 0.0);
}

TEST(Comb, IsPeriodicAndEven)
{
    const auto g = make_grid(3.0, 600);  // 100 samples per period
    const NuclearDensity m = gaussian_comb(g, 0.12, 1.0);
    for (std::size_t i = 0; i < g->size(); ++i) {
        EXPECT_NEAR(m.field[i], m.field[(i + 100) % 600], 1e-12);
        EXPECT_NEAR(m.field[i], m.field[(600 - i) % 600], 1e-12);
    }
}

TEST(Comb, RejectsBadParameters)
{
    const auto g = make_grid(5.0, 1000);
    EXPECT_THROW(gaussian_comb(g, 0.3, 1.0), InvalidArgument);   // sigma >= period/4
    EXPECT_THROW(gaussian_comb(g, 0.1, 3.0), InvalidArgument);   // 10 / 3 periods
    EXPECT_THROW(gaussian_comb(g, -0.1, 1.0), InvalidArgument);
}

TEST(GaussianPerturbation, ChargeAndSupport)
{
    const auto g = make_grid(5.0, 1000);
    const NuclearDensity nu = gaussian_perturbation(g, 0.5, 0.1);
    EXPECT_NEAR(nu.total_charge, 0.5 / std::sqrt(2.0), 1e-12);
    // exp(-(z/sigma)^2) < 1e-14 beyond |z| = sigma sqrt(14 ln 10)
    EXPECT_NEAR(nu.defect_half_width, 0.1 * std::sqrt(14.0 * std::log(10.0)), 2 * g->spacing());
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (std::abs(g->z(i)) > nu.defect_half_width) {
            EXPECT_EQ(nu.field[i], 0.0);
        }
    }
}

TEST(GaussianPerturbation, RejectsWideOrEmptyPerturbations)
{
    const auto g = make_grid(1.0, 200);
    EXPECT_THROW(gaussian_perturbation(g, 0.0, 0.1), InvalidArgument);
    EXPECT_THROW(gaussian_perturbation(g, 1.0, 0.5), InvalidArgument);  // tail not negligible at L
}

TEST(Superpose, ChargesAddAndNegativeSumsAreRejected)
{
    const auto g = make_grid(2.0, 160);
    const NuclearDensity m1 = jellium(g, 1.0);
    const NuclearDensity nu = uniform_bump(g, 0.0, 0.5, 3.0);
    const NuclearDensity m2 = superpose(m1, nu);
    EXPECT_NEAR(m2.total_charge, m1.total_charge + nu.total_charge, 1e-12);
    EXPECT_DOUBLE_EQ(m2.defect_half_width, nu.defect_half_width);

    // A hole that exactly empties the background is allowed, a deeper one is not.
    EXPECT_NO_THROW(superpose(m1, uniform_bump(g, 0.0, 0.5, -1.0)));
    EXPECT_THROW(superpose(m1, uniform_bump(g, 0.0, 0.5, -2.0)), InvalidArgument);
    EXPECT_THROW(superpose(m1, jellium(make_grid(1.0, 160), 1.0)), InvalidArgument);
}

class DensityFile : public ::testing::Test {
protected:
    std::filesystem::path path = std::filesystem::temp_directory_path() / "tfw_density_test.txt";
    void TearDown() override { std::filesystem::remove(path); }
};

TEST_F(DensityFile, RoundTrip)
{
    const auto g = make_grid(1.0, 16);
    {
        std::ofstream out(path);
        out << "# z m\n\n";
        for (std::size_t i = 0; i < g->size(); ++i) out << g->z(i) << ", " << 1.0 + 0.1 * static_cast<double>(i) << "\n";
    }
    const NuclearDensity m = load_density(g, path.string(), 0.25);
    EXPECT_DOUBLE_EQ(m.field[3], 1.3);
    EXPECT_DOUBLE_EQ(m.defect_half_width, 0.25);
    EXPECT_NEAR(m.total_charge, g->spacing() * (16.0 + 0.1 * 120.0), 1e-12);
}

TEST_F(DensityFile, RejectsMismatchedGrids)
{
    const auto g = make_grid(1.0, 16);
    {
        std::ofstream out(path);
        for (std::size_t i = 0; i < 8; ++i) out << g->z(i) << " 1\n";
    }
    EXPECT_THROW(load_density(g, path.string()), InvalidArgument);
    {
        std::ofstream out(path);
        for (std::size_t i = 0; i < 16; ++i) out << g->z(i) + 0.01 << " 1\n";
    }
    EXPECT_THROW(load_density(g, path.string()), InvalidArgument);
    EXPECT_THROW(load_density(g, "/nonexistent/density.txt"), InvalidArgument);
}
