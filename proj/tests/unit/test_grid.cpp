#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "tfw/grid.hpp"

using namespace tfw;

TEST(Grid, CoordinatesAndSpacing)
{
    const Grid1D g(5.0, 100);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.1);
    EXPECT_DOUBLE_EQ(g.length(), 10.0);
    EXPECT_DOUBLE_EQ(g.z(0), -5.0);
    EXPECT_NEAR(g.z(99), 4.9, 1e-14);
    EXPECT_EQ(g.wrap(-1), 99u);
    EXPECT_EQ(g.wrap(100), 0u);
    EXPECT_EQ(g.wrap(205), 5u);
}

TEST(Grid, RejectsBadShapes)
{
    EXPECT_THROW(Grid1D(0.0, 64), InvalidArgument);
    EXPECT_THROW(Grid1D(-1.0, 64), InvalidArgument);
    EXPECT_THROW(Grid1D(INFINITY, 64), InvalidArgument);
    EXPECT_THROW(Grid1D(1.0, 63), InvalidArgument);
    EXPECT_THROW(Grid1D(1.0, 6), InvalidArgument);
    EXPECT_NO_THROW(Grid1D(1.0, 8));
}

TEST(Grid, GaussianQuadrature)
{
    // The periodic trapezoid rule is spectrally accurate for a function that
    // is negligible at the ends of the box.
    const auto g = make_grid(8.0, 256);
    const Field f = Field::sample(g, [](double z) { return std::exp(-z * z); });
    EXPECT_NEAR(integrate(f), std::sqrt(std::numbers::pi), 1e-10);
}

TEST(Grid, SecondDerivativeIsSecondOrder)
{
    const double L = 1.0;
    const double k = 2.0 * std::numbers::pi / (2.0 * L);
    std::vector<double> errs;
    for (std::size_t n : {32u, 64u, 128u, 256u}) {
        const auto g = make_grid(L, n);
        const Field f = Field::sample(g, [&](double z) { return std::sin(3.0 * k * z); });
        const Field d2 = second_derivative(f);
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(d2[i] + 9.0 * k * k * f[i]));
        errs.push_back(e);
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i] / errs[i + 1]), 2.0, 0.1);
}

TEST(Grid, DifferencesOfPeriodicFieldsIntegrateToZero)
{
    const auto g = make_grid(3.0, 60);
    const Field f = Field::sample(g, [](double z) { return std::exp(std::cos(z * std::numbers::pi / 3.0)) + z; });
    EXPECT_NEAR(integrate(forward_difference(f)), 0.0, 1e-12);
    EXPECT_NEAR(integrate(second_derivative(f)), 0.0, 1e-9);
}

TEST(Grid, ForwardDifferenceQuadraticFormMatchesSecondDerivative)
{
    // h sum (D+ f)^2 = -<f, D2 f>_h by summation by parts.
    const auto g = make_grid(2.0, 40);
    const Field f = Field::sample(g, [](double z) { return std::sin(z) + 0.3 * std::cos(2.5 * z); });
    const Field d = forward_difference(f);
    EXPECT_NEAR(inner(d, d), -inner(f, second_derivative(f)), 1e-10);
}

TEST(Grid, FieldArithmeticChecksGrids)
{
    const auto a = make_grid(1.0, 16);
    const auto b = make_grid(2.0, 16);
    const auto a2 = make_grid(1.0, 16);
    Field x(a, 1.0), y(b, 2.0), z(a2, 3.0);
    EXPECT_THROW(x += y, InvalidArgument);
    EXPECT_NO_THROW(x += z);  // equal grids need not be the same object
    EXPECT_DOUBLE_EQ(x[3], 4.0);
    EXPECT_DOUBLE_EQ((2.0 * x - z).max_abs(), 5.0);
    EXPECT_DOUBLE_EQ(x.at(-1), x[15]);
}

TEST(Grid, RequireFiniteNamesTheIndex)
{
    const auto g = make_grid(1.0, 8);
    Field f(g, 0.0);
    f[5] = NAN;
    try {
        require_finite(f, "u");
        FAIL() << "expected an exception";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("index 5"), std::string::npos);
    }
}

TEST(Grid, MeanAndInner)
{
    const auto g = make_grid(1.0, 10);
    const Field f = Field::sample(g, [](double z) { return z; });
    EXPECT_NEAR(mean(f), -0.1, 1e-14);  // samples -1, -0.8, ..., 0.8
    EXPECT_NEAR(inner(Field(g, 2.0), Field(g, 3.0)), 12.0, 1e-13);
}
