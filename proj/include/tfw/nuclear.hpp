#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "tfw/grid.hpp"

namespace tfw {

/// Sampled nuclear charge density m(z).
///
/// Reference crystals carry defect_half_width = 0. Perturbations carry the
/// half-width of the slab outside of which every sample is exactly zero.
struct NuclearDensity {
    Field field;
    double defect_half_width = 0.0;
    double total_charge = 0.0;

    const Grid1D& grid() const { return field.grid(); }
    const GridPtr& grid_ptr() const { return field.grid_ptr(); }
};

namespace detail {

inline NuclearDensity finish(Field f, double half_width)
{
    require_finite(f, "nuclear density");
    const double q = integrate(f);
    return NuclearDensity{std::move(f), half_width, q};
}

inline void require_nonnegative(const Field& f, const char* what)
{
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < 0.0)
            throw InvalidArgument(std::string(what) + " is negative (" + std::to_string(f[i]) +
                                  ") at index " + std::to_string(i));
}

}  // namespace detail

/// Uniform background m = rho0.
inline NuclearDensity jellium(const GridPtr& grid, double rho0)
{
    if (!(rho0 > 0.0)) throw InvalidArgument("jellium density must be positive");
    return detail::finish(Field(grid, rho0), 0.0);
}

/// Flat bump of the given height on [center - width/2, center + width/2].
///
/// Samples strictly inside take the full height; a sample lying on an edge
/// (to within 1e-9 h) takes half of it, so the bump integrates to
/// height*width exactly whenever both edges fall on grid points. The height
/// may be negative: this constructs a perturbation, and non-negativity is
/// enforced when it is superposed on a reference.
inline NuclearDensity uniform_bump(const GridPtr& grid, double center, double width, double height)
{
    if (!(width > 0.0)) throw InvalidArgument("bump width must be positive");
    const double lo = center - 0.5 * width;
    const double hi = center + 0.5 * width;
    const double L = grid->half_width();
    if (lo < -L || hi >= L)
        throw InvalidArgument("bump [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] extends past the domain [-L, L)");
    const double tol = 1e-9 * grid->spacing();
    Field f(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double z = grid->z(i);
        if (z > lo + tol && z < hi - tol)
            f[i] = height;
        else if (std::abs(z - lo) <= tol || std::abs(z - hi) <= tol)
            f[i] = 0.5 * height;
    }
    return detail::finish(std::move(f), std::abs(center) + 0.5 * width);
}

/// Periodic array of Gaussian teeth (2 pi sigma^2)^(-1/2) exp(-((z - k p)/sigma)^2).
inline NuclearDensity gaussian_comb(const GridPtr& grid, double sigma, double period)
{
    if (!(sigma > 0.0) || !(period > 0.0))
        throw InvalidArgument("comb sigma and period must be positive");
    if (!(sigma < 0.25 * period))
        throw InvalidArgument("comb sigma must be below period/4");
    const double L = grid->half_width();
    const double ratio = grid->length() / period;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw InvalidArgument("domain length is not an integer multiple of the comb period");

    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
    const auto kmax = static_cast<long>(std::floor((L + 6.0 * sigma) / period));
    Field f(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double z = grid->z(i);
        double s = 0.0;
        for (long k = -kmax; k <= kmax; ++k) {
            const double t = (z - static_cast<double>(k) * period) / sigma;
            s += std::exp(-t * t);
        }
        f[i] = norm * s;
    }
    detail::require_nonnegative(f, "comb density");
    return detail::finish(std::move(f), 0.0);
}

/// Localized perturbation M (2 pi sigma^2)^(-1/2) exp(-z^2/sigma^2) centred at z = 0.
/// Samples below 1e-14 of the peak are set to zero so the support is explicit.
inline NuclearDensity gaussian_perturbation(const GridPtr& grid, double amplitude, double sigma)
{
    if (!(amplitude > 0.0)) throw InvalidArgument("gaussian perturbation amplitude must be positive");
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian perturbation sigma must be positive");
    const double L = grid->half_width();
    if (std::exp(-(L * L) / (sigma * sigma)) >= 1e-14)
        throw InvalidArgument("gaussian perturbation tail is not negligible at the domain boundary");

    const double peak = amplitude / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
    Field f(grid);
    double support = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double z = grid->z(i);
        const double v = peak * std::exp(-(z * z) / (sigma * sigma));
        if (v > 1e-14 * peak) {
            f[i] = v;
            support = std::max(support, std::abs(z));
        }
    }
    return detail::finish(std::move(f), support);
}

/// m2 = m1 + nu; rejects any negative sample of the sum.
inline NuclearDensity superpose(const NuclearDensity& m1, const NuclearDensity& nu)
{
    if (!same_grid(m1.field, nu.field)) throw InvalidArgument("superpose: densities live on different grids");
    Field sum = m1.field + nu.field;
    detail::require_nonnegative(sum, "superposed density");
    const double q = integrate(sum);
    return NuclearDensity{std::move(sum), nu.defect_half_width, q};
}

/// Reads a two-column (z, m) text file sampled on exactly this grid. Blank
/// lines and lines starting with '#' are skipped.
inline NuclearDensity load_density(const GridPtr& grid, const std::string& path,
                                   double defect_half_width = 0.0)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open density file '" + path + "'");
    std::vector<double> zs, ms;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        double z = 0.0, m = 0.0;
        if (!(ss >> z >> m))
            throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected two numbers");
        zs.push_back(z);
        ms.push_back(m);
    }
    if (zs.size() != grid->size())
        throw InvalidArgument("density file '" + path + "' has " + std::to_string(zs.size()) +
                              " rows, grid has " + std::to_string(grid->size()));
    const double h = grid->spacing();
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (std::abs(zs[i] - grid->z(i)) > 1e-6 * h)
            throw InvalidArgument("density file '" + path + "' row " + std::to_string(i) +
                                  " has z = " + std::to_string(zs[i]) + ", grid expects " +
                                  std::to_string(grid->z(i)));
    Field f(grid, std::move(ms));
    return detail::finish(std::move(f), defect_half_width);
}

}  // namespace tfw
