#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "tfw/grid.hpp"

namespace tfw {

struct PoissonSolution {
    Field phi;
    /// Mean of the source removed to make the periodic problem solvable.
    double source_mean = 0.0;
};

/// Direct solver for -phi'' = 4 pi (rhs - mean(rhs)) on a periodic grid,
/// gauge-fixed to zero mean.
///
/// The periodic stencil matrix is singular (constants span its kernel), so we
/// pin phi_0 = 0, which turns rows 1..N-1 into an SPD tridiagonal system whose
/// Thomas factorization is computed once. Row 0 then holds automatically
/// because the shifted source sums to zero. The mean is removed at the end.
/// The solver is immutable after construction and safe to share across threads.
class PoissonSolver {
public:
    explicit PoissonSolver(GridPtr grid) : grid_(std::move(grid))
    {
        const std::size_t m = grid_->size() - 1;
        // Scaled system: tridiag(-1, 2, -1) x = h^2 * 4 pi * b.
        c_prime_.resize(m);
        inv_denom_.resize(m);
        double c_prev = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            inv_denom_[k] = 1.0 / (2.0 + c_prev);
            c_prime_[k] = -inv_denom_[k];
            c_prev = c_prime_[k];
        }
    }

    const GridPtr& grid_ptr() const noexcept { return grid_; }

    /// Writes phi for the source given as raw samples (size N). `scratch` must
    /// have N-1 entries; no allocation takes place.
    double solve_into(std::span<const double> rhs, std::span<double> phi, std::span<double> scratch) const
    {
        const std::size_t n = grid_->size();
        const std::size_t m = n - 1;
        const double h = grid_->spacing();
        double s = 0.0;
        for (double v : rhs) s += v;
        const double rhs_mean = s / static_cast<double>(n);
        const double scale = 4.0 * std::numbers::pi * h * h;

        // Forward sweep over unknowns x_k = phi_{k+1}.
        double d_prev = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double b = scale * (rhs[k + 1] - rhs_mean);
            const double d = (b + d_prev) * inv_denom_[k];
            scratch[k] = d;
            d_prev = d;
        }
        phi[0] = 0.0;
        phi[m] = scratch[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) phi[k + 1] = scratch[k] - c_prime_[k] * phi[k + 2];

        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) t += phi[i];
        const double phi_mean = t / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) phi[i] -= phi_mean;
        return rhs_mean;
    }

    PoissonSolution solve(const Field& rhs) const
    {
        require_finite(rhs, "poisson source");
        if (!(rhs.grid() == *grid_)) throw InvalidArgument("poisson source lives on a different grid");
        PoissonSolution out{Field(rhs.grid_ptr()), 0.0};
        std::vector<double> scratch(grid_->size() - 1);
        out.source_mean = solve_into(rhs.values(), out.phi.values(), scratch);
        return out;
    }

private:
    GridPtr grid_;
    std::vector<double> c_prime_;
    std::vector<double> inv_denom_;
};

/// One-shot periodic Poisson solve; see PoissonSolver.
inline PoissonSolution solve_periodic_poisson(const Field& rhs)
{
    return PoissonSolver(rhs.grid_ptr()).solve(rhs);
}

}  // namespace tfw
