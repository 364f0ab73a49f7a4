#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tfw/error.hpp"

namespace tfw {

/// Uniform periodic mesh on [-L, L). Sample i sits at z_i = -L + i*h with
/// h = 2L/N, and index N is identified with index 0.
class Grid1D {
public:
    Grid1D(double half_width, std::size_t num_points)
        : half_width_(half_width), num_points_(num_points)
    {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw InvalidArgument("grid half_width must be positive and finite, got " +
                                  std::to_string(half_width));
        if (num_points < 8 || num_points % 2 != 0)
            throw InvalidArgument("grid num_points must be even and >= 8, got " +
                                  std::to_string(num_points));
        spacing_ = 2.0 * half_width / static_cast<double>(num_points);
        coords_.resize(num_points);
        for (std::size_t i = 0; i < num_points; ++i)
            coords_[i] = -half_width + static_cast<double>(i) * spacing_;
    }

    double half_width() const noexcept { return half_width_; }
    double length() const noexcept { return 2.0 * half_width_; }
    std::size_t size() const noexcept { return num_points_; }
    double spacing() const noexcept { return spacing_; }
    std::span<const double> coordinates() const noexcept { return coords_; }
    double z(std::size_t i) const noexcept { return coords_[i]; }

    std::size_t wrap(std::ptrdiff_t i) const noexcept
    {
        const auto n = static_cast<std::ptrdiff_t>(num_points_);
        return static_cast<std::size_t>(((i % n) + n) % n);
    }

    friend bool operator==(const Grid1D& a, const Grid1D& b) noexcept
    {
        return a.num_points_ == b.num_points_ && a.half_width_ == b.half_width_;
    }

private:
    double half_width_;
    std::size_t num_points_;
    double spacing_;
    std::vector<double> coords_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

inline GridPtr make_grid(double half_width, std::size_t num_points)
{
    return std::make_shared<const Grid1D>(half_width, num_points);
}

/// Real samples on a shared grid.
class Field {
public:
    Field() = default;

    explicit Field(GridPtr grid, double value = 0.0)
        : grid_(std::move(grid)), values_(grid_->size(), value) {}

    Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values))
    {
        if (values_.size() != grid_->size())
            throw InvalidArgument("field has " + std::to_string(values_.size()) +
                                  " samples but grid has " + std::to_string(grid_->size()));
    }

    template <class F>
    static Field sample(GridPtr grid, F&& f)
    {
        Field out(grid);
        for (std::size_t i = 0; i < grid->size(); ++i) out.values_[i] = f(grid->z(i));
        return out;
    }

    const Grid1D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    /// Value at a periodic index.
    double at(std::ptrdiff_t i) const noexcept { return values_[grid_->wrap(i)]; }

    double max_abs() const noexcept
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    Field& operator+=(const Field& o)
    {
        check_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Field& operator-=(const Field& o)
    {
        check_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    Field& operator*=(double a) noexcept
    {
        for (double& v : values_) v *= a;
        return *this;
    }
    Field& operator+=(double a) noexcept
    {
        for (double& v : values_) v += a;
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }
    friend Field operator*(Field a, double s) { return a *= s; }
    friend Field operator-(Field a) { return a *= -1.0; }

    void check_same_grid(const Field& o) const
    {
        if (!same_grid(*this, o)) throw InvalidArgument("fields live on different grids");
    }

    friend bool same_grid(const Field& a, const Field& b) noexcept
    {
        if (!a.grid_ || !b.grid_) return false;
        return a.grid_ == b.grid_ || *a.grid_ == *b.grid_;
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Pointwise map of a field.
template <class F>
Field transform(const Field& f, F&& op)
{
    Field out = f;
    for (double& v : out.data()) v = op(v);
    return out;
}

/// Throws naming the first non-finite sample.
inline void require_finite(const Field& f, const char* what = "field")
{
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]))
            throw InvalidArgument(std::string(what) + " has non-finite sample at index " +
                                  std::to_string(i));
}

/// Periodic trapezoid rule, which on a periodic uniform grid is h * sum(f_i).
inline double integrate(const Field& f)
{
    require_finite(f);
    double s = 0.0;
    for (double v : f.values()) s += v;
    return f.grid().spacing() * s;
}

inline double mean(const Field& f) { return integrate(f) / f.grid().length(); }

/// h-weighted inner product <f, g>_h.
inline double inner(const Field& f, const Field& g)
{
    f.check_same_grid(g);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return f.grid().spacing() * s;
}

/// Compact second-order stencil (f_{i-1} - 2 f_i + f_{i+1}) / h^2 with wraparound.
inline Field second_derivative(const Field& f)
{
    require_finite(f);
    const std::size_t n = f.size();
    const double inv_h2 = 1.0 / (f.grid().spacing() * f.grid().spacing());
    Field out(f.grid_ptr());
    for (std::size_t i = 0; i < n; ++i) {
        const double left = f[i == 0 ? n - 1 : i - 1];
        const double right = f[i + 1 == n ? 0 : i + 1];
        out[i] = (left - 2.0 * f[i] + right) * inv_h2;
    }
    return out;
}

/// Forward difference (f_{i+1} - f_i) / h with wraparound. Its discrete
/// quadratic form h*sum((D+f)_i^2) has gradient -2 * second_derivative(f).
inline Field forward_difference(const Field& f)
{
    const std::size_t n = f.size();
    const double inv_h = 1.0 / f.grid().spacing();
    Field out(f.grid_ptr());
    for (std::size_t i = 0; i < n; ++i) out[i] = (f[i + 1 == n ? 0 : i + 1] - f[i]) * inv_h;
    return out;
}

}  // namespace tfw
