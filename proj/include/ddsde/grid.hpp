#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace ddsde {

/// A point of R^d for d <= 2. The second component is ignored (and kept at
/// zero) in one dimension.
using Point = std::array<double, 2>;

/// Tolerances shared by every density computation.
struct Tolerances {
    /// Allowed deviation of the mass of a probability density from 1.
    double mass = 1e-3;
    /// Allowed fraction of heat-kernel mass outside [-L/2, L/2]^d before a
    /// computation is refused with DomainTooSmall.
    double tail = 0.1;
};

/// Uniform periodic grid on [-L, L)^dim with points x_i = -L + i * dx.
/// Index 0 maps to -L (identified with +L), index n/2 to the origin.
class Grid {
public:
    Grid(int dim, double half_width, int points_per_axis);

    int dim() const noexcept { return dim_; }
    double half_width() const noexcept { return half_width_; }
    int points_per_axis() const noexcept { return n_; }
    double spacing() const noexcept { return spacing_; }
    /// Volume element dx^dim.
    double cell_volume() const noexcept { return dim_ == 1 ? spacing_ : spacing_ * spacing_; }
    std::size_t size() const noexcept;

    double coordinate(int index) const noexcept { return -half_width_ + index * spacing_; }
    /// Multi-index (axis0, axis1) of a flat row-major index.
    std::array<int, 2> unflatten(std::size_t flat) const noexcept;
    std::size_t flatten(int i0, int i1 = 0) const noexcept;
    Point point(std::size_t flat) const noexcept;
    /// Flat index of the point reflected through the origin.
    std::size_t mirror(std::size_t flat) const noexcept;
    /// Wrap an index onto [0, n).
    int wrap(int index) const noexcept { return ((index % n_) + n_) % n_; }
    /// Wrap a coordinate onto [-L, L).
    double wrap_coordinate(double x) const noexcept;

    bool operator==(const Grid& other) const noexcept;

private:
    int dim_;
    double half_width_;
    int n_;
    double spacing_;
};

Grid make_grid(int dim, double half_width, int points_per_axis);

/// Signed function sampled on a grid (fractional Laplacians, gradients,
/// test functions).
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    explicit GridFunction(const Grid& g) : grid(g), values(g.size(), 0.0) {}
    GridFunction(const Grid& g, std::vector<double> v);
};

/// Nonnegative density on a grid, units 1/length^dim.
class GridDensity {
public:
    /// Rejects negative or non-finite entries.
    GridDensity(const Grid& grid, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    GridFunction as_function() const { return GridFunction(grid_, values_); }

private:
    Grid grid_;
    std::vector<double> values_;
};

struct ClampResult {
    GridDensity density;
    /// Total mass (integral) of the negative part removed.
    double clamped_mass;
};

/// Zero out negative entries; optionally rescale so the mass of the input is
/// kept.
ClampResult clamp_nonnegative(GridFunction f, bool keep_mass = true);

double integrate(const Grid& grid, std::span<const double> values);
double mass(const GridDensity& f);

/// (dx^d sum |f-g|^p)^(1/p), or max |f-g| for p = infinity.
double lp_distance(const GridDensity& f, const GridDensity& g, double p);
double lp_distance(const GridFunction& f, const GridFunction& g, double p);
double lp_norm(const Grid& grid, std::span<const double> values, double p);

/// Probability mass of f outside the box [-a, a]^d.
double mass_outside(const GridDensity& f, double a);

/// Normalized discretized Gaussian N(center, sigma^2 I).
GridDensity gaussian_density(const Grid& grid, double sigma, Point center = {0.0, 0.0});
/// Constant 1/(2L)^d.
GridDensity uniform_density(const Grid& grid);

void write_csv(std::ostream& os, const GridDensity& f);
void write_csv(std::ostream& os, const GridFunction& f);
/// Header: dim (int64), L (float64), n (int64), little-endian; then values as
/// float64, row-major.
void write_binary(std::ostream& os, const GridDensity& f);
GridDensity read_binary(std::istream& is);

} // namespace ddsde
