#include "ddsde/grid.hpp"

#include "ddsde/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ddsde {

Grid::Grid(int dim, double half_width, int points_per_axis)
    : dim_(dim), half_width_(half_width), n_(points_per_axis),
      spacing_(2.0 * half_width / points_per_axis) {
    require(dim == 1 || dim == 2, ErrorCode::InvalidArgument, "grid dim must be 1 or 2");
    require(half_width > 0.0 && std::isfinite(half_width), ErrorCode::InvalidArgument,
            "grid half width must be positive");
    require(points_per_axis % 2 == 0, ErrorCode::OddGridSize,
            "points per axis must be even, got " + std::to_string(points_per_axis));
    require(points_per_axis >= 16, ErrorCode::InvalidArgument, "points per axis must be >= 16");
}

std::size_t Grid::size() const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    return dim_ == 1 ? n : n * n;
}

std::array<int, 2> Grid::unflatten(std::size_t flat) const noexcept {
    if (dim_ == 1) return {static_cast<int>(flat), 0};
    return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
}

std::size_t Grid::flatten(int i0, int i1) const noexcept {
    if (dim_ == 1) return static_cast<std::size_t>(i0);
    return static_cast<std::size_t>(i0) * n_ + static_cast<std::size_t>(i1);
}

Point Grid::point(std::size_t flat) const noexcept {
    const auto idx = unflatten(flat);
    return {coordinate(idx[0]), dim_ == 2 ? coordinate(idx[1]) : 0.0};
}

std::size_t Grid::mirror(std::size_t flat) const noexcept {
    const auto idx = unflatten(flat);
    return flatten(wrap(n_ - idx[0]), dim_ == 2 ? wrap(n_ - idx[1]) : 0);
}

double Grid::wrap_coordinate(double x) const noexcept {
    const double period = 2.0 * half_width_;
    double y = std::fmod(x + half_width_, period);
    if (y < 0.0) y += period;
    if (y >= period) y -= period;
    return y - half_width_;
}

bool Grid::operator==(const Grid& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_ && half_width_ == other.half_width_;
}

Grid make_grid(int dim, double half_width, int points_per_axis) {
    return Grid(dim, half_width, points_per_axis);
}

GridFunction::GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), ErrorCode::InvalidArgument,
            "grid function size does not match grid");
}

GridDensity::GridDensity(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    require(values_.size() == grid_.size(), ErrorCode::InvalidArgument,
            "density size does not match grid");
    for (double v : values_) {
        require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidArgument,
                "density values must be finite and nonnegative");
    }
}

ClampResult clamp_nonnegative(GridFunction f, bool keep_mass) {
    const double before = integrate(f.grid, f.values);
    double negative = 0.0;
    for (double& v : f.values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite density value");
        if (v < 0.0) {
            negative -= v;
            v = 0.0;
        }
    }
    negative *= f.grid.cell_volume();
    if (keep_mass && negative > 0.0) {
        const double after = integrate(f.grid, f.values);
        if (after > 0.0) {
            const double scale = before / after;
            for (double& v : f.values) v *= scale;
        }
    }
    return {GridDensity(f.grid, std::move(f.values)), negative};
}

double integrate(const Grid& grid, std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * grid.cell_volume();
}

double mass(const GridDensity& f) { return integrate(f.grid(), f.values()); }

double lp_norm(const Grid& grid, std::span<const double> values, double p) {
    require(p >= 1.0, ErrorCode::InvalidArgument, "lp norm needs p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double sum = 0.0;
    if (p == 1.0) {
        for (double v : values) sum += std::abs(v);
        return sum * grid.cell_volume();
    }
    for (double v : values) sum += std::pow(std::abs(v), p);
    return std::pow(sum * grid.cell_volume(), 1.0 / p);
}

namespace {

double lp_distance_impl(const Grid& ga, std::span<const double> a, const Grid& gb,
                        std::span<const double> b, double p) {
    require(ga == gb, ErrorCode::GridMismatch, "lp_distance needs identical grids");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return lp_norm(ga, diff, p);
}

} // namespace

double lp_distance(const GridDensity& f, const GridDensity& g, double p) {
    return lp_distance_impl(f.grid(), f.values(), g.grid(), g.values(), p);
}

double lp_distance(const GridFunction& f, const GridFunction& g, double p) {
    return lp_distance_impl(f.grid, f.values, g.grid, g.values, p);
}

double mass_outside(const GridDensity& f, double a) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Point x = g.point(i);
        bool outside = std::abs(x[0]) > a;
        if (g.dim() == 2) outside = outside || std::abs(x[1]) > a;
        if (outside) sum += f[i];
    }
    return sum * g.cell_volume();
}

GridDensity gaussian_density(const Grid& grid, double sigma, Point center) {
    require(sigma > 0.0, ErrorCode::InvalidArgument, "gaussian width must be positive");
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Point x = grid.point(i);
        double r2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            // Nearest periodic image of the center.
            const double dx = grid.wrap_coordinate(x[a] - center[a]);
            r2 += dx * dx;
        }
        values[i] = std::exp(-0.5 * r2 / (sigma * sigma));
    }
    const double total = integrate(grid, values);
    for (double& v : values) v /= total;
    return GridDensity(grid, std::move(values));
}

GridDensity uniform_density(const Grid& grid) {
    const double side = 2.0 * grid.half_width();
    const double value = grid.dim() == 1 ? 1.0 / side : 1.0 / (side * side);
    return GridDensity(grid, std::vector<double>(grid.size(), value));
}

namespace {

void write_csv_values(std::ostream& os, const Grid& g, std::span<const double> values) {
    os.precision(17);
    os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Point x = g.point(i);
        os << x[0] << ',';
        if (g.dim() == 2) os << x[1] << ',';
        os << values[i] << '\n';
    }
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char bytes[8];
    is.read(reinterpret_cast<char*>(bytes), 8);
    require(static_cast<bool>(is), ErrorCode::IoError, "truncated binary density");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

} // namespace

void write_csv(std::ostream& os, const GridDensity& f) { write_csv_values(os, f.grid(), f.values()); }

void write_csv(std::ostream& os, const GridFunction& f) { write_csv_values(os, f.grid, f.values); }

void write_binary(std::ostream& os, const GridDensity& f) {
    const Grid& g = f.grid();
    put_u64(os, static_cast<std::uint64_t>(g.dim()));
    put_u64(os, std::bit_cast<std::uint64_t>(g.half_width()));
    put_u64(os, static_cast<std::uint64_t>(g.points_per_axis()));
    for (double v : f.values()) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

GridDensity read_binary(std::istream& is) {
    const auto dim = static_cast<int>(get_u64(is));
    const double half_width = std::bit_cast<double>(get_u64(is));
    const auto n = static_cast<int>(get_u64(is));
    Grid grid(dim, half_width, n);
    std::vector<double> values(grid.size());
    for (double& v : values) v = std::bit_cast<double>(get_u64(is));
    return GridDensity(grid, std::move(values));
}

} // namespace ddsde
