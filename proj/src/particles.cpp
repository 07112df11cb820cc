#include "ddsde/particles.hpp"

#include "ddsde/error.hpp"
#include "ddsde/parallel.hpp"
#include "ddsde/spectral.hpp"
#include "ddsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddsde {

namespace {

Point wrapped(const Grid& grid, const Point& x) {
    return {grid.wrap_coordinate(x[0]), grid.dim() == 2 ? grid.wrap_coordinate(x[1]) : 0.0};
}

bool inside(const Grid& grid, const Point& x) {
    const double L = grid.half_width();
    for (int a = 0; a < grid.dim(); ++a) {
        if (x[a] < -L || x[a] >= L) return false;
    }
    return true;
}

double interpolate(const Grid& grid, std::span<const double> values, const Point& x) {
    const double L = grid.half_width();
    const double dx = grid.spacing();
    const double p0 = (x[0] + L) / dx;
    const int i0 = static_cast<int>(std::floor(p0));
    const double f0 = p0 - i0;
    if (grid.dim() == 1) {
        return (1.0 - f0) * values[grid.wrap(i0)] + f0 * values[grid.wrap(i0 + 1)];
    }
    const double p1 = (x[1] + L) / dx;
    const int i1 = static_cast<int>(std::floor(p1));
    const double f1 = p1 - i1;
    auto at = [&](int a, int b) { return values[grid.flatten(grid.wrap(a), grid.wrap(b))]; };
    return (1.0 - f0) * ((1.0 - f1) * at(i0, i1) + f1 * at(i0, i1 + 1)) +
           f0 * ((1.0 - f1) * at(i0 + 1, i1) + f1 * at(i0 + 1, i1 + 1));
}

std::vector<double> nearest_histogram(const ParticleCloud& cloud, const Grid& grid) {
    std::vector<double> hist(grid.size(), 0.0);
    const double L = grid.half_width();
    const double dx = grid.spacing();
    for (const auto& p : cloud.positions) {
        const Point x = wrapped(grid, p);
        const int i0 = grid.wrap(static_cast<int>(std::lround((x[0] + L) / dx)));
        const int i1 = grid.dim() == 2 ? grid.wrap(static_cast<int>(std::lround((x[1] + L) / dx))) : 0;
        hist[grid.flatten(i0, i1)] += 1.0;
    }
    const double scale = 1.0 / (static_cast<double>(cloud.size()) * grid.cell_volume());
    for (double& v : hist) v *= scale;
    return hist;
}

} // namespace

std::string_view kde_kernel_name(KdeKernel k) {
    return k == KdeKernel::Gaussian ? "gaussian" : "epanechnikov";
}

KdeKernel parse_kde_kernel(std::string_view name) {
    if (name == "gaussian") return KdeKernel::Gaussian;
    if (name == "epanechnikov") return KdeKernel::Epanechnikov;
    throw Error(ErrorCode::ConfigError, "unknown KDE kernel '" + std::string(name) + "'");
}

double silverman_bandwidth(const ParticleCloud& cloud, int dim) {
    require(cloud.size() >= 2, ErrorCode::InvalidArgument, "bandwidth needs two or more particles");
    const double n = static_cast<double>(cloud.size());
    double spread = 0.0;
    for (int a = 0; a < dim; ++a) {
        std::vector<double> xs(cloud.size());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = cloud.positions[i][a];
        // Sorted sums do not depend on particle order.
        std::sort(xs.begin(), xs.end());
        const double mu = stats::mean(xs);
        double var = 0.0;
        for (double x : xs) var += (x - mu) * (x - mu);
        var /= n - 1.0;
        double sd = std::sqrt(var);
        if (dim == 1) {
            const double iqr = stats::quantile(xs, 0.75) - stats::quantile(std::move(xs), 0.25);
            if (iqr > 0.0) sd = std::min(sd, iqr / 1.34);
            return 0.9 * sd * std::pow(n, -0.2);
        }
        spread += sd / dim;
    }
    return std::pow(4.0 / (dim + 2.0), 1.0 / (dim + 4.0)) * spread * std::pow(n, -1.0 / (dim + 4.0));
}

GridDensity kde_density(const ParticleCloud& cloud, const KdeConfig& config, const Grid& grid) {
    require(cloud.size() >= 1, ErrorCode::InvalidArgument, "KDE of an empty cloud");
    const double bandwidth =
        config.bandwidth > 0.0 ? config.bandwidth
                               : (cloud.size() >= 2 ? silverman_bandwidth(cloud, grid.dim()) : grid.spacing());
    require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorCode::InvalidArgument,
            "KDE bandwidth must be positive");

    // Sorting fixes the summation order, so the result ignores particle order.
    std::vector<Point> sorted(cloud.positions.size());
    std::transform(cloud.positions.begin(), cloud.positions.end(), sorted.begin(),
                   [&](const Point& p) { return wrapped(grid, p); });
    std::sort(sorted.begin(), sorted.end());

    const double L = grid.half_width();
    const double dx = grid.spacing();
    const double w = 1.0 / static_cast<double>(sorted.size());
    std::vector<double> hist(grid.size(), 0.0);
    for (const auto& x : sorted) {
        const double p0 = (x[0] + L) / dx;
        const int i0 = static_cast<int>(std::floor(p0));
        const double f0 = p0 - i0;
        if (grid.dim() == 1) {
            hist[grid.wrap(i0)] += w * (1.0 - f0);
            hist[grid.wrap(i0 + 1)] += w * f0;
            continue;
        }
        const double p1 = (x[1] + L) / dx;
        const int i1 = static_cast<int>(std::floor(p1));
        const double f1 = p1 - i1;
        hist[grid.flatten(grid.wrap(i0), grid.wrap(i1))] += w * (1.0 - f0) * (1.0 - f1);
        hist[grid.flatten(grid.wrap(i0 + 1), grid.wrap(i1))] += w * f0 * (1.0 - f1);
        hist[grid.flatten(grid.wrap(i0), grid.wrap(i1 + 1))] += w * (1.0 - f0) * f1;
        hist[grid.flatten(grid.wrap(i0 + 1), grid.wrap(i1 + 1))] += w * f0 * f1;
    }

    // Kernel on periodic offsets, index 0 = zero offset.
    const int n = grid.points_per_axis();
    auto offset = [&](int j) { return (j <= n / 2 ? j : j - n) * dx; };
    auto profile = [&](double r2) {
        const double z = r2 / (bandwidth * bandwidth);
        if (config.kernel == KdeKernel::Gaussian) return std::exp(-0.5 * z);
        return std::max(0.0, 1.0 - z / 5.0);
    };
    std::vector<double> kernel(grid.size());
    double kernel_mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto idx = grid.unflatten(i);
        const double a = offset(idx[0]);
        const double b = grid.dim() == 2 ? offset(idx[1]) : 0.0;
        kernel[i] = profile(a * a + b * b);
        kernel_mass += kernel[i];
    }
    for (double& k : kernel) k /= kernel_mass * grid.cell_volume();

    SpectralWorkspace ws(grid);
    ws.load(kernel);
    ws.forward();
    std::vector<std::complex<double>> kernel_hat(ws.data().begin(), ws.data().end());
    ws.load(hist);
    ws.forward();
    auto spec = ws.data();
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel_hat[i];
    ws.inverse();
    std::vector<double> out(grid.size());
    ws.store_real(out);
    return std::move(clamp_nonnegative(GridFunction(grid, std::move(out))).density);
}

double empirical_tv(const ParticleCloud& a, const ParticleCloud& b, const Grid& grid) {
    require(a.size() > 0 && b.size() > 0, ErrorCode::InvalidArgument, "empty cloud");
    const auto ha = nearest_histogram(a, grid);
    const auto hb = nearest_histogram(b, grid);
    double sum = 0.0;
    for (std::size_t i = 0; i < ha.size(); ++i) sum += std::abs(ha[i] - hb[i]);
    return sum * grid.cell_volume();
}

InitialSampler gaussian_sampler(double sigma, int dim) {
    require(sigma > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
    return [sigma, dim](RngStream& rng) {
        const double x = sigma * rng.normal();
        return Point{x, dim == 2 ? sigma * rng.normal() : 0.0};
    };
}

InitialSampler inverse_cdf_sampler(const GridDensity& density) {
    const Grid& grid = density.grid();
    require(grid.dim() == 1, ErrorCode::InvalidArgument, "inverse-CDF sampling is one-dimensional");
    std::vector<double> cumulative(grid.size() + 1, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) cumulative[i + 1] = cumulative[i] + density[i];
    const double total = cumulative.back();
    require(total > 0.0, ErrorCode::InvalidArgument, "density has zero mass");
    for (double& c : cumulative) c /= total;
    const double left = -grid.half_width() - 0.5 * grid.spacing();
    const double dx = grid.spacing();
    return [cumulative = std::move(cumulative), left, dx](RngStream& rng) {
        const double u = rng.uniform_open();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t cell = static_cast<std::size_t>(std::distance(cumulative.begin(), it)) - 1;
        const double width = cumulative[cell + 1] - cumulative[cell];
        const double frac = width > 0.0 ? (u - cumulative[cell]) / width : 0.5;
        return Point{left + (static_cast<double>(cell) + frac) * dx, 0.0};
    };
}

ParticleRun em_particle_simulate(std::size_t N, const InitialSampler& rho_0, const DriftSpec& drift,
                                 double h, double T, const StableParams& params,
                                 const KdeConfig& kde, const Grid& grid, std::uint64_t seed) {
    require(N >= 1, ErrorCode::InvalidArgument, "need at least one particle");
    require(h > 0.0 && h < 1.0, ErrorCode::InvalidArgument, "h must lie in (0, 1)");
    require(grid.dim() == params.dim, ErrorCode::GridMismatch, "grid dim differs from noise dim");
    const int steps = static_cast<int>(std::floor(T / h + 1e-9));
    constexpr std::uint64_t kInitialStep = std::numeric_limits<std::uint64_t>::max();

    ParticleRun run;
    ParticleCloud cloud{0.0, std::vector<Point>(N)};
    for (std::size_t i = 0; i < N; ++i) {
        RngStream rng(seed, stream_id(i, kInitialStep));
        cloud.positions[i] = rho_0(rng);
    }
    run.clouds.push_back(cloud);
    std::size_t wraps = 0;
    for (int k = 0; k < steps; ++k) {
        std::vector<double> u;
        if (k >= 1) {
            const auto estimate = kde_density(cloud, kde, grid);
            u.assign(estimate.values().begin(), estimate.values().end());
        }
        std::vector<Point> next(N);
        parallel_for(N, [&](std::size_t i) {
            const Point& x = cloud.positions[i];
            Point d{0.0, 0.0};
            if (k >= 1) {
                const double value = std::max(0.0, interpolate(grid, u, wrapped(grid, x)));
                d = step_displacement(drift, k, h, x, value);
            }
            RngStream rng(seed, stream_id(i, static_cast<std::uint64_t>(k)));
            const Point noise = sample_rot_invariant(params, h, rng);
            next[i] = {x[0] + d[0] + noise[0], x[1] + d[1] + noise[1]};
        });
        for (const auto& p : next) {
            if (!inside(grid, p)) ++wraps;
        }
        cloud = {(k + 1) * h, std::move(next)};
        run.clouds.push_back(cloud);
    }
    run.wrap_fraction = steps > 0 ? static_cast<double>(wraps) / (static_cast<double>(N) * steps) : 0.0;
    return run;
}

} // namespace ddsde
