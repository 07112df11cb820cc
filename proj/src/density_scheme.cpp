#include "ddsde/density_scheme.hpp"

#include "ddsde/error.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ddsde {

namespace {

constexpr double kTimeSlack = 1e-9;

// Mass-conservative linear split of point masses onto the grid, returned as a
// density (mass / cell volume).
std::vector<double> linear_deposit(const Grid& grid, std::span<const double> masses,
                                   std::span<const Point> positions) {
    std::vector<double> out(grid.size(), 0.0);
    const double L = grid.half_width();
    const double dx = grid.spacing();
    for (std::size_t i = 0; i < masses.size(); ++i) {
        const double p0 = (positions[i][0] + L) / dx;
        const double b0 = std::floor(p0);
        const double f0 = p0 - b0;
        const int i0 = static_cast<int>(b0);
        if (grid.dim() == 1) {
            out[grid.wrap(i0)] += masses[i] * (1.0 - f0);
            out[grid.wrap(i0 + 1)] += masses[i] * f0;
            continue;
        }
        const double p1 = (positions[i][1] + L) / dx;
        const double b1 = std::floor(p1);
        const double f1 = p1 - b1;
        const int i1 = static_cast<int>(b1);
        out[grid.flatten(grid.wrap(i0), grid.wrap(i1))] += masses[i] * (1.0 - f0) * (1.0 - f1);
        out[grid.flatten(grid.wrap(i0 + 1), grid.wrap(i1))] += masses[i] * f0 * (1.0 - f1);
        out[grid.flatten(grid.wrap(i0), grid.wrap(i1 + 1))] += masses[i] * (1.0 - f0) * f1;
        out[grid.flatten(grid.wrap(i0 + 1), grid.wrap(i1 + 1))] += masses[i] * f0 * f1;
    }
    const double inv = 1.0 / grid.cell_volume();
    for (double& v : out) v *= inv;
    return out;
}

// sum_i w_i K(. - z_i) with K the kernel of multiplier m, by the chosen path.
std::vector<double> push_and_filter(const Grid& grid, std::span<const double> masses,
                                    std::span<const Point> positions, const Multiplier& m,
                                    PushPath path) {
    switch (path) {
    case PushPath::Linear: {
        SpectralWorkspace ws(grid);
        return ws.apply(linear_deposit(grid, masses, positions), m);
    }
    case PushPath::Gridded: {
        GriddedPushforward push(grid);
        return push(masses, positions, m);
    }
    case PushPath::Direct:
        return direct_pushforward_convolve(grid, masses, positions, m);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown push path");
}

Multiplier divergence_multiplier(double alpha, double t, int axis) {
    return [alpha, t, axis](const SpectralMode& mode) {
        return std::complex<double>(0.0, -mode.xi[axis]) * std::exp(-t * std::pow(mode.norm, alpha));
    };
}

struct PushedCells {
    std::vector<double> masses;
    std::vector<Point> sources;
    std::vector<Point> targets;
    std::vector<double> u;
};

// Grid cells as point masses moved by the drift over [t0, t1]. A cell on the
// periodic seam (index 0, i.e. x = -L = +L) is split evenly between both
// ends so that mirror-symmetric data stays mirror-symmetric under odd drifts.
PushedCells displaced_cells(const GridDensity& rho, const DriftSpec& drift, double t0, double t1) {
    const Grid& grid = rho.grid();
    const double L = grid.half_width();
    PushedCells cells;
    cells.masses.reserve(grid.size() + 4 * grid.points_per_axis());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.point(i);
        const double u = rho[i];
        const auto idx = grid.unflatten(i);
        const bool seam0 = idx[0] == 0;
        const bool seam1 = grid.dim() == 2 && idx[1] == 0;
        const int copies = (seam0 ? 2 : 1) * (seam1 ? 2 : 1);
        const double m = u * grid.cell_volume() / copies;
        for (int c = 0; c < copies; ++c) {
            Point src = x;
            int bit = 0;
            if (seam0 && ((c >> bit++) & 1)) src[0] = L;
            if (seam1 && ((c >> bit) & 1)) src[1] = L;
            const Point d = t1 > t0 ? displacement(drift, t0, t1, src, u) : Point{0.0, 0.0};
            cells.masses.push_back(m);
            cells.sources.push_back(src);
            cells.targets.push_back({src[0] + d[0], src[1] + d[1]});
            cells.u.push_back(u);
        }
    }
    return cells;
}

GridDensity finish(const Grid& grid, std::vector<double> values, double mass_in, const Tolerances& tol,
                   StepStats* stats) {
    auto clamped = clamp_nonnegative(GridFunction(grid, std::move(values)));
    const double out_mass = mass(clamped.density);
    require(std::abs(out_mass - mass_in) <= tol.mass * mass_in, ErrorCode::MassLeak,
            "step changed the mass from " + std::to_string(mass_in) + " to " +
                std::to_string(out_mass));
    if (stats) stats->clamped_mass += clamped.clamped_mass;
    return std::move(clamped.density);
}

bool same_time(double a, double b, double h) { return std::abs(a - b) <= kTimeSlack * h; }

} // namespace

std::string_view push_path_name(PushPath path) {
    switch (path) {
    case PushPath::Linear: return "linear";
    case PushPath::Gridded: return "gridded";
    case PushPath::Direct: return "direct";
    }
    return "unknown";
}

PushPath parse_push_path(std::string_view name) {
    for (auto p : {PushPath::Linear, PushPath::Gridded, PushPath::Direct}) {
        if (push_path_name(p) == name) return p;
    }
    throw Error(ErrorCode::ConfigError, "unknown push path '" + std::string(name) + "'");
}

std::size_t SchemeTrajectory::index_of(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (same_time(times[i], t, h)) return i;
    }
    throw Error(ErrorCode::InvalidArgument, "time " + std::to_string(t) + " not stored");
}

GridDensity em_density_partial_step(const GridDensity& rho_k, const DriftSpec& drift, int k,
                                    double h, double t, const StableParams& params,
                                    const SchemeOptions& options, StepStats* stats) {
    require(k >= 0 && h > 0.0, ErrorCode::InvalidArgument, "need k >= 0 and h > 0");
    const double t0 = k * h;
    require(t > t0 && t <= t0 + h * (1.0 + kTimeSlack), ErrorCode::InvalidArgument,
            "partial step time outside (kh, (k+1)h]");
    const Grid& grid = rho_k.grid();
    require(grid.dim() == params.dim, ErrorCode::GridMismatch, "density dim differs from noise dim");
    check_domain(params.alpha, params.dim, t - t0, grid, options.tol);
    const double mass_in = mass(rho_k);
    const auto m = semigroup_multiplier(params.alpha, t - t0);
    if (k == 0) {
        SpectralWorkspace ws(grid);
        return finish(grid, ws.apply(rho_k.values(), m), mass_in, options.tol, stats);
    }
    const auto cells = displaced_cells(rho_k, drift, t0, t);
    return finish(grid, push_and_filter(grid, cells.masses, cells.targets, m, options.path), mass_in,
                  options.tol, stats);
}

GridDensity em_density_step(const GridDensity& rho_k, const DriftSpec& drift, int k, double h,
                            const StableParams& params, const SchemeOptions& options,
                            StepStats* stats) {
    return em_density_partial_step(rho_k, drift, k, h, (k + 1) * h, params, options, stats);
}

SchemeTrajectory em_density_evolve(const GridDensity& rho_0, const DriftSpec& drift, double h,
                                   double T, const StableParams& params,
                                   std::span<const double> output_times,
                                   const SchemeOptions& options) {
    require(h > 0.0 && h < 1.0, ErrorCode::InvalidArgument, "h must lie in (0, 1)");
    require(T >= h * (1.0 - kTimeSlack), ErrorCode::InvalidArgument, "need T >= h");
    check_domain(params.alpha, params.dim, T, rho_0.grid(), options.tol);

    std::vector<double> extra;
    for (double t : output_times) {
        require(t >= 0.0 && t <= T * (1.0 + kTimeSlack), ErrorCode::InvalidArgument,
                "output time outside [0, T]");
        extra.push_back(t);
    }
    extra.push_back(T);
    std::sort(extra.begin(), extra.end());

    SchemeTrajectory traj{params, drift, h, options, {0.0}, {rho_0}, 0.0};
    auto store = [&](double t, const GridDensity& rho) {
        if (same_time(traj.times.back(), t, h)) return;
        traj.times.push_back(t);
        traj.densities.push_back(rho);
    };
    const int steps = static_cast<int>(std::floor(T / h + kTimeSlack));
    GridDensity current = rho_0;
    std::size_t next_extra = 0;
    for (int k = 0; k <= steps; ++k) {
        const double t0 = k * h;
        const double t1 = (k + 1) * h;
        while (next_extra < extra.size() && extra[next_extra] <= t0 + kTimeSlack * h) ++next_extra;
        while (next_extra < extra.size() && extra[next_extra] < t1 - kTimeSlack * h) {
            StepStats stats;
            store(extra[next_extra],
                  em_density_partial_step(current, drift, k, h, extra[next_extra], params, options,
                                          &stats));
            traj.clamped_mass += stats.clamped_mass;
            ++next_extra;
        }
        if (k == steps) break;
        StepStats stats;
        current = em_density_step(current, drift, k, h, params, options, &stats);
        traj.clamped_mass += stats.clamped_mass;
        store(t1, current);
    }
    return traj;
}

double duhamel_residual(const SchemeTrajectory& traj, double t, int quad_substeps) {
    require(quad_substeps >= 1, ErrorCode::InvalidArgument, "need at least one substep");
    const Grid& grid = traj.grid();
    const double h = traj.h;
    const double alpha = traj.params.alpha;
    const auto& stored = traj.at(t);

    SpectralWorkspace ws(grid);
    std::vector<double> rebuilt =
        ws.apply(traj.densities.front().values(), semigroup_multiplier(alpha, t));
    for (int k = 1; k * h < t - kTimeSlack * h; ++k) {
        const double t0 = k * h;
        const double t1 = std::min((k + 1) * h, t);
        const double ds = (t1 - t0) / quad_substeps;
        const auto& rho_k = traj.at(t0);
        for (int j = 0; j < quad_substeps; ++j) {
            const double s = t0 + j * ds;
            const auto cells = displaced_cells(rho_k, traj.drift, t0, s);
            for (int a = 0; a < grid.dim(); ++a) {
                std::vector<double> flux(cells.masses.size());
                for (std::size_t i = 0; i < flux.size(); ++i) {
                    flux[i] = cells.masses[i] * traj.drift(s, cells.sources[i], cells.u[i])[a];
                }
                const auto term = push_and_filter(grid, flux, cells.targets,
                                                  divergence_multiplier(alpha, t - t0, a),
                                                  traj.options.path);
                for (std::size_t i = 0; i < grid.size(); ++i) rebuilt[i] += ds * term[i];
            }
        }
    }
    return lp_distance(stored.as_function(), GridFunction(grid, std::move(rebuilt)), 1.0);
}

double check_uniform_bound(const SchemeTrajectory& traj, const GridDensity& rho_0) {
    const Grid& grid = rho_0.grid();
    SpectralWorkspace ws(grid);
    double worst = 0.0;
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const double t = traj.times[n];
        const auto& rho = traj.densities[n];
        std::vector<double> free_flow(rho_0.values().begin(), rho_0.values().end());
        if (t > 0.0) free_flow = ws.apply(rho_0.values(), semigroup_multiplier(traj.params.alpha, t));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (free_flow[i] > 1e-12) worst = std::max(worst, rho[i] / free_flow[i]);
        }
    }
    return worst;
}

std::vector<std::pair<double, double>> dyadic_pairs(double h, double T) {
    std::vector<std::pair<double, double>> out;
    for (double s = h; 2.0 * s <= T * (1.0 + kTimeSlack); s *= 2.0) out.emplace_back(s, 2.0 * s);
    return out;
}

std::vector<HolderRow> time_holder_modulus(const SchemeTrajectory& traj, double p,
                                           std::span<const std::pair<double, double>> pairs) {
    const Grid& grid = traj.grid();
    const double expo = (traj.params.alpha - 1.0) / traj.params.alpha;
    const double base = lp_norm(grid, traj.densities.front().values(), p);
    std::vector<HolderRow> out;
    for (const auto& [s, t] : pairs) {
        require(s <= t, ErrorCode::InvalidArgument, "pairs must satisfy s <= t");
        if (same_time(s, t, traj.h)) {
            out.push_back({s, t, 0.0});
            continue;
        }
        const double dist = lp_distance(traj.at(s), traj.at(t), p);
        out.push_back({s, t, dist * std::pow(t - s, -expo) * std::pow(s, expo) / base});
    }
    return out;
}

Lemma21Result lemma21_check(const GridFunction& f1, const GridFunction& f2,
                            const SchemeTrajectory& traj, double s) {
    const double h = traj.h;
    require(s > h, ErrorCode::InvalidArgument, "need s > h");
    const Grid& grid = traj.grid();
    require(f1.grid == grid && f2.grid == grid, ErrorCode::GridMismatch, "test functions on another grid");
    const double alpha = traj.params.alpha;
    const double pi = pi_h(s, h);
    const double delta = s - pi;
    const auto& rho = traj.at(pi);

    SpectralWorkspace ws(grid);
    std::vector<double> smoothed(f2.values);
    if (delta > 0.0) smoothed = ws.apply(f2.values, semigroup_multiplier(alpha, delta));
    const BandlimitedInterpolant interp(grid, smoothed);
    double lhs = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (rho[i] == 0.0) continue;
        const Point x = grid.point(i);
        const Point d = displacement(traj.drift, pi, s, x, rho[i]);
        lhs += rho[i] * f1.values[i] * (interp({x[0] + d[0], x[1] + d[1]}) - f2.values[i]);
    }
    lhs = std::abs(lhs * grid.cell_volume());

    auto sup = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    const double f1_sup = sup(f1.values);
    const double f2_sup = sup(f2.values);
    const auto grad = spectral_gradient(f2);
    double grad_sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double q = 0.0;
        for (const auto& g : grad) q += g.values[i] * g.values[i];
        grad_sup = std::max(grad_sup, std::sqrt(q));
    }
    auto second = [&](int a, int b) {
        return ws.apply(f2.values, [a, b](const SpectralMode& mode) -> std::complex<double> {
            if (a != b && (mode.nyquist[a] || mode.nyquist[b])) return 0.0;
            return -mode.xi[a] * mode.xi[b];
        });
    };
    double hess_sup = 0.0;
    if (grid.dim() == 1) {
        hess_sup = sup(second(0, 0));
    } else {
        const auto xx = second(0, 0), yy = second(1, 1), xy = second(0, 1);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double mid = 0.5 * (xx[i] + yy[i]);
            const double rad = std::hypot(0.5 * (xx[i] - yy[i]), xy[i]);
            hess_sup = std::max(hess_sup, std::abs(mid) + rad);
        }
    }
    const double sphere = grid.dim() == 1 ? 2.0 : 2.0 * std::numbers::pi;
    double tail = 0.0;
    if (f2_sup > 0.0 && hess_sup > 0.0) {
        const double r = std::sqrt(f2_sup / hess_sup);
        tail = sphere * (hess_sup * std::pow(r, 2.0 - alpha) / (2.0 - alpha) +
                         f2_sup * std::pow(r, -alpha) / alpha);
    }
    const double rhs = h * f1_sup * (grad_sup * traj.drift.kappa + tail);
    const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    return {lhs, rhs, ratio};
}

} // namespace ddsde
