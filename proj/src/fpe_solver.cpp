#include "ddsde/fpe_solver.hpp"

#include "ddsde/error.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace ddsde {

namespace {

double van_leer(double theta) { return (theta + std::abs(theta)) / (1.0 + std::abs(theta)); }

// One conservative transport substep of length dt with velocities frozen at
// (t, rho).
std::vector<double> transport_step(const Grid& grid, std::span<const double> rho,
                                   const DriftSpec& drift, double t, double dt, Transport scheme) {
    const int n = grid.points_per_axis();
    const double dx = grid.spacing();
    std::vector<Point> velocity(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) velocity[i] = drift(t, grid.point(i), rho[i]);

    std::vector<double> out(rho.begin(), rho.end());
    std::vector<double> flux(n);
    std::vector<double> line(n);
    std::vector<double> speed(n);
    const int lines = grid.dim() == 1 ? 1 : n;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        for (int l = 0; l < lines; ++l) {
            auto index = [&](int j) {
                const int w = grid.wrap(j);
                if (grid.dim() == 1) return static_cast<std::size_t>(w);
                return axis == 0 ? grid.flatten(w, l) : grid.flatten(l, w);
            };
            for (int j = 0; j < n; ++j) {
                line[j] = rho[index(j)];
                speed[j] = velocity[index(j)][axis];
            }
            // flux[j] lives on the face between cells j and j + 1.
            for (int j = 0; j < n; ++j) {
                const int jp = (j + 1) % n;
                const double a = 0.5 * (speed[j] + speed[jp]);
                double f = a > 0.0 ? a * line[j] : a * line[jp];
                if (scheme == Transport::CenteredLimited) {
                    const double jump = line[jp] - line[j];
                    if (jump != 0.0) {
                        const double upwind = a > 0.0 ? line[j] - line[(j - 1 + n) % n]
                                                      : line[(j + 2) % n] - line[jp];
                        const double c = std::abs(a) * dt / dx;
                        f += 0.5 * std::abs(a) * (1.0 - c) * van_leer(upwind / jump) * jump;
                    }
                }
                flux[j] = f;
            }
            for (int j = 0; j < n; ++j) {
                out[index(j)] -= dt / dx * (flux[j] - flux[(j - 1 + n) % n]);
            }
        }
    }
    return out;
}

bool close_to(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * scale; }

} // namespace

std::string_view splitting_name(Splitting s) { return s == Splitting::Lie ? "lie" : "strang"; }

std::string_view transport_name(Transport t) {
    return t == Transport::Upwind1 ? "upwind1" : "centered_limited";
}

Splitting parse_splitting(std::string_view name) {
    if (name == "lie") return Splitting::Lie;
    if (name == "strang") return Splitting::Strang;
    throw Error(ErrorCode::ConfigError, "unknown splitting '" + std::string(name) + "'");
}

Transport parse_transport(std::string_view name) {
    if (name == "upwind1") return Transport::Upwind1;
    if (name == "centered_limited") return Transport::CenteredLimited;
    throw Error(ErrorCode::ConfigError, "unknown transport scheme '" + std::string(name) + "'");
}

std::size_t FpeTrajectory::index_of(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (close_to(times[i], t, dt)) return i;
    }
    throw Error(ErrorCode::InvalidArgument, "time " + std::to_string(t) + " not stored");
}

FpeTrajectory fpe_solve(const GridDensity& rho_0, const DriftSpec& drift, const StableParams& params,
                        double T, const FpeConfig& config) {
    const Grid& grid = rho_0.grid();
    require(grid.dim() == params.dim, ErrorCode::GridMismatch, "density dim differs from noise dim");
    require(config.dt > 0.0 && T > 0.0, ErrorCode::InvalidArgument, "need dt > 0 and T > 0");
    require(config.store_stride >= 1, ErrorCode::InvalidArgument, "store_stride must be >= 1");
    require(grid.dim() * drift.kappa * config.dt <= grid.spacing() * (1.0 + 1e-12),
            ErrorCode::CflViolation,
            "dt = " + std::to_string(config.dt) + " exceeds dx / (dim kappa) = " +
                std::to_string(grid.spacing() / (grid.dim() * drift.kappa)));
    check_domain(params.alpha, params.dim, T, grid, config.tol);

    const int steps = static_cast<int>(std::ceil(T / config.dt - 1e-9));
    const double dt = T / steps;
    SpectralWorkspace ws(grid);
    const auto full = semigroup_multiplier(params.alpha, dt);
    const auto half = semigroup_multiplier(params.alpha, 0.5 * dt);
    const double mass_0 = mass(rho_0);

    FpeTrajectory traj;
    traj.dt = dt;
    traj.times.push_back(0.0);
    traj.densities.push_back(rho_0);
    std::vector<double> rho(rho_0.values().begin(), rho_0.values().end());
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        if (config.splitting == Splitting::Strang) {
            rho = ws.apply(rho, half);
            for (double& v : rho) v = std::max(v, 0.0);
            rho = transport_step(grid, rho, drift, t + 0.5 * dt, dt, config.transport);
            rho = ws.apply(rho, half);
        } else {
            rho = ws.apply(rho, full);
            for (double& v : rho) v = std::max(v, 0.0);
            rho = transport_step(grid, rho, drift, t, dt, config.transport);
        }
        auto clamped = clamp_nonnegative(GridFunction(grid, std::move(rho)));
        traj.clamped_mass += clamped.clamped_mass;
        const double m = mass(clamped.density);
        require(std::abs(m - mass_0) <= config.tol.mass * mass_0, ErrorCode::MassLeak,
                "FPE step changed the mass to " + std::to_string(m));
        rho.assign(clamped.density.values().begin(), clamped.density.values().end());
        if ((k + 1) % config.store_stride == 0 || k + 1 == steps) {
            traj.times.push_back((k + 1) * dt);
            traj.densities.push_back(std::move(clamped.density));
        }
    }
    return traj;
}

double fpe_weak_residual(const FpeTrajectory& traj, const DriftSpec& drift, const StableParams& params,
                         const GridFunction& phi, double t) {
    const auto generator = frac_laplacian(params, phi);
    const auto grad = spectral_gradient(phi);
    const Grid& grid = phi.grid;
    const std::size_t last = traj.index_of(t);
    auto integrand = [&](std::size_t n) {
        const auto& rho = traj.densities[n];
        double sum = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Point b = drift(traj.times[n], grid.point(i), rho[i]);
            double transport = 0.0;
            for (int a = 0; a < grid.dim(); ++a) transport += b[a] * grad[a].values[i];
            sum += rho[i] * (generator.values[i] + transport);
        }
        return sum * grid.cell_volume();
    };
    auto pairing = [&](std::size_t n) {
        double sum = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) sum += traj.densities[n][i] * phi.values[i];
        return sum * grid.cell_volume();
    };
    double integral = 0.0;
    double previous = last > 0 ? integrand(0) : 0.0;
    for (std::size_t n = 1; n <= last; ++n) {
        const double current = integrand(n);
        integral += 0.5 * (traj.times[n] - traj.times[n - 1]) * (previous + current);
        previous = current;
    }
    return std::abs(pairing(last) - pairing(0) - integral);
}

double em_vs_fpe_gap(const SchemeTrajectory& scheme, const FpeTrajectory& fpe, double t) {
    return lp_distance(scheme.at(t), fpe.at(t), 1.0);
}

} // namespace ddsde
