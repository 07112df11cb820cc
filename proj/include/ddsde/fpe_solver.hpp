#pragma once

#include "ddsde/density_scheme.hpp"
#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/stable_noise.hpp"

#include <string_view>
#include <vector>

namespace ddsde {

enum class Splitting { Lie, Strang };
enum class Transport {
    /// First-order upwind finite volumes.
    Upwind1,
    /// Lax-Wendroff flux with a van Leer limiter.
    CenteredLimited,
};

std::string_view splitting_name(Splitting s);
std::string_view transport_name(Transport t);
Splitting parse_splitting(std::string_view name);
Transport parse_transport(std::string_view name);

struct FpeConfig {
    double dt = 1e-3;
    Splitting splitting = Splitting::Strang;
    Transport transport = Transport::CenteredLimited;
    /// Keep every k-th step in the trajectory (the final time is always kept).
    int store_stride = 1;
    Tolerances tol{};
};

struct FpeTrajectory {
    std::vector<double> times;
    std::vector<GridDensity> densities;
    double clamped_mass = 0.0;
    double dt = 0.0;

    std::size_t index_of(double t) const;
    const GridDensity& at(double t) const { return densities[index_of(t)]; }
};

/// Splitting solver for d/dt rho = frac_laplacian(rho) - div(b(t, x, rho) rho):
/// exact spectral diffusion composed with conservative finite-volume transport.
/// Throws CflViolation unless dim * kappa * dt <= dx.
FpeTrajectory fpe_solve(const GridDensity& rho_0, const DriftSpec& drift, const StableParams& params,
                        double T, const FpeConfig& config = {});

/// |<rho_t, phi> - <rho_0, phi> - int_0^t <rho_s, frac_laplacian(phi) + b(s, ., rho_s) . grad phi> ds|
/// with the time integral by the trapezoid rule over stored times.
double fpe_weak_residual(const FpeTrajectory& traj, const DriftSpec& drift, const StableParams& params,
                         const GridFunction& phi, double t);

/// L1 distance between the two densities at time t.
double em_vs_fpe_gap(const SchemeTrajectory& scheme, const FpeTrajectory& fpe, double t);

} // namespace ddsde
