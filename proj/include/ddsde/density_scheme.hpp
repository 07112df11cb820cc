#pragma once

#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/stable_noise.hpp"

#include <span>
#include <utility>
#include <vector>

namespace ddsde {

/// How the push-forward x -> x + D(x) of the cell masses is combined with the
/// heat kernel.
enum class PushPath {
    /// Split each cell mass linearly between the bracketing cells, then FFT
    /// convolution with the periodic kernel.
    Linear,
    /// Exact spectrum of the displaced point masses via Gaussian gridding,
    /// multiplied by the kernel's symbol.
    Gridded,
    /// Exact spectrum by direct summation, O(n^(2d)).
    Direct,
};

std::string_view push_path_name(PushPath path);
PushPath parse_push_path(std::string_view name);

struct SchemeOptions {
    PushPath path = PushPath::Gridded;
    Tolerances tol{};
};

/// Book-keeping of one step.
struct StepStats {
    /// Negative mass removed after the convolution.
    double clamped_mass = 0.0;
};

/// Densities of the Euler-Maruyama scheme at increasing times.
struct SchemeTrajectory {
    StableParams params;
    DriftSpec drift;
    double h;
    SchemeOptions options;
    std::vector<double> times;
    std::vector<GridDensity> densities;
    /// Accumulated negative mass clamped over the run.
    double clamped_mass = 0.0;

    const Grid& grid() const { return densities.front().grid(); }
    /// Index of a stored time (within 1e-9 h); throws InvalidArgument if absent.
    std::size_t index_of(double t) const;
    const GridDensity& at(double t) const { return densities[index_of(t)]; }
};

/// Density at t in (kh, (k+1)h] from the density at kh: push every cell by
/// the drift displacement over [kh, t] with u read at the cell itself, then
/// convolve with q(t - kh). For k = 0 there is no drift.
GridDensity em_density_partial_step(const GridDensity& rho_k, const DriftSpec& drift, int k,
                                    double h, double t, const StableParams& params,
                                    const SchemeOptions& options = {}, StepStats* stats = nullptr);

/// One full step kh -> (k+1)h.
GridDensity em_density_step(const GridDensity& rho_k, const DriftSpec& drift, int k, double h,
                            const StableParams& params, const SchemeOptions& options = {},
                            StepStats* stats = nullptr);

/// Runs the scheme up to T. Stored times: 0, all multiples of h up to T, T,
/// and every requested output time.
SchemeTrajectory em_density_evolve(const GridDensity& rho_0, const DriftSpec& drift, double h,
                                   double T, const StableParams& params,
                                   std::span<const double> output_times = {},
                                   const SchemeOptions& options = {});

/// L1 distance between the stored density at t and its reconstruction as
/// q(t) * rho_0 plus the time integral of -div(q(t - s) * (b^h rho^h)),
/// using quad_substeps left-point substeps per scheme step.
double duhamel_residual(const SchemeTrajectory& traj, double t, int quad_substeps);

/// Max over stored times and grid points of rho^h_t / (q(t) * rho_0), where
/// the denominator exceeds 1e-12.
double check_uniform_bound(const SchemeTrajectory& traj, const GridDensity& rho_0);

struct HolderRow {
    double s;
    double t;
    double ratio;
};

/// Pairs (s, 2s) with s = h, 2h, 4h, ... and 2s <= T.
std::vector<std::pair<double, double>> dyadic_pairs(double h, double T);

/// ||rho_s - rho_t||_p |t - s|^(-(a-1)/a) s^((a-1)/a) / ||rho_0||_p for each pair.
std::vector<HolderRow> time_holder_modulus(const SchemeTrajectory& traj, double p,
                                           std::span<const std::pair<double, double>> pairs);

struct Lemma21Result {
    double lhs;
    double rhs;
    double ratio;
};

/// |E f1(X_pi) (f2(X_s) - f2(X_pi))| at pi = pi_h(s) as a grid integral,
/// against its bound h ||f1|| (||grad f2|| kappa + tail integral).
Lemma21Result lemma21_check(const GridFunction& f1, const GridFunction& f2,
                            const SchemeTrajectory& traj, double s);

} // namespace ddsde
