#pragma once

#include "ddsde/grid.hpp"
#include "ddsde/spectral.hpp"
#include "ddsde/stable_noise.hpp"

#include <memory>
#include <span>
#include <vector>

namespace ddsde {

/// Grid samples of the periodized stable heat kernel q_alpha(t, .).
struct KernelTable {
    StableParams params;
    double t;
    GridDensity density;
    /// Mass removed by clamping inversion ringing, before renormalization.
    double clamped_mass;
};

/// varrho_alpha(t, r) = t / (t^(1/alpha) + r)^(d + alpha).
double rho_alpha(double alpha, int dim, double t, double r);

/// Fraction of the mass of varrho_alpha(t, .) lying outside the ball of
/// radius a (closed form). Used as the analytic tail estimate of q_alpha.
double kernel_tail_fraction(double alpha, int dim, double t, double a);

/// Throws DomainTooSmall when the kernel tail outside [-L/2, L/2]^d exceeds
/// the tolerance.
void check_domain(double alpha, int dim, double t, const Grid& grid, const Tolerances& tol);

/// Inverse DFT of exp(-t |xi|^alpha) on the dual grid (periodization of the
/// kernel, no clamping). Any alpha in (0, 2] is accepted so that the Cauchy
/// (alpha = 1) and Gaussian (alpha = 2) closed forms can exercise this path.
GridFunction periodic_kernel_values(double alpha, double t, const Grid& grid);

/// Heat kernel table; ringing below zero is clamped and the mass restored.
/// Throws DomainTooSmall, or InvalidArgument if the clamp exceeds 1e-6 of the
/// mass (the kernel is not resolved by the grid).
KernelTable eval_heat_kernel(const StableParams& params, double t, const Grid& grid,
                             const Tolerances& tol = {});

GridDensity rho_alpha_bound(const StableParams& params, double t, const Grid& grid);

/// Free-space (non-periodized) heat kernel at radius r, from the Fourier
/// integral by panel Gauss-Legendre quadrature, or from the large-|x|
/// asymptotic series far in the tail. alpha in (0, 2).
double stable_density(double alpha, int dim, double t, double r);

/// Reusable spectral semigroup on one grid (holds FFT plans).
class HeatSemigroup {
public:
    HeatSemigroup(const StableParams& params, const Grid& grid, const Tolerances& tol = {});
    ~HeatSemigroup();
    HeatSemigroup(HeatSemigroup&&) noexcept;
    HeatSemigroup& operator=(HeatSemigroup&&) noexcept;

    const Grid& grid() const noexcept { return grid_; }
    const StableParams& params() const noexcept { return params_; }

    /// q(t) * f for a signed function (no clamping).
    std::vector<double> apply(std::span<const double> values, double t);
    /// -div(q(t) * v) for a vector-valued measure density v (one array per axis).
    std::vector<double> apply_divergence(std::span<const std::vector<double>> components, double t);
    /// q(t) * f for densities, clamped and mass-preserving. Adds the clamped
    /// mass to *clamped if given.
    GridDensity convolve(const GridDensity& f, double t, double* clamped = nullptr);

private:
    StableParams params_;
    Grid grid_;
    Tolerances tol_;
    std::unique_ptr<SpectralWorkspace> ws_;
};

/// Periodic FFT convolution q_alpha(t) * f.
GridDensity semigroup_convolve(const StableParams& params, double t, const GridDensity& f,
                               const Tolerances& tol = {});

/// Fractional Laplacian via the multiplier -|xi|^alpha. Throws
/// SpectralTailTooLarge when more than 1e-6 of the spectral energy sits in the
/// top quarter of the frequency range.
GridFunction frac_laplacian(const StableParams& params, const GridFunction& f);

/// Spectral gradient of an arbitrary grid function (Nyquist mode dropped).
std::vector<GridFunction> spectral_gradient(const GridFunction& f);

/// Spectral gradient of q_alpha(t, .), one grid function per axis.
std::vector<GridFunction> kernel_gradient(const StableParams& params, double t, const Grid& grid,
                                          const Tolerances& tol = {});

struct HolderStatistic {
    int j;
    double beta;
    double max_ratio;
};

/// For j in {0, 1} and beta in {1, alpha - 1}: max over the grid of
/// |grad^j q(t1) - grad^j q(t2)| divided by
/// |t2 - t1|^(beta/alpha) (t1^(-(j+beta)/alpha) q(t1) + t2^(-(j+beta)/alpha) q(t2)).
std::vector<HolderStatistic> kernel_time_holder_check(const StableParams& params, double t1,
                                                      double t2, const Grid& grid,
                                                      const Tolerances& tol = {});

// Executable kernel identities.

/// Sup relative error between q(t, x) and t^(-d/alpha) q(1, t^(-1/alpha) x),
/// the latter interpolated from a cubic-spline table of the unit kernel.
double scaling_identity_error(const StableParams& params, double t, const Grid& grid);

struct RatioRange {
    double min;
    double max;
};

/// Min and max over grid points of q(t, x) / varrho(t, x) (free-space kernel).
RatioRange two_sided_bound_ratio(const StableParams& params, double t, const Grid& grid);
/// Same over explicit radii |x|.
RatioRange two_sided_bound_ratio(const StableParams& params, double t, std::span<const double> radii);

/// ||(q(t+d) - q(t-d)) / 2d - frac_laplacian(q(t))||_inf / ||frac_laplacian(q(t))||_inf.
double heat_equation_residual(const StableParams& params, double t, const Grid& grid,
                              double delta = 1e-4);

/// Max over mirrored index pairs of |q(x) - q(-x)|, relative to max q.
double symmetry_error(const GridDensity& f);

/// Least-squares slope of log ||q(t)||_inf against log t.
double linf_decay_slope(const StableParams& params, std::span<const double> times, const Grid& grid);

/// Max over |x| <= L/2 of |grad q(t, x)| / (t^(-1/alpha) varrho(t, x)).
double gradient_bound_ratio(const StableParams& params, double t, const Grid& grid,
                            const Tolerances& tol = {});

} // namespace ddsde
