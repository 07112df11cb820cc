#pragma once

#include "ddsde/grid.hpp"
#include "ddsde/rng.hpp"

#include <span>
#include <vector>

namespace ddsde {

/// Index alpha and dimension of the rotationally invariant stable noise.
///
/// Normalization: E exp(i xi . L_t) = exp(-t |xi|^alpha). The generator is
/// therefore the Fourier multiplier -|xi|^alpha and the heat kernel is the
/// inverse transform of exp(-t |xi|^alpha). Every module shares this choice.
struct StableParams {
    double alpha;
    int dim;

    /// Validates 1 < alpha < 2 and dim in {1, 2}.
    StableParams(double alpha, int dim);
};

/// One draw of L_t in one dimension (Chambers-Mallows-Stuck, symmetric case).
double sample_sym_stable_1d(const StableParams& params, double t, RngStream& rng);

/// Standard symmetric alpha-stable variate with characteristic function
/// exp(-|xi|^alpha); alpha may be anywhere in (0, 2].
double standard_symmetric_stable(double alpha, RngStream& rng);

/// One-sided stable subordinator S_t with E exp(-lambda S_t) = exp(-t lambda^alpha_half),
/// alpha_half in (0, 1). Kanter's representation.
double sample_subordinator(double alpha_half, double t, RngStream& rng);

/// L_t as a dim-vector. dim = 1 uses the direct transform, dim = 2 uses
/// Brownian motion with generator Laplacian evaluated at an (alpha/2)-stable time.
Point sample_rot_invariant(const StableParams& params, double t, RngStream& rng);

/// Same law as sample_rot_invariant but always via subordination, also for dim = 1.
Point sample_subordinated(const StableParams& params, double t, RngStream& rng);

/// Increments L_{t_0} - L_0, L_{t_1} - L_{t_0}, ... for strictly increasing
/// positive times.
std::vector<Point> increment_path(const StableParams& params, std::span<const double> times,
                                  RngStream& rng);

} // namespace ddsde
