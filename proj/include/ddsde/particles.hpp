#pragma once

#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/rng.hpp"
#include "ddsde/stable_noise.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace ddsde {

struct ParticleCloud {
    double time = 0.0;
    std::vector<Point> positions;

    std::size_t size() const noexcept { return positions.size(); }
};

enum class KdeKernel { Gaussian, Epanechnikov };

std::string_view kde_kernel_name(KdeKernel k);
KdeKernel parse_kde_kernel(std::string_view name);

struct KdeConfig {
    KdeKernel kernel = KdeKernel::Gaussian;
    /// Bandwidth; 0 selects Silverman's rule.
    double bandwidth = 0.0;
};

/// Silverman's rule: 0.9 min(sd, IQR/1.34) N^(-1/5) in one dimension,
/// (4/(d+2))^(1/(d+4)) sd N^(-1/(d+4)) otherwise (sd averaged over axes).
double silverman_bandwidth(const ParticleCloud& cloud, int dim);

/// Binned kernel density estimate on the grid. Positions are wrapped into the
/// periodic box, binned linearly and convolved with the sampled kernel (whose
/// discrete mass is normalized to 1). Bit-identical under any permutation of
/// the particles.
GridDensity kde_density(const ParticleCloud& cloud, const KdeConfig& config, const Grid& grid);

/// dx^d sum |histA - histB| of nearest-cell histograms normalized to densities.
double empirical_tv(const ParticleCloud& a, const ParticleCloud& b, const Grid& grid);

/// Draws an initial position.
using InitialSampler = std::function<Point(RngStream&)>;

/// Samples N(0, sigma^2 I) in dim dimensions.
InitialSampler gaussian_sampler(double sigma, int dim);

/// Inverse-CDF sampler of a one-dimensional grid density (piecewise-linear
/// CDF through cell midpoints).
InitialSampler inverse_cdf_sampler(const GridDensity& density);

struct ParticleRun {
    /// Clouds at 0, h, 2h, ..., up to T.
    std::vector<ParticleCloud> clouds;
    /// Fraction of particle-steps whose position left [-L, L)^d.
    double wrap_fraction = 0.0;
};

/// Mean-field particle version of the scheme: at each step k >= 1 the
/// density value fed to the drift is the KDE of the cloud at the particle's
/// own position (linear interpolation in the grid). Every particle and step
/// draws from its own RNG stream, so results do not depend on scheduling.
ParticleRun em_particle_simulate(std::size_t N, const InitialSampler& rho_0, const DriftSpec& drift,
                                 double h, double T, const StableParams& params,
                                 const KdeConfig& kde, const Grid& grid, std::uint64_t seed);

} // namespace ddsde
