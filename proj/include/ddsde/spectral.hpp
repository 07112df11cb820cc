#pragma once

#include "ddsde/grid.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ddsde {

/// One Fourier mode of the periodic grid, in FFT storage order.
struct SpectralMode {
    Point xi{0.0, 0.0};
    double norm = 0.0;
    /// Axis-wise flag for the Nyquist index n/2, whose sign is ambiguous.
    std::array<bool, 2> nyquist{false, false};
    bool any_nyquist() const noexcept { return nyquist[0] || nyquist[1]; }
};

using Multiplier = std::function<std::complex<double>(const SpectralMode&)>;

/// Owns FFTW plans and an aligned buffer for one grid. Not shareable across
/// threads; create one per worker.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const Grid& grid);
    ~SpectralWorkspace();
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<SpectralMode>& modes() const noexcept { return modes_; }
    std::span<std::complex<double>> data() noexcept;

    void load(std::span<const double> values);
    /// Unnormalized forward transform.
    void forward();
    /// Inverse transform including the 1/N factor.
    void inverse();
    void store_real(std::span<double> out) const;

    /// values -> real part of IFFT(m * FFT(values)).
    std::vector<double> apply(std::span<const double> values, const Multiplier& m);

    /// Fraction of spectral energy in the top quarter of the frequency range
    /// (any axis index with |k| >= 3n/8).
    double high_frequency_fraction(std::span<const double> values);

private:
    Grid grid_;
    std::vector<SpectralMode> modes_;
    void* buffer_ = nullptr;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

/// Angular wavenumber of FFT index k on a grid (Nyquist reported positive).
double wavenumber(const Grid& grid, int index);

/// Heat semigroup multiplier exp(-t |xi|^alpha) for any alpha in (0, 2].
Multiplier semigroup_multiplier(double alpha, double t);

/// Evaluates the trigonometric interpolant of grid data at arbitrary points.
/// The Nyquist mode is split evenly between +/- so the interpolant is real.
class BandlimitedInterpolant {
public:
    BandlimitedInterpolant(const Grid& grid, std::span<const double> values);
    double operator()(const Point& x) const;
    std::vector<double> evaluate(std::span<const Point> points) const;

private:
    Grid grid_;
    std::vector<std::complex<double>> coefficients_; // FFT order, already divided by N
};

/// Exact band-limited evaluation of y_j -> sum_i w_i K(y_j - z_i), where K has
/// the Fourier multiplier m and the grid's band limit. Cost O(n^(2d)).
std::vector<double> direct_pushforward_convolve(const Grid& grid, std::span<const double> weights,
                                                std::span<const Point> positions,
                                                const Multiplier& m);

/// Same result as direct_pushforward_convolve at O(N log N) cost: the point
/// masses are spread with a Gaussian onto a twice-oversampled grid and the
/// spreading is divided out in spectrum (relative error near 1e-12).
class GriddedPushforward {
public:
    explicit GriddedPushforward(const Grid& grid);
    ~GriddedPushforward();
    GriddedPushforward(GriddedPushforward&&) noexcept;
    GriddedPushforward& operator=(GriddedPushforward&&) noexcept;

    std::vector<double> operator()(std::span<const double> weights, std::span<const Point> positions,
                                   const Multiplier& m);

private:
    static constexpr int kSpread = 12;
    Grid grid_;
    std::unique_ptr<SpectralWorkspace> fine_;
    double tau_;
};

} // namespace ddsde
