#include "ddsde/spectral.hpp"

#include "ddsde/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace ddsde {

namespace {

// The FFTW planner is not reentrant; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

int signed_index(int k, int n) { return k <= n / 2 ? k : k - n; }

} // namespace

double wavenumber(const Grid& grid, int index) {
    const int n = grid.points_per_axis();
    const int ks = index == n / 2 ? n / 2 : signed_index(index, n);
    return std::numbers::pi * ks / grid.half_width();
}

SpectralWorkspace::SpectralWorkspace(const Grid& grid) : grid_(grid) {
    const std::size_t total = grid.size();
    const int n = grid.points_per_axis();
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(total);
    buffer_ = buf;
    if (grid.dim() == 1) {
        forward_plan_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        inverse_plan_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
        forward_plan_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        inverse_plan_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    modes_.resize(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        const auto idx = grid.unflatten(flat);
        SpectralMode mode;
        for (int a = 0; a < grid.dim(); ++a) {
            mode.xi[a] = wavenumber(grid, idx[a]);
            mode.nyquist[a] = idx[a] == n / 2;
        }
        mode.norm = std::hypot(mode.xi[0], mode.xi[1]);
        modes_[flat] = mode;
    }
}

SpectralWorkspace::~SpectralWorkspace() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
    fftw_free(buffer_);
}

std::span<std::complex<double>> SpectralWorkspace::data() noexcept {
    return {reinterpret_cast<std::complex<double>*>(buffer_), grid_.size()};
}

void SpectralWorkspace::load(std::span<const double> values) {
    auto d = data();
    require(values.size() == d.size(), ErrorCode::InvalidArgument, "spectral load size mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = {values[i], 0.0};
}

void SpectralWorkspace::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

void SpectralWorkspace::inverse() {
    fftw_execute(static_cast<fftw_plan>(inverse_plan_));
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (auto& c : data()) c *= scale;
}

void SpectralWorkspace::store_real(std::span<double> out) const {
    const auto* d = reinterpret_cast<const std::complex<double>*>(buffer_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i].real();
}

std::vector<double> SpectralWorkspace::apply(std::span<const double> values, const Multiplier& m) {
    load(values);
    forward();
    auto d = data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= m(modes_[i]);
    inverse();
    std::vector<double> out(values.size());
    store_real(out);
    return out;
}

double SpectralWorkspace::high_frequency_fraction(std::span<const double> values) {
    load(values);
    forward();
    const int n = grid_.points_per_axis();
    const int cutoff = (3 * n) / 8;
    double total = 0.0, high = 0.0;
    auto d = data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double e = std::norm(d[i]);
        total += e;
        const auto idx = grid_.unflatten(i);
        bool is_high = std::abs(signed_index(idx[0], n)) >= cutoff;
        if (grid_.dim() == 2) is_high = is_high || std::abs(signed_index(idx[1], n)) >= cutoff;
        if (is_high) high += e;
    }
    return total > 0.0 ? high / total : 0.0;
}

Multiplier semigroup_multiplier(double alpha, double t) {
    return [alpha, t](const SpectralMode& mode) -> std::complex<double> {
        return std::exp(-t * std::pow(mode.norm, alpha));
    };
}

BandlimitedInterpolant::BandlimitedInterpolant(const Grid& grid, std::span<const double> values)
    : grid_(grid) {
    SpectralWorkspace ws(grid);
    ws.load(values);
    ws.forward();
    const auto d = ws.data();
    const double scale = 1.0 / static_cast<double>(grid.size());
    coefficients_.assign(d.begin(), d.end());
    for (auto& c : coefficients_) c *= scale;
}

namespace {

// phi[k] = exp(i xi_k (x + L)) in FFT order, with the Nyquist entry replaced
// by cos(xi_N (x + L)).
void axis_phases(const Grid& grid, double x, std::vector<std::complex<double>>& phi) {
    const int n = grid.points_per_axis();
    const double s = x + grid.half_width();
    phi.resize(n);
    for (int k = 0; k < n; ++k) {
        const double xi = wavenumber(grid, k);
        phi[k] = k == n / 2 ? std::complex<double>(std::cos(xi * s), 0.0) : std::polar(1.0, xi * s);
    }
}

} // namespace

double BandlimitedInterpolant::operator()(const Point& x) const {
    const int n = grid_.points_per_axis();
    std::vector<std::complex<double>> phi0, phi1;
    axis_phases(grid_, x[0], phi0);
    std::complex<double> sum = 0.0;
    if (grid_.dim() == 1) {
        for (int k = 0; k < n; ++k) sum += coefficients_[k] * phi0[k];
        return sum.real();
    }
    axis_phases(grid_, x[1], phi1);
    for (int k0 = 0; k0 < n; ++k0) {
        std::complex<double> row = 0.0;
        const auto* c = &coefficients_[static_cast<std::size_t>(k0) * n];
        for (int k1 = 0; k1 < n; ++k1) row += c[k1] * phi1[k1];
        sum += phi0[k0] * row;
    }
    return sum.real();
}

std::vector<double> BandlimitedInterpolant::evaluate(std::span<const Point> points) const {
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = (*this)(points[i]);
    return out;
}

namespace {

// Fold a spectrum on signed indices -n/2 .. n/2 per axis onto FFT storage
// order, weighting the split Nyquist modes by 1/2, apply m, and return the
// inverse transform as a density (N / (2L)^d scaling).
std::vector<double> fold_and_invert(const Grid& grid,
                                    std::span<const std::complex<double>> amplitude,
                                    const Multiplier& m) {
    const int n = grid.points_per_axis();
    const int ext = n + 1;
    const double L = grid.half_width();
    const double dxi = std::numbers::pi / L;
    SpectralWorkspace ws(grid);
    auto spec = ws.data();
    for (auto& c : spec) c = 0.0;
    auto fold = [&](int e) { return ((e - n / 2) % n + n) % n; };
    auto weight = [&](int e) { return (e == 0 || e == n) ? 0.5 : 1.0; };
    auto mode_of = [&](int e0, int e1) {
        SpectralMode mode;
        mode.xi[0] = dxi * (e0 - n / 2);
        mode.xi[1] = grid.dim() == 2 ? dxi * (e1 - n / 2) : 0.0;
        mode.nyquist = {e0 == 0 || e0 == n, grid.dim() == 2 && (e1 == 0 || e1 == n)};
        mode.norm = std::hypot(mode.xi[0], mode.xi[1]);
        return mode;
    };
    if (grid.dim() == 1) {
        for (int e = 0; e < ext; ++e) spec[fold(e)] += weight(e) * m(mode_of(e, 0)) * amplitude[e];
    } else {
        for (int e0 = 0; e0 < ext; ++e0) {
            for (int e1 = 0; e1 < ext; ++e1) {
                const double w = weight(e0) * weight(e1);
                spec[grid.flatten(fold(e0), fold(e1))] +=
                    w * m(mode_of(e0, e1)) * amplitude[static_cast<std::size_t>(e0) * ext + e1];
            }
        }
    }
    ws.inverse();
    std::vector<double> out(grid.size());
    ws.store_real(out);
    const double scale = static_cast<double>(grid.size()) / std::pow(2.0 * L, grid.dim());
    for (double& v : out) v *= scale;
    return out;
}

} // namespace

std::vector<double> direct_pushforward_convolve(const Grid& grid, std::span<const double> weights,
                                                std::span<const Point> positions,
                                                const Multiplier& m) {
    require(weights.size() == positions.size(), ErrorCode::InvalidArgument,
            "weights and positions differ in length");
    const int n = grid.points_per_axis();
    const int ext = n + 1; // signed indices -n/2 .. n/2
    const double L = grid.half_width();
    const double dxi = std::numbers::pi / L;

    // Signed index s = e - n/2 for extended slot e.
    auto powers = [&](double z, std::vector<std::complex<double>>& out) {
        out.resize(ext);
        const double s = z + L;
        std::complex<double> cur = std::polar(1.0, dxi * (n / 2) * s);
        const std::complex<double> step = std::polar(1.0, -dxi * s);
        for (int e = 0; e < ext; ++e) {
            out[e] = cur;
            cur *= step;
        }
    };

    const std::size_t ext_size = grid.dim() == 1 ? ext : static_cast<std::size_t>(ext) * ext;
    std::vector<std::complex<double>> amplitude(ext_size, 0.0);
    std::vector<std::complex<double>> p0, p1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        powers(positions[i][0], p0);
        if (grid.dim() == 1) {
            for (int e = 0; e < ext; ++e) amplitude[e] += w * p0[e];
        } else {
            powers(positions[i][1], p1);
            for (int e0 = 0; e0 < ext; ++e0) {
                const std::complex<double> a = w * p0[e0];
                auto* row = &amplitude[static_cast<std::size_t>(e0) * ext];
                for (int e1 = 0; e1 < ext; ++e1) row[e1] += a * p1[e1];
            }
        }
    }

    return fold_and_invert(grid, amplitude, m);
}

GriddedPushforward::GriddedPushforward(const Grid& grid)
    : grid_(grid),
      fine_(std::make_unique<SpectralWorkspace>(
          Grid(grid.dim(), grid.half_width(), 2 * grid.points_per_axis()))) {
    // Gaussian gridding width for n modes, oversampling 2 and 12 points per side.
    const double n = grid.points_per_axis();
    tau_ = std::numbers::pi * kSpread / (n * n * 2.0 * 1.5);
}

GriddedPushforward::~GriddedPushforward() = default;
GriddedPushforward::GriddedPushforward(GriddedPushforward&&) noexcept = default;
GriddedPushforward& GriddedPushforward::operator=(GriddedPushforward&&) noexcept = default;

std::vector<double> GriddedPushforward::operator()(std::span<const double> weights,
                                                   std::span<const Point> positions,
                                                   const Multiplier& m) {
    require(weights.size() == positions.size(), ErrorCode::InvalidArgument,
            "weights and positions differ in length");
    using std::numbers::pi;
    const int n = grid_.points_per_axis();
    const int fine_n = 2 * n;
    const int dim = grid_.dim();
    const double L = grid_.half_width();
    const double cell = 2.0 * pi / fine_n;
    const double inv4tau = 1.0 / (4.0 * tau_);

    std::vector<double> fine(dim == 1 ? fine_n : static_cast<std::size_t>(fine_n) * fine_n, 0.0);
    std::array<std::array<double, 2 * kSpread>, 2> g{};
    std::array<int, 2> first{};
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const double w = weights[j];
        if (w == 0.0) continue;
        for (int a = 0; a < dim; ++a) {
            double theta = std::fmod(pi * (positions[j][a] + L) / L, 2.0 * pi);
            if (theta < 0.0) theta += 2.0 * pi;
            const int base = static_cast<int>(std::floor(theta / cell));
            first[a] = base - kSpread + 1;
            for (int q = 0; q < 2 * kSpread; ++q) {
                const double x = theta - (first[a] + q) * cell;
                g[a][q] = std::exp(-x * x * inv4tau);
            }
        }
        if (dim == 1) {
            for (int q = 0; q < 2 * kSpread; ++q) {
                fine[((first[0] + q) % fine_n + fine_n) % fine_n] += w * g[0][q];
            }
        } else {
            for (int q0 = 0; q0 < 2 * kSpread; ++q0) {
                const std::size_t row =
                    static_cast<std::size_t>(((first[0] + q0) % fine_n + fine_n) % fine_n) * fine_n;
                const double a = w * g[0][q0];
                for (int q1 = 0; q1 < 2 * kSpread; ++q1) {
                    fine[row + ((first[1] + q1) % fine_n + fine_n) % fine_n] += a * g[1][q1];
                }
            }
        }
    }
    fine_->load(fine);
    fine_->forward();
    const auto spec = fine_->data();

    // Signed index s has amplitude sqrt(pi/tau) e^{s^2 tau} F(s) / M per axis.
    const int ext = n + 1;
    std::vector<double> deconv(ext);
    for (int e = 0; e < ext; ++e) {
        const double s = e - n / 2;
        deconv[e] = std::sqrt(pi / tau_) * std::exp(s * s * tau_) / fine_n;
    }
    auto slot = [&](int e) { return ((e - n / 2) % fine_n + fine_n) % fine_n; };
    std::vector<std::complex<double>> amplitude(dim == 1 ? ext : static_cast<std::size_t>(ext) * ext);
    if (dim == 1) {
        for (int e = 0; e < ext; ++e) amplitude[e] = deconv[e] * spec[slot(e)];
    } else {
        for (int e0 = 0; e0 < ext; ++e0) {
            for (int e1 = 0; e1 < ext; ++e1) {
                amplitude[static_cast<std::size_t>(e0) * ext + e1] =
                    deconv[e0] * deconv[e1] *
                    spec[static_cast<std::size_t>(slot(e0)) * fine_n + slot(e1)];
            }
        }
    }
    return fold_and_invert(grid_, amplitude, m);
}

} // namespace ddsde
