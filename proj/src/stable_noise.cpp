#include "ddsde/stable_noise.hpp"

#include "ddsde/error.hpp"

#include <cmath>
#include <numbers>

namespace ddsde {

StableParams::StableParams(double alpha_, int dim_) : alpha(alpha_), dim(dim_) {
    require(alpha > 1.0 && alpha < 2.0, ErrorCode::InvalidArgument,
            "alpha must lie in the open interval (1, 2)");
    require(dim == 1 || dim == 2, ErrorCode::InvalidArgument, "dim must be 1 or 2");
}

double standard_symmetric_stable(double alpha, RngStream& rng) {
    using std::numbers::pi;
    const double v = pi * (rng.uniform_open() - 0.5);
    const double w = rng.exponential();
    if (alpha == 2.0) return 2.0 * std::sin(v) * std::sqrt(w);
    if (alpha == 1.0) return std::tan(v);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

double sample_sym_stable_1d(const StableParams& params, double t, RngStream& rng) {
    require(params.dim == 1, ErrorCode::InvalidArgument, "sample_sym_stable_1d needs dim = 1");
    require(t > 0.0, ErrorCode::InvalidArgument, "time must be positive");
    return std::pow(t, 1.0 / params.alpha) * standard_symmetric_stable(params.alpha, rng);
}

double sample_subordinator(double alpha_half, double t, RngStream& rng) {
    require(alpha_half > 0.0 && alpha_half < 1.0, ErrorCode::InvalidArgument,
            "subordinator index must lie in (0, 1)");
    require(t > 0.0, ErrorCode::InvalidArgument, "time must be positive");
    const double b = alpha_half;
    const double u = std::numbers::pi * rng.uniform_open();
    const double e = rng.exponential();
    const double s1 = std::sin(b * u) / std::pow(std::sin(u), 1.0 / b) *
                      std::pow(std::sin((1.0 - b) * u) / e, (1.0 - b) / b);
    return std::pow(t, 1.0 / b) * s1;
}

Point sample_subordinated(const StableParams& params, double t, RngStream& rng) {
    const double s = sample_subordinator(0.5 * params.alpha, t, rng);
    // Generator Laplacian: per-coordinate variance 2s.
    const double scale = std::sqrt(2.0 * s);
    Point out{scale * rng.normal(), 0.0};
    if (params.dim == 2) out[1] = scale * rng.normal();
    return out;
}

Point sample_rot_invariant(const StableParams& params, double t, RngStream& rng) {
    require(t > 0.0, ErrorCode::InvalidArgument, "time must be positive");
    if (params.dim == 1) return {sample_sym_stable_1d(params, t, rng), 0.0};
    return sample_subordinated(params, t, rng);
}

std::vector<Point> increment_path(const StableParams& params, std::span<const double> times,
                                  RngStream& rng) {
    std::vector<Point> out;
    out.reserve(times.size());
    double previous = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        require(times[k] > previous, ErrorCode::NonMonotoneTimes,
                "times must be strictly increasing and positive");
        out.push_back(sample_rot_invariant(params, times[k] - previous, rng));
        previous = times[k];
    }
    return out;
}

} // namespace ddsde
