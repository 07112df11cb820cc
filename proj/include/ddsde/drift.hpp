#pragma once

#include "ddsde/grid.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ddsde {

/// b(t, x, u) -> d-vector. Must be pure: evaluators are called concurrently.
using DriftEvaluator = std::function<Point(double t, const Point& x, double u)>;

/// Drift coefficient together with its declared constant kappa, which bounds
/// both |b| and the Lipschitz constant of b in u.
struct DriftSpec {
    DriftEvaluator evaluator;
    double kappa = 0.0;
    std::string label = "custom";

    Point operator()(double t, const Point& x, double u) const { return evaluator(t, x, u); }
};

enum class DriftKind {
    Zero,
    /// b = kappa v(x), independent of u.
    Autonomous,
    /// b = kappa v(x) u / (1 + u).
    NemytskiiSat,
    /// b = v(x) min(u, kappa).
    NemytskiiTrunc,
    /// b = v(x) u. Unbounded; exists only so that configs can exercise the
    /// validation failure.
    LinearUnbounded,
};

/// Unit-bounded direction field v(x).
enum class Direction {
    /// sin(x_a) / sqrt(d) per axis (odd in x).
    Sine,
    /// tanh(x_a) / sqrt(d) per axis (odd in x).
    Tanh,
    /// e_1.
    Constant,
};

struct BuiltinDrift {
    DriftKind kind = DriftKind::Zero;
    double kappa = 1.0;
    Direction direction = Direction::Sine;
    int dim = 1;
};

DriftSpec make_drift(const BuiltinDrift& builtin);

/// b = c for a fixed vector c; kappa = |c|.
DriftSpec constant_drift(const Point& c, int dim);

std::string_view drift_kind_name(DriftKind kind);
std::string_view direction_name(Direction direction);
/// Throws ConfigError for unknown names.
DriftKind parse_drift_kind(std::string_view name);
Direction parse_direction(std::string_view name);

/// Largest multiple j h with j h <= s, computed as floor(s/h + 1e-12) h.
double pi_h(double s, double h);

/// The scheme's drift: zero for s < h, otherwise b(s, x, u_at_pi).
/// Throws NegativeDensityInput for u_at_pi < 0.
Point eval_bh(const DriftSpec& drift, double s, const Point& x, double u_at_pi, double h);

/// Integral of s -> b(s, x, u) over [t0, t1] by 3-point Gauss-Legendre.
Point displacement(const DriftSpec& drift, double t0, double t1, const Point& x, double u);

/// Drift displacement over [kh, (k+1)h] with frozen (x, u); k >= 1.
Point step_displacement(const DriftSpec& drift, int k, double h, const Point& x, double u);

struct DriftReport {
    double max_norm = 0.0;
    double max_lipschitz = 0.0;
    std::size_t samples = 0;
};

/// Halton sampling of (t, x, u1, u2) over t in [0, 2], x in [-10, 10]^d,
/// u in [0, 20]. Throws DriftViolatesH when either statistic exceeds
/// kappa (1 + 1e-9).
DriftReport validate_drift(const DriftSpec& drift, int dim, std::size_t sample_count = 4096);

/// Same sampling without throwing.
DriftReport measure_drift(const DriftSpec& drift, int dim, std::size_t sample_count = 4096);

} // namespace ddsde
