#include "ddsde/drift.hpp"

#include "ddsde/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ddsde {

namespace {

double halton(std::size_t index, unsigned base) {
    double f = 1.0, r = 0.0;
    for (std::size_t i = index; i > 0; i /= base) {
        f /= base;
        r += f * static_cast<double>(i % base);
    }
    return r;
}

std::function<Point(const Point&)> direction_field(Direction direction, int dim) {
    const double unit = 1.0 / std::sqrt(static_cast<double>(dim));
    switch (direction) {
    case Direction::Sine:
        return [unit, dim](const Point& x) {
            return Point{unit * std::sin(x[0]), dim == 2 ? unit * std::sin(x[1]) : 0.0};
        };
    case Direction::Tanh:
        return [unit, dim](const Point& x) {
            return Point{unit * std::tanh(x[0]), dim == 2 ? unit * std::tanh(x[1]) : 0.0};
        };
    case Direction::Constant:
        return [](const Point&) { return Point{1.0, 0.0}; };
    }
    return {};
}

double norm(const Point& p) { return std::hypot(p[0], p[1]); }

} // namespace

DriftSpec make_drift(const BuiltinDrift& builtin) {
    require(builtin.dim == 1 || builtin.dim == 2, ErrorCode::InvalidArgument, "dim must be 1 or 2");
    require(builtin.kappa > 0.0 || builtin.kind == DriftKind::Zero, ErrorCode::InvalidArgument,
            "kappa must be positive");
    const double kappa = builtin.kappa;
    const auto v = direction_field(builtin.direction, builtin.dim);
    const std::string label = std::string(drift_kind_name(builtin.kind));
    switch (builtin.kind) {
    case DriftKind::Zero:
        return {[](double, const Point&, double) { return Point{0.0, 0.0}; }, 0.0, label};
    case DriftKind::Autonomous:
        return {[v, kappa](double, const Point& x, double) {
                    const Point d = v(x);
                    return Point{kappa * d[0], kappa * d[1]};
                },
                kappa, label};
    case DriftKind::NemytskiiSat:
        return {[v, kappa](double, const Point& x, double u) {
                    const Point d = v(x);
                    const double s = kappa * u / (1.0 + u);
                    return Point{s * d[0], s * d[1]};
                },
                kappa, label};
    case DriftKind::NemytskiiTrunc:
        // |b| <= kappa, but the u-Lipschitz constant is 1.
        return {[v, kappa](double, const Point& x, double u) {
                    const Point d = v(x);
                    const double s = std::min(u, kappa);
                    return Point{s * d[0], s * d[1]};
                },
                std::max(kappa, 1.0), label};
    case DriftKind::LinearUnbounded:
        return {[v](double, const Point& x, double u) {
                    const Point d = v(x);
                    return Point{u * d[0], u * d[1]};
                },
                kappa, label};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown drift kind");
}

DriftSpec constant_drift(const Point& c, int dim) {
    const Point value{c[0], dim == 2 ? c[1] : 0.0};
    return {[value](double, const Point&, double) { return value; }, norm(value), "constant"};
}

std::string_view drift_kind_name(DriftKind kind) {
    switch (kind) {
    case DriftKind::Zero: return "zero";
    case DriftKind::Autonomous: return "autonomous";
    case DriftKind::NemytskiiSat: return "nemytskii_sat";
    case DriftKind::NemytskiiTrunc: return "nemytskii_trunc";
    case DriftKind::LinearUnbounded: return "linear_unbounded";
    }
    return "unknown";
}

std::string_view direction_name(Direction direction) {
    switch (direction) {
    case Direction::Sine: return "sine";
    case Direction::Tanh: return "tanh";
    case Direction::Constant: return "constant";
    }
    return "unknown";
}

DriftKind parse_drift_kind(std::string_view name) {
    for (auto kind : {DriftKind::Zero, DriftKind::Autonomous, DriftKind::NemytskiiSat,
                      DriftKind::NemytskiiTrunc, DriftKind::LinearUnbounded}) {
        if (drift_kind_name(kind) == name) return kind;
    }
    throw Error(ErrorCode::ConfigError, "unknown drift kind '" + std::string(name) + "'");
}

Direction parse_direction(std::string_view name) {
    for (auto d : {Direction::Sine, Direction::Tanh, Direction::Constant}) {
        if (direction_name(d) == name) return d;
    }
    throw Error(ErrorCode::ConfigError, "unknown drift direction '" + std::string(name) + "'");
}

double pi_h(double s, double h) {
    require(s >= 0.0 && h > 0.0, ErrorCode::InvalidArgument, "pi_h needs s >= 0 and h > 0");
    return std::floor(s / h + 1e-12) * h;
}

Point eval_bh(const DriftSpec& drift, double s, const Point& x, double u_at_pi, double h) {
    require(u_at_pi >= 0.0, ErrorCode::NegativeDensityInput,
            "drift fed a negative density value; clamp first");
    if (s < h) return {0.0, 0.0};
    return drift(s, x, u_at_pi);
}

Point displacement(const DriftSpec& drift, double t0, double t1, const Point& x, double u) {
    static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double half = 0.5 * (t1 - t0);
    const double mid = 0.5 * (t0 + t1);
    Point out{0.0, 0.0};
    for (int q = 0; q < 3; ++q) {
        const Point b = drift(mid + half * nodes[q], x, u);
        out[0] += weights[q] * half * b[0];
        out[1] += weights[q] * half * b[1];
    }
    return out;
}

Point step_displacement(const DriftSpec& drift, int k, double h, const Point& x, double u) {
    require(k >= 1, ErrorCode::InvalidArgument, "the first step carries no drift");
    require(u >= 0.0, ErrorCode::NegativeDensityInput, "density value must be nonnegative");
    return displacement(drift, k * h, (k + 1) * h, x, u);
}

DriftReport measure_drift(const DriftSpec& drift, int dim, std::size_t sample_count) {
    DriftReport report;
    for (std::size_t i = 1; i <= sample_count; ++i) {
        const double t = 2.0 * halton(i, 2);
        const Point x{-10.0 + 20.0 * halton(i, 3), dim == 2 ? -10.0 + 20.0 * halton(i, 5) : 0.0};
        const double u1 = 20.0 * halton(i, 7);
        const double u2 = 20.0 * halton(i, 11);
        const Point b1 = drift(t, x, u1);
        const Point b2 = drift(t, x, u2);
        report.max_norm = std::max({report.max_norm, norm(b1), norm(b2)});
        if (u1 != u2) {
            const double q = norm({b1[0] - b2[0], b1[1] - b2[1]}) / std::abs(u1 - u2);
            report.max_lipschitz = std::max(report.max_lipschitz, q);
        }
    }
    report.samples = sample_count;
    return report;
}

DriftReport validate_drift(const DriftSpec& drift, int dim, std::size_t sample_count) {
    const auto report = measure_drift(drift, dim, sample_count);
    const double limit = drift.kappa * (1.0 + 1e-9);
    require(report.max_norm <= limit && report.max_lipschitz <= limit, ErrorCode::DriftViolatesH,
            "drift '" + drift.label + "' exceeds kappa = " + std::to_string(drift.kappa) +
                " (max |b| = " + std::to_string(report.max_norm) +
                ", max Lipschitz quotient = " + std::to_string(report.max_lipschitz) + ")");
    return report;
}

} // namespace ddsde
