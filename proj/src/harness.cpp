#include "ddsde/harness.hpp"

#include "ddsde/config.hpp"
#include "ddsde/error.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/parallel.hpp"
#include "ddsde/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>

namespace ddsde {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!keys.contains(key)) config_fail("unknown key '" + key + "'" + where);
    }
}

double number(const json& j, const std::string& key) {
    if (!j.is_number()) config_fail("'" + key + "' must be a number");
    return j.get<double>();
}

long long integer(const json& j, const std::string& key) {
    if (!j.is_number_integer()) config_fail("'" + key + "' must be an integer");
    return j.get<long long>();
}

std::string text(const json& j, const std::string& key) {
    if (!j.is_string()) config_fail("'" + key + "' must be a string");
    return j.get<std::string>();
}

const json& table(const json& j, const std::string& key) {
    if (!j.is_object()) config_fail("'" + key + "' must be a table { ... }");
    return j;
}

std::vector<double> numbers(const json& j, const std::string& key) {
    std::vector<double> out;
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) config_fail("'" + key + "' must be a list of numbers");
    for (const auto& v : j) out.push_back(number(v, key));
    return out;
}

// Runs jobs on at most worker_count() threads; results keep job order.
template <class T>
std::vector<T> run_pool(std::vector<std::function<T()>> jobs) {
    std::vector<std::optional<T>> slots(jobs.size());
    const std::size_t width = worker_count();
    for (std::size_t start = 0; start < jobs.size(); start += width) {
        std::vector<std::future<T>> batch;
        const std::size_t stop = std::min(jobs.size(), start + width);
        for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, jobs[i]));
        for (std::size_t i = start; i < stop; ++i) slots[i].emplace(batch[i - start].get());
    }
    std::vector<T> out;
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool odd_direction(Direction d) { return d == Direction::Sine || d == Direction::Tanh; }

} // namespace

DriftSpec SchemeConfig::make_drift() const {
    BuiltinDrift b = drift;
    b.dim = dim;
    return ddsde::make_drift(b);
}

GridDensity SchemeConfig::initial_density(double alpha) const {
    const Grid g = make_grid();
    if (rho0.kind == "gaussian") return gaussian_density(g, rho0.sigma);
    if (rho0.kind == "stable") return eval_heat_kernel(params(alpha), rho0.time, g).density;
    if (rho0.kind == "uniform_bump") {
        std::vector<double> v(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.point(i);
            if (std::abs(x[0]) <= rho0.width && std::abs(x[1]) <= rho0.width) v[i] = 1.0;
        }
        const double m = integrate(g, v);
        require(m > 0.0, ErrorCode::ConfigError, "uniform bump narrower than one cell");
        for (double& x : v) x /= m;
        return GridDensity(g, std::move(v));
    }
    config_fail("unknown rho0 kind '" + rho0.kind + "'");
}

std::string_view reference_kind_name(ReferenceKind k) {
    return k == ReferenceKind::SelfConvergence ? "self_convergence" : "fpe";
}

SchemeConfig config_from_json(const json& j) {
    if (!j.is_object()) config_fail("config must be a table of keys");
    reject_unknown(j,
                   {"alpha", "dim", "drift", "rho0", "grid", "h_ladder", "h", "T", "reference", "fpe",
                    "particles", "path", "output_times", "seed", "density_format"},
                   "");
    SchemeConfig c;
    if (j.contains("alpha")) c.alphas = numbers(j["alpha"], "alpha");
    if (j.contains("dim")) c.dim = static_cast<int>(integer(j["dim"], "dim"));
    if (j.contains("drift")) {
        const auto& d = table(j["drift"], "drift");
        reject_unknown(d, {"kind", "kappa", "direction"}, " in drift");
        if (d.contains("kind")) c.drift.kind = parse_drift_kind(text(d["kind"], "drift.kind"));
        if (d.contains("kappa")) c.drift.kappa = number(d["kappa"], "drift.kappa");
        if (d.contains("direction")) c.drift.direction = parse_direction(text(d["direction"], "drift.direction"));
    }
    if (j.contains("rho0")) {
        const auto& r = table(j["rho0"], "rho0");
        reject_unknown(r, {"kind", "sigma", "time", "width"}, " in rho0");
        if (r.contains("kind")) c.rho0.kind = text(r["kind"], "rho0.kind");
        if (r.contains("sigma")) c.rho0.sigma = number(r["sigma"], "rho0.sigma");
        if (r.contains("time")) c.rho0.time = number(r["time"], "rho0.time");
        if (r.contains("width")) c.rho0.width = number(r["width"], "rho0.width");
    }
    if (j.contains("grid")) {
        const auto& g = table(j["grid"], "grid");
        reject_unknown(g, {"n", "L"}, " in grid");
        if (g.contains("n")) c.grid.n = static_cast<int>(integer(g["n"], "grid.n"));
        if (g.contains("L")) c.grid.L = number(g["L"], "grid.L");
    }
    if (j.contains("h_ladder")) c.h_ladder = numbers(j["h_ladder"], "h_ladder");
    if (j.contains("h")) c.h = number(j["h"], "h");
    if (j.contains("T")) c.T = number(j["T"], "T");
    if (j.contains("reference")) {
        const auto& r = table(j["reference"], "reference");
        reject_unknown(r, {"kind", "divisor", "dt"}, " in reference");
        if (r.contains("kind")) {
            const std::string k = text(r["kind"], "reference.kind");
            if (k == "self_convergence") c.reference.kind = ReferenceKind::SelfConvergence;
            else if (k == "fpe") c.reference.kind = ReferenceKind::Fpe;
            else config_fail("unknown reference kind '" + k + "'");
        }
        if (r.contains("divisor")) c.reference.divisor = static_cast<int>(integer(r["divisor"], "reference.divisor"));
        if (r.contains("dt")) c.reference.dt = number(r["dt"], "reference.dt");
    }
    if (j.contains("fpe")) {
        const auto& f = table(j["fpe"], "fpe");
        reject_unknown(f, {"dt", "splitting", "transport"}, " in fpe");
        if (f.contains("dt")) c.fpe.dt = number(f["dt"], "fpe.dt");
        if (f.contains("splitting")) c.fpe.splitting = parse_splitting(text(f["splitting"], "fpe.splitting"));
        if (f.contains("transport")) c.fpe.transport = parse_transport(text(f["transport"], "fpe.transport"));
    }
    if (j.contains("particles")) {
        const auto& p = table(j["particles"], "particles");
        reject_unknown(p, {"N", "h", "kernel", "bandwidth"}, " in particles");
        if (p.contains("N")) {
            const long long n = integer(p["N"], "particles.N");
            if (n < 1) config_fail("particles.N must be positive");
            c.particles.N = static_cast<std::size_t>(n);
        }
        if (p.contains("h")) c.particles.h = number(p["h"], "particles.h");
        if (p.contains("kernel")) c.particles.kde.kernel = parse_kde_kernel(text(p["kernel"], "particles.kernel"));
        if (p.contains("bandwidth")) {
            const auto& b = p["bandwidth"];
            if (b.is_string() && b.get<std::string>() == "auto") c.particles.kde.bandwidth = 0.0;
            else c.particles.kde.bandwidth = number(b, "particles.bandwidth");
        }
    }
    if (j.contains("path")) c.path = parse_push_path(text(j["path"], "path"));
    if (j.contains("output_times")) c.output_times = numbers(j["output_times"], "output_times");
    if (j.contains("seed")) {
        const long long s = integer(j["seed"], "seed");
        if (s < 0) config_fail("seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("density_format")) {
        c.density_format = text(j["density_format"], "density_format");
        if (c.density_format != "csv" && c.density_format != "binary") {
            config_fail("density_format must be \"csv\" or \"binary\"");
        }
    }

    // Semantic validation: library errors on these values are config errors.
    try {
        if (c.alphas.empty()) config_fail("alpha list is empty");
        for (double a : c.alphas) (void)c.params(a);
        (void)c.make_grid();
        (void)c.make_drift();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_fail(e.what());
    }
    if (c.rho0.kind != "gaussian" && c.rho0.kind != "stable" && c.rho0.kind != "uniform_bump") {
        config_fail("rho0.kind must be gaussian, stable or uniform_bump");
    }
    if (!(c.rho0.sigma > 0.0 && c.rho0.time > 0.0 && c.rho0.width > 0.0)) {
        config_fail("rho0 parameters must be positive");
    }
    if (!(c.h > 0.0 && c.h < 1.0)) config_fail("h must lie in (0, 1)");
    if (!(c.particles.h > 0.0 && c.particles.h < 1.0)) config_fail("particles.h must lie in (0, 1)");
    if (c.h_ladder.size() < 3) config_fail("h_ladder needs at least 3 entries");
    for (std::size_t i = 0; i < c.h_ladder.size(); ++i) {
        if (!(c.h_ladder[i] > 0.0 && c.h_ladder[i] < 1.0)) config_fail("h_ladder entries must lie in (0, 1)");
        if (i > 0 && !(c.h_ladder[i] < c.h_ladder[i - 1])) config_fail("h_ladder must be strictly decreasing");
    }
    if (!(c.T > c.h_ladder.front())) config_fail("T must exceed every step in h_ladder");
    if (!(c.T >= c.h)) config_fail("T must be at least h");
    if (!(c.fpe.dt > 0.0)) config_fail("fpe.dt must be positive");
    if (!(c.reference.dt > 0.0) || c.reference.divisor < 1) config_fail("invalid reference resolution");
    for (double t : c.output_times) {
        if (!(t >= 0.0 && t <= c.T)) config_fail("output_times must lie in [0, T]");
    }
    return c;
}

json config_to_json(const SchemeConfig& c) {
    json j;
    j["alpha"] = c.alphas;
    j["dim"] = c.dim;
    j["drift"] = {{"kind", drift_kind_name(c.drift.kind)},
                  {"kappa", c.drift.kappa},
                  {"direction", direction_name(c.drift.direction)}};
    j["rho0"] = {{"kind", c.rho0.kind}, {"sigma", c.rho0.sigma}, {"time", c.rho0.time}, {"width", c.rho0.width}};
    j["grid"] = {{"n", c.grid.n}, {"L", c.grid.L}};
    j["h_ladder"] = c.h_ladder;
    j["h"] = c.h;
    j["T"] = c.T;
    j["reference"] = {{"kind", reference_kind_name(c.reference.kind)},
                      {"divisor", c.reference.divisor},
                      {"dt", c.reference.dt}};
    j["fpe"] = {{"dt", c.fpe.dt},
                {"splitting", splitting_name(c.fpe.splitting)},
                {"transport", transport_name(c.fpe.transport)}};
    j["particles"] = {{"N", c.particles.N},
                      {"h", c.particles.h},
                      {"kernel", kde_kernel_name(c.particles.kde.kernel)},
                      {"bandwidth", c.particles.kde.bandwidth > 0.0 ? json(c.particles.kde.bandwidth) : json("auto")}};
    j["path"] = push_path_name(c.path);
    j["output_times"] = c.output_times;
    j["seed"] = c.seed;
    j["density_format"] = c.density_format;
    return j;
}

SchemeConfig load_scheme_config(const std::string& path) { return config_from_json(load_config_file(path)); }

FitResult fit_rate(std::span<const std::pair<double, double>> pairs) {
    require(pairs.size() >= 3, ErrorCode::InvalidArgument, "a rate fit needs at least 3 points");
    std::vector<double> xs, ys;
    for (const auto& [h, e] : pairs) {
        require(h > 0.0, ErrorCode::InvalidArgument, "steps must be positive");
        require(e > 1e-12, ErrorCode::DegenerateFit,
                "error " + format_double(e) + " at h = " + format_double(h) + " is at the noise floor");
        xs.push_back(std::log(h));
        ys.push_back(std::log(e));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    require(sxx > 0.0, ErrorCode::DegenerateFit, "all steps coincide");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - intercept - slope * xs[i];
        sse += r * r;
    }
    const double r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    const double stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
    return {slope, intercept, stderr_slope, r2};
}

RateStudyResult run_rate_study(const SchemeConfig& config, double alpha) {
    const StableParams params = config.params(alpha);
    const DriftSpec drift = config.make_drift();
    const GridDensity rho_0 = config.initial_density(alpha);
    const double h_min = config.h_ladder.back();
    const SchemeOptions options = config.scheme_options();

    RateStudyResult result;
    result.alpha = alpha;
    result.theory_slope = (alpha - 1.0) / alpha;
    result.reference_kind = config.reference.kind;
    result.hs = config.h_ladder;

    std::function<std::pair<GridDensity, double>()> reference_job;
    if (config.reference.kind == ReferenceKind::SelfConvergence) {
        require(config.reference.divisor >= 8, ErrorCode::ReferenceTooCoarse,
                "self-convergence reference must be at least 8x finer than min(h_ladder)");
        const double h_ref = h_min / config.reference.divisor;
        result.reference_resolution = h_ref;
        reference_job = [=] {
            auto traj = em_density_evolve(rho_0, drift, h_ref, config.T, params, {}, options);
            return std::make_pair(traj.densities.back(), traj.clamped_mass);
        };
    } else {
        const double limit = std::min({h_min / 8.0, h_min * h_min, 1e-3});
        require(config.reference.dt <= limit * (1.0 + 1e-12), ErrorCode::ReferenceTooCoarse,
                "FPE reference dt must be <= min(h_min/8, h_min^2, 1e-3) = " + format_double(limit));
        result.reference_resolution = config.reference.dt;
        FpeConfig fc = config.fpe;
        fc.dt = config.reference.dt;
        fc.store_stride = std::numeric_limits<int>::max();
        reference_job = [=] {
            auto traj = fpe_solve(rho_0, drift, params, config.T, fc);
            return std::make_pair(traj.densities.back(), traj.clamped_mass);
        };
    }

    struct Cell {
        GridDensity density;
        double clamped;
        double min_mass;
    };
    std::vector<std::function<Cell()>> jobs;
    jobs.push_back([&] {
        auto [d, c] = reference_job();
        const double m = mass(d);
        return Cell{std::move(d), c, m};
    });
    for (double h : config.h_ladder) {
        jobs.push_back([&, h] {
            auto traj = em_density_evolve(rho_0, drift, h, config.T, params, {}, options);
            double m = 1.0;
            for (const auto& d : traj.densities) m = std::min(m, mass(d));
            return Cell{traj.densities.back(), traj.clamped_mass, m};
        });
    }
    auto cells = run_pool(std::move(jobs));
    const auto& reference = cells.front().density;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        result.errors.push_back(lp_distance(cells[i].density, reference, 1.0));
    }
    for (const auto& c : cells) {
        result.total_clamped_mass += c.clamped;
        result.min_mass = std::min(result.min_mass, c.min_mass);
    }
    result.monotone = true;
    for (std::size_t i = 1; i < result.errors.size(); ++i) {
        if (!(result.errors[i] < result.errors[i - 1])) result.monotone = false;
    }
    result.noise_floor = 1e-12 * std::max(1.0, std::ceil(config.T / result.reference_resolution));
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < result.hs.size(); ++i) pairs.emplace_back(result.hs[i], result.errors[i]);
    for (std::size_t i = 0; i < result.hs.size(); ++i) {
        if (result.errors[i] <= result.noise_floor) {
            result.degenerate_reason = "error " + format_double(result.errors[i]) + " at h = " +
                                       format_double(result.hs[i]) + " is below the reference noise floor " +
                                       format_double(result.noise_floor);
            return result;
        }
    }
    try {
        result.fit = fit_rate(pairs);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateFit) throw;
        result.degenerate_reason = e.what();
    }
    return result;
}

std::vector<RateStudyResult> run_rate_study(const SchemeConfig& config) {
    std::vector<RateStudyResult> out;
    for (double alpha : config.alphas) out.push_back(run_rate_study(config, alpha));
    return out;
}

void write_error_csv(std::ostream& os, const SchemeConfig& config, std::span<const RateStudyResult> results) {
    os << "alpha,h,l1_error,reference_kind,grid_n,domain_L,seed\n";
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.hs.size(); ++i) {
            os << format_double(r.alpha) << ',' << format_double(r.hs[i]) << ','
               << format_double(r.errors[i]) << ',' << reference_kind_name(r.reference_kind) << ','
               << config.grid.n << ',' << format_double(config.grid.L) << ',' << config.seed << '\n';
        }
    }
}

Check check_less(std::string name, double value, double threshold, std::string detail) {
    return {std::move(name), value, threshold, "<", std::isfinite(value) && value < threshold, std::move(detail)};
}

Check check_at_least(std::string name, double value, double threshold, std::string detail) {
    return {std::move(name), value, threshold, ">=", std::isfinite(value) && value >= threshold, std::move(detail)};
}

Check check_within(std::string name, double value, double lo, double hi, std::string detail) {
    return {std::move(name), value, lo, "in", std::isfinite(value) && value >= lo && value <= hi,
            std::move(detail), hi};
}

json to_json(const Check& c) {
    json j{{"name", c.name}, {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
           {"relation", c.relation}, {"pass", c.pass}};
    if (c.relation == "in") j["bounds"] = {c.threshold, c.upper};
    else j["threshold"] = c.threshold;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

json to_json(const RateStudyResult& r) {
    json j{{"alpha", r.alpha},
           {"h", r.hs},
           {"l1_error", r.errors},
           {"theory_slope", r.theory_slope},
           {"reference_kind", reference_kind_name(r.reference_kind)},
           {"reference_resolution", r.reference_resolution},
           {"noise_floor", r.noise_floor},
           {"clamped_mass", r.total_clamped_mass},
           {"min_mass", r.min_mass},
           {"monotone", r.monotone}};
    if (r.fit) {
        j["fit"] = {{"slope", r.fit->slope},
                    {"intercept", r.fit->intercept},
                    {"stderr", r.fit->stderr_slope},
                    {"r2", r.fit->r2}};
    } else {
        j["fit"] = nullptr;
        j["degenerate"] = r.degenerate_reason;
    }
    return j;
}

std::vector<Check> rate_study_checks(std::span<const RateStudyResult> results) {
    std::vector<Check> checks;
    bool all_fitted = true;
    for (const auto& r : results) {
        const std::string tag = "alpha=" + format_double(r.alpha);
        if (!r.fit) {
            all_fitted = false;
            checks.push_back({"rate_fit " + tag, 0.0, 0.0, "degenerate", false, r.degenerate_reason});
            continue;
        }
        checks.push_back(check_at_least("rate_slope " + tag, r.fit->slope, r.theory_slope - 0.15,
                                        "theory " + format_double(r.theory_slope)));
        checks.push_back(check_at_least("rate_r2 " + tag, r.fit->r2, 0.98));
    }
    if (results.size() >= 2 && all_fitted) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < results.size(); ++i) {
            const double step = results[i].fit->slope - results[i - 1].fit->slope;
            worst = std::min(worst, results[i].alpha > results[i - 1].alpha ? step : -step);
        }
        Check c{"slope_ordering", worst, 0.0, ">", worst > 0.0,
                "smallest slope increment between consecutive alphas"};
        checks.push_back(c);
    }
    return checks;
}

std::vector<Check> kernel_suite(double alpha, int dim, const Grid& grid) {
    const StableParams params(alpha, dim);
    std::vector<Check> checks;
    // Free-space quadratures on every grid point are costly in 2-D.
    const Grid probe = dim == 1 ? grid : Grid(2, grid.half_width(), 32);
    checks.push_back(check_less("kernel_scaling_identity", scaling_identity_error(params, 0.5, probe), 1e-4));

    const auto q1 = eval_heat_kernel(params, 0.25, grid);
    const auto q2 = eval_heat_kernel(params, 0.5, grid);
    const auto composed = semigroup_convolve(params, 0.25, q1.density);
    checks.push_back(check_less("kernel_chapman_kolmogorov", lp_distance(composed, q2.density, 1.0), 1e-6));
    checks.push_back(check_less("kernel_symmetry", symmetry_error(q2.density), 1e-10));
    checks.push_back(check_less("kernel_normalization", std::abs(mass(q2.density) - 1.0), 1e-3));
    checks.push_back(check_less("kernel_heat_equation", heat_equation_residual(params, 0.5, grid), 1e-3));

    // The ratio is a function of |x| t^(-1/alpha) that approaches its limit
    // only slowly, so a box the size of the grid would measure truncation.
    // Probe radii: fine near the peak, then geometric out to 400.
    std::vector<double> radii;
    for (int i = 0; i <= 500; ++i) radii.push_back(0.02 * i);
    for (int i = 1; i <= 120; ++i) radii.push_back(10.0 * std::pow(40.0, i / 120.0));
    const double times[] = {0.25, 1.0, 4.0};
    std::vector<RatioRange> ranges;
    for (double t : times) ranges.push_back(two_sided_bound_ratio(params, t, radii));
    double drift = 0.0;
    for (const auto& r : ranges) {
        drift = std::max({drift, std::abs(r.min / ranges[1].min - 1.0), std::abs(r.max / ranges[1].max - 1.0)});
    }
    checks.push_back(check_less("kernel_two_sided_bound_drift", drift, 0.1,
                                "ratio range at t=1: [" + format_double(ranges[1].min) + ", " +
                                    format_double(ranges[1].max) + "]"));
    return checks;
}

std::vector<Check> run_diagnostics(const SchemeConfig& config) {
    std::vector<Check> checks;
    const double alpha = config.alpha();
    const StableParams params = config.params(alpha);
    const Grid grid = config.make_grid();
    const DriftSpec drift = config.make_drift();

    try {
        const auto report = validate_drift(drift, config.dim);
        const double worst = std::max(report.max_norm, report.max_lipschitz);
        const double limit = drift.kappa * (1.0 + 1e-9);
        checks.push_back({"drift_hypothesis", worst, limit, "<=", worst <= limit,
                          "max of |b| and the u-Lipschitz quotient"});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DriftViolatesH) throw;
        checks.push_back({"drift_hypothesis", std::numeric_limits<double>::infinity(), drift.kappa, "<", false,
                          e.what()});
        return checks;
    }
    try {
        for (auto& c : kernel_suite(alpha, config.dim, grid)) checks.push_back(std::move(c));

        const GridDensity rho_0 = config.initial_density(alpha);
        const double h = config.h;
        const double T = config.T;
        const double mid = pi_h(0.5 * T, h);
        const SchemeOptions options = config.scheme_options();
        const double steps[] = {2.0 * h, h, 0.5 * h};
        std::vector<std::function<SchemeTrajectory()>> jobs;
        for (double hh : steps) {
            jobs.push_back([&, hh] {
                return em_density_evolve(rho_0, drift, hh, T, params, std::vector<double>{mid}, options);
            });
        }
        auto trajs = run_pool(std::move(jobs));
        const SchemeTrajectory& traj = trajs[1];

        const double r8 = duhamel_residual(traj, mid, 8);
        const double r16 = duhamel_residual(traj, mid, 16);
        checks.push_back(check_less("duhamel_residual", r16, 1e-2, "t = " + format_double(mid) + ", 16 substeps"));
        if (r8 <= 1e-9) {
            checks.push_back({"duhamel_refinement", r8 > 0.0 ? r16 / r8 : 0.0, 0.25, "in", true,
                              "residual at the rounding floor", 1.0});
        } else {
            checks.push_back(check_within("duhamel_refinement", r16 / r8, 0.25, 1.0,
                                          "residual(16) / residual(8)"));
        }

        std::vector<double> ratios;
        for (const auto& t : trajs) ratios.push_back(check_uniform_bound(t, rho_0));
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        checks.push_back(check_less("uniform_bound_variation", *hi / *lo - 1.0, 0.2,
                                    "ratios at h = 2h0, h0, h0/2: " + format_double(ratios[0]) + ", " +
                                        format_double(ratios[1]) + ", " + format_double(ratios[2])));

        const auto pairs = dyadic_pairs(h, T);
        for (double p : {1.0, 2.0}) {
            const auto rows = time_holder_modulus(traj, p, pairs);
            double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
            for (const auto& r : rows) {
                rmin = std::min(rmin, r.ratio);
                rmax = std::max(rmax, r.ratio);
            }
            checks.push_back(check_less("time_holder_spread p=" + format_double(p), rmax / rmin, 4.0,
                                        "max ratio " + format_double(rmax)));
        }

        GridFunction f1(grid, std::vector<double>(grid.size(), 1.0));
        GridFunction f2(grid);
        const double wave = std::max(1.0, std::round(grid.half_width() / std::numbers::pi)) *
                            std::numbers::pi / grid.half_width();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Point x = grid.point(i);
            f2.values[i] = std::cos(wave * x[0]) * (config.dim == 2 ? std::cos(wave * x[1]) : 1.0);
        }
        const auto l_h = lemma21_check(f1, f2, trajs[1], mid + 0.5 * h);
        const auto l_half = lemma21_check(f1, f2, trajs[2], mid + 0.25 * h);
        checks.push_back(check_within("lemma21_h_halving", l_h.ratio / l_half.ratio, 0.5, 4.0,
                                      "ratio(h) = " + format_double(l_h.ratio)));

        double min_mass = 1.0, clamped = 0.0;
        for (const auto& t : trajs) {
            clamped = std::max(clamped, t.clamped_mass);
            for (const auto& d : t.densities) min_mass = std::min(min_mass, mass(d));
        }
        checks.push_back(check_at_least("mass_floor", min_mass, 1.0 - 1e-3));
        checks.push_back(check_less("clamped_mass", clamped, 1e-5));

        if (odd_direction(config.drift.direction) || config.drift.kind == DriftKind::Zero) {
            double sym = 0.0;
            const auto& last = traj.densities.back();
            for (std::size_t i = 0; i < grid.size(); ++i) sym = std::max(sym, std::abs(last[i] - last[grid.mirror(i)]));
            checks.push_back(check_less("symmetry_preservation", sym, 1e-8));
        }

        SpectralWorkspace ws(grid);
        double linf = 0.0;
        for (std::size_t n = 1; n < traj.times.size(); ++n) {
            const auto free_flow = ws.apply(rho_0.values(), semigroup_multiplier(alpha, traj.times[n]));
            const double top = *std::max_element(traj.densities[n].values().begin(), traj.densities[n].values().end());
            linf = std::max(linf, top / *std::max_element(free_flow.begin(), free_flow.end()));
        }
        checks.push_back(check_less("linf_bound", linf, 1.5, "max over t of max rho_h / max q*rho_0"));
    } catch (const Error& e) {
        checks.push_back({"diagnostics_error", std::numeric_limits<double>::quiet_NaN(), 0.0, "<", false, e.what()});
    }
    return checks;
}

CrossValidation cross_validate_mc(const SchemeConfig& config, std::size_t N) {
    require(N >= 10000, ErrorCode::InvalidArgument, "cross-validation needs at least 10^4 particles");
    const double alpha = config.alpha();
    const StableParams params = config.params(alpha);
    const Grid grid = config.make_grid();
    const DriftSpec drift = config.make_drift();
    const GridDensity rho_0 = config.initial_density(alpha);
    const double h = config.particles.h;
    const auto det = em_density_evolve(rho_0, drift, h, config.T, params, {}, config.scheme_options());

    InitialSampler sampler;
    if (config.rho0.kind == "gaussian") {
        sampler = gaussian_sampler(config.rho0.sigma, config.dim);
    } else {
        require(config.dim == 1, ErrorCode::InvalidArgument,
                "particle sampling of non-Gaussian initial data is one-dimensional");
        sampler = inverse_cdf_sampler(rho_0);
    }
    const auto run = em_particle_simulate(N, sampler, drift, h, config.T, params, config.particles.kde, grid,
                                          config.seed);
    const auto kde = kde_density(run.clouds.back(), config.particles.kde, grid);
    CrossValidation out;
    out.gap = lp_distance(kde, det.densities.back(), 1.0);
    out.budget = config.drift.kind == DriftKind::Zero ? 0.03 : 0.05;
    out.wrap_fraction = run.wrap_fraction;
    out.pass = out.gap < out.budget;
    return out;
}

FpeConsistency fpe_consistency(const SchemeConfig& config, double alpha) {
    const StableParams params = config.params(alpha);
    const DriftSpec drift = config.make_drift();
    const GridDensity rho_0 = config.initial_density(alpha);
    FpeConfig coarse = config.fpe;
    coarse.store_stride = std::numeric_limits<int>::max();
    FpeConfig fine = coarse;
    fine.dt = 0.5 * coarse.dt;
    std::vector<std::function<GridDensity()>> jobs;
    jobs.push_back([&] { return fpe_solve(rho_0, drift, params, config.T, coarse).densities.back(); });
    jobs.push_back([&] { return fpe_solve(rho_0, drift, params, config.T, fine).densities.back(); });
    jobs.push_back([&] {
        return em_density_evolve(rho_0, drift, config.h_ladder.back(), config.T, params, {}, config.scheme_options())
            .densities.back();
    });
    const auto out = run_pool(std::move(jobs));
    FpeConsistency result;
    result.gap = lp_distance(out[2], out[0], 1.0);
    result.refinement_delta = lp_distance(out[0], out[1], 1.0);
    result.pass = result.gap < 2.0 * result.refinement_delta;
    return result;
}

json make_manifest(const std::string& command, const SchemeConfig& config) {
    return json{{"schema_version", kManifestSchemaVersion},
                {"tool", "ddsde"},
                {"command", command},
                {"config", config_to_json(config)},
                {"results", json::object()}};
}

bool finish_manifest(json& manifest, std::span<const Check> checks) {
    bool ok = true;
    json list = json::array();
    for (const auto& c : checks) {
        list.push_back(to_json(c));
        ok = ok && c.pass;
    }
    manifest["checks"] = std::move(list);
    manifest["pass"] = ok;
    return ok;
}

} // namespace ddsde
