// Command-line front end: one subcommand per experiment, each writing a JSON
// manifest (plus data files) into --out.
//
// Exit codes: 0 all checks passed, 1 a check failed or a numeric guard
// tripped, 2 configuration error.

#include "ddsde/config.hpp"
#include "ddsde/error.hpp"
#include "ddsde/harness.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/particles.hpp"
#include "ddsde/rng.hpp"
#include "ddsde/stable_noise.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ddsde;

namespace {

struct Overrides {
    std::string config;
    std::string out = ".";
    std::vector<double> alpha;
    std::optional<int> dim;
    std::optional<double> h, T, kappa, L, sigma;
    std::optional<int> n;
    std::optional<std::string> drift, direction, rho0, path, format;
    std::optional<long long> seed;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "Experiment file (key = value lines)");
    app->add_option("--out", o.out, "Output directory")->capture_default_str();
    app->add_option("--alpha", o.alpha, "Stability index; repeat for several");
    app->add_option("--dim", o.dim, "Dimension (1 or 2)");
    app->add_option("--h", o.h, "Time step");
    app->add_option("--T", o.T, "Horizon");
    app->add_option("--drift", o.drift, "zero|autonomous|nemytskii_sat|nemytskii_trunc|linear_unbounded");
    app->add_option("--kappa", o.kappa, "Drift bound / Lipschitz constant");
    app->add_option("--direction", o.direction, "sine|tanh|constant");
    app->add_option("--L", o.L, "Half width of the periodic box");
    app->add_option("--n", o.n, "Grid points per axis (even)");
    app->add_option("--rho0", o.rho0, "gaussian|stable|uniform_bump");
    app->add_option("--sigma", o.sigma, "Width of the Gaussian initial density");
    app->add_option("--seed", o.seed, "Random seed");
    app->add_option("--path", o.path, "Push-forward path: gridded|linear|direct");
    app->add_option("--format", o.format, "Density output: csv|binary");
}

json merged_config(const Overrides& o) {
    json j = o.config.empty() ? json::object() : load_config_file(o.config);
    if (!o.alpha.empty()) j["alpha"] = o.alpha;
    if (o.dim) j["dim"] = *o.dim;
    if (o.h) j["h"] = *o.h;
    if (o.T) j["T"] = *o.T;
    if (o.drift) j["drift"]["kind"] = *o.drift;
    if (o.kappa) j["drift"]["kappa"] = *o.kappa;
    if (o.direction) j["drift"]["direction"] = *o.direction;
    if (o.L) j["grid"]["L"] = *o.L;
    if (o.n) j["grid"]["n"] = *o.n;
    if (o.rho0) j["rho0"]["kind"] = *o.rho0;
    if (o.sigma) j["rho0"]["sigma"] = *o.sigma;
    if (o.seed) j["seed"] = *o.seed;
    if (o.path) j["path"] = *o.path;
    if (o.format) j["density_format"] = *o.format;
    return j;
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    require(!ec, ErrorCode::IoError, "cannot create output directory " + dir);
    return p;
}

void write_text(const fs::path& file, const std::string& content) {
    std::ofstream os(file, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + file.string());
    os << content;
}

std::string write_density(const fs::path& dir, const std::string& stem, const GridDensity& d,
                          const SchemeConfig& c) {
    const bool binary = c.density_format == "binary";
    const std::string name = stem + (binary ? ".bin" : ".csv");
    std::ofstream os(dir / name, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + (dir / name).string());
    if (binary) write_binary(os, d);
    else write_csv(os, d);
    return name;
}

int emit(const fs::path& dir, json& manifest, const std::vector<Check>& checks) {
    const bool ok = finish_manifest(manifest, checks);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    for (const auto& c : checks) {
        std::printf("%-4s %-40s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value);
    }
    return ok ? 0 : 1;
}

int cmd_kernel(const Overrides& o, double t) {
    const auto c = config_from_json(merged_config(o));
    const auto dir = prepare_out(o.out);
    const Grid grid = c.make_grid();
    auto manifest = make_manifest("kernel", c);
    const auto table = eval_heat_kernel(c.params(c.alpha()), t, grid);
    manifest["results"] = {{"t", t},
                           {"clamped_mass", table.clamped_mass},
                           {"density_file", write_density(dir, "kernel", table.density, c)}};
    return emit(dir, manifest, kernel_suite(c.alpha(), c.dim, grid));
}

int cmd_sample(const Overrides& o, double t, std::size_t count) {
    const auto c = config_from_json(merged_config(o));
    const auto dir = prepare_out(o.out);
    const StableParams params = c.params(c.alpha());
    std::vector<Point> draws(count);
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng(c.seed, i);
        draws[i] = sample_rot_invariant(params, t, rng);
    }
    std::ofstream os(dir / "samples.csv");
    require(static_cast<bool>(os), ErrorCode::IoError, "cannot write samples.csv");
    os << (c.dim == 1 ? "x\n" : "x,y\n");
    char buf[64];
    for (const auto& p : draws) {
        if (c.dim == 1) std::snprintf(buf, sizeof buf, "%.17g\n", p[0]);
        else std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p[0], p[1]);
        os << buf;
    }
    // Empirical characteristic function along the first axis.
    std::vector<Check> checks;
    json ecf = json::array();
    const double tol = 2.0 / std::sqrt(static_cast<double>(count));
    for (double xi : {0.5, 1.0, 2.0}) {
        double re = 0.0;
        for (const auto& p : draws) re += std::cos(xi * p[0]);
        re /= static_cast<double>(count);
        const double exact = std::exp(-t * std::pow(xi, params.alpha));
        ecf.push_back({{"xi", xi}, {"empirical", re}, {"exact", exact}});
        char name[48];
        std::snprintf(name, sizeof name, "characteristic_function xi=%g", xi);
        checks.push_back(check_less(name, std::abs(re - exact), tol));
    }
    auto manifest = make_manifest("sample", c);
    manifest["results"] = {{"t", t}, {"count", count}, {"characteristic_function", ecf}};
    return emit(dir, manifest, checks);
}

int cmd_em_density(const Overrides& o) {
    const auto c = config_from_json(merged_config(o));
    const auto dir = prepare_out(o.out);
    const double alpha = c.alpha();
    const auto params = c.params(alpha);
    const auto drift = c.make_drift();
    std::vector<Check> checks;
    const auto report = measure_drift(drift, c.dim);
    const double worst = std::max(report.max_norm, report.max_lipschitz);
    checks.push_back({"drift_hypothesis", worst, drift.kappa * (1.0 + 1e-9), "<=", worst <= drift.kappa * (1.0 + 1e-9)});
    validate_drift(drift, c.dim);
    const auto rho_0 = c.initial_density(alpha);
    const auto traj = em_density_evolve(rho_0, drift, c.h, c.T, params, c.output_times, c.scheme_options());
    json files = json::array();
    double min_mass = 1.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "density_%04zu", i);
        files.push_back({{"t", traj.times[i]}, {"file", write_density(dir, stem, traj.densities[i], c)}});
        min_mass = std::min(min_mass, mass(traj.densities[i]));
    }
    checks.push_back(check_at_least("mass_floor", min_mass, 1.0 - 1e-3));
    checks.push_back(check_less("clamped_mass", traj.clamped_mass, 1e-5));
    checks.push_back(check_less("uniform_bound", check_uniform_bound(traj, rho_0), 1e300, "finite"));
    auto manifest = make_manifest("em-density", c);
    manifest["results"] = {{"densities", files}, {"clamped_mass", traj.clamped_mass}};
    return emit(dir, manifest, checks);
}

int cmd_em_particles(const Overrides& o, std::optional<std::size_t> N, std::optional<double> bandwidth) {
    auto j = merged_config(o);
    if (N) j["particles"]["N"] = *N;
    if (bandwidth) j["particles"]["bandwidth"] = *bandwidth;
    if (o.h) j["particles"]["h"] = *o.h;
    const auto c = config_from_json(j);
    const auto dir = prepare_out(o.out);
    const auto cv = cross_validate_mc(c, c.particles.N);
    std::vector<Check> checks;
    checks.push_back(check_less("particle_gap", cv.gap, cv.budget, "L1 between KDE and deterministic density at T"));
    checks.push_back(check_less("wrap_fraction", cv.wrap_fraction, 1e-3));
    auto manifest = make_manifest("em-particles", c);
    manifest["results"] = {{"gap", cv.gap}, {"budget", cv.budget}, {"wrap_fraction", cv.wrap_fraction}};
    return emit(dir, manifest, checks);
}

int cmd_fpe(const Overrides& o, std::optional<double> dt, std::optional<std::string> splitting,
            std::optional<std::string> transport) {
    auto j = merged_config(o);
    if (dt) j["fpe"]["dt"] = *dt;
    if (splitting) j["fpe"]["splitting"] = *splitting;
    if (transport) j["fpe"]["transport"] = *transport;
    const auto c = config_from_json(j);
    const auto dir = prepare_out(o.out);
    const double alpha = c.alpha();
    const auto params = c.params(alpha);
    const auto drift = c.make_drift();
    validate_drift(drift, c.dim);
    const auto rho_0 = c.initial_density(alpha);
    FpeConfig fc = c.fpe;
    fc.store_stride = std::max(1, static_cast<int>(std::lround(0.05 / fc.dt)));
    const auto traj = fpe_solve(rho_0, drift, params, c.T, fc);

    const Grid grid = c.make_grid();
    GridFunction phi(grid);
    const double wave = std::max(1.0, std::round(grid.half_width() / std::numbers::pi)) * std::numbers::pi /
                        grid.half_width();
    for (std::size_t i = 0; i < grid.size(); ++i) phi.values[i] = std::cos(wave * grid.point(i)[0]);
    std::vector<Check> checks;
    checks.push_back(check_less("mass_conservation", std::abs(mass(traj.densities.back()) - mass(rho_0)), 1e-8));
    checks.push_back(check_less("clamped_mass", traj.clamped_mass, 1e-6));
    json files = json::array();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "fpe_%04zu", i);
        files.push_back({{"t", traj.times[i]}, {"file", write_density(dir, stem, traj.densities[i], c)}});
    }
    auto manifest = make_manifest("fpe", c);
    manifest["results"] = {{"densities", files},
                           {"weak_residual_cos", fpe_weak_residual(traj, drift, params, phi, traj.times.back())}};
    return emit(dir, manifest, checks);
}

int cmd_rate_study(const Overrides& o) {
    const auto c = config_from_json(merged_config(o));
    const auto dir = prepare_out(o.out);
    const auto results = run_rate_study(c);
    std::ofstream csv(dir / "errors.csv");
    require(static_cast<bool>(csv), ErrorCode::IoError, "cannot write errors.csv");
    write_error_csv(csv, c, results);
    auto manifest = make_manifest("rate-study", c);
    json list = json::array();
    for (const auto& r : results) list.push_back(to_json(r));
    manifest["results"] = {{"studies", list}, {"error_csv", "errors.csv"}};
    return emit(dir, manifest, rate_study_checks(results));
}

int cmd_diagnose(const Overrides& o, std::optional<std::size_t> mc, bool with_fpe) {
    const auto c = config_from_json(merged_config(o));
    const auto dir = prepare_out(o.out);
    auto checks = run_diagnostics(c);
    auto manifest = make_manifest("diagnose", c);
    if (mc) {
        const auto cv = cross_validate_mc(c, *mc);
        checks.push_back(check_less("particle_gap", cv.gap, cv.budget));
        manifest["results"]["cross_validation"] = {{"N", *mc}, {"gap", cv.gap}, {"wrap_fraction", cv.wrap_fraction}};
    }
    if (with_fpe) {
        const auto f = fpe_consistency(c, c.alpha());
        checks.push_back(check_less("fpe_consistency", f.gap, 2.0 * f.refinement_delta,
                                    "threshold is twice the FPE dt-halving change"));
        manifest["results"]["fpe"] = {{"gap", f.gap}, {"refinement_delta", f.refinement_delta}};
    }
    return emit(dir, manifest, checks);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Euler-Maruyama densities for density-dependent SDEs with stable noise"};
    app.set_help_flag("--help", "Print help");
    app.require_subcommand(1);

    Overrides o;
    double kernel_t = 0.5, sample_t = 1.0;
    std::size_t count = 100000;
    std::optional<std::size_t> particles_n, mc;
    std::optional<double> bandwidth, dt;
    std::optional<std::string> splitting, transport;
    bool with_fpe = false;

    auto* kernel = app.add_subcommand("kernel", "Heat kernel table and identity checks");
    add_common(kernel, o);
    kernel->add_option("--t", kernel_t, "Time")->capture_default_str();

    auto* sample = app.add_subcommand("sample", "Draw stable increments");
    add_common(sample, o);
    sample->add_option("--t", sample_t, "Time")->capture_default_str();
    sample->add_option("--count", count, "Number of draws")->capture_default_str();

    auto* em_density = app.add_subcommand("em-density", "Deterministic scheme density");
    add_common(em_density, o);

    auto* em_particles = app.add_subcommand("em-particles", "Particle scheme vs deterministic density");
    add_common(em_particles, o);
    em_particles->add_option("--N", particles_n, "Particle count");
    em_particles->add_option("--bandwidth", bandwidth, "KDE bandwidth (default: Silverman)");

    auto* fpe = app.add_subcommand("fpe", "Fokker-Planck reference solver");
    add_common(fpe, o);
    fpe->add_option("--dt", dt, "Time step");
    fpe->add_option("--splitting", splitting, "lie|strang");
    fpe->add_option("--transport", transport, "upwind1|centered_limited");

    auto* rate = app.add_subcommand("rate-study", "Convergence rate in h");
    add_common(rate, o);

    auto* diagnose = app.add_subcommand("diagnose", "Scheme diagnostics");
    add_common(diagnose, o);
    diagnose->add_option("--mc", mc, "Also cross-validate with this many particles");
    diagnose->add_flag("--fpe", with_fpe, "Also compare with the FPE solver");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (kernel->parsed()) return cmd_kernel(o, kernel_t);
        if (sample->parsed()) return cmd_sample(o, sample_t, count);
        if (em_density->parsed()) return cmd_em_density(o);
        if (em_particles->parsed()) return cmd_em_particles(o, particles_n, bandwidth);
        if (fpe->parsed()) return cmd_fpe(o, dt, splitting, transport);
        if (rate->parsed()) return cmd_rate_study(o);
        if (diagnose->parsed()) return cmd_diagnose(o, mc, with_fpe);
    } catch (const Error& e) {
        std::cerr << "ddsde: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "ddsde: config: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
