#pragma once

#include "ddsde/density_scheme.hpp"
#include "ddsde/drift.hpp"
#include "ddsde/fpe_solver.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/particles.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ddsde {

inline constexpr int kManifestSchemaVersion = 1;

struct InitialSpec {
    /// "gaussian", "stable" (heat kernel at time `time`) or "uniform_bump"
    /// (indicator of [-width, width]^d).
    std::string kind = "gaussian";
    double sigma = 0.1;
    double time = 0.05;
    double width = 1.0;
};

struct GridSpec {
    int n = 512;
    double L = 10.0;
};

enum class ReferenceKind { SelfConvergence, Fpe };

struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::SelfConvergence;
    /// Self-convergence: reference step h_min / divisor.
    int divisor = 8;
    /// FPE reference: time step.
    double dt = 1e-3;
};

struct ParticleSpec {
    std::size_t N = 100000;
    double h = 1.0 / 32.0;
    KdeConfig kde{};
};

/// Everything an experiment needs. Built from a config file (see
/// config_from_json for the key set) with CLI overrides applied on top.
struct SchemeConfig {
    std::vector<double> alphas{1.5};
    int dim = 1;
    BuiltinDrift drift{DriftKind::NemytskiiSat, 1.0, Direction::Sine, 1};
    InitialSpec rho0{};
    GridSpec grid{};
    std::vector<double> h_ladder{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
    /// Step of single-run subcommands and diagnostics.
    double h = 1.0 / 32.0;
    double T = 0.5;
    ReferenceSpec reference{};
    FpeConfig fpe{};
    ParticleSpec particles{};
    PushPath path = PushPath::Gridded;
    std::vector<double> output_times{};
    std::uint64_t seed = 1;
    /// "csv" or "binary".
    std::string density_format = "csv";

    double alpha() const { return alphas.front(); }
    Grid make_grid() const { return Grid(dim, grid.L, grid.n); }
    StableParams params(double alpha) const { return StableParams(alpha, dim); }
    DriftSpec make_drift() const;
    GridDensity initial_density(double alpha) const;
    SchemeOptions scheme_options() const { return {path, {}}; }
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
SchemeConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SchemeConfig& c);
SchemeConfig load_scheme_config(const std::string& path);

std::string_view reference_kind_name(ReferenceKind k);

struct FitResult {
    double slope;
    double intercept;
    double stderr_slope;
    double r2;
};

/// Least squares of log e on log h. Throws DegenerateFit when any e <= 1e-12
/// or all h coincide, InvalidArgument for fewer than 3 pairs.
FitResult fit_rate(std::span<const std::pair<double, double>> pairs);

struct RateStudyResult {
    double alpha;
    std::vector<double> hs;
    std::vector<double> errors;
    std::optional<FitResult> fit;
    /// Set when the fit was refused (errors at the noise floor).
    std::string degenerate_reason;
    double theory_slope;
    ReferenceKind reference_kind;
    /// h_ref or the FPE dt.
    double reference_resolution;
    /// Round-off level of the reference: 1e-12 per reference step. Errors at
    /// or below it make the fit degenerate.
    double noise_floor = 0.0;
    double total_clamped_mass = 0.0;
    double min_mass = 1.0;
    bool monotone = false;
};

/// One rate study per alpha in the config (run in parallel, assembled in order).
std::vector<RateStudyResult> run_rate_study(const SchemeConfig& config);
RateStudyResult run_rate_study(const SchemeConfig& config, double alpha);

/// Writes alpha,h,l1_error,reference_kind,grid_n,domain_L,seed.
void write_error_csv(std::ostream& os, const SchemeConfig& config,
                     std::span<const RateStudyResult> results);

/// One named pass/fail statistic.
struct Check {
    std::string name;
    double value;
    double threshold;
    /// "<", "<=", ">=" or "in" (value within [threshold, upper]).
    std::string relation;
    bool pass;
    std::string detail{};
    double upper = 0.0;
};

Check check_less(std::string name, double value, double threshold, std::string detail = {});
Check check_at_least(std::string name, double value, double threshold, std::string detail = {});
Check check_within(std::string name, double value, double lo, double hi, std::string detail = {});

nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const RateStudyResult& r);

/// Rate-study checks: slope >= theory - 0.15 and R^2 >= 0.98 per alpha, and
/// strictly increasing slopes when several alphas are studied.
std::vector<Check> rate_study_checks(std::span<const RateStudyResult> results);

/// Kernel identities at the given alpha on the config's dimension.
std::vector<Check> kernel_suite(double alpha, int dim, const Grid& grid);

/// Drift validation, Duhamel residual, uniform bound, time regularity, the
/// one-step moment bound, mass and symmetry checks. Failures are reported,
/// never thrown.
std::vector<Check> run_diagnostics(const SchemeConfig& config);

struct CrossValidation {
    double gap;
    double budget;
    double wrap_fraction;
    bool pass;
};

/// Particle KDE against the deterministic density at T.
CrossValidation cross_validate_mc(const SchemeConfig& config, std::size_t N);

struct FpeConsistency {
    double gap;
    double refinement_delta;
    bool pass;
};

/// ||rho_FPE(T) - rho_h(T)||_1 at h = min(h_ladder) against twice the change
/// of the FPE solution when its dt is halved.
FpeConsistency fpe_consistency(const SchemeConfig& config, double alpha);

/// Manifest skeleton: schema version, command and resolved config.
nlohmann::json make_manifest(const std::string& command, const SchemeConfig& config);

/// Adds checks and the overall verdict; returns true when all pass.
bool finish_manifest(nlohmann::json& manifest, std::span<const Check> checks);

} // namespace ddsde
