// Acceptance run: one PASS/FAIL line per criterion, supporting numbers below it.
#include "ddsde/density_scheme.hpp"
#include "ddsde/harness.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/rng.hpp"
#include "ddsde/stable_noise.hpp"
#include "ddsde/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

using namespace ddsde;

namespace {

const std::vector<double> kAlphas{1.2, 1.5, 1.8};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void print(const Check& c) {
    std::printf("    %-4s %s = %.6g (%s %.6g%s)%s%s\n", c.pass ? "ok" : "bad", c.name.c_str(), c.value,
                c.relation.c_str(), c.threshold, c.relation == "in" ? (", " + num(c.upper)).c_str() : "",
                c.detail.empty() ? "" : "  ", c.detail.c_str());
}

bool all_pass(const std::vector<Check>& checks) {
    bool ok = !checks.empty();
    for (const auto& c : checks) {
        print(c);
        ok = ok && c.pass;
    }
    return ok;
}

/// The configuration of the rate-reproduction criterion.
SchemeConfig reference_config() {
    SchemeConfig c;
    c.alphas = kAlphas;
    return c;
}

std::vector<RateStudyResult> g_studies;

bool rate_reproduction() {
    g_studies = run_rate_study(reference_config());
    std::vector<Check> checks;
    for (const auto& r : g_studies) {
        std::printf("    alpha %.1f errors:", r.alpha);
        for (double e : r.errors) std::printf(" %.4g", e);
        std::printf("\n");
        if (!r.fit) {
            checks.push_back(check_less("fit alpha=" + num(r.alpha), 1.0, 0.0, r.degenerate_reason));
            continue;
        }
        checks.push_back(check_at_least("slope alpha=" + num(r.alpha), r.fit->slope,
                                        r.theory_slope - 0.15));
        checks.push_back(check_at_least("r2 alpha=" + num(r.alpha), r.fit->r2, 0.98));
    }
    return all_pass(checks);
}

bool slope_ordering() {
    if (g_studies.size() != kAlphas.size()) return false;
    bool ok = true;
    for (std::size_t i = 0; i < g_studies.size(); ++i) {
        if (!g_studies[i].fit) return false;
        std::printf("    alpha %.1f slope %.4f\n", g_studies[i].alpha, g_studies[i].fit->slope);
        if (i > 0) ok = ok && g_studies[i].fit->slope > g_studies[i - 1].fit->slope;
    }
    return ok;
}

bool kernel_identities() {
    bool ok = true;
    const Grid grid(1, 10.0, 512);
    for (double alpha : kAlphas) {
        std::printf("    alpha %.1f\n", alpha);
        ok = all_pass(kernel_suite(alpha, 1, grid)) && ok;
    }
    return ok;
}

double ecf(const std::vector<double>& xs, double xi) {
    double s = 0.0;
    for (double x : xs) s += std::cos(xi * x);
    return s / static_cast<double>(xs.size());
}

bool sampler_law() {
    std::vector<Check> checks;
    const std::size_t n = 1000000;
    const Grid hist_grid(1, 20.0, 256);
    for (double alpha : kAlphas) {
        const StableParams p(alpha, 1);
        const std::string tag = " alpha=" + num(alpha);
        RngStream direct_rng(101, 0), sub_rng(102, 0);
        std::vector<double> direct(n), sub(n);
        for (auto& x : direct) x = sample_sym_stable_1d(p, 1.0, direct_rng);
        for (auto& x : sub) x = sample_subordinated(p, 1.0, sub_rng)[0];
        for (double xi : {0.5, 1.0, 2.0}) {
            const double err = std::abs(ecf(direct, xi) - std::exp(-std::pow(xi, alpha)));
            checks.push_back(check_less("ecf xi=" + num(xi) + tag, err, 0.002));
        }
        checks.push_back(check_less("ks direct vs subordinated" + tag, stats::ks_two_sample(direct, sub),
                                    stats::ks_critical_value(0.01, n, n)));

        const auto table = eval_heat_kernel(p, 1.0, hist_grid);
        std::vector<double> hist(hist_grid.size(), 0.0);
        for (double x : direct) {
            const double w = hist_grid.wrap_coordinate(x);
            const int k = hist_grid.wrap(
                static_cast<int>(std::lround((w + hist_grid.half_width()) / hist_grid.spacing())));
            hist[k] += 1.0 / (static_cast<double>(n) * hist_grid.spacing());
        }
        checks.push_back(check_less("histogram l1" + tag,
                                    lp_distance(GridDensity(hist_grid, hist), table.density, 1.0), 0.01));
    }
    return all_pass(checks);
}

bool exactness() {
    std::vector<Check> checks;
    const Grid g(1, 10.0, 512);
    const auto rho0 = gaussian_density(g, 0.1);
    const double h = 1.0 / 16.0, T = 0.5;
    for (double alpha : kAlphas) {
        const StableParams p(alpha, 1);
        const std::string tag = " alpha=" + num(alpha);
        const std::vector<double> outputs{0.1, 0.3, 0.45};
        const auto zero = em_density_evolve(rho0, make_drift({DriftKind::Zero}), h, T, p, outputs);
        double worst = 0.0;
        for (std::size_t i = 1; i < zero.times.size(); ++i) {
            worst = std::max(worst, lp_distance(zero.densities[i], semigroup_convolve(p, zero.times[i], rho0), 1.0));
        }
        checks.push_back(check_less("zero drift vs semigroup" + tag, worst, 1e-6));

        // Drift acts on (h, T]; the speed gives a shift of 8 cells.
        const double c = 8.0 * g.spacing() / (T - h);
        const auto moved = em_density_evolve(rho0, constant_drift({c, 0.0}, 1), h, T, p);
        const auto free = semigroup_convolve(p, T, rho0);
        std::vector<double> shifted(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) shifted[i] = free[g.wrap(static_cast<int>(i) - 8)];
        checks.push_back(check_less("constant drift vs translation" + tag,
                                    lp_distance(moved.at(T), GridDensity(g, shifted), 1.0), 1e-4));
    }
    return all_pass(checks);
}

bool lemma_diagnostics() {
    bool ok = true;
    for (double alpha : kAlphas) {
        SchemeConfig c = reference_config();
        c.alphas = {alpha};
        std::printf("    alpha %.1f\n", alpha);
        std::vector<Check> selected;
        for (auto& check : run_diagnostics(c)) {
            for (const char* prefix : {"duhamel", "uniform_bound", "time_holder", "lemma21"}) {
                if (check.name.rfind(prefix, 0) == 0) {
                    selected.push_back(check);
                    break;
                }
            }
        }
        ok = all_pass(selected) && ok;
    }
    return ok;
}

bool cross_validation() {
    SchemeConfig c = reference_config();
    c.alphas = {1.5};
    c.particles.h = 1.0 / 32.0;
    const auto small = cross_validate_mc(c, 10000);
    const auto large = cross_validate_mc(c, 100000);
    std::vector<Check> checks{
        check_less("gap N=1e5", large.gap, 0.05),
        check_less("gap N=1e5 vs N=1e4", large.gap, small.gap),
    };
    std::printf("    wrap fraction N=1e5 %.3g\n", large.wrap_fraction);
    return all_pass(checks);
}

bool fpe_agreement() {
    SchemeConfig c = reference_config();
    c.alphas = {1.5};
    c.fpe.dt = 1e-3;
    const auto r = fpe_consistency(c, 1.5);
    return all_pass({check_less("fpe vs scheme at h=2^-9", r.gap, 2.0 * r.refinement_delta,
                                "dt-halving delta " + num(r.refinement_delta))});
}

bool reproducibility() {
    auto manifest = [] {
        SchemeConfig c = load_scheme_config(DDSDE_SMALL_STUDY_CONFIG);
        const auto results = run_rate_study(c);
        auto m = make_manifest("rate-study", c);
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : results) rs.push_back(to_json(r));
        m["results"] = rs;
        finish_manifest(m, rate_study_checks(results));
        return m.dump(2);
    };
    const std::string a = manifest();
    const std::string b = manifest();
    std::printf("    manifest bytes %zu / %zu\n", a.size(), b.size());
    return a == b;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<bool()>>> criteria{
        {"1 rate reproduction", rate_reproduction},
        {"2 slope ordering", slope_ordering},
        {"3 kernel identities", kernel_identities},
        {"4 sampler law", sampler_law},
        {"5 exactness degenerations", exactness},
        {"6 lemma diagnostics", lemma_diagnostics},
        {"7 particle cross-validation", cross_validation},
        {"8 fpe consistency", fpe_agreement},
        {"9 reproducible manifests", reproducibility},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string error;
        try {
            ok = run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!error.empty()) std::printf("    error: %s\n", error.c_str());
        std::printf("%s criterion %s (%.1f s)\n", ok ? "PASS" : "FAIL", name.c_str(), secs);
        std::fflush(stdout);
        failed += ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
