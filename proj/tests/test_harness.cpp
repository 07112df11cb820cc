#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddsde/config.hpp"
#include "ddsde/harness.hpp"
#include "test_util.hpp"

#include <cmath>
#include <sstream>

using namespace ddsde;
using nlohmann::json;

namespace {

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

// Small but resolved study for quick runs.
SchemeConfig small_config() {
    SchemeConfig c;
    c.grid = {128, 8.0};
    c.rho0.sigma = 0.3;
    c.h_ladder = {0.125, 0.0625, 0.03125};
    c.h = 0.0625;
    c.T = 0.5;
    return c;
}

} // namespace

TEST_CASE("config text parser") {
    const auto j = parse_config_text(R"(# experiment
alpha = [1.2, 1.5,
         1.8]
drift = { kind = "nemytskii_sat", kappa = 1.0,
          direction = "sine" }   # trailing comment
T = 0.5
seed = 42
flag = true
neg = -3e-2
)");
    CHECK(j["alpha"] == json({1.2, 1.5, 1.8}));
    CHECK(j["drift"]["kind"] == "nemytskii_sat");
    CHECK(j["drift"]["direction"] == "sine");
    CHECK(j["T"] == 0.5);
    CHECK(j["seed"].is_number_integer());
    CHECK(j["flag"] == true);
    CHECK(j["neg"] == -0.03);

    CHECK_THROWS_CODE(parse_config_text("a = 1\na = 2\n"), ErrorCode::ConfigError);
    CHECK(error_text([] { parse_config_text("a = 1\na = 2\n"); }).find("line 2") != std::string::npos);
    CHECK(error_text([] { parse_config_text("x = 1\n\ny = [1, 2\n"); }).find("line") != std::string::npos);
    CHECK_THROWS_CODE(parse_config_text("x 1\n"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(parse_config_text("x = \"open\n"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(parse_config_text("x = 1.2.3\n"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(parse_config_text("x = 1 2\n"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(parse_config_text("t = { a = 1, a = 2 }\n"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(load_config_file("/nonexistent/ddsde.cfg"), ErrorCode::ConfigError);
    CHECK(parse_config_text("").empty());
}

TEST_CASE("config validation") {
    const auto c = config_from_json(json::object());
    CHECK(c.alphas == std::vector<double>{1.5});
    CHECK(c.grid.n == 512);
    CHECK(c.T == 0.5);

    auto bad = [](json j) { return testing::thrown_code([&] { config_from_json(j); }); };
    const int cfg = testing::code(ErrorCode::ConfigError);
    CHECK(bad({{"alpah", 1.5}}) == cfg);
    CHECK(bad({{"drift", {{"kapa", 1.0}}}}) == cfg);
    CHECK(bad({{"alpha", 2.5}}) == cfg);
    CHECK(bad({{"alpha", "1.5"}}) == cfg);
    CHECK(bad({{"grid", {{"n", 511}}}}) == cfg);
    CHECK(bad({{"grid", {{"n", 256.5}}}}) == cfg);
    CHECK(bad({{"h_ladder", {0.1, 0.2, 0.05}}}) == cfg);
    CHECK(bad({{"h_ladder", {0.1, 0.05}}}) == cfg);
    CHECK(bad({{"h_ladder", {1.5, 0.5, 0.25}}}) == cfg);
    CHECK(bad({{"T", 0.05}}) == cfg);
    CHECK(bad({{"drift", {{"kind", "quadratic"}}}}) == cfg);
    CHECK(bad({{"rho0", {{"kind", "dirac"}}}}) == cfg);
    CHECK(bad({{"density_format", "hdf5"}}) == cfg);
    CHECK(bad({{"seed", -1}}) == cfg);
    CHECK(bad({{"output_times", {0.7}}}) == cfg);
    CHECK(bad({{"reference", {{"kind", "exact"}}}}) == cfg);

    SchemeConfig custom = small_config();
    custom.alphas = {1.2, 1.8};
    custom.particles.kde.bandwidth = 0.2;
    custom.path = PushPath::Direct;
    const auto round = config_from_json(config_to_json(custom));
    CHECK(config_to_json(round) == config_to_json(custom));
}

TEST_CASE("rate fit") {
    std::vector<std::pair<double, double>> linear, third, flat;
    for (int k = 4; k <= 9; ++k) {
        const double h = std::ldexp(1.0, -k);
        linear.push_back({h, h});
        third.push_back({h, 3.0 * std::cbrt(h)});
        flat.push_back({h, 0.01});
    }
    const auto a = fit_rate(linear);
    CHECK(a.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.r2 == doctest::Approx(1.0).epsilon(1e-12));
    const auto b = fit_rate(third);
    CHECK(std::abs(b.slope - 1.0 / 3.0) < 1e-12);
    CHECK(b.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(std::abs(fit_rate(flat).slope) < 1e-12);

    std::vector<std::pair<double, double>> floor = linear;
    floor[2].second = 1e-13;
    CHECK_THROWS_CODE(fit_rate(floor), ErrorCode::DegenerateFit);
    const std::vector<std::pair<double, double>> same{{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}};
    CHECK_THROWS_CODE(fit_rate(same), ErrorCode::DegenerateFit);
    CHECK_THROWS_CODE(fit_rate(std::vector<std::pair<double, double>>{{0.1, 1.0}, {0.2, 2.0}}), ErrorCode::InvalidArgument);
}

TEST_CASE("rate study") {
    auto c = small_config();
    const auto r = run_rate_study(c, 1.5);
    CHECK(r.theory_slope == doctest::Approx(1.0 / 3.0));
    REQUIRE(r.fit.has_value());
    CHECK(r.fit->slope >= r.theory_slope - 0.15);
    CHECK(r.monotone);
    CHECK(r.min_mass >= 0.999);
    CHECK(r.reference_resolution == doctest::Approx(0.03125 / 8));

    c.reference.divisor = 4;
    CHECK_THROWS_CODE(run_rate_study(c, 1.5), ErrorCode::ReferenceTooCoarse);
    c.reference = {ReferenceKind::Fpe, 8, 1e-2};
    CHECK_THROWS_CODE(run_rate_study(c, 1.5), ErrorCode::ReferenceTooCoarse);

    auto zero = small_config();
    zero.drift.kind = DriftKind::Zero;
    const auto z = run_rate_study(zero, 1.5);
    CHECK_FALSE(z.fit.has_value());
    CHECK_FALSE(z.degenerate_reason.empty());
    const auto checks = rate_study_checks(std::vector<RateStudyResult>{z});
    CHECK(std::any_of(checks.begin(), checks.end(), [](const Check& k) { return !k.pass; }));
}

TEST_CASE("error CSV") {
    auto c = small_config();
    c.alphas = {1.5, 1.8};
    const auto results = run_rate_study(c);
    REQUIRE(results.size() == 2);
    CHECK(results[0].alpha == 1.5);
    std::ostringstream os;
    write_error_csv(os, c, results);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "alpha,h,l1_error,reference_kind,grid_n,domain_L,seed");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.find(",self_convergence,128,8,1") != std::string::npos);
    }
    CHECK(rows == 6);
}

TEST_CASE("diagnostics") {
    auto zero = small_config();
    zero.drift.kind = DriftKind::Zero;
    for (const auto& c : run_diagnostics(zero)) {
        CAPTURE(c.name);
        CAPTURE(c.value);
        CHECK(c.pass);
        if (c.name == "duhamel_residual") CHECK(c.value <= 1e-6);
    }

    for (const auto& c : run_diagnostics(small_config())) {
        CAPTURE(c.name);
        CAPTURE(c.value);
        CHECK(c.pass);
    }

    auto unbounded = small_config();
    unbounded.drift.kind = DriftKind::LinearUnbounded;
    const auto report = run_diagnostics(unbounded);
    REQUIRE_FALSE(report.empty());
    CHECK(report.front().name == "drift_hypothesis");
    CHECK_FALSE(report.front().pass);
}

TEST_CASE("particle cross-validation") {
    auto c = small_config();
    c.grid = {512, 10.0};
    c.rho0.sigma = 0.1;
    c.h = 1.0 / 32;
    c.drift.kind = DriftKind::Zero;
    const auto zero = cross_validate_mc(c, 100000);
    CHECK(zero.budget == 0.03);
    CHECK(zero.gap < 0.03);
    c.drift.kind = DriftKind::NemytskiiSat;
    const auto small = cross_validate_mc(c, 10000);
    const auto large = cross_validate_mc(c, 100000);
    CHECK(large.pass);
    CHECK(large.gap < small.gap);
    CHECK_THROWS_CODE(cross_validate_mc(c, 5000), ErrorCode::InvalidArgument);
}

TEST_CASE("manifest") {
    const auto c = small_config();
    auto m = make_manifest("rate-study", c);
    CHECK(m["schema_version"] == kManifestSchemaVersion);
    CHECK(m["command"] == "rate-study");
    CHECK(m["config"] == config_to_json(c));
    const std::vector<Check> checks{check_less("a", 1.0, 2.0), check_at_least("b", 1.0, 2.0)};
    CHECK_FALSE(finish_manifest(m, checks));
    CHECK(m["pass"] == false);
    CHECK(m["checks"].size() == 2);
    CHECK(check_within("c", 1.0, 0.5, 2.0).pass);
    CHECK_FALSE(check_within("c", 3.0, 0.5, 2.0).pass);

    // Identical inputs give identical bytes.
    auto run = [&] {
        auto manifest = make_manifest("rate-study", c);
        const auto results = run_rate_study(c);
        json list = json::array();
        for (const auto& r : results) list.push_back(to_json(r));
        manifest["results"] = list;
        finish_manifest(manifest, rate_study_checks(results));
        return manifest.dump(2);
    };
    CHECK(run() == run());
}
