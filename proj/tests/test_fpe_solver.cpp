#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddsde/fpe_solver.hpp"
#include "ddsde/heat_kernel.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace ddsde;

namespace {

const StableParams kParams(1.5, 1);

DriftSpec sat() { return make_drift({DriftKind::NemytskiiSat, 1.0, Direction::Sine, 1}); }

GridFunction cosine(const Grid& g, double k = 1.0) {
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = std::cos(k * g.point(i)[0]);
    return f;
}

} // namespace

TEST_CASE("zero drift is exact diffusion") {
    const Grid g(1, 10.0, 512);
    const auto rho0 = gaussian_density(g, 0.3);
    const auto traj = fpe_solve(rho0, make_drift({DriftKind::Zero}), kParams, 0.5);
    CHECK(lp_distance(traj.at(0.5), semigroup_convolve(kParams, 0.5, rho0), 1.0) < 1e-5);
}

namespace {

// L1 error of the FPE against the shifted free flow, shift of 8 cells at T.
double translation_error(int n, const FpeConfig& cfg) {
    const Grid g(1, 10.0, n);
    const double T = 0.5;
    const int cells = 8 * n / 512;
    const double c = cells * g.spacing() / T;
    const auto rho0 = gaussian_density(g, 0.3);
    const auto free = semigroup_convolve(kParams, T, rho0);
    std::vector<double> shifted(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) shifted[i] = free[g.wrap(static_cast<int>(i) - cells)];
    const auto traj = fpe_solve(rho0, constant_drift({c, 0.0}, 1), kParams, T, cfg);
    return lp_distance(traj.at(T), GridDensity(g, shifted), 1.0);
}

} // namespace

TEST_CASE("constant drift translates the diffusion") {
    CHECK(translation_error(512, FpeConfig{}) < 1e-3);

    // Upwind is first order in dx: the error halves with the cell size.
    FpeConfig upwind;
    upwind.transport = Transport::Upwind1;
    const double e512 = translation_error(512, upwind);
    const double e1024 = translation_error(1024, upwind);
    CHECK(e1024 / e512 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("temporal self-convergence") {
    const Grid g(1, 10.0, 512);
    const auto rho0 = gaussian_density(g, 0.1);
    FpeConfig coarse, fine;
    fine.dt = coarse.dt / 2;
    const auto a = fpe_solve(rho0, sat(), kParams, 0.5, coarse);
    const auto b = fpe_solve(rho0, sat(), kParams, 0.5, fine);
    CHECK(lp_distance(a.at(0.5), b.at(0.5), 1.0) < 1e-3);
}

TEST_CASE("conservation and positivity") {
    const Grid g(1, 10.0, 256);
    const auto rho0 = gaussian_density(g, 0.3);
    for (auto split : {Splitting::Lie, Splitting::Strang}) {
        for (auto transport : {Transport::Upwind1, Transport::CenteredLimited}) {
            FpeConfig cfg;
            cfg.splitting = split;
            cfg.transport = transport;
            const auto traj = fpe_solve(rho0, sat(), kParams, 0.5, cfg);
            for (std::size_t k = 1; k < traj.densities.size(); ++k) {
                CHECK(std::abs(mass(traj.densities[k]) - mass(traj.densities[k - 1])) < 1e-8);
            }
            CHECK(traj.clamped_mass < 1e-6);
        }
    }
}

TEST_CASE("CFL guard") {
    const Grid g(1, 10.0, 256);
    FpeConfig cfg;
    cfg.dt = 0.1;
    CHECK_THROWS_CODE(fpe_solve(gaussian_density(g, 0.3), sat(), kParams, 0.5, cfg), ErrorCode::CflViolation);
    const Grid small(1, 1.0, 64);
    CHECK_THROWS_CODE(fpe_solve(gaussian_density(small, 0.1), sat(), kParams, 2.0), ErrorCode::DomainTooSmall);
}

TEST_CASE("weak formulation") {
    const Grid g(1, 4 * std::numbers::pi, 512);
    const auto rho0 = gaussian_density(g, 0.3);
    const auto zero = make_drift({DriftKind::Zero});
    const auto traj = fpe_solve(rho0, zero, kParams, 0.5);
    GridFunction one(g);
    for (double& v : one.values) v = 1.0;
    CHECK(fpe_weak_residual(traj, zero, kParams, one, 0.5) < 1e-6);
    CHECK(fpe_weak_residual(traj, zero, kParams, cosine(g), 0.0) == 0.0);
    CHECK(fpe_weak_residual(traj, zero, kParams, cosine(g), 0.5) < 1e-4);

    const auto driven = fpe_solve(rho0, sat(), kParams, 0.5);
    CHECK(fpe_weak_residual(driven, sat(), kParams, one, 0.5) < 1e-6);
    CHECK(fpe_weak_residual(driven, sat(), kParams, cosine(g), 0.5) < 1e-3);

    GridFunction spike(g);
    spike.values[7] = 1.0;
    CHECK_THROWS_CODE(fpe_weak_residual(traj, zero, kParams, spike, 0.5), ErrorCode::SpectralTailTooLarge);
}

TEST_CASE("gap to the scheme") {
    const Grid g(1, 10.0, 512);
    const auto rho0 = gaussian_density(g, 0.3);
    const auto zero = make_drift({DriftKind::Zero});
    const auto fpe_zero = fpe_solve(rho0, zero, kParams, 0.5);
    CHECK(em_vs_fpe_gap(em_density_evolve(rho0, zero, 1.0 / 16, 0.5, kParams), fpe_zero, 0.5) < 1e-5);

    const auto fpe = fpe_solve(rho0, sat(), kParams, 0.5);
    const double coarse = em_vs_fpe_gap(em_density_evolve(rho0, sat(), 1.0 / 64, 0.5, kParams), fpe, 0.5);
    const double fine = em_vs_fpe_gap(em_density_evolve(rho0, sat(), 1.0 / 128, 0.5, kParams), fpe, 0.5);
    CHECK(fine < coarse);

    const Grid other(1, 10.0, 256);
    const auto mismatch = em_density_evolve(gaussian_density(other, 0.3), zero, 1.0 / 16, 0.5, kParams);
    CHECK_THROWS_CODE(em_vs_fpe_gap(mismatch, fpe, 0.5), ErrorCode::GridMismatch);
}

TEST_CASE("names") {
    CHECK(parse_splitting("lie") == Splitting::Lie);
    CHECK(parse_transport(transport_name(Transport::CenteredLimited)) == Transport::CenteredLimited);
    CHECK_THROWS_CODE(parse_splitting("yoshida"), ErrorCode::ConfigError);
    CHECK_THROWS_CODE(parse_transport("weno5"), ErrorCode::ConfigError);
}
