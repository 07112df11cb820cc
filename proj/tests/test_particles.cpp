#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddsde/density_scheme.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/particles.hpp"
#include "ddsde/stats.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ddsde;

namespace {

const StableParams kParams(1.5, 1);

ParticleCloud gaussian_cloud(std::size_t n, std::uint64_t seed, double center = 0.0) {
    ParticleCloud cloud;
    const auto sampler = gaussian_sampler(1.0, 1);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        Point p = sampler(rng);
        p[0] += center;
        cloud.positions.push_back(p);
    }
    return cloud;
}

} // namespace

TEST_CASE("kernel density estimate") {
    const Grid g(1, 10.0, 512);
    ParticleCloud single;
    single.positions = {{0.0, 0.0}};
    const KdeConfig fixed{KdeKernel::Gaussian, 0.4};
    const auto bump = kde_density(single, fixed, g);
    CHECK(lp_distance(bump, gaussian_density(g, 0.4), INFINITY) < 1e-12);
    CHECK(std::abs(mass(bump) - 1.0) < 1e-6);

    const auto epan = kde_density(single, {KdeKernel::Epanechnikov, 0.4}, g);
    CHECK(std::abs(mass(epan) - 1.0) < 1e-6);
    CHECK(epan[g.points_per_axis() / 2] == *std::max_element(epan.values().begin(), epan.values().end()));

    const auto truth = gaussian_density(g, 1.0);
    const auto big = gaussian_cloud(1000000, 3);
    const double err_big = lp_distance(kde_density(big, {}, g), truth, 1.0);
    CHECK(err_big < 0.01);
    const auto small = gaussian_cloud(250000, 4);
    CHECK(lp_distance(kde_density(small, {}, g), truth, 1.0) > err_big);
}

TEST_CASE("bandwidth rule") {
    const auto cloud = gaussian_cloud(100000, 5);
    CHECK(silverman_bandwidth(cloud, 1) == doctest::Approx(0.9 * std::pow(1e5, -0.2)).epsilon(0.03));
}

TEST_CASE("kernel density estimate ignores particle order") {
    const Grid g(2, 6.0, 64);
    ParticleCloud cloud;
    RngStream rng(9, 0);
    for (int i = 0; i < 20000; ++i) cloud.positions.push_back({3 * rng.normal(), 2 * rng.normal()});
    ParticleCloud shuffled = cloud;
    std::shuffle(shuffled.positions.begin(), shuffled.positions.end(), std::mt19937_64(1));
    const auto a = kde_density(cloud, {}, g);
    const auto b = kde_density(shuffled, {}, g);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("empirical total variation") {
    const Grid g(1, 10.0, 128);
    const auto a = gaussian_cloud(100000, 11);
    CHECK(empirical_tv(a, a, g) == 0.0);
    ParticleCloud left, right;
    left.positions = {{-3.0, 0.0}, {-2.0, 0.0}};
    right.positions = {{2.0, 0.0}, {3.0, 0.0}, {4.0, 0.0}};
    CHECK(empirical_tv(left, right, g) == doctest::Approx(2.0));
    CHECK(empirical_tv(a, gaussian_cloud(100000, 12), g) < 0.1);
}

TEST_CASE("zero drift particles follow the free law") {
    const Grid g(1, 10.0, 512);
    const double T = 0.5;
    const auto run = em_particle_simulate(100000, gaussian_sampler(0.3, 1), make_drift({DriftKind::Zero}), 1.0 / 8, T,
                                          kParams, {}, g, 21);
    REQUIRE(run.clouds.size() == 5);
    CHECK(run.clouds.back().time == doctest::Approx(T));
    std::vector<double> particles;
    for (const auto& p : run.clouds.back().positions) particles.push_back(g.wrap_coordinate(p[0]));

    const auto law = semigroup_convolve(kParams, T, gaussian_density(g, 0.3));
    const auto sampler = inverse_cdf_sampler(law);
    std::vector<double> reference(100000);
    for (std::size_t i = 0; i < reference.size(); ++i) {
        RngStream rng(22, i);
        reference[i] = sampler(rng)[0];
    }
    CHECK(stats::ks_two_sample(particles, reference) < stats::ks_critical_value(0.01, particles.size(), reference.size()));
}

TEST_CASE("single particle") {
    const Grid g(1, 10.0, 128);
    const auto run = em_particle_simulate(1, gaussian_sampler(0.3, 1), make_drift({DriftKind::Zero}), 0.1, 0.5, kParams,
                                          {KdeKernel::Gaussian, 0.5}, g, 1);
    for (const auto& c : run.clouds) {
        REQUIRE(c.size() == 1);
        CHECK(std::isfinite(c.positions[0][0]));
    }
}

TEST_CASE("seed determinism") {
    const Grid g(1, 10.0, 256);
    const auto drift = make_drift({DriftKind::NemytskiiSat, 1.0, Direction::Sine, 1});
    const auto a = em_particle_simulate(5000, gaussian_sampler(0.3, 1), drift, 1.0 / 16, 0.25, kParams, {}, g, 7);
    const auto b = em_particle_simulate(5000, gaussian_sampler(0.3, 1), drift, 1.0 / 16, 0.25, kParams, {}, g, 7);
    const auto c = em_particle_simulate(5000, gaussian_sampler(0.3, 1), drift, 1.0 / 16, 0.25, kParams, {}, g, 8);
    CHECK(a.clouds.back().positions == b.clouds.back().positions);
    CHECK(a.clouds.back().positions != c.clouds.back().positions);
}

TEST_CASE("particles track the deterministic density") {
    const Grid g(1, 10.0, 512);
    const double h = 1.0 / 32, T = 0.5;
    const auto drift = make_drift({DriftKind::NemytskiiSat, 1.0, Direction::Sine, 1});
    const auto exact = em_density_evolve(gaussian_density(g, 0.1), drift, h, T, kParams).at(T);
    auto gap = [&](std::size_t N) {
        const auto run = em_particle_simulate(N, gaussian_sampler(0.1, 1), drift, h, T, kParams, {}, g, 31);
        return lp_distance(kde_density(run.clouds.back(), {}, g), exact, 1.0);
    };
    const double g4 = gap(10000), g5 = gap(100000);
    CHECK(g5 < 0.05);
    CHECK(g5 < g4);
}

TEST_CASE("inverse-CDF sampler") {
    const Grid g(1, 10.0, 512);
    const auto law = gaussian_density(g, 1.0);
    const auto sampler = inverse_cdf_sampler(law);
    std::vector<double> xs(100000), ref(100000);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        RngStream a(1, i), b(2, i);
        xs[i] = sampler(a)[0];
        ref[i] = b.normal();
    }
    CHECK(stats::ks_two_sample(xs, ref) < stats::ks_critical_value(0.01, xs.size(), ref.size()));
    CHECK_THROWS_CODE(inverse_cdf_sampler(gaussian_density(Grid(2, 4.0, 16), 1.0)), ErrorCode::InvalidArgument);
}
