#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddsde/grid.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ddsde;

TEST_CASE("grid construction") {
    const Grid g = make_grid(1, 10.0, 512);
    CHECK(g.spacing() == doctest::Approx(0.0390625).epsilon(1e-15));
    CHECK(g.spacing() * g.points_per_axis() == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(g.coordinate(256) == 0.0);

    const Grid g2 = make_grid(2, 8.0, 128);
    CHECK(g2.size() == 16384);
    CHECK(g2.spacing() == 0.125);

    CHECK_THROWS_CODE(make_grid(1, 10.0, 511), ErrorCode::OddGridSize);
    CHECK_THROWS_CODE(make_grid(1, 0.0, 64), ErrorCode::InvalidArgument);
    CHECK_THROWS_CODE(make_grid(1, -1.0, 64), ErrorCode::InvalidArgument);
    CHECK_THROWS_CODE(make_grid(3, 1.0, 64), ErrorCode::InvalidArgument);
}

TEST_CASE("flat indices and mirror") {
    const Grid g(2, 4.0, 16);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        CHECK(g.flatten(idx[0], idx[1]) == i);
        const Point p = g.point(i);
        const Point q = g.point(g.mirror(i));
        CHECK(g.wrap_coordinate(-p[0]) == doctest::Approx(q[0]));
        CHECK(g.wrap_coordinate(-p[1]) == doctest::Approx(q[1]));
    }
    CHECK(g.wrap(-1) == 15);
    CHECK(g.wrap(16) == 0);
    CHECK(g.wrap_coordinate(4.0) == doctest::Approx(-4.0));
}

TEST_CASE("mass") {
    const Grid g(1, 10.0, 512);
    CHECK(mass(uniform_density(g)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mass(GridDensity(g, std::vector<double>(g.size(), 0.0))) == 0.0);
    // erf(10/sqrt 2) = 1 to double precision.
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.point(i)[0];
        v[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    }
    CHECK(std::abs(mass(GridDensity(g, v)) - 1.0) < 1e-6);
    CHECK_THROWS_CODE(GridDensity(g, std::vector<double>(g.size(), -1.0)), ErrorCode::InvalidArgument);
}

TEST_CASE("mass is linear") {
    const Grid g(1, 6.0, 128);
    const auto a = gaussian_density(g, 0.5);
    const auto b = gaussian_density(g, 1.0, {1.0, 0.0});
    std::vector<double> c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = 0.3 * a[i] + 2.5 * b[i];
    CHECK(mass(GridDensity(g, c)) == doctest::Approx(0.3 * mass(a) + 2.5 * mass(b)).epsilon(1e-14));
}

TEST_CASE("lp distance") {
    const Grid g(1, 10.0, 512);
    const auto u = uniform_density(g);
    const GridDensity zero(g, std::vector<double>(g.size(), 0.0));
    CHECK(lp_distance(u, u, 1.0) == 0.0);
    CHECK(lp_distance(u, zero, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp_distance(u, zero, INFINITY) == doctest::Approx(0.05));
    CHECK_THROWS_CODE(lp_distance(u, uniform_density(Grid(1, 10.0, 256)), 1.0), ErrorCode::GridMismatch);

    // N(0,1) vs N(0.5,1): closed form 2 erf(0.25/sqrt 2).
    const double exact = 0.39482530273169486;
    const double coarse = lp_distance(gaussian_density(g, 1.0), gaussian_density(g, 1.0, {0.5, 0.0}), 1.0);
    const Grid fine(1, 10.0, 4096);
    const double refined =
        lp_distance(gaussian_density(fine, 1.0), gaussian_density(fine, 1.0, {0.5, 0.0}), 1.0);
    CHECK(std::abs(coarse - refined) < 1e-4);
    CHECK(std::abs(refined - exact) < 1e-4);
}

TEST_CASE("lp distance is a metric on sampled triples") {
    const Grid g(1, 5.0, 64);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_density = [&] {
        std::vector<double> v(g.size());
        for (double& x : v) x = unit(gen);
        return GridDensity(g, v);
    };
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = random_density();
        const auto h = random_density();
        const auto k = random_density();
        for (double p : {1.0, 2.0, 3.5, static_cast<double>(INFINITY)}) {
            CHECK(lp_distance(f, h, p) == lp_distance(h, f, p));
            CHECK(lp_distance(f, k, p) <= lp_distance(f, h, p) + lp_distance(h, k, p) + 1e-14);
        }
    }
}

TEST_CASE("refinement reduces the quadrature error of a smooth density") {
    auto error_at = [](int n) {
        const Grid g(1, 3.0, n);
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.point(i)[0];
            v[i] = std::exp(-x * x);
        }
        return std::abs(mass(GridDensity(g, v)) - std::sqrt(M_PI) * std::erf(3.0));
    };
    // Truncation at 3 dominates eventually; compare errors while they still shrink.
    CHECK(error_at(32) <= error_at(16));
    CHECK(error_at(64) <= error_at(32) + 1e-15);
}

TEST_CASE("clamp keeps mass") {
    const Grid g(1, 2.0, 16);
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = (i % 3 == 0) ? -0.01 : 0.3;
    const double before = integrate(g, f.values);
    const auto r = clamp_nonnegative(f);
    CHECK(r.clamped_mass > 0.0);
    CHECK(mass(r.density) == doctest::Approx(before).epsilon(1e-14));
    for (double v : r.density.values()) CHECK(v >= 0.0);
}

TEST_CASE("serialization round trip") {
    const Grid g(2, 3.0, 16);
    const auto f = gaussian_density(g, 0.7);
    std::stringstream bin;
    write_binary(bin, f);
    const auto back = read_binary(bin);
    CHECK(back.grid() == g);
    CHECK(lp_distance(back, f, INFINITY) == 0.0);

    std::ostringstream csv;
    write_csv(csv, gaussian_density(Grid(1, 3.0, 16), 0.7));
    std::istringstream lines(csv.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count >= 16);
}

TEST_CASE("mass outside a box") {
    const Grid g(1, 10.0, 512);
    CHECK(mass_outside(uniform_density(g), 5.0) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(mass_outside(gaussian_density(g, 0.1), 5.0) < 1e-12);
}
