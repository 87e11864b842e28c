#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stomech/density.hpp"
#include "stomech/rng.hpp"
#include "stomech/suites.hpp"

using namespace stomech;

namespace {

Eigen::MatrixXd standard_normals(Eigen::Index n, uint64_t seed) {
    Philox rng(seed);
    Eigen::MatrixXd out(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
        out(i, 0) = normal_pair(rng, static_cast<uint32_t>(i), 0, 0, RngStream::Auxiliary)[0];
    return out;
}

} // namespace

TEST_CASE("silverman-bandwidth kde recovers the standard normal to 0.01") {
    Eigen::Index n = 1000000;
    Eigen::MatrixXd samples = standard_normals(n, 77);
    Grid grid = Grid::cartesian1d(-5.0, 5.0, 512);
    DensityEstimate est = estimate_density_samples(samples, grid);
    CHECK(est.coverage == doctest::Approx(1.0).epsilon(1e-4));
    double sup = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double x = grid.position(i)[0];
        double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        sup = std::max(sup, std::abs(est.density.values[i] - exact));
    }
    CHECK(sup < 0.01);
    CHECK(integrate(est.density) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("a single point mass smooths to the kernel itself") {
    Eigen::MatrixXd one(1, 1);
    one << 0.7;
    Grid grid = Grid::cartesian1d(-3.0, 4.0, 701);
    double b = 0.25;
    DensityEstimate est = estimate_density_samples(one, grid, b);
    for (double x : {0.7, 0.95, 0.2, 1.7}) {
        Eigen::Index i = static_cast<Eigen::Index>(std::lround((x + 3.0) / grid.spacing(0)));
        double exact = std::exp(-0.5 * (x - 0.7) * (x - 0.7) / (b * b)) / (b * std::sqrt(2.0 * M_PI));
        CHECK(est.density.values[i] == doctest::Approx(exact).epsilon(2e-3));
    }
}

TEST_CASE("radial kde matches the kepler ground profile within 2%") {
    // exact sampling of p ~ e^{-4r/r0} by inverse CDF, then the estimator
    KeplerModel model = bench::natural_kepler();
    double r0 = model.r0();
    DiffusionSpec spec = bench::kepler_ground_diffusion(model);
    PathEnsemble ens = simulate(spec, uniform_times(0.0, 1e-4, 1), 2000000, 555);
    Grid grid = Grid::radial(0.02, 7.0 * r0, 700, 3);
    DensityEstimate est = estimate_density(ens, 0.0, grid, 0.05);
    double lam = 4.0 / r0;
    double pmax = lam * lam * lam / (8.0 * M_PI);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double r = grid.radius(i);
        if (r < 0.2 * r0 || r > 5.0 * r0) continue;
        sup = std::max(sup, std::abs(est.density.values[i] - pmax * std::exp(-lam * r)) / pmax);
    }
    CHECK(sup < 0.02);
}

TEST_CASE("log density gradient of a gaussian is -2x") {
    Grid grid = Grid::cartesian1d(-3.0, 3.0, 601);
    ScalarField p = sample_scalar(grid, [](const Eigen::Vector3d& x) {
        return std::exp(-x[0] * x[0]);
    });
    VectorField score = log_density_gradient(p);
    double h = grid.spacing(0);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        if (!score.valid[i]) continue;
        double x = grid.position(i)[0];
        CHECK(std::abs(score.values(i, 0) + 2.0 * x) < 40.0 * h * h);
    }
}

TEST_CASE("log density gradient of the kepler profile is constant radial") {
    KeplerModel model = bench::natural_kepler();
    double r0 = model.r0();
    Grid grid = Grid::radial(0.01, 12.0 * r0, 2048, 3);
    ScalarField p = bench::kepler_density(model, grid);
    VectorField score = log_density_gradient(p, 1e-30);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double r = grid.radius(i);
        if (r < 0.1 * r0 || r > 10.0 * r0 || !score.valid[i]) continue;
        CHECK(score.values(i, 0) == doctest::Approx(-4.0 / r0).epsilon(1e-3));
    }
}

TEST_CASE("constant density has zero gradient and zero bohm factor") {
    Grid grid = Grid::cartesian1d(0.0, 1.0, 65);
    ScalarField p(grid);
    p.values.setConstant(0.3);
    // exact zero in the interior; one-sided boundary stencils leave rounding
    CHECK(log_density_gradient(p).values.abs().maxCoeff() < 1e-10);
    ScalarField b = bohm_operator(p);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (b.valid[i]) CHECK(std::abs(b.values[i]) < 1e-10);
}

TEST_CASE("bohm operator reproduces the kepler closed form") {
    // sqrt(p) ~ e^{-2r/r0}: Lap(sqrt p)/sqrt p = (4/r0^2)(1 - r0/r)
    KeplerModel model = bench::natural_kepler();
    double r0 = model.r0();
    int n = 4096;
    Grid grid = Grid::radial(12.0 * r0 / n, 12.0 * r0, n, 3);
    ScalarField p = bench::kepler_density(model, grid);
    ScalarField b = bohm_operator(p, 1e-30);
    double sup = 0.0, scale = 4.0 / (r0 * r0);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double r = grid.radius(i);
        if (r < 0.5 * r0 || r > 10.0 * r0 || !b.valid[i]) continue;
        double exact = (4.0 / (r0 * r0)) * (1.0 - r0 / r);
        sup = std::max(sup, std::abs(b.values[i] - exact));
    }
    CHECK(sup / scale < 1e-3);
}

TEST_CASE("bohm operator on a gaussian matches the quadratic closed form") {
    // p ~ e^{-x^2/s^2}: sqrt p = e^{-x^2/(2 s^2)},
    // (sqrt p)''/sqrt p = x^2/s^4 - 1/s^2
    double s = 0.8;
    Grid grid = Grid::cartesian1d(-2.5, 2.5, 2001);
    ScalarField p = sample_scalar(grid, [&](const Eigen::Vector3d& x) {
        return std::exp(-x[0] * x[0] / (s * s));
    });
    ScalarField b = bohm_operator(p);
    for (double x : {0.0, 0.5, -1.2, 2.0}) {
        Eigen::Index i = static_cast<Eigen::Index>(std::lround((x + 2.5) / grid.spacing(0)));
        double exact = x * x / std::pow(s, 4) - 1.0 / (s * s);
        CHECK(b.values[i] == doctest::Approx(exact).epsilon(1e-5));
    }
}

TEST_CASE("bohm operator scales like lambda^-2 under grid rescaling") {
    auto profile = [](double u) { return std::exp(-u * u) + 0.3 * std::exp(-2.0 * (u - 0.4) * (u - 0.4)); };
    Grid g1 = Grid::cartesian1d(-2.0, 2.0, 401);
    ScalarField p1 = sample_scalar(g1, [&](const Eigen::Vector3d& x) { return profile(x[0]); });
    double lambda = 3.0;
    Grid g2 = Grid::cartesian1d(-2.0 * lambda, 2.0 * lambda, 401);
    ScalarField p2 = sample_scalar(g2, [&](const Eigen::Vector3d& x) { return profile(x[0] / lambda); });
    ScalarField b1 = bohm_operator(p1);
    ScalarField b2 = bohm_operator(p2);
    for (Eigen::Index i = 0; i < g1.size(); ++i) {
        if (!b1.valid[i] || !b2.valid[i]) continue;
        CHECK(b2.values[i] == doctest::Approx(b1.values[i] / (lambda * lambda)).epsilon(1e-10));
    }
}

TEST_CASE("osmotic velocity of the ou state is -x") {
    Grid grid = Grid::cartesian1d(-3.0, 3.0, 1201);
    ScalarField p = sample_scalar(grid, [](const Eigen::Vector3d& x) {
        return std::exp(-x[0] * x[0]);
    });
    VectorField u = osmotic_velocity(p, 1.0);
    for (double x : {0.0, 0.7, -1.3, 2.1}) {
        Eigen::Index i = static_cast<Eigen::Index>(std::lround((x + 3.0) / grid.spacing(0)));
        CHECK(u.values(i, 0) == doctest::Approx(-x).epsilon(1e-5));
    }
    VectorField zero = osmotic_velocity(p, 0.0);
    CHECK(zero.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("floor masking: downstream nodes are excluded, not clamped") {
    Grid grid = Grid::cartesian1d(0.0, 40.0, 801);
    ScalarField p = sample_scalar(grid, [](const Eigen::Vector3d& x) {
        return std::exp(-x[0]); // spans ~17 decades, crosses the 1e-8 floor
    });
    VectorField score = log_density_gradient(p);
    CHECK(score.masked_fraction() > 0.3);
    CHECK(score.masked_fraction() < 0.9);
    // valid nodes still carry the exact slope
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (score.valid[i] && grid.position(i)[0] > 0.5 && grid.position(i)[0] < 15.0)
            CHECK(score.values(i, 0) == doctest::Approx(-1.0).epsilon(1e-4));
    ScalarField all_low(grid);
    all_low.values.setConstant(0.0);
    CHECK_THROWS_AS(log_density_gradient(all_low), std::invalid_argument);
}

TEST_CASE("coverage below 99% is reported") {
    Eigen::MatrixXd samples = standard_normals(20000, 3);
    Grid grid = Grid::cartesian1d(-0.5, 0.5, 65); // covers ~38% of the mass
    DensityEstimate est = estimate_density_samples(samples, grid, 0.1);
    CHECK(est.coverage < 0.99);
    CHECK(est.coverage > 0.2);
}
