#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "stomech/grid.hpp"

using namespace stomech;

TEST_CASE("derivatives are second order on a smooth 1D field") {
    for (int n : {129, 257}) {
        Grid g = Grid::cartesian1d(-2.0, 2.0, n);
        ScalarField f = sample_scalar(g, [](const Eigen::Vector3d& x) { return std::sin(2.0 * x[0]); });
        VectorField df = gradient(f);
        ScalarField lf = laplacian(f);
        double h = g.spacing(0);
        double max_d = 0.0, max_l = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            double x = g.position(i)[0];
            max_d = std::max(max_d, std::abs(df.values(i, 0) - 2.0 * std::cos(2.0 * x)));
            max_l = std::max(max_l, std::abs(lf.values[i] + 4.0 * std::sin(2.0 * x)));
        }
        // boundary stencils are one-sided but still second order
        CHECK(max_d < 3.0 * h * h);
        CHECK(max_l < 30.0 * h * h);
    }
}

TEST_CASE("radial operators use the ambient-3 forms") {
    Grid g = Grid::radial(0.05, 8.0, 1024, 3);
    // f(r) = r^2: grad = 2r, Lap = d^2 + (2/r)d = 2 + 4 = 6
    ScalarField f = sample_scalar_radial(g, [](double r) { return r * r; });
    VectorField df = gradient(f);
    ScalarField lf = laplacian(f);
    for (Eigen::Index i = 2; i + 2 < g.size(); ++i) {
        double r = g.radius(i);
        CHECK(df.values(i, 0) == doctest::Approx(2.0 * r).epsilon(1e-10));
        CHECK(lf.values[i] == doctest::Approx(6.0).epsilon(1e-8));
    }
    // radial vector field F = r e_r: div = F' + 2F/r = 3, vector Lap = 0
    VectorField F = sample_vector_radial(g, [](double r) { return r; });
    ScalarField divF = divergence(F);
    VectorField lapF = vector_laplacian(F);
    for (Eigen::Index i = 2; i + 2 < g.size(); ++i) {
        CHECK(divF.values[i] == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(lapF.values(i, 0) == doctest::Approx(0.0).epsilon(1e-8));
    }
    // (a.grad)b for radial a = r, b = r^2 gives a b' = 2 r^2
    VectorField b2 = sample_vector_radial(g, [](double r) { return r * r; });
    VectorField adv = advect(F, b2);
    for (Eigen::Index i = 2; i + 2 < g.size(); ++i) {
        double r = g.radius(i);
        CHECK(adv.values(i, 0) == doctest::Approx(2.0 * r * r).epsilon(1e-9));
    }
}

TEST_CASE("curl detects rotation on a 3D grid") {
    Grid g = Grid::cartesian({-1, -1, -1}, {1, 1, 1}, {17, 17, 17});
    VectorField rot = sample_vector(g, [](const Eigen::Vector3d& x) {
        return Eigen::Vector3d(-x[1], x[0], 0.0);
    });
    VectorField c = curl(rot);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        CHECK(c.values(i, 2) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(std::abs(c.values(i, 0)) < 1e-12);
    }
    VectorField grad_like = sample_vector(g, [](const Eigen::Vector3d& x) {
        return Eigen::Vector3d(x);
    });
    VectorField c2 = curl(grad_like);
    CHECK(c2.values.abs().maxCoeff() < 1e-12);
}

TEST_CASE("masks propagate through stencils") {
    Grid g = Grid::cartesian1d(0.0, 1.0, 33);
    ScalarField f = sample_scalar(g, [](const Eigen::Vector3d& x) { return x[0] * x[0]; });
    f.valid[16] = false;
    VectorField df = gradient(f);
    CHECK_FALSE(df.valid[15]);
    CHECK_FALSE(df.valid[16]);
    CHECK_FALSE(df.valid[17]);
    CHECK(df.valid[10]);
    CHECK(df.masked_fraction() > 0.0);
}

TEST_CASE("integration uses the grid measure") {
    Grid g1 = Grid::cartesian1d(-8.0, 8.0, 801);
    ScalarField gauss = sample_scalar(g1, [](const Eigen::Vector3d& x) {
        return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2.0 * M_PI);
    });
    CHECK(integrate(gauss) == doctest::Approx(1.0).epsilon(1e-6));

    // radial: normalized exponential cloud p = (lam^3 / 8 pi) e^{-lam r}
    Grid gr = Grid::radial(1e-3, 30.0, 4096, 3);
    double lam = 2.0;
    ScalarField cloud = sample_scalar_radial(gr, [&](double r) {
        return lam * lam * lam / (8.0 * M_PI) * std::exp(-lam * r);
    });
    CHECK(integrate(cloud) == doctest::Approx(1.0).epsilon(1e-4));
    normalize_density(cloud);
    CHECK(integrate(cloud) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grid binary round trip preserves values and mask") {
    Grid g = Grid::radial(0.1, 5.0, 64, 3);
    ScalarField f = sample_scalar_radial(g, [](double r) { return std::cos(r); });
    f.valid[10] = false;
    write_grid_binary(f, "roundtrip.bin");
    ScalarField back = read_grid_binary("roundtrip.bin");
    REQUIRE(back.grid == g);
    CHECK((back.values - f.values).abs().maxCoeff() == 0.0);
    CHECK_FALSE(back.valid[10]);
    CHECK(back.valid[11]);
    std::remove("roundtrip.bin");
}

TEST_CASE("cic deposit conserves mass inside the grid") {
    Grid g = Grid::cartesian1d(0.0, 1.0, 11);
    Eigen::MatrixXd pts(3, 1);
    pts << 0.25, 0.5, 2.0; // last one outside
    Eigen::ArrayXd target = Eigen::ArrayXd::Zero(g.size());
    Eigen::Index inside = deposit_cic(g, pts, nullptr, target);
    CHECK(inside == 2);
    CHECK(target.sum() == doctest::Approx(2.0));
    CHECK(target[5] == doctest::Approx(1.0)); // x = 0.5 lands on a node
}
