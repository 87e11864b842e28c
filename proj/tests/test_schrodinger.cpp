#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stomech/rng.hpp"
#include "stomech/schrodinger.hpp"
#include "stomech/suites.hpp"
#include "stomech/verify.hpp"

using namespace stomech;

namespace {

ScalarField kepler_potential_field(const KeplerModel& model, const Grid& grid) {
    return sample_scalar_radial(grid, [&](double r) { return model.potential(r); });
}

Grid solver_grid(const KeplerModel& model, int n, double r_max_over_r0 = 40.0) {
    double r_max = r_max_over_r0 * model.r0();
    return Grid::radial(r_max / n, r_max, n, 3);
}

} // namespace

TEST_CASE("kepler ground state: hydrogen-like energy and profile") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 4096);
    auto gs = ground_state(kepler_potential_field(model, grid), model.m(), model.sigma(), -1);
    double E0_exact = -model.GM() * model.m() / model.r0();
    CHECK(std::abs(gs.E0 - E0_exact) / std::abs(E0_exact) < 1e-3);
    CHECK(gs.residual < 1e-8);

    // |psi| ~ e^{-2r/r0}, normalized: L2 gap below 1e-3
    double r0 = model.r0();
    ScalarField exact = sample_scalar_radial(grid, [&](double r) { return std::exp(-2.0 * r / r0); });
    ScalarField exact2(grid);
    exact2.values = exact.values.square();
    exact.values /= std::sqrt(integrate(exact2));
    ScalarField gap(grid);
    gap.values = gs.psi.re - exact.values;
    CHECK(l2_norm(gap) < 1e-3);
}

TEST_CASE("E0 error shrinks ~4x when the grid is refined 2x") {
    KeplerModel model = bench::natural_kepler();
    double E0_exact = -model.GM() * model.m() / model.r0();
    auto err = [&](int n) {
        Grid grid = solver_grid(model, n);
        auto gs = ground_state(kepler_potential_field(model, grid), model.m(), model.sigma(), -1);
        return std::abs(gs.E0 - E0_exact);
    };
    double e1 = err(1024), e2 = err(2048);
    CHECK(e1 / e2 > 2.5);
    CHECK(e1 / e2 < 6.0);
}

TEST_CASE("harmonic ground state matches the oscillator closed form") {
    // U = k x^2 / 2, hbar_eff = m sigma^2, E0 = (hbar_eff/2) sqrt(k/m)
    double k = 2.0, m = 1.5, sigma = 0.9;
    Grid grid = Grid::cartesian1d(-8.0, 8.0, 2048);
    ScalarField U = sample_scalar(grid, [&](const Eigen::Vector3d& x) {
        return 0.5 * k * x[0] * x[0];
    });
    auto gs = ground_state(U, m, sigma, -1);
    double E0_exact = 0.5 * m * sigma * sigma * std::sqrt(k / m);
    CHECK(std::abs(gs.E0 - E0_exact) / E0_exact < 1e-3);
}

TEST_CASE("free potential has no bound state") {
    Grid grid = Grid::cartesian1d(-5.0, 5.0, 256);
    ScalarField U(grid);
    CHECK_THROWS_WITH_AS(ground_state(U, 1.0, 1.0, -1), doctest::Contains("no bound state"),
                         std::runtime_error);
}

TEST_CASE("inverse iteration and imaginary time agree to 1e-6") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 2048);
    ScalarField U = kepler_potential_field(model, grid);
    GroundStateOptions inv, imt;
    inv.method = GroundStateMethod::InverseIteration;
    imt.method = GroundStateMethod::ImaginaryTime;
    imt.max_iterations = 4000;
    auto a = ground_state(U, model.m(), model.sigma(), -1, inv);
    auto b = ground_state(U, model.m(), model.sigma(), -1, imt);
    CHECK(std::abs(a.E0 - b.E0) < 1e-6);

    Grid g1 = Grid::cartesian1d(-8.0, 8.0, 1024);
    ScalarField Uh = sample_scalar(g1, [](const Eigen::Vector3d& x) { return 0.5 * x[0] * x[0]; });
    auto ah = ground_state(Uh, 1.0, 1.0, -1, inv);
    auto bh = ground_state(Uh, 1.0, 1.0, -1, imt);
    CHECK(std::abs(ah.E0 - bh.E0) < 1e-6);
}

TEST_CASE("variational bound: rayleigh quotients sit above E0") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 2048);
    ScalarField U = kepler_potential_field(model, grid);
    auto gs = ground_state(U, model.m(), model.sigma(), -1);
    for (double width : {0.8, 1.3, 2.4}) {
        ScalarField trial = sample_scalar_radial(grid, [&](double r) {
            return std::exp(-r / width);
        });
        CHECK(rayleigh_quotient(U, model.m(), model.sigma(), trial) >= gs.E0 - 1e-8);
    }
}

TEST_CASE("density of a wave function ignores the phase") {
    Grid grid = Grid::cartesian1d(-6.0, 6.0, 512);
    WaveFunction psi(grid);
    psi.C = 1.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double x = grid.position(i)[0];
        double amp = std::exp(-0.25 * x * x);
        psi.re[i] = amp * std::cos(1.7 * x);
        psi.im[i] = amp * std::sin(1.7 * x);
    }
    ScalarField p = density_from_wavefunction(psi);
    CHECK(integrate(p) == doctest::Approx(1.0).epsilon(1e-10));
    // p ~ e^{-x^2/2}: a normalized gaussian, compared at node coordinates
    for (Eigen::Index i = 0; i < grid.size(); i += 50) {
        double x = grid.position(i)[0];
        double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        CHECK(p.values[i] == doctest::Approx(exact).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("action of a real positive wave function: S = 0, R closed form") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 1024);
    auto gs = ground_state(kepler_potential_field(model, grid), model.m(), model.sigma(), -1);
    ActionPair action = action_from_wavefunction(gs.psi);
    CHECK(action.r_consistency < 1e-8);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (action.S.valid[i]) CHECK(std::abs(action.S.values[i]) < 1e-12);
}

TEST_CASE("action round trip recovers a constructed phase") {
    Grid grid = Grid::cartesian1d(-3.0, 3.0, 601);
    double m = 1.0, sigma = 1.0;
    int mu = -1;
    double C = -mu * m * sigma * sigma;
    auto S0 = [](double x) { return 0.4 * x + 0.3 * std::sin(x); };
    WaveFunction psi(grid);
    psi.C = C;
    psi.m = m;
    psi.sigma = sigma;
    psi.mu = mu;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double x = grid.position(i)[0];
        double amp = std::exp(-0.25 * x * x);
        psi.re[i] = amp * std::cos(S0(x) / C);
        psi.im[i] = amp * std::sin(S0(x) / C);
    }
    ActionPair action = action_from_wavefunction(psi);
    double offset = S0(grid.position(0)[0]); // S is pinned to 0 at the first valid node
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        if (!action.S.valid[i]) continue;
        double x = grid.position(i)[0];
        CHECK(action.S.values[i] == doctest::Approx(S0(x) - offset).epsilon(1e-8));
    }
    CHECK(action.r_consistency < 1e-8);
}

TEST_CASE("grad(S)/m reproduces the current velocity of a drifting gaussian") {
    // psi = sqrt(p) e^{i S/C} with S = m v0 x has v = grad(S)/m = v0
    Grid grid = Grid::cartesian1d(-4.0, 4.0, 801);
    double v0 = 0.7, m = 1.0, sigma = 1.0;
    double C = m * sigma * sigma; // mu = -1
    ScalarField rho = sample_scalar(grid, [](const Eigen::Vector3d& x) {
        return std::exp(-0.5 * x[0] * x[0]);
    });
    ScalarField theta = sample_scalar(grid, [&](const Eigen::Vector3d& x) {
        return m * v0 * x[0];
    });
    WaveFunction psi = madelung(rho, theta, C);
    psi.m = m;
    psi.sigma = sigma;
    psi.mu = -1;
    ActionPair action = action_from_wavefunction(psi);
    VectorField gradS = gradient(action.S);
    for (Eigen::Index i = 2; i + 2 < grid.size(); ++i)
        if (gradS.valid[i]) CHECK(gradS.values(i, 0) / m == doctest::Approx(v0).epsilon(1e-8));
}

TEST_CASE("madelung round trip is exact where the density is healthy") {
    Grid grid = Grid::cartesian1d(-2.0, 2.0, 401);
    Philox rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        auto u = uniform_pair(rng, trial, 0, 0, RngStream::Auxiliary);
        double eps = 0.3 + u[0];
        ScalarField rho = sample_scalar(grid, [&](const Eigen::Vector3d& x) {
            return 0.2 + std::exp(-x[0] * x[0] / (0.5 + u[1]));
        });
        ScalarField theta = sample_scalar(grid, [&](const Eigen::Vector3d& x) {
            return 0.8 * eps * std::sin(x[0]) + 0.3 * eps * x[0];
        });
        WaveFunction psi = madelung(rho, theta, eps);
        MadelungPair back = inverse_madelung(psi, eps);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (!back.rho.valid[i]) continue;
            CHECK(back.rho.values[i] == doctest::Approx(rho.values[i]).epsilon(1e-12));
            // theta recovered up to a shared multiple of 2 pi eps
            double diff = back.theta.values[i] - theta.values[i];
            double wrapped = std::remainder(diff, 2.0 * M_PI * eps);
            CHECK(std::abs(wrapped) < 1e-12 * std::max(1.0, std::abs(theta.values[i])));
        }
    }
    // rho = 1, theta = 0 -> psi = 1
    ScalarField one(grid), zero(grid);
    one.values.setConstant(1.0);
    WaveFunction unit = madelung(one, zero, 0.5);
    CHECK((unit.re - 1.0).abs().maxCoeff() == 0.0);
    CHECK(unit.im.abs().maxCoeff() == 0.0);
}

TEST_CASE("canonical normalization cancels the nonlinearity") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 2048);
    ScalarField U = kepler_potential_field(model, grid);
    auto gs = ground_state(U, model.m(), model.sigma(), -1);
    double C = -gs.psi.mu * gs.psi.m * gs.psi.sigma * gs.psi.sigma;
    CHECK(gs.psi.C == doctest::Approx(C));
    // nonlinearity coefficient C(mu m sigma^2 + C) vanishes identically
    CHECK(C * (gs.psi.mu * gs.psi.m * gs.psi.sigma * gs.psi.sigma + C) == 0.0);

    ScalarField res = nonlinear_residual(gs.psi, U, C, gs.E0);
    double band_l2 = 0.0;
    ScalarField sq(grid);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        sq.values[i] = res.valid[i] ? res.values[i] * res.values[i] : 0.0;
    band_l2 = std::sqrt(integrate(sq));
    CHECK(band_l2 < 1e-3);
}

TEST_CASE("wrong energies grow the residual linearly") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 1024);
    ScalarField U = kepler_potential_field(model, grid);
    auto gs = ground_state(U, model.m(), model.sigma(), -1);
    double C = gs.psi.C;
    auto l2_of = [&](double E) {
        ScalarField res = nonlinear_residual(gs.psi, U, C, E);
        return l2_norm(res);
    };
    double base = l2_of(gs.E0);
    double d1 = l2_of(gs.E0 + 0.01) - base;
    double d2 = l2_of(gs.E0 + 0.02) - base;
    CHECK(d2 / d1 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("hydrodynamic form: solved state satisfies the modified hj system") {
    KeplerModel model = bench::natural_kepler();
    Grid grid = solver_grid(model, 2048);
    ScalarField U = kepler_potential_field(model, grid);
    auto gs = ground_state(U, model.m(), model.sigma(), -1);
    auto action = action_from_wavefunction(gs.psi);
    HamiltonJacobiOptions ho;
    ho.dSdt = -gs.E0;
    ho.dSdt_mode = "energy_offset";
    auto result = hamilton_jacobi_residuals(action.S, action.R, U, model.m(), model.sigma(), -1,
                                            ho, {0.5 * model.r0(), 10.0 * model.r0()});
    CHECK(result.hj.pass);
    CHECK(result.continuity.residual == 0.0);
    CHECK(result.form_gap < 1e-8);
}
