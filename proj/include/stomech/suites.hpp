#pragma once

#include <string>
#include <vector>

#include "stomech/kepler.hpp"
#include "stomech/schrodinger.hpp"
#include "stomech/sde.hpp"
#include "stomech/verify.hpp"

namespace stomech {

/// Reference configurations every verifier is exercised against. The
/// stationary states are exact: ground-state diffusions whose drift is the
/// osmotic velocity of the known density.
namespace bench {

/// 1D Ornstein-Uhlenbeck at stationarity: drift -x, sigma = 1, density
/// proportional to exp(-x^2). This is also the harmonic ground-state
/// diffusion with m = k = 1.
DiffusionSpec ou_spec();
AnalyticState ou_state();
StochasticNewtonProblem harmonic_problem(int mu, int alpha);

KeplerModel natural_kepler(); // G = M = m = sigma = 1, so r0 = 2, v0 = 1
Grid kepler_radial_grid(const KeplerModel& model, int n, double r_max_over_r0 = 12.0);
ScalarField kepler_density(const KeplerModel& model, const Grid& grid);
ComplexVelocityField kepler_velocity(const KeplerModel& model, const Grid& grid, int mu);
StochasticNewtonProblem kepler_problem(const KeplerModel& model, int mu, int alpha);
/// 3D gradient diffusion of the Kepler ground state (drift = osmotic field).
DiffusionSpec kepler_ground_diffusion(const KeplerModel& model);
AnalyticState kepler_state(const KeplerModel& model);

/// 2D rotating oscillator eigen-diffusion (unit angular quantum): density
/// r^2 exp(-r^2), current velocity (1/r) e_theta.
DiffusionSpec rotating_oscillator_spec();
AnalyticState rotating_oscillator_state();
/// Zero-rotation counterpart (planar ground state, v = 0).
DiffusionSpec planar_ground_spec();
AnalyticState planar_ground_state();

} // namespace bench

struct SuiteOptions {
    uint64_t seed = 20240801;
    /// Drift family for the `reality` suite: "gradient" passes, "rotational"
    /// is correctly flagged non-gradient (the suite then fails by design).
    std::string reality_drift = "gradient";
    int kepler_grid_n = 4096;
    /// Multiplier on Monte Carlo ensemble sizes (1 = calibrated defaults).
    double path_scale = 1.0;
};

std::vector<std::string> suite_names();

/// Runs one named suite (newton | virial-strong | virial-weak | hj |
/// continuity | noether | reality | all) and returns its reports.
std::vector<ResidualReport> run_suite(const std::string& name, const SuiteOptions& opts);

} // namespace stomech
