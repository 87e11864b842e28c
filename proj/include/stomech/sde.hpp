#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "stomech/grid.hpp"

namespace stomech {

/// Drift of a Brownian diffusion dX = v(X,t) dt + sigma dW. When the drift is
/// the gradient of a potential W the field can be tagged with it; the tag is
/// spot-checked against a finite-difference gradient of W at construction.
struct DriftField {
    int dim = 1;
    std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)> eval;
    std::function<double(const Eigen::Vector3d&)> potential; // set iff gradient-tagged
    double lipschitz_bound = 0.0; // 0 = undeclared, skips the step-size guard

    bool is_gradient_tagged() const { return static_cast<bool>(potential); }

    static DriftField zero(int dim);
    static DriftField from_function(
        int dim, std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)> f,
        double lipschitz_bound = 0.0);
    /// Autonomous drift v(x).
    static DriftField autonomous(int dim, std::function<Eigen::Vector3d(const Eigen::Vector3d&)> f,
                                 double lipschitz_bound = 0.0);
    /// Drift = grad W, checked against finite differences of W on probe
    /// points to 1e-6 relative.
    static DriftField gradient_of(int dim, std::function<double(const Eigen::Vector3d&)> W,
                                  std::function<Eigen::Vector3d(const Eigen::Vector3d&)> grad,
                                  const std::vector<Eigen::Vector3d>& probes,
                                  double lipschitz_bound = 0.0);
};

struct PointMass {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
};
struct GaussianLaw {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    double stddev = 1.0;
};
struct SampleSet {
    Eigen::MatrixXd points; // N x dim
};
/// Density on a grid: radial and 1D Cartesian grids are sampled by inverse
/// CDF, higher-dimensional Cartesian grids by rejection.
struct DensityGrid {
    ScalarField p;
};
using InitialLaw = std::variant<PointMass, GaussianLaw, SampleSet, DensityGrid>;

struct DiffusionSpec {
    DriftField drift;
    double sigma = 1.0;
    InitialLaw initial = PointMass{};
};

/// N sample paths on a shared time grid. Positions are stored one matrix per
/// time slice (N x dim), which is the access pattern of every estimator.
/// Regenerating with the same (spec, times, N, seed) is bit-exact.
struct PathEnsemble {
    Eigen::VectorXd times;
    std::vector<Eigen::MatrixXd> positions; // times.size() entries, each N x dim
    uint64_t seed = 0;
    int dim = 1;
    double sigma = 0.0;
    uint64_t path_offset = 0;

    Eigen::Index path_count() const { return positions.empty() ? 0 : positions.front().rows(); }
    Eigen::Index step_count() const { return times.size(); }
    /// Index of the grid time nearest to t; throws if no time is within half
    /// a step.
    Eigen::Index time_index(double t) const;
};

Eigen::VectorXd uniform_times(double t0, double t1, int steps);

/// Explicit Euler-Maruyama with a counter-based generator keyed on
/// (seed, path index, step), so results are independent of scheduling.
/// `path_offset` shifts the path-index key: simulating [0,B) and [B,2B) in
/// two calls reproduces the first 2B paths of a single larger call.
PathEnsemble simulate(const DiffusionSpec& spec, const Eigen::VectorXd& times, Eigen::Index n_paths,
                      uint64_t seed, uint64_t path_offset = 0);

struct PolarPointMass {
    double r = 1.0;
    double theta = 0.0;
};
struct PolarSamples {
    Eigen::MatrixXd points; // N x 2, columns (r, theta)
};
using PolarInitialLaw = std::variant<PolarPointMass, PolarSamples>;

/// Planar diffusion in polar coordinates, dr = a_r dt + sigma_r dW,
/// dtheta = a_theta dt + sigma_theta dW, with one shared Brownian motion
/// driving both coordinates. Angles are stored unwrapped. A reflecting
/// barrier at r_min keeps the radius positive; barrier hits are counted and
/// reported as a simulation artifact.
struct PolarDiffusionSpec {
    std::function<double(double, double)> a_r;     // (r, theta)
    std::function<double(double, double)> a_theta; // (r, theta)
    double sigma_r = 0.0;
    double sigma_theta = 0.0;
    double r_min = 1e-9;
    PolarInitialLaw initial = PolarPointMass{};
};

struct PolarEnsemble {
    PathEnsemble paths; // dim = 2, columns (r, theta)
    uint64_t barrier_hits = 0;
};

PolarEnsemble simulate_polar(const PolarDiffusionSpec& spec, const Eigen::VectorXd& times,
                             Eigen::Index n_paths, uint64_t seed, uint64_t path_offset = 0);

void write_ensemble_csv(const PathEnsemble& e, const std::string& path);
void write_ensemble_binary(const PathEnsemble& e, const std::string& path);
PathEnsemble read_ensemble_binary(const std::string& path);

} // namespace stomech
