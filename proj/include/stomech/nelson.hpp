#pragma once

#include <functional>
#include <vector>

#include "stomech/density.hpp"
#include "stomech/grid.hpp"
#include "stomech/sde.hpp"

namespace stomech {

/// The complex stochastic velocity D_mu X = v + i mu u: current velocity v
/// (real part) and osmotic velocity u, with mu = +/-1 selecting the branch.
struct ComplexVelocityField {
    VectorField v;
    VectorField u;
    int mu = -1;
};

/// Forward and backward conditional derivatives of an ensemble. For a
/// diffusion with drift b and density p: D+ = b, D- = b - sigma^2 grad(p)/p.
struct NelsonPair {
    VectorField Dplus;
    VectorField Dminus;
};

/// Exact pair from a known drift (sampled on the grid) and density.
NelsonPair analytic_nelson(const VectorField& drift_on_grid, const ScalarField& p, double sigma);

/// v = (D+ + D-)/2, u = (D+ - D-)/2.
ComplexVelocityField stochastic_derivative(const NelsonPair& pair, int mu);

/// Cor_sigma = sigma^2 grad(p)/p. Satisfies D_{-mu} X = D_mu X - i mu Cor.
VectorField correction_term(const ScalarField& p, double sigma);

// ---------------------------------------------------------------------------
// Empirical estimators
// ---------------------------------------------------------------------------

/// Nadaraya-Watson kernel regression binned on a grid. Accumulate any number
/// of (points, values) batches, then finalize; nodes with fewer than
/// min_count samples within one bandwidth are masked.
class KernelRegression {
public:
    KernelRegression(const Grid& grid, int value_components, double bandwidth);

    /// points: N x ambient coordinates (radial grids take the radius of each
    /// row); values: N x components.
    void add(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values);

    struct Result {
        Eigen::ArrayXXd values;
        ArrayXb valid;
        Eigen::ArrayXd neighborhood_counts;
    };
    Result finalize(double min_count) const;

    double bandwidth() const { return bandwidth_; }

private:
    Grid grid_;
    double bandwidth_;
    Eigen::ArrayXXd num_;
    Eigen::ArrayXd den_;
    Eigen::ArrayXd raw_counts_;
};

/// Streaming estimator of the Nelson pair: conditional expectations of
/// forward/backward increments over a lag of `window` steps, regressed on the
/// position at the estimation time. Disjoint windows from any number of
/// ensemble batches can be accumulated before finalizing.
class NelsonEstimator {
public:
    NelsonEstimator(const Grid& grid, int window, double bandwidth);

    /// Adds the window pair centered on time index k (needs window steps on
    /// both sides).
    void accumulate(const PathEnsemble& e, Eigen::Index k);

    NelsonPair finalize(double min_count = 50.0) const;

private:
    Grid grid_;
    int window_;
    KernelRegression fwd_, bwd_;
};

/// One-shot estimate at ensemble time t.
NelsonPair empirical_nelson(const PathEnsemble& e, double t, const Grid& grid, int window,
                            double bandwidth, double min_count = 50.0);

/// Kernel regression of the increments of the transformed process g(X_t, t):
/// the empirical D+[g] (forward = true) or D-[g], evaluated on the grid. Used
/// to check the chain rule against its analytic form.
ScalarField empirical_transform_derivative(const PathEnsemble& e,
                                           const std::function<double(const Eigen::Vector3d&, double)>& g,
                                           Eigen::Index k, const Grid& grid, int window,
                                           double bandwidth, bool forward,
                                           double min_count = 50.0);

// ---------------------------------------------------------------------------
// Operator algebra
// ---------------------------------------------------------------------------

/// Smooth test function with explicit derivative evaluators; the chain rule
/// needs two continuous space derivatives and one in time.
struct TestFunction {
    std::function<double(const Eigen::Vector3d&, double)> value;
    std::function<double(const Eigen::Vector3d&, double)> dt;
    std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)> grad;
    std::function<double(const Eigen::Vector3d&, double)> lap;
};

struct ChainRuleOperator {
    ComplexVelocityField velocity;
    double sigma = 0.0;
};

/// D_mu[g(X_t, t)] = (d_t + D_mu X . grad + i mu (sigma^2/2) Delta) g,
/// evaluated on the velocity field's grid at time t.
ComplexField apply_chain_rule(const ChainRuleOperator& op, const TestFunction& g, double t);

/// A velocity field together with its time slot, for time-differentiable
/// sequences.
struct VelocitySlice {
    double t = 0.0;
    ComplexVelocityField velocity;
};

/// Mean second derivative D_{alpha mu} o D_mu X evaluated at slice
/// `eval_index` of a time sequence (at least two slices; pass the same field
/// twice for stationary states). alpha = +1 gives D_mu^2 X, alpha = -1 the
/// variational composition.
ComplexVectorField second_derivative(const std::vector<VelocitySlice>& slices,
                                     Eigen::Index eval_index, int alpha, double sigma);

/// Same object assembled through the composition lemma from (D+, D-) chain
/// rules; an independent algebraic route used as a cross-check.
ComplexVectorField second_derivative_composition(const std::vector<VelocitySlice>& slices,
                                                 Eigen::Index eval_index, int alpha, double sigma);

struct RealityDiagnostic {
    ScalarField defect; // |D+^2 X - D-^2 X| pointwise
    double max_defect = 0.0;
    double max_curl = 0.0; // only populated when a 3D drift is supplied
    bool is_gradient = false;
};

/// Reality condition for the differential equation (alpha = 1): the defect
/// D+^2 X - D-^2 X vanishes exactly when the drift is a gradient. When a
/// drift evaluator is given on a 3D grid, the curl is reported as an
/// independent gradient test.
RealityDiagnostic reality_diagnostic(const std::vector<VelocitySlice>& slices,
                                     Eigen::Index eval_index, double sigma, double tolerance,
                                     const DriftField* drift = nullptr);

} // namespace stomech
