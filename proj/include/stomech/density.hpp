#pragma once

#include "stomech/grid.hpp"
#include "stomech/sde.hpp"

namespace stomech {

/// Nodes where a density drops below floor_fraction * max(p) are masked in
/// every derived field rather than clamped; the ratios p'/p and the Bohm
/// operator are genuinely singular there.
inline constexpr double kDensityFloorFraction = 1e-8;

struct DensityEstimate {
    ScalarField density;
    double bandwidth = 0.0;
    /// Fraction of the sample mass inside the grid bounds. Callers should
    /// warn below 0.99.
    double coverage = 1.0;
};

/// Silverman's rule on the slice at time t (radii on radial grids).
double silverman_bandwidth(const PathEnsemble& e, double t, const Grid& grid);

/// Direction-averaged ambient Gaussian kernel between two radii (ambient
/// dimension 2 or 3): the exact kernel of the radial density estimator.
double spherical_gaussian_kernel(double r, double ri, double bandwidth, int ambient);

/// Gaussian-kernel density estimate of the ensemble at time t, renormalized
/// to unit integral on the grid. Radial grids use the exact spherical
/// reduction of the ambient Gaussian kernel, so the estimate stays clean down
/// to r = 0. bandwidth <= 0 selects Silverman's rule.
DensityEstimate estimate_density(const PathEnsemble& e, double t, const Grid& grid,
                                 double bandwidth = 0.0);

/// Same estimator for a raw sample matrix (rows = points).
DensityEstimate estimate_density_samples(const Eigen::MatrixXd& samples, const Grid& grid,
                                         double bandwidth = 0.0);

/// grad(ln p) by central differences; nodes below the density floor are
/// masked. Throws if the whole field sits below the floor. Estimated
/// densities use the default floor; exactly sampled analytic profiles may
/// relax it, since their tails stay accurate far below it.
VectorField log_density_gradient(const ScalarField& p,
                                 double floor_fraction = kDensityFloorFraction);

/// Delta(sqrt p) / sqrt p, the shape factor of the induced potential.
ScalarField bohm_operator(const ScalarField& p, double floor_fraction = kDensityFloorFraction);

/// u = (sigma^2 / 2) grad(ln p).
VectorField osmotic_velocity(const ScalarField& p, double sigma,
                             double floor_fraction = kDensityFloorFraction);

} // namespace stomech
