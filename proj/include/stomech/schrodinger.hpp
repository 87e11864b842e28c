#pragma once

#include <string>

#include "stomech/grid.hpp"

namespace stomech {

/// Complex field psi = exp(i A / C) with its normalization constant. The
/// canonical choice C = -mu m sigma^2 makes the dynamics linear and gives
/// |psi|^2 = p.
struct WaveFunction {
    Grid grid;
    Eigen::ArrayXd re, im;
    double C = 1.0;
    double m = 1.0;
    double sigma = 1.0;
    int mu = -1;

    WaveFunction() = default;
    explicit WaveFunction(const Grid& g)
        : grid(g), re(Eigen::ArrayXd::Zero(g.size())), im(Eigen::ArrayXd::Zero(g.size())) {}

    Eigen::ArrayXd modulus() const { return (re.square() + im.square()).sqrt(); }
};

/// Real and imaginary parts of the complex action A = S + i mu R, with
/// R = (m sigma^2 / 2) ln p.
struct ActionPair {
    ScalarField S;
    ScalarField R;
    /// Max deviation of R from (m sigma^2/2) ln|psi|^2 over valid nodes.
    double r_consistency = 0.0;
};

enum class GroundStateMethod { Auto, InverseIteration, ImaginaryTime };

struct GroundStateOptions {
    GroundStateMethod method = GroundStateMethod::Auto;
    int max_iterations = 400;
    double residual_tolerance = 1e-8; // on ||H phi - E phi||_2 / ||phi||_2
};

struct GroundStateResult {
    WaveFunction psi; // real positive, normalized to unit probability
    double E0 = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::string method;
};

/// Lowest eigenpair of -(m sigma^4/2) Delta phi + U phi = E phi on the grid
/// of U (radial grids via the u = r phi substitution, 1D Cartesian directly;
/// Dirichlet one spacing outside both ends). Throws if no bound state lies
/// below the boundary potential or the iteration fails to meet the residual.
GroundStateResult ground_state(const ScalarField& U, double m, double sigma, int mu = -1,
                               const GroundStateOptions& opts = {});

/// p = |psi|^2, renormalized on the grid.
ScalarField density_from_wavefunction(const WaveFunction& psi);

/// A = -i C ln(psi), branch-unwrapped along grid lines; S is pinned to zero
/// at the first valid node. Nodes with |psi| below the floor are masked.
ActionPair action_from_wavefunction(const WaveFunction& psi);

/// psi = sqrt(rho) exp(i theta / eps).
WaveFunction madelung(const ScalarField& rho, const ScalarField& theta, double eps);
struct MadelungPair {
    ScalarField rho;
    ScalarField theta;
};
/// Inverse transform; theta is recovered up to an additive multiple of
/// 2 pi eps.
MadelungPair inverse_madelung(const WaveFunction& psi, double eps);

/// Pointwise magnitude of the nonlinear equation residual
///   i C d_t psi - mu (sigma^2 C/2) Delta psi
///   + C (mu m sigma^2 + C) / (2m) (grad psi . grad psi)/psi - psi U
/// on the stationary extension psi e^{-i E t / C}. With C = -mu m sigma^2 the
/// nonlinearity cancels and this is the linear eigen-residual.
ScalarField nonlinear_residual(const WaveFunction& psi, const ScalarField& U, double C, double E);

/// Rayleigh quotient (integral form) of a trial field for the stationary
/// operator; never below the true ground energy.
double rayleigh_quotient(const ScalarField& U, double m, double sigma, const ScalarField& trial);

/// sqrt of the grid integral of f^2 over valid nodes.
double l2_norm(const ScalarField& f);

/// CSV with one row per node: coordinates, Re psi, Im psi.
void write_wavefunction_csv(const WaveFunction& psi, const std::string& path);

} // namespace stomech
