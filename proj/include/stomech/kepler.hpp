#pragma once

#include <complex>
#include <string>

namespace stomech {

/// Closed-form Kepler application in working units. r0 and v0 are always
/// recomputed from (G, M, sigma) so the diffusion-coefficient relation
/// sigma^2 = G M / v0 cannot drift; it is checked at construction.
class KeplerModel {
public:
    KeplerModel(double G, double M, double m, double sigma);

    double G() const { return G_; }
    double M() const { return M_; }
    double m() const { return m_; }
    double sigma() const { return sigma_; }
    double GM() const { return G_ * M_; }
    double r0() const;                  // 2 sigma^4 / (G M)
    double flat_rotation_speed() const; // v0 = sqrt(2 G M / r0), r-independent

    double potential(double r) const;         // -G M m / r
    double induced_potential(double r) const; // -(G M m / r0)(1 - r0/r)
    double total_potential(double r) const;   // sum; constant -G M m / r0

private:
    double G_, M_, m_, sigma_;
};

/// Circular-orbit relations of the rotating equilibrium: the conserved
/// L0 = E[r^2 Re(D_mu theta)] fixes the orbit radius through
/// r^2 = L0^2 r0 / (2 G M), and E[v_theta^2] = v0^2 = L0^2 / r^2.
struct CircularOrbitState {
    double r = 0.0;
    double L0 = 0.0;
    double v_theta_squared = 0.0;
};
CircularOrbitState circular_orbit_relations(const KeplerModel& model, double L0);

/// Planar stochastic velocity decomposed along the radial and tangential
/// directions, including the Ito terms of the polar chain rule:
///   D_mu X = D_mu r e_r + r D_mu theta e_t - i mu (sigma_theta^2 r / 2) e_r
///            + i mu sigma_r sigma_theta e_t.
/// The physical speed components are the real parts only.
struct PolarStochasticVelocity {
    std::complex<double> radial;
    std::complex<double> tangential;
    double v_r = 0.0;
    double v_theta = 0.0;
};
PolarStochasticVelocity polar_velocity_decomposition(std::complex<double> Dr,
                                                     std::complex<double> Dtheta, double r,
                                                     double sigma_r, double sigma_theta, int mu);

/// Normalized rotation-curve table: radius in units of r0, potentials in
/// units of G M m / r0, speeds in units of v0 (flat branch constant 1, the
/// bare Keplerian sqrt(GM/r) branch alongside for comparison).
void write_rotation_curve_csv(const KeplerModel& model, double r_lo, double r_hi, int n,
                              const std::string& path);

} // namespace stomech
