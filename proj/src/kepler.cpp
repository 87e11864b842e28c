#include "stomech/kepler.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace stomech {

KeplerModel::KeplerModel(double G, double M, double m, double sigma)
    : G_(G), M_(M), m_(m), sigma_(sigma) {
    if (!(G > 0.0) || !(M > 0.0) || !(m > 0.0) || !(sigma > 0.0))
        throw std::domain_error("KeplerModel requires strictly positive G, M, m, sigma");
    double v0_a = flat_rotation_speed();
    double v0_b = GM() / (sigma * sigma);
    if (std::abs(v0_a - v0_b) > 1e-12 * v0_b)
        throw std::runtime_error("KeplerModel: sigma^2 = GM/v0 consistency violated");
}

double KeplerModel::r0() const { return 2.0 * std::pow(sigma_, 4) / GM(); }

double KeplerModel::flat_rotation_speed() const { return std::sqrt(2.0 * GM() / r0()); }

double KeplerModel::potential(double r) const {
    if (!(r > 0.0)) throw std::domain_error("Kepler potential needs r > 0");
    return -GM() * m_ / r;
}

double KeplerModel::induced_potential(double r) const {
    if (!(r > 0.0)) throw std::domain_error("induced potential needs r > 0");
    return -(GM() * m_ / r0()) * (1.0 - r0() / r);
}

double KeplerModel::total_potential(double r) const {
    return potential(r) + induced_potential(r);
}

CircularOrbitState circular_orbit_relations(const KeplerModel& model, double L0) {
    if (L0 == 0.0)
        throw std::domain_error("circular_orbit_relations: L0 = 0 admits no circular orbit");
    CircularOrbitState s;
    s.L0 = L0;
    s.r = std::sqrt(L0 * L0 * model.r0() / (2.0 * model.GM()));
    s.v_theta_squared = L0 * L0 / (s.r * s.r);
    return s;
}

PolarStochasticVelocity polar_velocity_decomposition(std::complex<double> Dr,
                                                     std::complex<double> Dtheta, double r,
                                                     double sigma_r, double sigma_theta, int mu) {
    if (mu != 1 && mu != -1) throw std::invalid_argument("mu must be +-1");
    PolarStochasticVelocity out;
    std::complex<double> i(0.0, 1.0);
    out.radial = Dr - i * static_cast<double>(mu) * 0.5 * sigma_theta * sigma_theta * r;
    out.tangential = r * Dtheta + i * static_cast<double>(mu) * sigma_r * sigma_theta;
    out.v_r = Dr.real();
    out.v_theta = r * Dtheta.real();
    return out;
}

void write_rotation_curve_csv(const KeplerModel& model, double r_lo, double r_hi, int n,
                              const std::string& path) {
    if (!(r_lo > 0.0) || !(r_hi > r_lo) || n < 2)
        throw std::invalid_argument("write_rotation_curve_csv: bad radius range");
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    double u_scale = model.GM() * model.m() / model.r0();
    double v0 = model.flat_rotation_speed();
    std::fprintf(fp, "r,U_kepler,U_induced,U_total,v_circ,v_kepler\n");
    for (int i = 0; i < n; ++i) {
        double x = r_lo + (r_hi - r_lo) * i / (n - 1); // in units of r0
        double r = x * model.r0();
        double v_kepler = std::sqrt(model.GM() / r) / v0;
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x,
                     model.potential(r) / u_scale, model.induced_potential(r) / u_scale,
                     model.total_potential(r) / u_scale, 1.0, v_kepler);
    }
    std::fclose(fp);
}

} // namespace stomech
