#include "stomech/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stomech {

namespace {

double column_stddev(const Eigen::VectorXd& v) {
    double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / std::max<Eigen::Index>(1, v.size() - 1));
}

double interquartile(Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    auto q = [&](double f) {
        double pos = f * (v.size() - 1);
        Eigen::Index i = static_cast<Eigen::Index>(pos);
        double t = pos - i;
        return i + 1 < v.size() ? v[i] * (1 - t) + v[i + 1] * t : v[i];
    };
    return q(0.75) - q(0.25);
}

Eigen::VectorXd radii_of(const Eigen::MatrixXd& samples, int ambient) {
    return samples.leftCols(ambient).rowwise().norm();
}

// Spherically reduced Gaussian kernel in ambient dimension 3:
// average of the 3D kernel over directions, as a function of the two radii.
double spherical_kernel_3d(double r, double ri, double b) {
    double b2 = b * b;
    double norm = std::pow(2.0 * std::numbers::pi * b2, -1.5);
    double alpha = r * ri / b2;
    if (alpha < 1e-4) {
        double e = std::exp(-(r * r + ri * ri) / (2.0 * b2));
        return norm * e * (1.0 + alpha * alpha / 6.0);
    }
    double em = std::exp(-(r - ri) * (r - ri) / (2.0 * b2));
    double ep = std::exp(-(r + ri) * (r + ri) / (2.0 * b2));
    return norm * (em - ep) / (2.0 * alpha);
}

// Ambient dimension 2 uses the Bessel reduction I0(alpha).
double spherical_kernel_2d(double r, double ri, double b) {
    double b2 = b * b;
    double norm = 1.0 / (2.0 * std::numbers::pi * b2);
    double alpha = r * ri / b2;
    if (alpha < 30.0) {
        double e = std::exp(-(r * r + ri * ri) / (2.0 * b2));
        return norm * e * std::cyl_bessel_i(0.0, alpha);
    }
    // I0(a) ~ e^a / sqrt(2 pi a) for large a; fold the exponential together
    double em = std::exp(-(r - ri) * (r - ri) / (2.0 * b2));
    return norm * em / std::sqrt(2.0 * std::numbers::pi * alpha) * (1.0 + 1.0 / (8.0 * alpha));
}

} // namespace

double spherical_gaussian_kernel(double r, double ri, double bandwidth, int ambient) {
    return ambient == 3 ? spherical_kernel_3d(r, ri, bandwidth)
                        : spherical_kernel_2d(r, ri, bandwidth);
}

namespace {

DensityEstimate radial_kde(const Eigen::MatrixXd& samples, const Grid& grid, double b) {
    Eigen::Index n = grid.size();
    double h = grid.spacing(0);
    // bin the radii on the grid, then apply the reduced kernel bin-to-node
    Eigen::ArrayXd bins = Eigen::ArrayXd::Zero(n);
    Eigen::Index inside = deposit_cic(grid, samples, nullptr, bins);

    ScalarField p(grid);
    Eigen::Index reach = static_cast<Eigen::Index>(std::ceil(6.0 * b / h)) + 1;
    int amb = grid.ambient_dim();
    for (Eigen::Index j = 0; j < n; ++j) {
        double rj = grid.radius(j);
        double acc = 0.0;
        Eigen::Index b0 = std::max<Eigen::Index>(0, j - reach);
        Eigen::Index b1 = std::min<Eigen::Index>(n - 1, j + reach);
        for (Eigen::Index i = b0; i <= b1; ++i) {
            if (bins[i] == 0.0) continue;
            double ri = grid.radius(i);
            acc += bins[i] * (amb == 3 ? spherical_kernel_3d(rj, ri, b)
                                       : spherical_kernel_2d(rj, ri, b));
        }
        p.values[j] = acc / static_cast<double>(samples.rows());
    }
    normalize_density(p);
    return {std::move(p), b, static_cast<double>(inside) / static_cast<double>(samples.rows())};
}

DensityEstimate cartesian_kde(const Eigen::MatrixXd& samples, const Grid& grid, double b) {
    ScalarField p(grid);
    Eigen::Index inside = deposit_cic(grid, samples, nullptr, p.values);
    if (inside == 0) throw std::runtime_error("estimate_density: no samples inside the grid");
    gaussian_smooth(grid, p.values, b);
    normalize_density(p);
    return {std::move(p), b, static_cast<double>(inside) / static_cast<double>(samples.rows())};
}

double silverman_from_samples(const Eigen::MatrixXd& samples, const Grid& grid) {
    Eigen::Index n = samples.rows();
    if (grid.kind() == GridKind::Radial) {
        Eigen::VectorXd r = radii_of(samples, grid.ambient_dim());
        double spread = std::min(column_stddev(r), interquartile(r) / 1.34);
        if (spread <= 0.0) spread = std::max(1e-12, column_stddev(r));
        return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    }
    int d = grid.dim();
    double factor = std::pow(4.0 / ((d + 2.0) * static_cast<double>(n)), 1.0 / (d + 4.0));
    double b = 0.0;
    for (int a = 0; a < d; ++a) b += column_stddev(samples.col(a));
    b = b / d * factor;
    return std::max(b, 1e-12);
}

} // namespace

double silverman_bandwidth(const PathEnsemble& e, double t, const Grid& grid) {
    return silverman_from_samples(e.positions[e.time_index(t)], grid);
}

DensityEstimate estimate_density_samples(const Eigen::MatrixXd& samples, const Grid& grid,
                                         double bandwidth) {
    if (samples.rows() == 0) throw std::invalid_argument("estimate_density: empty sample set");
    double b = bandwidth > 0.0 ? bandwidth : silverman_from_samples(samples, grid);
    if (grid.kind() == GridKind::Radial) return radial_kde(samples, grid, b);
    return cartesian_kde(samples, grid, b);
}

DensityEstimate estimate_density(const PathEnsemble& e, double t, const Grid& grid,
                                 double bandwidth) {
    if (e.path_count() == 0) throw std::invalid_argument("estimate_density: empty ensemble");
    const Eigen::MatrixXd& slice = e.positions[e.time_index(t)];
    if (grid.kind() == GridKind::Cartesian && grid.dim() > e.dim)
        throw std::invalid_argument("estimate_density: grid dimension exceeds ensemble dimension");
    return estimate_density_samples(slice, grid, bandwidth);
}

VectorField log_density_gradient(const ScalarField& p, double floor_fraction) {
    double pmax = p.values.maxCoeff();
    if (!(pmax > 0.0)) throw std::invalid_argument("log_density_gradient: empty density");
    double floor = floor_fraction * pmax;
    ScalarField logp(p.grid);
    logp.valid = p.valid && (p.values >= floor);
    if (logp.valid.count() == 0)
        throw std::invalid_argument("log_density_gradient: whole field below the density floor");
    logp.values = p.values.max(floor).log();
    return gradient(logp);
}

ScalarField bohm_operator(const ScalarField& p, double floor_fraction) {
    double pmax = p.values.maxCoeff();
    if (!(pmax > 0.0)) throw std::invalid_argument("bohm_operator: empty density");
    double floor = floor_fraction * pmax;
    ScalarField root(p.grid);
    root.valid = p.valid && (p.values >= floor);
    root.values = p.values.max(0.0).sqrt();
    ScalarField lap = laplacian(root);
    ScalarField out(p.grid);
    out.valid = lap.valid && root.valid;
    for (Eigen::Index n = 0; n < out.values.size(); ++n)
        out.values[n] = out.valid[n] ? lap.values[n] / root.values[n] : 0.0;
    return out;
}

VectorField osmotic_velocity(const ScalarField& p, double sigma, double floor_fraction) {
    if (sigma == 0.0) return VectorField(p.grid);
    VectorField u = log_density_gradient(p, floor_fraction);
    u.values *= 0.5 * sigma * sigma;
    return u;
}

} // namespace stomech
