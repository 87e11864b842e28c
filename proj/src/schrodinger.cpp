#include "stomech/schrodinger.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stomech/density.hpp"

namespace stomech {

namespace {

// Discrete Hamiltonian in the working variable w: w = r*phi on radial grids
// (so the kinetic term is a plain second difference), w = phi in 1D.
struct DiscreteHamiltonian {
    const Grid& grid;
    const Eigen::ArrayXd& U;
    double kappa; // m sigma^4 / 2
    double h;

    Eigen::ArrayXd apply(const Eigen::ArrayXd& w) const {
        Eigen::Index n = w.size();
        Eigen::ArrayXd out(n);
        double inv_h2 = 1.0 / (h * h);
        for (Eigen::Index j = 0; j < n; ++j) {
            double left = j > 0 ? w[j - 1] : 0.0; // Dirichlet outside both ends
            double right = j + 1 < n ? w[j + 1] : 0.0;
            out[j] = -kappa * (left - 2.0 * w[j] + right) * inv_h2 + U[j] * w[j];
        }
        return out;
    }

    double diag(Eigen::Index j) const { return 2.0 * kappa / (h * h) + U[j]; }
    double offdiag() const { return -kappa / (h * h); }

    double rayleigh(const Eigen::ArrayXd& w) const {
        return (w * apply(w)).sum() / w.square().sum();
    }

    double residual(const Eigen::ArrayXd& w, double E) const {
        return std::sqrt((apply(w) - E * w).square().sum() / w.square().sum());
    }

    // Thomas solve of (H - shift I) x = b; valid (positive definite) for
    // shift strictly below the lowest eigenvalue.
    Eigen::ArrayXd solve_shifted(double shift, const Eigen::ArrayXd& b) const {
        Eigen::Index n = b.size();
        Eigen::ArrayXd c(n), d(n);
        double off = offdiag();
        double denom = diag(0) - shift;
        c[0] = off / denom;
        d[0] = b[0] / denom;
        for (Eigen::Index j = 1; j < n; ++j) {
            denom = diag(j) - shift - off * c[j - 1];
            c[j] = off / denom;
            d[j] = (b[j] - off * d[j - 1]) / denom;
        }
        Eigen::ArrayXd x(n);
        x[n - 1] = d[n - 1];
        for (Eigen::Index j = n - 2; j >= 0; --j) x[j] = d[j] - c[j] * x[j + 1];
        return x;
    }
};

Eigen::ArrayXd initial_guess(const Grid& grid, const Eigen::ArrayXd& U) {
    // nodeless bump centered on the potential minimum
    Eigen::Index jmin = 0;
    U.minCoeff(&jmin);
    double x0 = grid.kind() == GridKind::Radial ? grid.radius(jmin) : grid.coord(0, static_cast<int>(jmin));
    double width = 0.15 * (grid.hi(0) - grid.lo(0));
    Eigen::ArrayXd w(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        double x = grid.kind() == GridKind::Radial ? grid.radius(j) : grid.coord(0, static_cast<int>(j));
        double arg = (x - x0) / width;
        w[j] = std::exp(-0.5 * arg * arg);
        if (grid.kind() == GridKind::Radial) w[j] *= x; // w = r phi vanishes at 0
    }
    return w / std::sqrt(w.square().sum());
}

int count_nodes(const Eigen::ArrayXd& w) {
    double scale = w.abs().maxCoeff();
    int flips = 0;
    double last = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        double v = w[j];
        if (std::abs(v) < 1e-9 * scale) continue;
        if (last != 0.0 && v * last < 0.0) ++flips;
        last = v;
    }
    return flips;
}

} // namespace

GroundStateResult ground_state(const ScalarField& U, double m, double sigma, int mu,
                               const GroundStateOptions& opts) {
    const Grid& grid = U.grid;
    bool radial = grid.kind() == GridKind::Radial;
    if (!radial && !(grid.kind() == GridKind::Cartesian && grid.dim() == 1))
        throw std::invalid_argument("ground_state: radial or 1D Cartesian grids only");
    if (radial && grid.lo(0) <= 0.0)
        throw std::invalid_argument("ground_state: radial grid must start at r > 0");
    if (!(m > 0.0) || !(sigma > 0.0)) throw std::domain_error("ground_state: m, sigma must be > 0");
    if (!U.values.allFinite()) throw std::invalid_argument("ground_state: potential not finite");

    DiscreteHamiltonian H{grid, U.values, 0.5 * m * std::pow(sigma, 4), grid.spacing(0)};
    Eigen::ArrayXd w = initial_guess(grid, U.values);

    // imaginary-time warmup: (I + dtau H) w_{k+1} = w_k with adaptive step
    double E = H.rayleigh(w);
    int iterations = 0;
    std::string method;
    auto imaginary_time_pass = [&](int steps, double target) {
        for (int k = 0; k < steps; ++k) {
            double dtau = 0.5 / (std::abs(E) + 1.0);
            // implicit Euler is the shifted solve with shift -1/dtau
            Eigen::ArrayXd next = H.solve_shifted(-1.0 / dtau, w) / dtau;
            w = next / std::sqrt(next.square().sum());
            E = H.rayleigh(w);
            ++iterations;
            if (H.residual(w, E) < target) break;
        }
    };

    if (opts.method == GroundStateMethod::ImaginaryTime) {
        method = "imaginary-time";
        imaginary_time_pass(opts.max_iterations, opts.residual_tolerance);
    } else {
        method = "inverse-iteration";
        imaginary_time_pass(30, 1e-3);
        // shifted inverse iteration, re-shifting below the current estimate
        for (int k = 0; k < opts.max_iterations; ++k) {
            double gap = std::max(1e-3 * (std::abs(E) + 1.0), 10.0 * H.residual(w, E));
            double shift = E - gap;
            Eigen::ArrayXd next = H.solve_shifted(shift, w);
            w = next / std::sqrt(next.square().sum());
            E = H.rayleigh(w);
            ++iterations;
            if (H.residual(w, E) < opts.residual_tolerance) break;
        }
    }

    double res = H.residual(w, E);
    if (res >= opts.residual_tolerance) {
        std::ostringstream os;
        os << "ground_state: no convergence after " << iterations << " iterations, residual " << res;
        throw std::runtime_error(os.str());
    }
    // continuum edge: the potential at the outer boundary
    double edge = U.values[grid.size() - 1];
    if (!(E < edge)) {
        std::ostringstream os;
        os << "ground_state: no bound state (E = " << E << " not below the boundary potential "
           << edge << ")";
        throw std::runtime_error(os.str());
    }
    if (w.maxCoeff() < -w.minCoeff()) w = -w;
    if (count_nodes(w) != 0) throw std::runtime_error("ground_state: converged state has nodes");

    GroundStateResult result;
    result.psi = WaveFunction(grid);
    result.psi.m = m;
    result.psi.sigma = sigma;
    result.psi.mu = mu;
    result.psi.C = -mu * m * sigma * sigma;
    // back to phi (w = r phi on radial grids), then normalize in probability
    ScalarField phi(grid);
    for (Eigen::Index j = 0; j < grid.size(); ++j)
        phi.values[j] = radial ? w[j] / grid.radius(j) : w[j];
    ScalarField p2 = phi;
    p2.values = phi.values.square();
    double norm = integrate(p2);
    phi.values /= std::sqrt(norm);
    result.psi.re = phi.values;
    result.E0 = E;
    result.residual = res;
    result.iterations = iterations;
    result.method = method;
    return result;
}

ScalarField density_from_wavefunction(const WaveFunction& psi) {
    ScalarField p(psi.grid);
    p.values = psi.re.square() + psi.im.square();
    normalize_density(p);
    return p;
}

namespace {

// Unwraps the phase along axis-0 lines; each line is seeded from the phase of
// the previous line's first valid node so 3D fields stay branch-coherent.
Eigen::ArrayXd unwrap_phase(const Grid& grid, const Eigen::ArrayXd& raw, const ArrayXb& valid) {
    Eigen::ArrayXd out = raw;
    constexpr double pi = std::numbers::pi;
    double carry = 0.0;
    bool have_carry = false;
    int n0 = grid.axis_size(0);
    // axis 0 is the slowest index: node (i,j,k) = i*stride + rest
    Eigen::Index stride = grid.size() / n0;
    Eigen::Index lines = stride;
    for (Eigen::Index l = 0; l < lines; ++l) {
        double prev = have_carry ? carry : 0.0;
        bool have_prev = have_carry;
        for (int i = 0; i < n0; ++i) {
            Eigen::Index idx = static_cast<Eigen::Index>(i) * stride + l;
            if (!valid[idx]) continue;
            double ph = raw[idx];
            if (have_prev) {
                double jump = std::round((ph - prev) / (2.0 * pi));
                ph -= 2.0 * pi * jump;
            }
            out[idx] = ph;
            prev = ph;
            have_prev = true;
            if (i == 0 || !have_carry) {
                carry = ph;
                have_carry = true;
            }
        }
    }
    return out;
}

} // namespace

ActionPair action_from_wavefunction(const WaveFunction& psi) {
    const Grid& grid = psi.grid;
    Eigen::ArrayXd mod = psi.modulus();
    double floor = 1e-4 * mod.maxCoeff(); // |psi| floor, i.e. 1e-8 on |psi|^2
    ArrayXb valid = mod >= floor;
    if (valid.count() == 0) throw std::invalid_argument("action_from_wavefunction: psi below floor");

    Eigen::ArrayXd raw(grid.size());
    for (Eigen::Index n = 0; n < grid.size(); ++n)
        raw[n] = std::atan2(psi.im[n], psi.re[n]);
    Eigen::ArrayXd phase = unwrap_phase(grid, raw, valid);

    ActionPair out{ScalarField(grid), ScalarField(grid), 0.0};
    out.S.valid = valid;
    out.R.valid = valid;
    // A = -iC ln psi = C*arg(psi) - iC ln|psi|; S = Re A, mu R = Im A
    double ref = 0.0;
    bool have_ref = false;
    for (Eigen::Index n = 0; n < grid.size(); ++n) {
        if (!valid[n]) continue;
        if (!have_ref) {
            ref = psi.C * phase[n];
            have_ref = true;
        }
        out.S.values[n] = psi.C * phase[n] - ref;
        out.R.values[n] = -psi.mu * psi.C * std::log(mod[n]);
    }
    // check R against (m sigma^2 / 2) ln p with p = |psi|^2
    double dev = 0.0;
    for (Eigen::Index n = 0; n < grid.size(); ++n) {
        if (!valid[n]) continue;
        double r_closed = 0.5 * psi.m * psi.sigma * psi.sigma * std::log(mod[n] * mod[n]);
        dev = std::max(dev, std::abs(out.R.values[n] - r_closed));
    }
    out.r_consistency = dev;
    return out;
}

WaveFunction madelung(const ScalarField& rho, const ScalarField& theta, double eps) {
    if (!(rho.grid == theta.grid)) throw std::invalid_argument("madelung: grids differ");
    if (eps == 0.0) throw std::invalid_argument("madelung: eps must be nonzero");
    WaveFunction psi(rho.grid);
    psi.C = eps;
    psi.m = 1.0;
    psi.sigma = std::sqrt(std::abs(eps));
    psi.mu = -1;
    for (Eigen::Index n = 0; n < rho.grid.size(); ++n) {
        double a = std::sqrt(std::max(0.0, rho.values[n]));
        double ph = theta.values[n] / eps;
        psi.re[n] = a * std::cos(ph);
        psi.im[n] = a * std::sin(ph);
    }
    return psi;
}

MadelungPair inverse_madelung(const WaveFunction& psi, double eps) {
    const Grid& grid = psi.grid;
    Eigen::ArrayXd mod = psi.modulus();
    double floor = 1e-4 * mod.maxCoeff();
    ArrayXb valid = mod >= floor;
    Eigen::ArrayXd raw(grid.size());
    for (Eigen::Index n = 0; n < grid.size(); ++n)
        raw[n] = std::atan2(psi.im[n], psi.re[n]);
    Eigen::ArrayXd phase = unwrap_phase(grid, raw, valid);
    MadelungPair out{ScalarField(grid), ScalarField(grid)};
    out.rho.values = mod.square();
    out.rho.valid = valid;
    out.theta.values = eps * phase;
    out.theta.valid = valid;
    return out;
}

ScalarField nonlinear_residual(const WaveFunction& psi, const ScalarField& U, double C, double E) {
    if (!(psi.grid == U.grid)) throw std::invalid_argument("nonlinear_residual: grids differ");
    const Grid& grid = psi.grid;
    ScalarField re(grid), im(grid);
    re.values = psi.re;
    im.values = psi.im;
    Eigen::ArrayXd mod = psi.modulus();
    double floor = 1e-4 * mod.maxCoeff();
    ArrayXb valid = mod >= floor;
    re.valid = valid;
    im.valid = valid;

    ScalarField lap_re = laplacian(re), lap_im = laplacian(im);
    VectorField grad_re = gradient(re), grad_im = gradient(im);

    double mu = psi.mu;
    double m = psi.m, s2 = psi.sigma * psi.sigma;
    double lap_coeff = -mu * 0.5 * s2 * C;
    double nl_coeff = C * (mu * m * s2 + C) / (2.0 * m);

    ScalarField out(grid);
    out.valid = lap_re.valid && lap_im.valid && valid;
    for (Eigen::Index n = 0; n < grid.size(); ++n) {
        if (!out.valid[n]) continue;
        // i C d_t psi with psi(t) = phi e^{-iEt/C} contributes E phi
        double acc_re = E * psi.re[n] + lap_coeff * lap_re.values[n] - U.values[n] * psi.re[n];
        double acc_im = E * psi.im[n] + lap_coeff * lap_im.values[n] - U.values[n] * psi.im[n];
        if (nl_coeff != 0.0) {
            double gg_re = 0.0, gg_im = 0.0;
            for (int c = 0; c < grad_re.components(); ++c) {
                gg_re += grad_re.values(n, c) * grad_re.values(n, c) -
                         grad_im.values(n, c) * grad_im.values(n, c);
                gg_im += 2.0 * grad_re.values(n, c) * grad_im.values(n, c);
            }
            double den = mod[n] * mod[n];
            // (gg / psi) = gg * conj(psi) / |psi|^2
            double q_re = (gg_re * psi.re[n] + gg_im * psi.im[n]) / den;
            double q_im = (gg_im * psi.re[n] - gg_re * psi.im[n]) / den;
            acc_re += nl_coeff * q_re;
            acc_im += nl_coeff * q_im;
        }
        out.values[n] = std::hypot(acc_re, acc_im);
    }
    return out;
}

double rayleigh_quotient(const ScalarField& U, double m, double sigma, const ScalarField& trial) {
    if (!(U.grid == trial.grid)) throw std::invalid_argument("rayleigh_quotient: grids differ");
    double kappa = 0.5 * m * std::pow(sigma, 4);
    VectorField g = gradient(trial);
    ScalarField kinetic(trial.grid), weight(trial.grid);
    for (Eigen::Index n = 0; n < trial.grid.size(); ++n) {
        double g2 = 0.0;
        for (int c = 0; c < g.components(); ++c) g2 += g.values(n, c) * g.values(n, c);
        kinetic.values[n] = kappa * g2 + U.values[n] * trial.values[n] * trial.values[n];
        weight.values[n] = trial.values[n] * trial.values[n];
    }
    return integrate(kinetic) / integrate(weight);
}

void write_wavefunction_csv(const WaveFunction& psi, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    const Grid& g = psi.grid;
    if (g.kind() == GridKind::Radial)
        std::fprintf(fp, "r,re_psi,im_psi\n");
    else if (g.dim() == 1)
        std::fprintf(fp, "x,re_psi,im_psi\n");
    else if (g.dim() == 2)
        std::fprintf(fp, "x,y,re_psi,im_psi\n");
    else
        std::fprintf(fp, "x,y,z,re_psi,im_psi\n");
    for (Eigen::Index n = 0; n < g.size(); ++n) {
        if (g.kind() == GridKind::Radial) {
            std::fprintf(fp, "%.17g", g.radius(n));
        } else {
            Eigen::Vector3d x = g.position(n);
            for (int a = 0; a < g.dim(); ++a) std::fprintf(fp, a ? ",%.17g" : "%.17g", x[a]);
        }
        std::fprintf(fp, ",%.17g,%.17g\n", psi.re[n], psi.im[n]);
    }
    std::fclose(fp);
}

double l2_norm(const ScalarField& f) {
    ScalarField sq(f.grid);
    for (Eigen::Index n = 0; n < f.grid.size(); ++n)
        sq.values[n] = f.valid[n] ? f.values[n] * f.values[n] : 0.0;
    return std::sqrt(integrate(sq));
}

} // namespace stomech
