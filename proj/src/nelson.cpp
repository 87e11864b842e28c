#include "stomech/nelson.hpp"

#include <cmath>
#include <stdexcept>

namespace stomech {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grids differ");
}

VectorField combine(const VectorField& a, double ca, const VectorField& b, double cb) {
    require_same_grid(a.grid, b.grid, "field combination");
    VectorField out(a.grid);
    out.values = ca * a.values + cb * b.values;
    out.valid = a.valid && b.valid;
    return out;
}

VectorField scaled(const VectorField& a, double c) {
    VectorField out = a;
    out.values *= c;
    return out;
}

} // namespace

NelsonPair analytic_nelson(const VectorField& drift_on_grid, const ScalarField& p, double sigma) {
    require_same_grid(drift_on_grid.grid, p.grid, "analytic_nelson");
    NelsonPair pair;
    pair.Dplus = drift_on_grid;
    if (sigma == 0.0) {
        pair.Dminus = drift_on_grid;
        return pair;
    }
    VectorField score = log_density_gradient(p);
    pair.Dminus = combine(drift_on_grid, 1.0, score, -sigma * sigma);
    return pair;
}

ComplexVelocityField stochastic_derivative(const NelsonPair& pair, int mu) {
    if (mu != 1 && mu != -1) throw std::invalid_argument("mu must be +-1");
    ComplexVelocityField out;
    out.mu = mu;
    out.v = combine(pair.Dplus, 0.5, pair.Dminus, 0.5);
    out.u = combine(pair.Dplus, 0.5, pair.Dminus, -0.5);
    return out;
}

VectorField correction_term(const ScalarField& p, double sigma) {
    if (sigma == 0.0) return VectorField(p.grid);
    VectorField score = log_density_gradient(p);
    score.values *= sigma * sigma;
    return score;
}

// ---------------------------------------------------------------------------
// Empirical estimators
// ---------------------------------------------------------------------------

KernelRegression::KernelRegression(const Grid& grid, int value_components, double bandwidth)
    : grid_(grid),
      bandwidth_(bandwidth),
      num_(Eigen::ArrayXXd::Zero(grid.size(), value_components)),
      den_(Eigen::ArrayXd::Zero(grid.size())),
      raw_counts_(Eigen::ArrayXd::Zero(grid.size())) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("KernelRegression: bandwidth must be > 0");
}

void KernelRegression::add(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values) {
    if (points.rows() != values.rows())
        throw std::invalid_argument("KernelRegression::add: row mismatch");
    if (values.cols() != num_.cols())
        throw std::invalid_argument("KernelRegression::add: component mismatch");
    deposit_cic(grid_, points, nullptr, den_);
    deposit_cic(grid_, points, nullptr, raw_counts_);
    for (int c = 0; c < num_.cols(); ++c) {
        Eigen::VectorXd w = values.col(c);
        Eigen::ArrayXd col = num_.col(c);
        deposit_cic(grid_, points, &w, col);
        num_.col(c) = col;
    }
}

KernelRegression::Result KernelRegression::finalize(double min_count) const {
    Eigen::ArrayXd den = den_;
    gaussian_smooth(grid_, den, bandwidth_);
    Eigen::ArrayXXd values(grid_.size(), num_.cols());
    for (int c = 0; c < num_.cols(); ++c) {
        Eigen::ArrayXd col = num_.col(c);
        gaussian_smooth(grid_, col, bandwidth_);
        values.col(c) = col;
    }
    Eigen::ArrayXd counts = box_sum(grid_, raw_counts_, bandwidth_);
    Result r;
    r.values = Eigen::ArrayXXd::Zero(grid_.size(), num_.cols());
    r.valid = (counts >= min_count) && (den > 0.0);
    r.neighborhood_counts = counts;
    for (Eigen::Index n = 0; n < grid_.size(); ++n)
        if (r.valid[n]) r.values.row(n) = values.row(n) / den[n];
    return r;
}

namespace {

int regression_components(const Grid& g) {
    return g.kind() == GridKind::Radial ? 1 : g.dim();
}

// Increment values regressed on the base slice. Radial grids project the
// increment onto the unit radial direction at the base point.
Eigen::MatrixXd increment_values(const Grid& grid, const Eigen::MatrixXd& base,
                                 const Eigen::MatrixXd& moved, double dt) {
    if (grid.kind() == GridKind::Radial) {
        Eigen::MatrixXd y(base.rows(), 1);
        int amb = std::min<int>(grid.ambient_dim(), static_cast<int>(base.cols()));
        for (Eigen::Index s = 0; s < base.rows(); ++s) {
            double r = base.row(s).head(amb).norm();
            if (r <= 0.0) {
                y(s, 0) = 0.0;
                continue;
            }
            double proj = (moved.row(s).head(amb) - base.row(s).head(amb))
                              .dot(base.row(s).head(amb)) /
                          r;
            y(s, 0) = proj / dt;
        }
        return y;
    }
    return (moved.leftCols(grid.dim()) - base.leftCols(grid.dim())) / dt;
}

VectorField regression_to_field(const Grid& grid, const KernelRegression::Result& r) {
    VectorField f(grid);
    f.values = r.values;
    f.valid = r.valid;
    return f;
}

} // namespace

NelsonEstimator::NelsonEstimator(const Grid& grid, int window, double bandwidth)
    : grid_(grid),
      window_(window),
      fwd_(grid, regression_components(grid), bandwidth),
      bwd_(grid, regression_components(grid), bandwidth) {
    if (window < 1) throw std::invalid_argument("NelsonEstimator: window must be >= 1");
}

void NelsonEstimator::accumulate(const PathEnsemble& e, Eigen::Index k) {
    if (k < window_ || k + window_ >= e.step_count())
        throw std::invalid_argument("NelsonEstimator: need `window` steps on both sides of k");
    const Eigen::MatrixXd& base = e.positions[k];
    double dt_f = e.times[k + window_] - e.times[k];
    double dt_b = e.times[k] - e.times[k - window_];
    fwd_.add(base, increment_values(grid_, base, e.positions[k + window_], dt_f));
    bwd_.add(base, increment_values(grid_, e.positions[k - window_], base, dt_b));
}

NelsonPair NelsonEstimator::finalize(double min_count) const {
    return {regression_to_field(grid_, fwd_.finalize(min_count)),
            regression_to_field(grid_, bwd_.finalize(min_count))};
}

NelsonPair empirical_nelson(const PathEnsemble& e, double t, const Grid& grid, int window,
                            double bandwidth, double min_count) {
    NelsonEstimator est(grid, window, bandwidth);
    est.accumulate(e, e.time_index(t));
    return est.finalize(min_count);
}

ScalarField empirical_transform_derivative(
    const PathEnsemble& e, const std::function<double(const Eigen::Vector3d&, double)>& g,
    Eigen::Index k, const Grid& grid, int window, double bandwidth, bool forward,
    double min_count) {
    if (k < window || k + window >= e.step_count())
        throw std::invalid_argument("empirical_transform_derivative: window out of range");
    const Eigen::MatrixXd& base = e.positions[k];
    Eigen::Index other = forward ? k + window : k - window;
    double dt = forward ? e.times[other] - e.times[k] : e.times[k] - e.times[other];

    auto lift = [&](const Eigen::MatrixXd& slice, Eigen::Index row, double t) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        for (int a = 0; a < e.dim; ++a) x[a] = slice(row, a);
        return g(x, t);
    };
    Eigen::MatrixXd y(base.rows(), 1);
    for (Eigen::Index s = 0; s < base.rows(); ++s) {
        double g0 = lift(e.positions[k], s, e.times[k]);
        double g1 = lift(e.positions[other], s, e.times[other]);
        y(s, 0) = forward ? (g1 - g0) / dt : (g0 - g1) / dt;
    }
    KernelRegression reg(grid, 1, bandwidth);
    reg.add(base, y);
    auto r = reg.finalize(min_count);
    ScalarField out(grid);
    out.values = r.values.col(0);
    out.valid = r.valid;
    return out;
}

// ---------------------------------------------------------------------------
// Operator algebra
// ---------------------------------------------------------------------------

ComplexField apply_chain_rule(const ChainRuleOperator& op, const TestFunction& g, double t) {
    const Grid& grid = op.velocity.v.grid;
    const int mu = op.velocity.mu;
    ComplexField out{ScalarField(grid), ScalarField(grid)};
    double half_s2 = 0.5 * op.sigma * op.sigma;
    for (Eigen::Index n = 0; n < grid.size(); ++n) {
        Eigen::Vector3d x = grid.position(n);
        double gdot = g.dt ? g.dt(x, t) : 0.0;
        Eigen::Vector3d grad = g.grad(x, t);
        double lap = g.lap(x, t);
        double v_dot, u_dot;
        if (grid.kind() == GridKind::Radial) {
            // radial component of grad g at (r, 0, 0) is its first entry
            v_dot = op.velocity.v.values(n, 0) * grad[0];
            u_dot = op.velocity.u.values(n, 0) * grad[0];
        } else {
            v_dot = u_dot = 0.0;
            for (int a = 0; a < grid.dim(); ++a) {
                v_dot += op.velocity.v.values(n, a) * grad[a];
                u_dot += op.velocity.u.values(n, a) * grad[a];
            }
        }
        out.re.values[n] = gdot + v_dot;
        out.im.values[n] = mu * (u_dot + half_s2 * lap);
    }
    out.re.valid = op.velocity.v.valid && op.velocity.u.valid;
    out.im.valid = out.re.valid;
    return out;
}

namespace {

// d/dt of the velocity fields at eval_index by finite differences over the
// slice sequence (2nd-order centered inside, one-sided at the ends; zero for
// a constant sequence).
std::pair<VectorField, VectorField> time_derivatives(const std::vector<VelocitySlice>& s,
                                                     Eigen::Index i) {
    auto fd = [&](auto pick) {
        VectorField out(s[i].velocity.v.grid);
        Eigen::Index n = static_cast<Eigen::Index>(s.size());
        if (i > 0 && i + 1 < n) {
            double dt = s[i + 1].t - s[i - 1].t;
            out.values = (pick(i + 1).values - pick(i - 1).values) / dt;
            out.valid = pick(i + 1).valid && pick(i - 1).valid;
        } else if (i + 1 < n) {
            double dt = s[i + 1].t - s[i].t;
            out.values = (pick(i + 1).values - pick(i).values) / dt;
            out.valid = pick(i + 1).valid && pick(i).valid;
        } else {
            double dt = s[i].t - s[i - 1].t;
            out.values = (pick(i).values - pick(i - 1).values) / dt;
            out.valid = pick(i).valid && pick(i - 1).valid;
        }
        return out;
    };
    return {fd([&](Eigen::Index j) -> const VectorField& { return s[j].velocity.v; }),
            fd([&](Eigen::Index j) -> const VectorField& { return s[j].velocity.u; })};
}

void check_slices(const std::vector<VelocitySlice>& slices, Eigen::Index eval_index) {
    if (slices.size() < 2)
        throw std::invalid_argument("second_derivative: need at least two time slices");
    if (eval_index < 0 || eval_index >= static_cast<Eigen::Index>(slices.size()))
        throw std::invalid_argument("second_derivative: eval_index out of range");
}

// Generator (d_t + (A_re + i A_im).grad + i lam Delta) applied to the complex
// field (G_re + i G_im), with externally supplied time derivatives.
ComplexVectorField apply_generator(const VectorField& A_re, const VectorField& A_im, double lam,
                                   const VectorField& G_re, const VectorField& G_im,
                                   const VectorField& dtG_re, const VectorField& dtG_im) {
    VectorField lap_re = vector_laplacian(G_re);
    VectorField lap_im = vector_laplacian(G_im);
    VectorField adv_rr = advect(A_re, G_re);
    VectorField adv_ri = advect(A_re, G_im);
    VectorField adv_ir = advect(A_im, G_re);
    VectorField adv_ii = advect(A_im, G_im);

    ComplexVectorField out;
    out.re = combine(combine(dtG_re, 1.0, adv_rr, 1.0), 1.0,
                     combine(adv_ii, -1.0, lap_im, -lam), 1.0);
    out.im = combine(combine(dtG_im, 1.0, adv_ri, 1.0), 1.0,
                     combine(adv_ir, 1.0, lap_re, lam), 1.0);
    return out;
}

} // namespace

ComplexVectorField second_derivative(const std::vector<VelocitySlice>& slices,
                                     Eigen::Index eval_index, int alpha, double sigma) {
    check_slices(slices, eval_index);
    if (alpha != 1 && alpha != -1) throw std::invalid_argument("alpha must be +-1");
    const ComplexVelocityField& vel = slices[eval_index].velocity;
    const int mu = vel.mu;
    auto [dtv, dtu] = time_derivatives(slices, eval_index);

    // G = D_mu X = v + i mu u
    const VectorField& G_re = vel.v;
    VectorField G_im = scaled(vel.u, mu);
    VectorField dtG_im = scaled(dtu, mu);

    if (alpha == 1) {
        // D_mu applied to D_mu X: advection velocity v + i mu u, lam = mu s^2/2
        VectorField A_im = scaled(vel.u, mu);
        return apply_generator(G_re, A_im, mu * 0.5 * sigma * sigma, G_re, G_im, dtv, dtG_im);
    }
    // D_{-mu} applied to D_mu X: advection velocity v - i mu u, lam = -mu s^2/2
    VectorField A_im = scaled(vel.u, -mu);
    return apply_generator(G_re, A_im, -mu * 0.5 * sigma * sigma, G_re, G_im, dtv, dtG_im);
}

ComplexVectorField second_derivative_composition(const std::vector<VelocitySlice>& slices,
                                                 Eigen::Index eval_index, int alpha,
                                                 double sigma) {
    check_slices(slices, eval_index);
    if (alpha != 1 && alpha != -1) throw std::invalid_argument("alpha must be +-1");
    const ComplexVelocityField& vel = slices[eval_index].velocity;
    const int mu = vel.mu;
    auto [dtv, dtu] = time_derivatives(slices, eval_index);

    VectorField Dplus = combine(vel.v, 1.0, vel.u, 1.0);
    VectorField Dminus = combine(vel.v, 1.0, vel.u, -1.0);
    VectorField dtDplus = combine(dtv, 1.0, dtu, 1.0);
    VectorField dtDminus = combine(dtv, 1.0, dtu, -1.0);

    // D_a[F] = d_t F + (D_a X . grad) F + s_a (sigma^2/2) Delta F
    auto nelson_apply = [&](const VectorField& carrier, double s_a, const VectorField& F,
                            const VectorField& dtF) {
        VectorField lap = vector_laplacian(F);
        VectorField adv = advect(carrier, F);
        return combine(combine(dtF, 1.0, adv, 1.0), 1.0, lap, s_a * 0.5 * sigma * sigma);
    };

    VectorField Dpp = nelson_apply(Dplus, +1.0, Dplus, dtDplus);    // D+ D+ X
    VectorField Dmm = nelson_apply(Dminus, -1.0, Dminus, dtDminus); // D- D- X
    VectorField Dpm = nelson_apply(Dplus, +1.0, Dminus, dtDminus);  // D+ [D- X]
    VectorField Dmp = nelson_apply(Dminus, -1.0, Dplus, dtDplus);   // D- [D+ X]

    ComplexVectorField out;
    if (alpha == 1) {
        out.re = combine(Dpm, 0.5, Dmp, 0.5);
        out.im = combine(Dpp, 0.5 * mu, Dmm, -0.5 * mu);
    } else {
        out.re = combine(Dpp, 0.5, Dmm, 0.5);
        out.im = combine(Dmp, 0.5 * mu, Dpm, -0.5 * mu);
    }
    return out;
}

RealityDiagnostic reality_diagnostic(const std::vector<VelocitySlice>& slices,
                                     Eigen::Index eval_index, double sigma, double tolerance,
                                     const DriftField* drift) {
    check_slices(slices, eval_index);
    const ComplexVelocityField& vel = slices[eval_index].velocity;
    auto [dtv, dtu] = time_derivatives(slices, eval_index);

    VectorField Dplus = combine(vel.v, 1.0, vel.u, 1.0);
    VectorField Dminus = combine(vel.v, 1.0, vel.u, -1.0);
    VectorField dtDplus = combine(dtv, 1.0, dtu, 1.0);
    VectorField dtDminus = combine(dtv, 1.0, dtu, -1.0);

    auto nelson_apply = [&](const VectorField& carrier, double s_a, const VectorField& F,
                            const VectorField& dtF) {
        VectorField lap = vector_laplacian(F);
        VectorField adv = advect(carrier, F);
        return combine(combine(dtF, 1.0, adv, 1.0), 1.0, lap, s_a * 0.5 * sigma * sigma);
    };
    VectorField Dpp = nelson_apply(Dplus, +1.0, Dplus, dtDplus);
    VectorField Dmm = nelson_apply(Dminus, -1.0, Dminus, dtDminus);
    VectorField gap = combine(Dpp, 1.0, Dmm, -1.0);

    RealityDiagnostic diag;
    diag.defect = ScalarField(gap.grid);
    diag.defect.valid = gap.valid;
    for (Eigen::Index n = 0; n < gap.grid.size(); ++n) {
        double norm = gap.values.row(n).matrix().norm();
        diag.defect.values[n] = gap.valid[n] ? norm : 0.0;
        if (gap.valid[n]) diag.max_defect = std::max(diag.max_defect, norm);
    }
    diag.is_gradient = diag.max_defect < tolerance;

    if (drift && gap.grid.kind() == GridKind::Cartesian && gap.grid.dim() == 3) {
        VectorField b = sample_vector(
            gap.grid, [&](const Eigen::Vector3d& x) { return drift->eval(x, slices[eval_index].t); });
        VectorField c = curl(b);
        for (Eigen::Index n = 0; n < c.grid.size(); ++n)
            if (c.valid[n]) diag.max_curl = std::max(diag.max_curl, c.values.row(n).matrix().norm());
    }
    return diag;
}

} // namespace stomech
