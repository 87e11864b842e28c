#include "stomech/sde.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stomech/rng.hpp"

namespace stomech {

DriftField DriftField::zero(int dim) {
    DriftField d;
    d.dim = dim;
    d.eval = [](const Eigen::Vector3d&, double) { return Eigen::Vector3d::Zero(); };
    d.lipschitz_bound = 0.0;
    return d;
}

DriftField DriftField::from_function(
    int dim, std::function<Eigen::Vector3d(const Eigen::Vector3d&, double)> f,
    double lipschitz_bound) {
    DriftField d;
    d.dim = dim;
    d.eval = std::move(f);
    d.lipschitz_bound = lipschitz_bound;
    return d;
}

DriftField DriftField::autonomous(int dim,
                                  std::function<Eigen::Vector3d(const Eigen::Vector3d&)> f,
                                  double lipschitz_bound) {
    return from_function(
        dim, [f = std::move(f)](const Eigen::Vector3d& x, double) { return f(x); },
        lipschitz_bound);
}

DriftField DriftField::gradient_of(int dim, std::function<double(const Eigen::Vector3d&)> W,
                                   std::function<Eigen::Vector3d(const Eigen::Vector3d&)> grad,
                                   const std::vector<Eigen::Vector3d>& probes,
                                   double lipschitz_bound) {
    const double h = 1e-5;
    for (const auto& x : probes) {
        Eigen::Vector3d g = grad(x);
        double scale = std::max(1.0, g.head(dim).norm());
        for (int a = 0; a < dim; ++a) {
            Eigen::Vector3d xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            double fd = (W(xp) - W(xm)) / (2.0 * h);
            if (std::abs(fd - g[a]) > 1e-6 * scale + 1e-9) {
                std::ostringstream os;
                os << "gradient tag check failed at probe (" << x.transpose() << "): component "
                   << a << " drift " << g[a] << " vs finite-difference " << fd;
                throw std::invalid_argument(os.str());
            }
        }
    }
    DriftField d;
    d.dim = dim;
    d.eval = [grad = std::move(grad)](const Eigen::Vector3d& x, double) { return grad(x); };
    d.potential = std::move(W);
    d.lipschitz_bound = lipschitz_bound;
    return d;
}

Eigen::Index PathEnsemble::time_index(double t) const {
    Eigen::Index best = 0;
    double best_gap = std::abs(times[0] - t);
    for (Eigen::Index i = 1; i < times.size(); ++i) {
        double gap = std::abs(times[i] - t);
        if (gap < best_gap) {
            best = i;
            best_gap = gap;
        }
    }
    double tol = times.size() > 1 ? 0.5 * (times[times.size() - 1] - times[0]) / (times.size() - 1)
                                  : 1e-12;
    if (best_gap > tol + 1e-12)
        throw std::invalid_argument("time " + std::to_string(t) + " not on the ensemble grid");
    return best;
}

Eigen::VectorXd uniform_times(double t0, double t1, int steps) {
    if (steps < 1 || t1 <= t0) throw std::invalid_argument("uniform_times: bad range");
    Eigen::VectorXd t(steps + 1);
    double h = (t1 - t0) / steps;
    for (int i = 0; i <= steps; ++i) t[i] = t0 + h * i;
    return t;
}

namespace {

uint32_t lo32(uint64_t x) { return static_cast<uint32_t>(x); }

// Inverse-CDF table on a grid: radial grids use the r^{d-1} weighted marginal.
struct InverseCdf {
    std::vector<double> x;
    std::vector<double> cdf;

    explicit InverseCdf(const ScalarField& p) {
        const Grid& g = p.grid;
        if (g.dim() != 1) throw std::invalid_argument("inverse CDF needs a 1D grid");
        Eigen::Index n = g.size();
        x.resize(n);
        cdf.resize(n);
        double acc = 0.0;
        cdf[0] = 0.0;
        x[0] = g.radius(0);
        auto weight = [&](Eigen::Index i) {
            double w = p.values[i];
            if (g.kind() == GridKind::Radial)
                w *= std::pow(g.radius(i), g.ambient_dim() - 1);
            return std::max(w, 0.0);
        };
        for (Eigen::Index i = 1; i < n; ++i) {
            x[i] = g.kind() == GridKind::Radial ? g.radius(i) : g.coord(0, static_cast<int>(i));
            acc += 0.5 * (weight(i - 1) + weight(i)) * (x[i] - x[i - 1]);
            cdf[i] = acc;
        }
        if (!(acc > 0.0)) throw std::invalid_argument("initial density has zero mass");
        for (auto& c : cdf) c /= acc;
    }

    double sample(double u) const {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.begin()) return x.front();
        if (it == cdf.end()) return x.back();
        size_t i = it - cdf.begin();
        double c0 = cdf[i - 1], c1 = cdf[i];
        double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
        return x[i - 1] + t * (x[i] - x[i - 1]);
    }
};

Eigen::Vector3d sample_direction(const Philox& rng, uint64_t path, int dim, uint32_t draw) {
    auto u = uniform_pair(rng, lo32(path), draw, 0xD1Au, RngStream::Auxiliary);
    if (dim == 1) return {u[0] < 0.5 ? -1.0 : 1.0, 0.0, 0.0};
    if (dim == 2) {
        double a = 2.0 * std::numbers::pi * u[0];
        return {std::cos(a), std::sin(a), 0.0};
    }
    double z = 2.0 * u[0] - 1.0;
    double a = 2.0 * std::numbers::pi * u[1];
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(a), s * std::sin(a), z};
}

using InitialSampler = std::function<Eigen::Vector3d(uint64_t path)>;

// Builds a per-path sampler once per simulation; path index keys the
// counter-based draws so batched runs line up with monolithic ones.
InitialSampler make_initial_sampler(const InitialLaw& law, const Philox& rng, int dim) {
    if (const auto* m = std::get_if<PointMass>(&law)) {
        Eigen::Vector3d x = m->x;
        return [x](uint64_t) { return x; };
    }
    if (const auto* g = std::get_if<GaussianLaw>(&law)) {
        GaussianLaw law_copy = *g;
        return [law_copy, &rng, dim](uint64_t path) {
            Eigen::Vector3d x = law_copy.mean;
            for (int a = 0; a < dim; a += 2) {
                auto z = normal_pair(rng, lo32(path), static_cast<uint32_t>(a / 2), 0u,
                                     RngStream::InitialLaw);
                x[a] += law_copy.stddev * z[0];
                if (a + 1 < dim) x[a + 1] += law_copy.stddev * z[1];
            }
            return x;
        };
    }
    if (const auto* s = std::get_if<SampleSet>(&law)) {
        if (s->points.rows() == 0) throw std::invalid_argument("empty SampleSet initial law");
        Eigen::MatrixXd points = s->points;
        return [points, dim](uint64_t path) {
            Eigen::Index row = static_cast<Eigen::Index>(path % static_cast<uint64_t>(points.rows()));
            Eigen::Vector3d x = Eigen::Vector3d::Zero();
            for (int a = 0; a < dim && a < points.cols(); ++a) x[a] = points(row, a);
            return x;
        };
    }
    const auto& d = std::get<DensityGrid>(law);
    const Grid& g = d.p.grid;
    if (g.kind() == GridKind::Radial) {
        auto icdf = std::make_shared<InverseCdf>(d.p);
        return [icdf, &rng, dim](uint64_t path) {
            auto u = uniform_pair(rng, lo32(path), 0u, 0u, RngStream::InitialLaw);
            return Eigen::Vector3d(icdf->sample(u[0]) * sample_direction(rng, path, dim, 1u));
        };
    }
    if (g.dim() == 1) {
        auto icdf = std::make_shared<InverseCdf>(d.p);
        return [icdf, &rng](uint64_t path) {
            auto u = uniform_pair(rng, lo32(path), 0u, 0u, RngStream::InitialLaw);
            return Eigen::Vector3d(icdf->sample(u[0]), 0.0, 0.0);
        };
    }
    // rejection sampling against the grid maximum
    double pmax = d.p.values.maxCoeff();
    if (!(pmax > 0.0)) throw std::invalid_argument("initial density has zero mass");
    ScalarField p = d.p;
    return [p, pmax, &rng](uint64_t path) {
        const Grid& grid = p.grid;
        for (uint32_t attempt = 0; attempt < 100000; ++attempt) {
            Eigen::Vector3d x = Eigen::Vector3d::Zero();
            auto u01 = uniform_pair(rng, lo32(path), 2 * attempt, 1u, RngStream::InitialLaw);
            auto u23 = uniform_pair(rng, lo32(path), 2 * attempt + 1, 1u, RngStream::InitialLaw);
            std::array<double, 4> u{u01[0], u01[1], u23[0], u23[1]};
            std::array<int, 3> idx{0, 0, 0};
            for (int a = 0; a < grid.dim(); ++a) {
                x[a] = grid.lo(a) + u[a] * (grid.hi(a) - grid.lo(a));
                idx[a] = static_cast<int>(std::lround((x[a] - grid.lo(a)) / grid.spacing(a)));
                idx[a] = std::clamp(idx[a], 0, grid.axis_size(a) - 1);
            }
            if (u[3] * pmax <= p.values[grid.index(idx[0], idx[1], idx[2])]) return x;
        }
        throw std::runtime_error("rejection sampling failed to accept after 100000 attempts");
    };
}

[[noreturn]] void bad_drift(const Eigen::Vector3d& x, double t) {
    std::ostringstream os;
    os << "non-finite drift at x = (" << x.transpose() << "), t = " << t;
    throw std::runtime_error(os.str());
}

} // namespace

PathEnsemble simulate(const DiffusionSpec& spec, const Eigen::VectorXd& times,
                      Eigen::Index n_paths, uint64_t seed, uint64_t path_offset) {
    if (n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
    if (times.size() < 1) throw std::invalid_argument("simulate: empty time grid");
    for (Eigen::Index i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("simulate: times must be strictly increasing");
    if (!(spec.sigma >= 0.0)) throw std::invalid_argument("simulate: sigma must be >= 0");
    int dim = spec.drift.dim;

    double h_max = 0.0;
    for (Eigen::Index i = 1; i < times.size(); ++i) h_max = std::max(h_max, times[i] - times[i - 1]);
    if (spec.drift.lipschitz_bound > 0.0 && h_max * spec.drift.lipschitz_bound >= 0.5) {
        std::ostringstream os;
        os << "step size " << h_max << " violates h*K < 0.5 for declared Lipschitz bound "
           << spec.drift.lipschitz_bound << "; use h < " << 0.5 / spec.drift.lipschitz_bound;
        throw std::invalid_argument(os.str());
    }

    Philox rng(seed);
    PathEnsemble e;
    e.times = times;
    e.seed = seed;
    e.dim = dim;
    e.sigma = spec.sigma;
    e.path_offset = path_offset;
    e.positions.assign(times.size(), Eigen::MatrixXd(n_paths, dim));

    InitialSampler draw_initial = make_initial_sampler(spec.initial, rng, dim);
    for (Eigen::Index p = 0; p < n_paths; ++p) {
        uint64_t key = path_offset + static_cast<uint64_t>(p);
        Eigen::Vector3d x = draw_initial(key);
        for (int a = 0; a < dim; ++a) e.positions[0](p, a) = x[a];
        for (Eigen::Index k = 0; k + 1 < times.size(); ++k) {
            double t = times[k];
            double h = times[k + 1] - t;
            Eigen::Vector3d v = spec.drift.eval(x, t);
            if (!v.head(dim).allFinite()) bad_drift(x, t);
            double noise_scale = spec.sigma * std::sqrt(h);
            for (int a = 0; a < dim; a += 2) {
                auto z = normal_pair(rng, lo32(key), static_cast<uint32_t>(k),
                                     static_cast<uint32_t>(a / 2), RngStream::Increments);
                x[a] += v[a] * h + noise_scale * z[0];
                if (a + 1 < dim) x[a + 1] += v[a + 1] * h + noise_scale * z[1];
            }
            for (int a = 0; a < dim; ++a) {
                if (!std::isfinite(x[a])) bad_drift(x, times[k + 1]);
                e.positions[k + 1](p, a) = x[a];
            }
        }
    }
    return e;
}

PolarEnsemble simulate_polar(const PolarDiffusionSpec& spec, const Eigen::VectorXd& times,
                             Eigen::Index n_paths, uint64_t seed, uint64_t path_offset) {
    if (n_paths < 1) throw std::invalid_argument("simulate_polar: need at least one path");
    if (spec.sigma_r < 0.0 || spec.sigma_theta < 0.0)
        throw std::invalid_argument("simulate_polar: sigma_r, sigma_theta must be >= 0");
    for (Eigen::Index i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("simulate_polar: times must be strictly increasing");

    Philox rng(seed);
    PolarEnsemble out;
    PathEnsemble& e = out.paths;
    e.times = times;
    e.seed = seed;
    e.dim = 2;
    e.sigma = spec.sigma_r;
    e.path_offset = path_offset;
    e.positions.assign(times.size(), Eigen::MatrixXd(n_paths, 2));

    for (Eigen::Index p = 0; p < n_paths; ++p) {
        uint64_t key = path_offset + static_cast<uint64_t>(p);
        double r, theta;
        if (const auto* pm = std::get_if<PolarPointMass>(&spec.initial)) {
            r = pm->r;
            theta = pm->theta;
        } else {
            const auto& s = std::get<PolarSamples>(spec.initial).points;
            if (s.rows() == 0) throw std::invalid_argument("empty PolarSamples initial law");
            Eigen::Index row = static_cast<Eigen::Index>(key % static_cast<uint64_t>(s.rows()));
            r = s(row, 0);
            theta = s(row, 1);
        }
        if (r < spec.r_min) r = spec.r_min;
        e.positions[0](p, 0) = r;
        e.positions[0](p, 1) = theta;
        for (Eigen::Index k = 0; k + 1 < times.size(); ++k) {
            double t = times[k];
            double h = times[k + 1] - t;
            double ar = spec.a_r ? spec.a_r(r, theta) : 0.0;
            double at = spec.a_theta ? spec.a_theta(r, theta) : 0.0;
            if (!std::isfinite(ar) || !std::isfinite(at))
                bad_drift(Eigen::Vector3d{r, theta, 0.0}, t);
            // one shared Brownian increment drives both coordinates
            auto z = normal_pair(rng, lo32(key), static_cast<uint32_t>(k), 0u,
                                 RngStream::Increments);
            double sqh = std::sqrt(h);
            r += ar * h + spec.sigma_r * sqh * z[0];
            theta += at * h + spec.sigma_theta * sqh * z[0];
            if (r < spec.r_min) {
                r = 2.0 * spec.r_min - r; // reflect
                if (r < spec.r_min) r = spec.r_min;
                ++out.barrier_hits;
            }
            e.positions[k + 1](p, 0) = r;
            e.positions[k + 1](p, 1) = theta;
        }
    }
    return out;
}

void write_ensemble_csv(const PathEnsemble& e, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "path,t");
    for (int a = 0; a < e.dim; ++a) std::fprintf(fp, ",x%d", a);
    std::fprintf(fp, "\n");
    for (Eigen::Index p = 0; p < e.path_count(); ++p)
        for (Eigen::Index k = 0; k < e.step_count(); ++k) {
            std::fprintf(fp, "%lld,%.17g", static_cast<long long>(p + e.path_offset), e.times[k]);
            for (int a = 0; a < e.dim; ++a) std::fprintf(fp, ",%.17g", e.positions[k](p, a));
            std::fprintf(fp, "\n");
        }
    std::fclose(fp);
}

namespace {
constexpr char kEnsembleMagic[4] = {'S', 'T', 'P', 'E'};
constexpr uint32_t kEnsembleVersion = 1;
} // namespace

void write_ensemble_binary(const PathEnsemble& e, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    auto put = [&](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };
    put(kEnsembleMagic, 4);
    put(&kEnsembleVersion, 4);
    uint32_t d = e.dim;
    uint64_t n = e.path_count(), m = e.step_count(), seed = e.seed, off = e.path_offset;
    double sigma = e.sigma;
    put(&d, 4);
    put(&n, 8);
    put(&m, 8);
    put(&seed, 8);
    put(&off, 8);
    put(&sigma, 8);
    put(e.times.data(), sizeof(double) * m);
    // path-major: all times of path 0, then path 1, ...
    for (uint64_t p = 0; p < n; ++p)
        for (uint64_t k = 0; k < m; ++k)
            for (uint32_t a = 0; a < d; ++a) {
                double x = e.positions[k](p, a);
                put(&x, 8);
            }
}

PathEnsemble read_ensemble_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto get = [&](void* p, size_t n) {
        if (!in.read(static_cast<char*>(p), n))
            throw std::runtime_error("truncated ensemble file: " + path);
    };
    char magic[4];
    get(magic, 4);
    if (std::memcmp(magic, kEnsembleMagic, 4) != 0)
        throw std::runtime_error("not an ensemble file: " + path);
    uint32_t version, d;
    get(&version, 4);
    if (version != kEnsembleVersion) throw std::runtime_error("unsupported ensemble file version");
    uint64_t n, m, seed, off;
    double sigma;
    get(&d, 4);
    get(&n, 8);
    get(&m, 8);
    get(&seed, 8);
    get(&off, 8);
    get(&sigma, 8);
    PathEnsemble e;
    e.dim = static_cast<int>(d);
    e.seed = seed;
    e.path_offset = off;
    e.sigma = sigma;
    e.times.resize(static_cast<Eigen::Index>(m));
    get(e.times.data(), sizeof(double) * m);
    e.positions.assign(m, Eigen::MatrixXd(n, d));
    for (uint64_t p = 0; p < n; ++p)
        for (uint64_t k = 0; k < m; ++k)
            for (uint32_t a = 0; a < d; ++a) {
                double x;
                get(&x, 8);
                e.positions[k](p, a) = x;
            }
    return e;
}

} // namespace stomech
