#include "stomech/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace stomech {

Grid Grid::radial(double r_lo, double r_hi, int n, int ambient_dim) {
    if (n < 4 || r_hi <= r_lo || r_lo < 0.0)
        throw std::invalid_argument("radial grid requires 0 <= r_lo < r_hi and n >= 4");
    Grid g;
    g.kind_ = GridKind::Radial;
    g.dim_ = 1;
    g.ambient_dim_ = ambient_dim;
    g.shape_ = {n, 1, 1};
    g.lo_ = {r_lo, 0, 0};
    g.hi_ = {r_hi, 0, 0};
    g.spacing_ = {(r_hi - r_lo) / (n - 1), 0, 0};
    g.size_ = n;
    return g;
}

Grid Grid::cartesian(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                     const Eigen::Vector3i& shape) {
    Grid g;
    g.kind_ = GridKind::Cartesian;
    g.dim_ = 0;
    g.size_ = 1;
    for (int a = 0; a < 3; ++a) {
        if (shape[a] > 1) {
            if (a != g.dim_) throw std::invalid_argument("cartesian grid axes must be leading");
            ++g.dim_;
            if (hi[a] <= lo[a]) throw std::invalid_argument("cartesian grid requires lo < hi");
            g.shape_[a] = shape[a];
            g.lo_[a] = lo[a];
            g.hi_[a] = hi[a];
            g.spacing_[a] = (hi[a] - lo[a]) / (shape[a] - 1);
            g.size_ *= shape[a];
        } else {
            g.shape_[a] = 1;
        }
    }
    if (g.dim_ == 0) throw std::invalid_argument("cartesian grid needs at least one axis");
    g.ambient_dim_ = g.dim_;
    return g;
}

Grid Grid::cartesian1d(double lo, double hi, int n) {
    return cartesian({lo, 0, 0}, {hi, 0, 0}, {n, 1, 1});
}

Eigen::Vector3d Grid::position(Eigen::Index idx) const {
    auto [i, j, k] = unravel(idx);
    return {coord(0, i), coord(1, j), coord(2, k)};
}

double Grid::radius(Eigen::Index idx) const {
    if (kind_ == GridKind::Radial) return coord(0, static_cast<int>(idx));
    return position(idx).head(dim_).norm();
}

bool Grid::operator==(const Grid& o) const {
    return kind_ == o.kind_ && dim_ == o.dim_ && ambient_dim_ == o.ambient_dim_ &&
           shape_ == o.shape_ && lo_ == o.lo_ && hi_ == o.hi_;
}

ScalarField sample_scalar(const Grid& g, const std::function<double(const Eigen::Vector3d&)>& f) {
    ScalarField out(g);
    for (Eigen::Index n = 0; n < g.size(); ++n) out.values[n] = f(g.position(n));
    return out;
}

ScalarField sample_scalar_radial(const Grid& g, const std::function<double(double)>& f) {
    ScalarField out(g);
    for (Eigen::Index n = 0; n < g.size(); ++n) out.values[n] = f(g.radius(n));
    return out;
}

VectorField sample_vector(const Grid& g,
                          const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f) {
    VectorField out(g);
    for (Eigen::Index n = 0; n < g.size(); ++n) {
        Eigen::Vector3d v = f(g.position(n));
        for (int c = 0; c < out.components(); ++c) out.values(n, c) = v[c];
    }
    return out;
}

VectorField sample_vector_radial(const Grid& g, const std::function<double(double)>& f) {
    if (g.kind() != GridKind::Radial)
        throw std::invalid_argument("sample_vector_radial requires a radial grid");
    VectorField out(g);
    for (Eigen::Index n = 0; n < g.size(); ++n) out.values(n, 0) = f(g.radius(n));
    return out;
}

namespace {

// Applies a 1D stencil sweep along one axis. op(values, i0, stride, n, h, out, ok)
template <typename Line>
void sweep_axis(const Grid& g, int axis, const Line& line) {
    int n = g.axis_size(axis);
    Eigen::Index stride = 1;
    for (int a = axis + 1; a < 3; ++a) stride *= g.axis_size(a);
    Eigen::Index lines = g.size() / n;
    // enumerate the start index of every line along `axis`
    for (Eigen::Index l = 0; l < lines; ++l) {
        Eigen::Index block = l / stride;
        Eigen::Index offset = l % stride;
        Eigen::Index start = block * stride * n + offset;
        line(start, stride, n);
    }
}

void derivative_line(const Eigen::ArrayXd& v, const ArrayXb& valid, Eigen::Index start,
                     Eigen::Index stride, int n, double h, Eigen::ArrayXd& out, ArrayXb& ok) {
    auto at = [&](int i) { return v[start + stride * i]; };
    auto good = [&](int i) { return valid[start + stride * i]; };
    for (int i = 0; i < n; ++i) {
        Eigen::Index idx = start + stride * i;
        double d;
        bool fine;
        if (i == 0) {
            fine = good(0) && good(1) && good(2);
            d = fine ? (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h) : 0.0;
        } else if (i == n - 1) {
            fine = good(n - 1) && good(n - 2) && good(n - 3);
            d = fine ? (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h) : 0.0;
        } else {
            fine = good(i - 1) && good(i) && good(i + 1);
            d = fine ? (at(i + 1) - at(i - 1)) / (2.0 * h) : 0.0;
        }
        out[idx] = d;
        ok[idx] = ok[idx] && fine;
    }
}

void second_derivative_line(const Eigen::ArrayXd& v, const ArrayXb& valid, Eigen::Index start,
                            Eigen::Index stride, int n, double h, Eigen::ArrayXd& out,
                            ArrayXb& ok) {
    auto at = [&](int i) { return v[start + stride * i]; };
    auto good = [&](int i) { return valid[start + stride * i]; };
    double h2 = h * h;
    for (int i = 0; i < n; ++i) {
        Eigen::Index idx = start + stride * i;
        double d;
        bool fine;
        if (i == 0) {
            fine = good(0) && good(1) && good(2) && n > 3 && good(3);
            d = fine ? (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2 : 0.0;
        } else if (i == n - 1) {
            fine = good(n - 1) && good(n - 2) && good(n - 3) && n > 3 && good(n - 4);
            d = fine ? (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2 : 0.0;
        } else {
            fine = good(i - 1) && good(i) && good(i + 1);
            d = fine ? (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2 : 0.0;
        }
        out[idx] = d;
        ok[idx] = ok[idx] && fine;
    }
}

Eigen::ArrayXd column_derivative(const Grid& g, const Eigen::ArrayXd& v, const ArrayXb& valid,
                                 int axis, bool second, ArrayXb& ok) {
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(g.size());
    double h = g.spacing(axis);
    sweep_axis(g, axis, [&](Eigen::Index start, Eigen::Index stride, int n) {
        if (second)
            second_derivative_line(v, valid, start, stride, n, h, out, ok);
        else
            derivative_line(v, valid, start, stride, n, h, out, ok);
    });
    return out;
}

} // namespace

Eigen::ArrayXd derivative_axis(const ScalarField& f, int axis, ArrayXb& valid_out) {
    return column_derivative(f.grid, f.values, f.valid, axis, false, valid_out);
}

Eigen::ArrayXd second_derivative_axis(const ScalarField& f, int axis, ArrayXb& valid_out) {
    return column_derivative(f.grid, f.values, f.valid, axis, true, valid_out);
}

VectorField gradient(const ScalarField& f) {
    VectorField out(f.grid);
    out.valid = f.valid;
    if (f.grid.kind() == GridKind::Radial) {
        out.values.col(0) = column_derivative(f.grid, f.values, f.valid, 0, false, out.valid);
    } else {
        for (int a = 0; a < f.grid.dim(); ++a)
            out.values.col(a) = column_derivative(f.grid, f.values, f.valid, a, false, out.valid);
    }
    return out;
}

ScalarField divergence(const VectorField& f) {
    ScalarField out(f.grid);
    out.valid = f.valid;
    if (f.grid.kind() == GridKind::Radial) {
        // div(F r_hat) = F' + (d-1) F / r
        Eigen::ArrayXd comp = f.values.col(0);
        Eigen::ArrayXd d = column_derivative(f.grid, comp, f.valid, 0, false, out.valid);
        double c = f.grid.ambient_dim() - 1;
        for (Eigen::Index n = 0; n < f.grid.size(); ++n) {
            double r = f.grid.radius(n);
            out.values[n] = d[n] + (r > 0.0 ? c * comp[n] / r : 0.0);
            if (r <= 0.0) out.valid[n] = false;
        }
    } else {
        for (int a = 0; a < f.grid.dim(); ++a) {
            Eigen::ArrayXd comp = f.values.col(a);
            out.values += column_derivative(f.grid, comp, f.valid, a, false, out.valid);
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    ScalarField out(f.grid);
    out.valid = f.valid;
    if (f.grid.kind() == GridKind::Radial) {
        Eigen::ArrayXd d1 = column_derivative(f.grid, f.values, f.valid, 0, false, out.valid);
        Eigen::ArrayXd d2 = column_derivative(f.grid, f.values, f.valid, 0, true, out.valid);
        double c = f.grid.ambient_dim() - 1;
        for (Eigen::Index n = 0; n < f.grid.size(); ++n) {
            double r = f.grid.radius(n);
            out.values[n] = d2[n] + (r > 0.0 ? c * d1[n] / r : 0.0);
            if (r <= 0.0) out.valid[n] = false;
        }
    } else {
        for (int a = 0; a < f.grid.dim(); ++a)
            out.values += column_derivative(f.grid, f.values, f.valid, a, true, out.valid);
    }
    return out;
}

VectorField vector_laplacian(const VectorField& f) {
    VectorField out(f.grid);
    out.valid = f.valid;
    if (f.grid.kind() == GridKind::Radial) {
        Eigen::ArrayXd comp = f.values.col(0);
        Eigen::ArrayXd d1 = column_derivative(f.grid, comp, f.valid, 0, false, out.valid);
        Eigen::ArrayXd d2 = column_derivative(f.grid, comp, f.valid, 0, true, out.valid);
        double c = f.grid.ambient_dim() - 1;
        for (Eigen::Index n = 0; n < f.grid.size(); ++n) {
            double r = f.grid.radius(n);
            if (r > 0.0)
                out.values(n, 0) = d2[n] + c * (d1[n] / r - comp[n] / (r * r));
            else
                out.valid[n] = false;
        }
    } else {
        for (int c = 0; c < f.components(); ++c) {
            Eigen::ArrayXd comp = f.values.col(c);
            for (int a = 0; a < f.grid.dim(); ++a)
                out.values.col(c) += column_derivative(f.grid, comp, f.valid, a, true, out.valid);
        }
    }
    return out;
}

VectorField advect(const VectorField& a, const VectorField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("advect: grids differ");
    VectorField out(a.grid);
    out.valid = a.valid && b.valid;
    if (a.grid.kind() == GridKind::Radial) {
        // (a r_hat . grad)(b r_hat) = a b' r_hat
        Eigen::ArrayXd db = column_derivative(a.grid, Eigen::ArrayXd(b.values.col(0)), b.valid, 0,
                                              false, out.valid);
        out.values.col(0) = a.values.col(0) * db;
    } else {
        for (int c = 0; c < b.components(); ++c) {
            Eigen::ArrayXd comp = b.values.col(c);
            for (int ax = 0; ax < a.grid.dim(); ++ax) {
                Eigen::ArrayXd d = column_derivative(a.grid, comp, b.valid, ax, false, out.valid);
                out.values.col(c) += a.values.col(ax) * d;
            }
        }
    }
    return out;
}

VectorField curl(const VectorField& f) {
    if (f.grid.kind() != GridKind::Cartesian || f.grid.dim() != 3)
        throw std::invalid_argument("curl requires a 3D Cartesian grid");
    VectorField out(f.grid);
    out.valid = f.valid;
    std::array<std::array<Eigen::ArrayXd, 3>, 3> d; // d[c][a] = d f_c / d x_a
    for (int c = 0; c < 3; ++c)
        for (int a = 0; a < 3; ++a)
            d[c][a] = column_derivative(f.grid, Eigen::ArrayXd(f.values.col(c)), f.valid, a,
                                        false, out.valid);
    out.values.col(0) = d[2][1] - d[1][2];
    out.values.col(1) = d[0][2] - d[2][0];
    out.values.col(2) = d[1][0] - d[0][1];
    return out;
}

Eigen::Index deposit_cic(const Grid& g, const Eigen::MatrixXd& points,
                         const Eigen::VectorXd* weights, Eigen::ArrayXd& target) {
    if (target.size() != g.size()) target = Eigen::ArrayXd::Zero(g.size());
    Eigen::Index inside = 0;
    const bool radial = g.kind() == GridKind::Radial;
    const int dim = radial ? 1 : g.dim();
    for (Eigen::Index s = 0; s < points.rows(); ++s) {
        double w = weights ? (*weights)[s] : 1.0;
        std::array<Eigen::Index, 3> i0{0, 0, 0};
        std::array<double, 3> t{0.0, 0.0, 0.0};
        bool ok = true;
        for (int a = 0; a < dim; ++a) {
            double coord = radial ? points.row(s).head(g.ambient_dim()).norm() : points(s, a);
            double u = (coord - g.lo(a)) / g.spacing(a);
            if (u < 0.0 || u > static_cast<double>(g.axis_size(a) - 1)) {
                ok = false;
                break;
            }
            i0[a] = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), g.axis_size(a) - 2);
            t[a] = u - i0[a];
        }
        if (!ok) continue;
        ++inside;
        int corners = 1 << dim;
        for (int c = 0; c < corners; ++c) {
            double cw = w;
            std::array<int, 3> idx{static_cast<int>(i0[0]), static_cast<int>(i0[1]),
                                   static_cast<int>(i0[2])};
            for (int a = 0; a < dim; ++a) {
                if (c & (1 << a)) {
                    cw *= t[a];
                    idx[a] += 1;
                } else {
                    cw *= 1.0 - t[a];
                }
            }
            target[g.index(idx[0], idx[1], idx[2])] += cw;
        }
    }
    return inside;
}

namespace {

template <typename Kernel>
void sliding_window_axis(const Grid& g, Eigen::ArrayXd& values, int axis, Eigen::Index reach,
                         const Kernel& kernel) {
    int n = g.axis_size(axis);
    Eigen::Index stride = 1;
    for (int a = axis + 1; a < 3; ++a) stride *= g.axis_size(a);
    Eigen::Index lines = g.size() / n;
    Eigen::ArrayXd line(n), out(n);
    for (Eigen::Index l = 0; l < lines; ++l) {
        Eigen::Index block = l / stride;
        Eigen::Index offset = l % stride;
        Eigen::Index start = block * stride * n + offset;
        for (int i = 0; i < n; ++i) line[i] = values[start + stride * i];
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            Eigen::Index k0 = std::max<Eigen::Index>(0, i - reach);
            Eigen::Index k1 = std::min<Eigen::Index>(n - 1, i + reach);
            for (Eigen::Index k = k0; k <= k1; ++k) acc += line[k] * kernel(k - i);
            out[i] = acc;
        }
        for (int i = 0; i < n; ++i) values[start + stride * i] = out[i];
    }
}

} // namespace

void gaussian_smooth(const Grid& g, Eigen::ArrayXd& values, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("gaussian_smooth: bandwidth must be > 0");
    int axes = g.kind() == GridKind::Radial ? 1 : g.dim();
    for (int a = 0; a < axes; ++a) {
        double h = g.spacing(a);
        Eigen::Index reach = static_cast<Eigen::Index>(std::ceil(6.0 * bandwidth / h));
        Eigen::ArrayXd taps(2 * reach + 1);
        for (Eigen::Index k = -reach; k <= reach; ++k)
            taps[k + reach] = std::exp(-0.5 * (k * h) * (k * h) / (bandwidth * bandwidth));
        taps /= taps.sum();
        sliding_window_axis(g, values, a, reach,
                            [&](Eigen::Index off) { return taps[off + reach]; });
    }
}

Eigen::ArrayXd box_sum(const Grid& g, const Eigen::ArrayXd& values, double halfwidth) {
    Eigen::ArrayXd out = values;
    int axes = g.kind() == GridKind::Radial ? 1 : g.dim();
    for (int a = 0; a < axes; ++a) {
        Eigen::Index reach = static_cast<Eigen::Index>(std::floor(halfwidth / g.spacing(a)));
        sliding_window_axis(g, out, a, reach, [](Eigen::Index) { return 1.0; });
    }
    return out;
}

double integrate(const ScalarField& f) {
    const Grid& g = f.grid;
    if (g.kind() == GridKind::Radial) {
        int d = g.ambient_dim();
        double surface = d == 3 ? 4.0 * std::numbers::pi : (d == 2 ? 2.0 * std::numbers::pi : 2.0);
        double sum = 0.0;
        for (Eigen::Index n = 0; n + 1 < g.size(); ++n) {
            double r0 = g.radius(n), r1 = g.radius(n + 1);
            double w0 = f.values[n] * std::pow(r0, d - 1);
            double w1 = f.values[n + 1] * std::pow(r1, d - 1);
            sum += 0.5 * (w0 + w1) * (r1 - r0);
        }
        return surface * sum;
    }
    double sum = 0.0;
    for (Eigen::Index n = 0; n < g.size(); ++n) {
        auto [i, j, k] = g.unravel(n);
        double w = 1.0;
        w *= (i == 0 || i == g.axis_size(0) - 1) ? 0.5 : 1.0;
        if (g.dim() > 1) w *= (j == 0 || j == g.axis_size(1) - 1) ? 0.5 : 1.0;
        if (g.dim() > 2) w *= (k == 0 || k == g.axis_size(2) - 1) ? 0.5 : 1.0;
        sum += w * f.values[n];
    }
    for (int a = 0; a < g.dim(); ++a) sum *= g.spacing(a);
    return sum;
}

void normalize_density(ScalarField& f) {
    double total = integrate(f);
    if (!(total > 0.0)) throw std::runtime_error("normalize_density: non-positive integral");
    f.values /= total;
}

namespace {

void write_csv_header(std::FILE* fp, const Grid& g, const std::string& value_cols) {
    if (g.kind() == GridKind::Radial)
        std::fprintf(fp, "r,%s,valid\n", value_cols.c_str());
    else if (g.dim() == 1)
        std::fprintf(fp, "x,%s,valid\n", value_cols.c_str());
    else if (g.dim() == 2)
        std::fprintf(fp, "x,y,%s,valid\n", value_cols.c_str());
    else
        std::fprintf(fp, "x,y,z,%s,valid\n", value_cols.c_str());
}

void write_coords(std::FILE* fp, const Grid& g, Eigen::Index n) {
    if (g.kind() == GridKind::Radial) {
        std::fprintf(fp, "%.17g", g.radius(n));
    } else {
        Eigen::Vector3d x = g.position(n);
        for (int a = 0; a < g.dim(); ++a) std::fprintf(fp, a ? ",%.17g" : "%.17g", x[a]);
    }
}

struct FileCloser {
    void operator()(std::FILE* fp) const {
        if (fp) std::fclose(fp);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_or_throw(const std::string& path, const char* mode) {
    FilePtr fp(std::fopen(path.c_str(), mode));
    if (!fp) throw std::runtime_error("cannot open " + path);
    return fp;
}

} // namespace

void write_field_csv(const ScalarField& f, const std::string& path) {
    auto fp = open_or_throw(path, "w");
    write_csv_header(fp.get(), f.grid, "value");
    for (Eigen::Index n = 0; n < f.grid.size(); ++n) {
        write_coords(fp.get(), f.grid, n);
        std::fprintf(fp.get(), ",%.17g,%d\n", f.values[n], f.valid[n] ? 1 : 0);
    }
}

void write_field_csv(const VectorField& f, const std::string& path) {
    auto fp = open_or_throw(path, "w");
    std::string cols;
    for (int c = 0; c < f.components(); ++c) {
        if (c) cols += ",";
        cols += "v" + std::to_string(c);
    }
    write_csv_header(fp.get(), f.grid, cols);
    for (Eigen::Index n = 0; n < f.grid.size(); ++n) {
        write_coords(fp.get(), f.grid, n);
        for (int c = 0; c < f.components(); ++c) std::fprintf(fp.get(), ",%.17g", f.values(n, c));
        std::fprintf(fp.get(), ",%d\n", f.valid[n] ? 1 : 0);
    }
}

namespace {
constexpr char kGridMagic[4] = {'S', 'T', 'G', 'F'};
constexpr uint32_t kGridVersion = 1;
} // namespace

void write_grid_binary(const ScalarField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    auto put = [&](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };
    put(kGridMagic, 4);
    put(&kGridVersion, 4);
    uint32_t kind = f.grid.kind() == GridKind::Radial ? 0u : 1u;
    uint32_t dim = f.grid.dim(), amb = f.grid.ambient_dim();
    put(&kind, 4);
    put(&dim, 4);
    put(&amb, 4);
    for (int a = 0; a < 3; ++a) {
        uint64_t n = f.grid.axis_size(a);
        put(&n, 8);
    }
    for (int a = 0; a < 3; ++a) {
        double lo = f.grid.lo(a), hi = f.grid.hi(a);
        put(&lo, 8);
        put(&hi, 8);
    }
    put(f.values.data(), sizeof(double) * f.values.size());
    for (Eigen::Index n = 0; n < f.valid.size(); ++n) {
        uint8_t v = f.valid[n] ? 1 : 0;
        put(&v, 1);
    }
}

ScalarField read_grid_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto get = [&](void* p, size_t n) {
        if (!in.read(static_cast<char*>(p), n)) throw std::runtime_error("truncated grid file: " + path);
    };
    char magic[4];
    uint32_t version, kind, dim, amb;
    get(magic, 4);
    if (std::memcmp(magic, kGridMagic, 4) != 0) throw std::runtime_error("not a grid file: " + path);
    get(&version, 4);
    if (version != kGridVersion) throw std::runtime_error("unsupported grid file version");
    get(&kind, 4);
    get(&dim, 4);
    get(&amb, 4);
    uint64_t shape[3];
    for (auto& s : shape) get(&s, 8);
    double lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        get(&lo[a], 8);
        get(&hi[a], 8);
    }
    Grid g;
    if (kind == 0)
        g = Grid::radial(lo[0], hi[0], static_cast<int>(shape[0]), static_cast<int>(amb));
    else
        g = Grid::cartesian({lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]},
                            {static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                             static_cast<int>(shape[2])});
    ScalarField f(g);
    get(f.values.data(), sizeof(double) * f.values.size());
    for (Eigen::Index n = 0; n < f.valid.size(); ++n) {
        uint8_t v;
        get(&v, 1);
        f.valid[n] = v != 0;
    }
    return f;
}

} // namespace stomech
