#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace stomech {

using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class GridKind { Radial, Cartesian };

/// Regular lattice: either a 1D radial grid (spherically symmetric fields in
/// an ambient dimension, 3 by default) or a Cartesian grid in 1-3 dimensions.
/// Nodes include both endpoints; spacing is uniform per axis.
class Grid {
public:
    Grid() = default;

    static Grid radial(double r_lo, double r_hi, int n, int ambient_dim = 3);
    static Grid cartesian(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                          const Eigen::Vector3i& shape);
    static Grid cartesian1d(double lo, double hi, int n);

    GridKind kind() const { return kind_; }
    /// Number of indexed axes (1 for radial, 1-3 for Cartesian).
    int dim() const { return dim_; }
    /// Dimension of the ambient space (radial grids describe 3D fields).
    int ambient_dim() const { return ambient_dim_; }
    int axis_size(int axis) const { return shape_[axis]; }
    Eigen::Index size() const { return size_; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }

    Eigen::Index index(int i, int j = 0, int k = 0) const {
        return (static_cast<Eigen::Index>(i) * shape_[1] + j) * shape_[2] + k;
    }
    std::array<int, 3> unravel(Eigen::Index idx) const {
        int k = static_cast<int>(idx % shape_[2]);
        Eigen::Index rest = idx / shape_[2];
        int j = static_cast<int>(rest % shape_[1]);
        int i = static_cast<int>(rest / shape_[1]);
        return {i, j, k};
    }

    double coord(int axis, int i) const { return lo_[axis] + spacing_[axis] * i; }
    /// Node position; radial grids return (r, 0, 0).
    Eigen::Vector3d position(Eigen::Index idx) const;
    /// Radius of a node: the coordinate itself on radial grids, |x| on
    /// Cartesian ones.
    double radius(Eigen::Index idx) const;

    bool operator==(const Grid& o) const;

private:
    GridKind kind_ = GridKind::Cartesian;
    int dim_ = 1;
    int ambient_dim_ = 1;
    std::array<int, 3> shape_{1, 1, 1};
    Eigen::Vector3d lo_ = Eigen::Vector3d::Zero();
    Eigen::Vector3d hi_ = Eigen::Vector3d::Zero();
    Eigen::Vector3d spacing_ = Eigen::Vector3d::Zero();
    Eigen::Index size_ = 1;
};

/// Real scalar samples on a grid with a validity mask. Operators mask any
/// node whose stencil touches an invalid node; domain boundaries use
/// one-sided second-order stencils instead.
struct ScalarField {
    Grid grid;
    Eigen::ArrayXd values;
    ArrayXb valid;

    ScalarField() = default;
    explicit ScalarField(const Grid& g)
        : grid(g), values(Eigen::ArrayXd::Zero(g.size())), valid(ArrayXb::Constant(g.size(), true)) {}

    double masked_fraction() const {
        return 1.0 - static_cast<double>(valid.count()) / static_cast<double>(valid.size());
    }
};

/// Vector samples on a grid. Cartesian grids store dim() components; radial
/// grids store the single radial component of a spherically symmetric field.
struct VectorField {
    Grid grid;
    Eigen::ArrayXXd values; // size x components
    ArrayXb valid;

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid(g),
          values(Eigen::ArrayXXd::Zero(g.size(), g.kind() == GridKind::Radial ? 1 : g.dim())),
          valid(ArrayXb::Constant(g.size(), true)) {}

    int components() const { return static_cast<int>(values.cols()); }
    double masked_fraction() const {
        return 1.0 - static_cast<double>(valid.count()) / static_cast<double>(valid.size());
    }
};

struct ComplexField {
    ScalarField re, im;
};

struct ComplexVectorField {
    VectorField re, im;
};

ScalarField sample_scalar(const Grid& g, const std::function<double(const Eigen::Vector3d&)>& f);
ScalarField sample_scalar_radial(const Grid& g, const std::function<double(double)>& f);
VectorField sample_vector(const Grid& g,
                          const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f);
/// Radial component profile f(r) on a radial grid.
VectorField sample_vector_radial(const Grid& g, const std::function<double(double)>& f);

/// d/dx_axis by second-order central differences (one-sided at boundaries).
Eigen::ArrayXd derivative_axis(const ScalarField& f, int axis, ArrayXb& valid_out);
Eigen::ArrayXd second_derivative_axis(const ScalarField& f, int axis, ArrayXb& valid_out);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& f);
ScalarField laplacian(const ScalarField& f);
/// Componentwise Laplacian of a vector field; on radial grids this is the
/// vector Laplacian of f(r) r_hat, i.e. f'' + (d-1)(f'/r - f/r^2).
VectorField vector_laplacian(const VectorField& f);
/// (a . grad) b
VectorField advect(const VectorField& a, const VectorField& b);
/// Curl on 3D Cartesian grids.
VectorField curl(const VectorField& f);

/// Deposits samples onto grid nodes by linear (cloud-in-cell) interpolation,
/// optionally weighted per sample. Radial grids bin the radius of each row.
/// Returns the number of samples inside the grid bounds.
Eigen::Index deposit_cic(const Grid& g, const Eigen::MatrixXd& points,
                         const Eigen::VectorXd* weights, Eigen::ArrayXd& target);

/// In-place separable Gaussian smoothing along every axis, discretely
/// normalized and truncated at six bandwidths.
void gaussian_smooth(const Grid& g, Eigen::ArrayXd& values, double bandwidth);

/// Sliding box sum with the given half-width (coordinate units) along every
/// axis; used for kernel neighborhood counts.
Eigen::ArrayXd box_sum(const Grid& g, const Eigen::ArrayXd& values, double halfwidth);

/// Integral with the grid's natural measure (trapezoid): dx^d on Cartesian
/// grids, surface-weighted r^(d-1) dr on radial grids.
double integrate(const ScalarField& f);
/// Rescales so integrate() == 1. Throws if the integral is not positive.
void normalize_density(ScalarField& f);

void write_field_csv(const ScalarField& f, const std::string& path);
void write_field_csv(const VectorField& f, const std::string& path);
void write_grid_binary(const ScalarField& f, const std::string& path);
ScalarField read_grid_binary(const std::string& path);

} // namespace stomech
