#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace plap {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Uniform tensor grid on an axis-aligned box in one or two dimensions.
///
/// Nodes are numbered with the first axis fastest: node = i + n0 * j.
class Grid {
public:
    static constexpr int max_dimension = 2;

    /// Throws ConfigError on a degenerate interval, a count below 3 or an
    /// axis count outside [1, 2].
    static Grid build(std::span<const Interval> extents, std::span<const int> resolution);

    int dimension() const noexcept { return dim_; }
    int count(int axis) const noexcept { return n_[axis]; }
    double spacing(int axis) const noexcept { return h_[axis]; }
    const Interval& extent(int axis) const noexcept { return ext_[axis]; }

    std::size_t node_count() const noexcept { return total_; }
    std::size_t interior_count() const noexcept;

    std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(j);
    }
    /// Per-axis integer coordinates of a node.
    std::array<int, 2> ijk(std::size_t node) const noexcept {
        return {static_cast<int>(node % static_cast<std::size_t>(n_[0])),
                static_cast<int>(node / static_cast<std::size_t>(n_[0]))};
    }
    double coord(int axis, int i) const noexcept { return ext_[axis].lo + h_[axis] * i; }
    std::array<double, 2> position(std::size_t node) const noexcept;

    bool is_boundary(std::size_t node) const noexcept;
    std::vector<std::size_t> interior_nodes() const;

    /// Largest axis length; the characteristic size used for scaling.
    double diameter_scale() const noexcept;

    bool operator==(const Grid& other) const noexcept;

private:
    Grid() = default;

    int dim_ = 1;
    std::array<Interval, 2> ext_{};
    std::array<int, 2> n_{1, 1};
    std::array<double, 2> h_{1.0, 1.0};
    std::size_t total_ = 0;
};

/// Nodal real values on a grid.
class ScalarField {
public:
    explicit ScalarField(Grid grid, double fill = 0.0);
    ScalarField(Grid grid, std::vector<double> values);

    /// Samples fn(x1, x2) at every node (x2 = 0 in 1D).
    static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& fn);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator[](std::size_t node) const noexcept { return values_[node]; }
    double& operator[](std::size_t node) noexcept { return values_[node]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// True iff every boundary node holds exactly 0.
    bool is_dirichlet_zero() const noexcept;
    void zero_boundary() noexcept;

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double s) noexcept;

private:
    Grid grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField lhs, const ScalarField& rhs);
ScalarField operator-(ScalarField lhs, const ScalarField& rhs);
ScalarField operator*(double s, ScalarField field);

/// One vector per node, components stored node-major.
class VectorField {
public:
    explicit VectorField(Grid grid);

    const Grid& grid() const noexcept { return grid_; }
    double component(std::size_t node, int axis) const noexcept {
        return comps_[node * static_cast<std::size_t>(grid_.dimension()) + static_cast<std::size_t>(axis)];
    }
    double& component(std::size_t node, int axis) noexcept {
        return comps_[node * static_cast<std::size_t>(grid_.dimension()) + static_cast<std::size_t>(axis)];
    }
    /// Euclidean length of the vector at a node.
    double norm_at(std::size_t node) const noexcept;
    ScalarField magnitude() const;

    std::span<const double> components() const noexcept { return comps_; }

private:
    Grid grid_;
    std::vector<double> comps_;
};

double sup_norm(const ScalarField& field) noexcept;
double sup_norm(const VectorField& field) noexcept;

/// sup over nodes of |a - b|; throws GridMismatch.
double sup_distance(const ScalarField& a, const ScalarField& b);
double sup_distance(const VectorField& a, const VectorField& b);

/// Central differences in the interior, one-sided second-order differences on the boundary.
VectorField gradient(const ScalarField& u);

/// Discrete -Δ_p u in conservative flux form, evaluated at interior nodes (0 on the boundary).
///
/// Flux across the midpoint between two neighbours along an axis is
/// (|Du|^2 + delta^2)^{(p-2)/2} * (u_{i+1} - u_i) / h, where |Du| combines the
/// axial difference with the transverse derivative averaged over the four
/// adjacent nodes. This overload picks delta = 1e-8 times the largest midpoint
/// difference quotient of u, which keeps the operator (p-1)-homogeneous.
ScalarField p_laplacian_apply(const ScalarField& u, double p);
ScalarField p_laplacian_apply(const ScalarField& u, double p, double delta);

/// Regularization used by p_laplacian_apply(u, p).
double default_regularization(const ScalarField& u);

inline constexpr double regularization_factor = 1e-8;

/// Composite trapezoidal rule over the whole box.
double integrate(const ScalarField& f);

}  // namespace plap
