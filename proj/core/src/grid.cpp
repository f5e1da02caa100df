#include "plap/grid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "plap/errors.hpp"
#include "stencil.hpp"

namespace plap {

Grid Grid::build(std::span<const Interval> extents, std::span<const int> resolution) {
    if (extents.empty() || extents.size() > max_dimension)
        throw ConfigError(fmt::format("grid needs 1 or 2 axes, got {}", extents.size()));
    if (extents.size() != resolution.size())
        throw ConfigError(fmt::format("grid has {} extents but {} resolutions", extents.size(), resolution.size()));

    Grid g;
    g.dim_ = static_cast<int>(extents.size());
    g.total_ = 1;
    for (int a = 0; a < g.dim_; ++a) {
        const Interval iv = extents[a];
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo))
            throw ConfigError(fmt::format("axis {}: degenerate interval [{}, {}]", a, iv.lo, iv.hi));
        if (resolution[a] < 3)
            throw ConfigError(fmt::format("axis {}: need at least 3 nodes, got {}", a, resolution[a]));
        g.ext_[a] = iv;
        g.n_[a] = resolution[a];
        g.h_[a] = iv.length() / (resolution[a] - 1);
        g.total_ *= static_cast<std::size_t>(resolution[a]);
    }
    return g;
}

std::size_t Grid::interior_count() const noexcept {
    std::size_t c = 1;
    for (int a = 0; a < dim_; ++a) c *= static_cast<std::size_t>(n_[a] - 2);
    return c;
}

std::array<double, 2> Grid::position(std::size_t node) const noexcept {
    const auto ij = ijk(node);
    return {coord(0, ij[0]), dim_ > 1 ? coord(1, ij[1]) : 0.0};
}

bool Grid::is_boundary(std::size_t node) const noexcept {
    const auto ij = ijk(node);
    for (int a = 0; a < dim_; ++a)
        if (ij[a] == 0 || ij[a] == n_[a] - 1) return true;
    return false;
}

std::vector<std::size_t> Grid::interior_nodes() const {
    std::vector<std::size_t> out;
    out.reserve(interior_count());
    for (std::size_t k = 0; k < total_; ++k)
        if (!is_boundary(k)) out.push_back(k);
    return out;
}

double Grid::diameter_scale() const noexcept {
    double d = 0.0;
    for (int a = 0; a < dim_; ++a) d = std::max(d, ext_[a].length());
    return d;
}

bool Grid::operator==(const Grid& other) const noexcept {
    if (dim_ != other.dim_) return false;
    for (int a = 0; a < dim_; ++a)
        if (!(ext_[a] == other.ext_[a]) || n_[a] != other.n_[a]) return false;
    return true;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid grid, double fill) : grid_(grid), values_(grid.node_count(), fill) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.node_count())
        throw ConfigError(fmt::format("field has {} values for {} nodes", values_.size(), grid_.node_count()));
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(double, double)>& fn) {
    ScalarField f(grid);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const auto x = grid.position(k);
        f[k] = fn(x[0], x[1]);
    }
    return f;
}

bool ScalarField::is_dirichlet_zero() const noexcept {
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (grid_.is_boundary(k) && values_[k] != 0.0) return false;
    return true;
}

void ScalarField::zero_boundary() noexcept {
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (grid_.is_boundary(k)) values_[k] = 0.0;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    if (!(grid_ == other.grid_)) throw GridMismatch("field addition on different grids");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    if (!(grid_ == other.grid_)) throw GridMismatch("field subtraction on different grids");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField operator+(ScalarField lhs, const ScalarField& rhs) { return lhs += rhs; }
ScalarField operator-(ScalarField lhs, const ScalarField& rhs) { return lhs -= rhs; }
ScalarField operator*(double s, ScalarField field) { return field *= s; }

// ---------------------------------------------------------------------------

VectorField::VectorField(Grid grid)
    : grid_(grid), comps_(grid.node_count() * static_cast<std::size_t>(grid.dimension()), 0.0) {}

double VectorField::norm_at(std::size_t node) const noexcept {
    double s = 0.0;
    for (int a = 0; a < grid_.dimension(); ++a) s += component(node, a) * component(node, a);
    return std::sqrt(s);
}

ScalarField VectorField::magnitude() const {
    ScalarField m(grid_);
    for (std::size_t k = 0; k < grid_.node_count(); ++k) m[k] = norm_at(k);
    return m;
}

double sup_norm(const ScalarField& field) noexcept {
    double m = 0.0;
    for (double v : field.values()) m = std::max(m, std::abs(v));
    return m;
}

double sup_norm(const VectorField& field) noexcept {
    double m = 0.0;
    for (std::size_t k = 0; k < field.grid().node_count(); ++k) m = std::max(m, field.norm_at(k));
    return m;
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch("sup_distance on different grids");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double sup_distance(const VectorField& a, const VectorField& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch("sup_distance on different grids");
    const int dim = a.grid().dimension();
    double m = 0.0;
    for (std::size_t k = 0; k < a.grid().node_count(); ++k) {
        double s = 0.0;
        for (int ax = 0; ax < dim; ++ax) {
            const double d = a.component(k, ax) - b.component(k, ax);
            s += d * d;
        }
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

VectorField gradient(const ScalarField& u) {
    const Grid& g = u.grid();
    VectorField grad(g);
    const int nx = g.count(0);
    const int ny = g.dimension() > 1 ? g.count(1) : 1;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = g.index(i, j);
            for (int a = 0; a < g.dimension(); ++a) {
                const int n = g.count(a);
                const int pos = a == 0 ? i : j;
                auto at = [&](int q) { return a == 0 ? u[g.index(q, j)] : u[g.index(i, q)]; };
                const double h = g.spacing(a);
                double d;
                if (pos == 0)
                    d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
                else if (pos == n - 1)
                    d = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
                else
                    d = (at(pos + 1) - at(pos - 1)) / (2.0 * h);
                grad.component(k, a) = d;
            }
        }
    }
    return grad;
}

namespace detail {

std::vector<Midpoint> build_midpoints(const Grid& g) {
    std::vector<Midpoint> mids;
    const int nx = g.count(0);
    if (g.dimension() == 1) {
        const double h = g.spacing(0);
        mids.reserve(static_cast<std::size_t>(nx - 1));
        for (int i = 0; i + 1 < nx; ++i) {
            Midpoint m;
            m.axis = 0;
            m.left = g.index(i);
            m.right = g.index(i + 1);
            m.terms[0] = {m.left, -1.0 / h, 0.0};
            m.terms[1] = {m.right, 1.0 / h, 0.0};
            m.nterms = 2;
            mids.push_back(m);
        }
        return mids;
    }

    const int ny = g.count(1);
    const double hx = g.spacing(0);
    const double hy = g.spacing(1);
    mids.reserve(static_cast<std::size_t>((nx - 1) * (ny - 2) + (ny - 1) * (nx - 2)));
    for (int j = 1; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            Midpoint m;
            m.axis = 0;
            m.left = g.index(i, j);
            m.right = g.index(i + 1, j);
            const double ct = 1.0 / (4.0 * hy);
            m.terms = {MidpointTerm{m.left, -1.0 / hx, 0.0},
                       MidpointTerm{m.right, 1.0 / hx, 0.0},
                       MidpointTerm{g.index(i, j + 1), 0.0, ct},
                       MidpointTerm{g.index(i, j - 1), 0.0, -ct},
                       MidpointTerm{g.index(i + 1, j + 1), 0.0, ct},
                       MidpointTerm{g.index(i + 1, j - 1), 0.0, -ct}};
            m.nterms = 6;
            mids.push_back(m);
        }
    }
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 1; i + 1 < nx; ++i) {
            Midpoint m;
            m.axis = 1;
            m.left = g.index(i, j);
            m.right = g.index(i, j + 1);
            const double ct = 1.0 / (4.0 * hx);
            m.terms = {MidpointTerm{m.left, -1.0 / hy, 0.0},
                       MidpointTerm{m.right, 1.0 / hy, 0.0},
                       MidpointTerm{g.index(i + 1, j), 0.0, ct},
                       MidpointTerm{g.index(i - 1, j), 0.0, -ct},
                       MidpointTerm{g.index(i + 1, j + 1), 0.0, ct},
                       MidpointTerm{g.index(i - 1, j + 1), 0.0, -ct}};
            m.nterms = 6;
            mids.push_back(m);
        }
    }
    return mids;
}

}  // namespace detail

double default_regularization(const ScalarField& u) {
    const Grid& g = u.grid();
    double m = 0.0;
    const int nx = g.count(0);
    const int ny = g.dimension() > 1 ? g.count(1) : 1;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v = u[g.index(i, j)];
            if (i + 1 < nx) m = std::max(m, std::abs(u[g.index(i + 1, j)] - v) / g.spacing(0));
            if (g.dimension() > 1 && j + 1 < ny) m = std::max(m, std::abs(u[g.index(i, j + 1)] - v) / g.spacing(1));
        }
    }
    return regularization_factor * m;
}

ScalarField p_laplacian_apply(const ScalarField& u, double p) {
    return p_laplacian_apply(u, p, default_regularization(u));
}

ScalarField p_laplacian_apply(const ScalarField& u, double p, double delta) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError(fmt::format("p-Laplacian needs p > 1, got {}", p));
    const Grid& g = u.grid();
    ScalarField out(g);
    const auto mids = detail::build_midpoints(g);
    for (const auto& m : mids) {
        const double flux = detail::face_flux(detail::face_gradient(m, u.values()), p, delta);
        const double h = g.spacing(m.axis);
        // -(F_{right face} - F_{left face}) / h at each endpoint
        out[m.left] -= flux / h;
        out[m.right] += flux / h;
    }
    out.zero_boundary();
    return out;
}

double integrate(const ScalarField& f) {
    const Grid& g = f.grid();
    double total = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const auto ij = g.ijk(k);
        double w = 1.0;
        for (int a = 0; a < g.dimension(); ++a) {
            w *= g.spacing(a);
            if (ij[a] == 0 || ij[a] == g.count(a) - 1) w *= 0.5;
        }
        total += w * f[k];
    }
    return total;
}

}  // namespace plap
