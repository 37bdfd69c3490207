#pragma once

// Rectangular Dirichlet-zero domains, uniform finite-difference grids, fields
// on interior nodes, the discrete Laplacian and shifted elliptic solves.

#include "rdnet/linalg.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

namespace rdnet {

class RectDomain {
public:
    RectDomain() : RectDomain(std::vector<double>{1.0}) {}

    explicit RectDomain(std::vector<double> lengths) : lengths_(std::move(lengths))
    {
        require(lengths_.size() == 1 || lengths_.size() == 2, "RectDomain: dims must be 1 or 2");
        for (double l : lengths_)
            require(std::isfinite(l) && l > 0.0, "RectDomain: lengths must be positive");
    }

    static RectDomain interval(double length) { return RectDomain({length}); }
    static RectDomain rectangle(double a, double b) { return RectDomain({a, b}); }

    int dims() const { return static_cast<int>(lengths_.size()); }
    double length(int axis) const { return lengths_.at(static_cast<std::size_t>(axis)); }
    const std::vector<double>& lengths() const { return lengths_; }

    double measure() const
    {
        double m = 1.0;
        for (double l : lengths_) m *= l;
        return m;
    }

    bool operator==(const RectDomain&) const = default;

private:
    std::vector<double> lengths_;
};

/// First Dirichlet eigenvalue of -Laplace on the rectangle, sum of (pi/l_i)^2.
inline double first_eigenvalue(const RectDomain& domain)
{
    double lambda = 0.0;
    for (double l : domain.lengths()) lambda += (std::numbers::pi / l) * (std::numbers::pi / l);
    return lambda;
}

/// Constants 1/l_i^2 of the cube Poincare inequality for |x_i| < l_i; their sum
/// bounds the first eigenvalue from below.
inline std::vector<double> poincare_cube_bound(const std::vector<double>& half_lengths)
{
    std::vector<double> out;
    out.reserve(half_lengths.size());
    for (double l : half_lengths) {
        require(l > 0.0, "poincare_cube_bound: lengths must be positive");
        out.push_back(1.0 / (l * l));
    }
    return out;
}

using SparseMat = Eigen::SparseMatrix<double>;

/// Uniform tensor grid of interior nodes; boundary nodes are implicit and
/// carry the value 0. Node (i, j) has index i + nx * j.
class Grid {
public:
    Grid(RectDomain domain, std::vector<int> counts) : domain_(std::move(domain)), counts_(std::move(counts))
    {
        require(static_cast<int>(counts_.size()) == domain_.dims(), "Grid: one node count per axis");
        for (int c : counts_) require(c >= 3, "Grid: at least 3 interior nodes per axis");
        for (int a = 0; a < dims(); ++a)
            h_.push_back(domain_.length(a) / static_cast<double>(counts_[static_cast<std::size_t>(a)] + 1));
        build_laplacian();
    }

    const RectDomain& domain() const { return domain_; }
    int dims() const { return domain_.dims(); }
    int count(int axis) const { return counts_.at(static_cast<std::size_t>(axis)); }
    double spacing(int axis) const { return h_.at(static_cast<std::size_t>(axis)); }
    double max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }
    const std::vector<int>& counts() const { return counts_; }

    Eigen::Index size() const
    {
        Eigen::Index n = 1;
        for (int c : counts_) n *= c;
        return n;
    }

    /// Quadrature weight of one interior node.
    double cell_volume() const
    {
        double v = 1.0;
        for (double h : h_) v *= h;
        return v;
    }

    std::array<double, 2> coord(Eigen::Index node) const
    {
        const int nx = counts_[0];
        const auto i = static_cast<int>(node % nx);
        const auto j = static_cast<int>(node / nx);
        std::array<double, 2> x{(i + 1) * h_[0], 0.0};
        if (dims() == 2) x[1] = (j + 1) * h_[1];
        return x;
    }

    /// Sparse 3-point / 5-point Dirichlet Laplacian (negative definite).
    const SparseMat& laplacian() const { return laplacian_; }

    /// Smallest eigenvalue of -Laplacian_h in closed form.
    double discrete_first_eigenvalue() const { return discrete_eigenvalue({1, 1}); }

    double discrete_eigenvalue(std::array<int, 2> k) const
    {
        double mu = 0.0;
        for (int a = 0; a < dims(); ++a) {
            const double s = std::sin(k[static_cast<std::size_t>(a)] * std::numbers::pi * h_[static_cast<std::size_t>(a)]
                                      / (2.0 * domain_.length(a)));
            mu += 4.0 * s * s / (h_[static_cast<std::size_t>(a)] * h_[static_cast<std::size_t>(a)]);
        }
        return mu;
    }

    bool operator==(const Grid& o) const { return domain_ == o.domain_ && counts_ == o.counts_; }

private:
    void build_laplacian()
    {
        const Eigen::Index n = size();
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(n) * (1 + 2 * static_cast<std::size_t>(dims())));
        const int nx = counts_[0];
        const int ny = dims() == 2 ? counts_[1] : 1;
        const double ix2 = 1.0 / (h_[0] * h_[0]);
        const double iy2 = dims() == 2 ? 1.0 / (h_[1] * h_[1]) : 0.0;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const Eigen::Index p = i + static_cast<Eigen::Index>(nx) * j;
                trips.emplace_back(p, p, -2.0 * ix2 - 2.0 * iy2);
                if (i > 0) trips.emplace_back(p, p - 1, ix2);
                if (i + 1 < nx) trips.emplace_back(p, p + 1, ix2);
                if (j > 0) trips.emplace_back(p, p - nx, iy2);
                if (j + 1 < ny) trips.emplace_back(p, p + nx, iy2);
            }
        }
        laplacian_.resize(n, n);
        laplacian_.setFromTriplets(trips.begin(), trips.end());
        laplacian_.makeCompressed();
    }

    RectDomain domain_;
    std::vector<int> counts_;
    std::vector<double> h_;
    SparseMat laplacian_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(const RectDomain& domain, std::vector<int> counts)
{
    return std::make_shared<const Grid>(domain, std::move(counts));
}

/// Grid with `nodes` interior nodes along every axis.
inline GridPtr make_grid(const RectDomain& domain, int nodes)
{
    return make_grid(domain, std::vector<int>(static_cast<std::size_t>(domain.dims()), nodes));
}

inline bool same_grid(const GridPtr& a, const GridPtr& b)
{
    return a && b && (a == b || *a == *b);
}

struct ScalarField {
    GridPtr grid;
    Vec values;

    ScalarField() = default;
    ScalarField(GridPtr g, Vec v) : grid(std::move(g)), values(std::move(v))
    {
        require(grid != nullptr, "ScalarField: null grid");
        require(values.size() == grid->size(), "ScalarField: value count must equal interior node count");
        require(values.allFinite(), "ScalarField: non-finite value");
    }

    static ScalarField zeros(const GridPtr& g) { return {g, Vec::Zero(g->size())}; }
};

/// n-component field stored node-major: values(node, component).
struct VectorField {
    GridPtr grid;
    Mat values;

    VectorField() = default;
    VectorField(GridPtr g, Mat v) : grid(std::move(g)), values(std::move(v))
    {
        require(grid != nullptr, "VectorField: null grid");
        require(values.rows() == grid->size(), "VectorField: value count must equal interior node count");
        require(values.allFinite(), "VectorField: non-finite value");
    }

    static VectorField zeros(const GridPtr& g, Eigen::Index n) { return {g, Mat::Zero(g->size(), n)}; }

    Eigen::Index components() const { return values.cols(); }
    ScalarField component(Eigen::Index c) const { return {grid, values.col(c)}; }
};

inline ScalarField sample(const GridPtr& grid, const std::function<double(double, double)>& fn)
{
    Vec v(grid->size());
    for (Eigen::Index p = 0; p < grid->size(); ++p) {
        const auto x = grid->coord(p);
        v(p) = fn(x[0], x[1]);
    }
    return {grid, std::move(v)};
}

/// Discrete Laplacian applied to interior values (boundary values are zero).
inline Vec apply_laplacian(const Grid& grid, const Vec& u) { return grid.laplacian() * u; }

inline double l2_inner(const ScalarField& a, const ScalarField& b)
{
    require(same_grid(a.grid, b.grid), "l2_inner: fields live on different grids");
    return a.grid->cell_volume() * a.values.dot(b.values);
}

inline double l2_inner(const VectorField& a, const VectorField& b)
{
    require(same_grid(a.grid, b.grid) && a.values.cols() == b.values.cols(),
            "l2_inner: dimension mismatch");
    return a.grid->cell_volume() * (a.values.array() * b.values.array()).sum();
}

inline double l2_norm(const ScalarField& a) { return std::sqrt(l2_inner(a, a)); }
inline double l2_norm(const VectorField& a) { return std::sqrt(l2_inner(a, a)); }

/// Direct solver for (c I - Laplacian_h) u = rhs, factorized once.
class HelmholtzSolver {
public:
    HelmholtzSolver(GridPtr grid, double c) : grid_(std::move(grid)), c_(c)
    {
        require(grid_ != nullptr, "HelmholtzSolver: null grid");
        require(std::isfinite(c) && c >= 0.0, "HelmholtzSolver: shift must be nonnegative");
        SparseMat op = -grid_->laplacian();
        for (Eigen::Index p = 0; p < op.rows(); ++p) op.coeffRef(p, p) += c;
        llt_.compute(op);
        require(llt_.info() == Eigen::Success, "HelmholtzSolver: factorization failed");
    }

    const GridPtr& grid() const { return grid_; }
    double shift() const { return c_; }

    Vec solve(const Vec& rhs) const
    {
        require(rhs.size() == grid_->size(), "HelmholtzSolver: dimension mismatch");
        return llt_.solve(rhs);
    }

    ScalarField solve(const ScalarField& rhs) const
    {
        require(same_grid(rhs.grid, grid_), "HelmholtzSolver: rhs on a different grid");
        return {grid_, solve(rhs.values)};
    }

private:
    GridPtr grid_;
    double c_;
    Eigen::SimplicialLDLT<SparseMat> llt_;
};

inline ScalarField helmholtz_solve(const GridPtr& grid, double c, const ScalarField& rhs)
{
    return HelmholtzSolver(grid, c).solve(rhs);
}

/// Product-of-sines Dirichlet mode with per-axis indices k (>= 1), normalized to
/// unit discrete L2 norm, together with its continuum eigenvalue.
inline std::pair<ScalarField, double> eigenfunction(const RectDomain& domain, std::array<int, 2> k,
                                                    const GridPtr& grid)
{
    require(grid->domain() == domain, "eigenfunction: grid built on another domain");
    require(k[0] >= 1 && (domain.dims() == 1 || k[1] >= 1), "eigenfunction: mode indices must be >= 1");
    const double l0 = domain.length(0);
    const double l1 = domain.dims() == 2 ? domain.length(1) : 1.0;
    ScalarField f = sample(grid, [&](double x, double y) {
        double v = std::sin(k[0] * std::numbers::pi * x / l0);
        if (domain.dims() == 2) v *= std::sin(k[1] * std::numbers::pi * y / l1);
        return v;
    });
    f.values /= l2_norm(f);
    double lambda = 0.0;
    for (int a = 0; a < domain.dims(); ++a) {
        const double w = k[static_cast<std::size_t>(a)] * std::numbers::pi / domain.length(a);
        lambda += w * w;
    }
    return {std::move(f), lambda};
}

} // namespace rdnet
