#pragma once

// Stationary solutions: fixed-point iteration, variational minimization of the
// associated energy, closed-form boundary-layer profiles and multiplicity search.

#include "rdnet/activation.hpp"
#include "rdnet/geometry.hpp"
#include "rdnet/linalg.hpp"
#include "rdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace rdnet {

/// 0 = D Lap y - C y + (A + B) g(y) + J on a grid, Dirichlet zero outside.
struct StationaryProblem {
    Mode mode;
    Activation activation;
    GridPtr grid;

    StationaryProblem(Mode m, Activation act, GridPtr g)
        : mode(std::move(m)), activation(std::move(act)), grid(std::move(g))
    {
        require(grid != nullptr, "StationaryProblem: missing grid");
        require(mode.size() == activation.size(), "StationaryProblem: mode/activation size mismatch");
    }

    Eigen::Index components() const { return mode.size(); }
    Mat coupling() const { return mode.A + mode.B; }
};

namespace detail {

/// Node-wise (A + B) g(y) + J, one row per node.
inline Mat reaction_drive(const StationaryProblem& pb, const Mat& Y)
{
    Mat gY(Y.rows(), Y.cols());
    for (Eigen::Index j = 0; j < Y.cols(); ++j)
        for (Eigen::Index p = 0; p < Y.rows(); ++p) gY(p, j) = pb.activation(j, Y(p, j));
    Mat out = gY * pb.coupling().transpose();
    out.rowwise() += pb.mode.J.transpose();
    return out;
}

inline void check_field(const StationaryProblem& pb, const VectorField& y)
{
    require(same_grid(pb.grid, y.grid), "stationary: field lives on another grid");
    require(y.components() == pb.components(), "stationary: component count mismatch");
}

} // namespace detail

/// Pointwise stationary residual D Lap_h y - C y + (A + B) g(y) + J.
inline VectorField residual_field(const StationaryProblem& pb, const VectorField& y)
{
    detail::check_field(pb, y);
    Mat R = detail::reaction_drive(pb, y.values);
    for (Eigen::Index i = 0; i < pb.components(); ++i)
        R.col(i) += pb.mode.D(i) * apply_laplacian(*pb.grid, y.values.col(i)) - pb.mode.C(i) * y.values.col(i);
    return {pb.grid, std::move(R)};
}

/// Discrete L2 norm of the residual over interior nodes.
inline double residual(const StationaryProblem& pb, const VectorField& y) { return l2_norm(residual_field(pb, y)); }

enum class FixedPointForm { paper_T, helmholtz };

inline const char* to_string(FixedPointForm f) { return f == FixedPointForm::paper_T ? "paper_T" : "helmholtz"; }

inline FixedPointForm fixed_point_form_from_string(const std::string& s)
{
    if (s == "paper_T") return FixedPointForm::paper_T;
    if (s == "helmholtz") return FixedPointForm::helmholtz;
    throw std::invalid_argument("unknown fixed-point form '" + s + "'");
}

struct FixedPointOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    FixedPointForm form = FixedPointForm::helmholtz;
};

struct SolveReport {
    VectorField field;
    bool converged = false;
    int iterations = 0;
    double update_norm = 0.0; // sup-norm of the last update
    double residual = 0.0;
};

/// paper_T: y <- (-Lap_h)^{-1} D^{-1}(-C y + (A+B) g(y) + J).
/// helmholtz: y_i <- (C_i/D_i - Lap_h)^{-1} D_i^{-1}((A+B) g(y) + J)_i.
/// Stops once the update is <= tol and the residual is <= 10 tol; otherwise
/// reports the last iterate with converged = false.
inline SolveReport fixed_point_solve(const StationaryProblem& pb, const VectorField& init,
                                     const FixedPointOptions& opt = {})
{
    require(opt.tol > 0.0, "fixed_point_solve: tol must be positive");
    require(opt.max_iter >= 1, "fixed_point_solve: max_iter must be >= 1");
    detail::check_field(pb, init);
    const Eigen::Index n = pb.components();
    std::deque<HelmholtzSolver> solvers;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double shift = opt.form == FixedPointForm::helmholtz ? pb.mode.C(i) / pb.mode.D(i) : 0.0;
        solvers.emplace_back(pb.grid, shift);
    }

    SolveReport rep{init, false, 0, std::numeric_limits<double>::infinity(), 0.0};
    Mat Y = init.values;
    for (int it = 1; it <= opt.max_iter; ++it) {
        Mat drive = detail::reaction_drive(pb, Y);
        if (opt.form == FixedPointForm::paper_T) drive -= Y * pb.mode.C.asDiagonal();
        Mat next(Y.rows(), n);
        for (Eigen::Index i = 0; i < n; ++i) next.col(i) = solvers[static_cast<std::size_t>(i)].solve(drive.col(i) / pb.mode.D(i));
        if (!next.allFinite()) {
            rep.iterations = it;
            rep.update_norm = std::numeric_limits<double>::infinity();
            rep.field = {pb.grid, Y};
            rep.residual = std::numeric_limits<double>::infinity();
            return rep;
        }
        rep.update_norm = (next - Y).cwiseAbs().maxCoeff();
        Y = std::move(next);
        rep.iterations = it;
        if (rep.update_norm <= opt.tol) {
            rep.field = {pb.grid, Y};
            rep.residual = residual(pb, rep.field);
            if (rep.residual <= 10.0 * opt.tol) {
                rep.converged = true;
                return rep;
            }
        }
    }
    rep.field = {pb.grid, Y};
    rep.residual = residual(pb, rep.field);
    return rep;
}

/// Solution of u'' = c0 u - c0 * plateau on (0, L) with u(0) = u(L) = 0:
/// plateau * (1 - cosh(sqrt(c0)(x - L/2)) / cosh(sqrt(c0) L/2)).
inline double boundary_layer_value(double x, double c0, double plateau, double L = 1.0)
{
    require(c0 > 0.0 && L > 0.0, "boundary_layer_value: need c0 > 0, L > 0");
    const double k = std::sqrt(c0);
    const double half = 0.5 * k * L;
    // cosh(k(x - L/2)) / cosh(kL/2) without overflow.
    const double d = std::abs(k * (x - 0.5 * L));
    const double ratio = std::exp(d - half) * (1.0 + std::exp(-2.0 * d)) / (1.0 + std::exp(-2.0 * half));
    return plateau * (1.0 - ratio);
}

/// Exact stationary profile of the scalar linear problem D u'' - c u + J = 0
/// on an interval: boundary layers of width sqrt(D/c) around the plateau J/c.
inline ScalarField boundary_layer_profile(const GridPtr& grid, double D, double c, double J)
{
    require(grid->dims() == 1, "boundary_layer_profile: interval grids only");
    const double L = grid->domain().length(0);
    return sample(grid, [&](double x, double) { return boundary_layer_value(x, c / D, J / c, L); });
}

/// Nonconstant equilibrium of the scalar network with D = 0.001 on (0, 1):
/// solution of u'' = 1785 u - 1000 with u(0) = u(1) = 0.
inline ScalarField statement1_closed_form(const GridPtr& grid)
{
    require(grid->dims() == 1 && grid->domain().length(0) == 1.0, "statement1_closed_form: grid on (0, 1) required");
    return sample(grid, [](double x, double) { return boundary_layer_value(x, 1785.0, 200.0 / 357.0); });
}

// ---------------------------------------------------------------------------
// Energy functionals

enum class Nonlinearity { none, cube_root };

/// E(u) = 1/2 int |grad u|^2 + c0/2 int u^2 - int s u - kappa int F(u), with F the
/// cube-root antiderivative with parameters (D, A, mu1).
struct EnergyFunctional {
    double c0 = 0.0;
    ScalarField source;
    Nonlinearity nonlinearity = Nonlinearity::none;
    double kappa = 0.0;
    double D = 1.0, A = 1.0, mu1 = 0.0;

    GridPtr grid() const { return source.grid; }

    void validate() const
    {
        require(source.grid != nullptr, "EnergyFunctional: missing grid");
        require(c0 >= 0.0, "EnergyFunctional: c0 must be >= 0");
        if (nonlinearity == Nonlinearity::cube_root) require(D > 0.0 && A != 0.0, "EnergyFunctional: need D > 0, A != 0");
    }
};

inline Nonlinearity nonlinearity_from_string(const std::string& s)
{
    if (s == "none") return Nonlinearity::none;
    if (s == "cube_root") return Nonlinearity::cube_root;
    throw std::invalid_argument("unknown nonlinearity '" + s + "'");
}

/// Quadratic energy with source: c0 u - s.
inline EnergyFunctional quadratic_energy(const GridPtr& grid, double c0, double source)
{
    return {c0, {grid, Vec::Constant(grid->size(), source)}, Nonlinearity::none};
}

/// Energy whose critical points solve D Lap u - C u + A f(u) = 0 with the cube-root f.
inline EnergyFunctional cube_root_energy(const GridPtr& grid, double D, double C, double A, double mu1)
{
    return {C / D, ScalarField::zeros(grid), Nonlinearity::cube_root, A / D, D, A, mu1};
}

/// Energy of a scalar stationary problem when one exists: affine g folds into
/// c0 and the source, cube-root g with B = 0 becomes the nonlinear term.
inline EnergyFunctional energy_for(const StationaryProblem& pb)
{
    require(pb.components() == 1, "energy_for: scalar problems only");
    const double D = pb.mode.D(0), C = pb.mode.C(0), W = pb.coupling()(0, 0), J = pb.mode.J(0);
    const auto& g = pb.activation.fn(0);
    if (g.kind() == FnKind::affine) {
        const double a = g.params()[0], b = g.params()[1];
        const double c0 = (C - W * a) / D;
        require(c0 >= 0.0, "energy_for: affine problem has negative quadratic coefficient");
        return {c0, {pb.grid, Vec::Constant(pb.grid->size(), (W * b + J) / D)}, Nonlinearity::none};
    }
    if (g.kind() == FnKind::cube_root) {
        const auto& p = g.params();
        return {C / D, {pb.grid, Vec::Constant(pb.grid->size(), J / D)}, Nonlinearity::cube_root, W / D, p[0], p[1], p[2]};
    }
    throw std::invalid_argument(std::string("energy_for: no energy for activation '") + to_string(g.kind()) + "'");
}

namespace detail {

inline double nonlinear_F(const EnergyFunctional& e, double u)
{
    return e.nonlinearity == Nonlinearity::cube_root ? cube_root_antiderivative(u, e.D, e.A, e.mu1) : 0.0;
}

inline double nonlinear_f(const EnergyFunctional& e, double u)
{
    return e.nonlinearity == Nonlinearity::cube_root ? cube_root_activation(u, e.D, e.A, e.mu1) : 0.0;
}

} // namespace detail

/// Quadrature energy; the Dirichlet term uses forward differences including the
/// boundary edges, which equals u^T (-Lap_h) u h^d exactly.
inline double energy_eval(const EnergyFunctional& e, const ScalarField& u)
{
    e.validate();
    require(same_grid(e.grid(), u.grid), "energy_eval: field lives on another grid");
    const Grid& g = *u.grid;
    const double vol = g.cell_volume();
    double dirichlet = 0.0;
    const int nx = g.count(0);
    const int ny = g.dims() == 2 ? g.count(1) : 1;
    auto at = [&](int i, int j) -> double {
        if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
        return u.values(i + static_cast<Eigen::Index>(nx) * j);
    };
    for (int a = 0; a < g.dims(); ++a) {
        const double h = g.spacing(a);
        for (int j = (a == 1 ? -1 : 0); j < ny; ++j)
            for (int i = (a == 0 ? -1 : 0); i < nx; ++i) {
                const double d = a == 0 ? at(i + 1, j) - at(i, j) : at(i, j + 1) - at(i, j);
                dirichlet += d * d / (h * h);
            }
    }
    double rest = 0.0;
    for (Eigen::Index p = 0; p < u.values.size(); ++p) {
        const double v = u.values(p);
        rest += 0.5 * e.c0 * v * v - e.source.values(p) * v - e.kappa * detail::nonlinear_F(e, v);
    }
    return vol * (0.5 * dirichlet + rest);
}

/// First variation with respect to the quadrature inner product:
/// -Lap_h u + c0 u - s - kappa f(u).
inline ScalarField energy_gradient(const EnergyFunctional& e, const ScalarField& u)
{
    e.validate();
    require(same_grid(e.grid(), u.grid), "energy_gradient: field lives on another grid");
    Vec gr = -apply_laplacian(*u.grid, u.values) + e.c0 * u.values - e.source.values;
    if (e.nonlinearity != Nonlinearity::none)
        for (Eigen::Index p = 0; p < gr.size(); ++p) gr(p) -= e.kappa * detail::nonlinear_f(e, u.values(p));
    return {u.grid, std::move(gr)};
}

enum class StepRule { plain, sobolev };

struct MinimizeOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    StepRule rule = StepRule::sobolev;
    double armijo_c = 1e-4;
};

struct MinimizeReport {
    ScalarField field;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double energy = 0.0;
};

/// Gradient descent with Armijo backtracking until the L2 gradient norm is <= tol.
/// sobolev preconditions the gradient with (max(c0, 1) - Lap_h)^{-1}; plain uses it as is.
inline MinimizeReport variational_minimize(const EnergyFunctional& e, const ScalarField& init,
                                           const MinimizeOptions& opt = {})
{
    require(opt.tol > 0.0, "variational_minimize: tol must be positive");
    e.validate();
    const GridPtr grid = e.grid();
    require(same_grid(grid, init.grid), "variational_minimize: init lives on another grid");
    std::optional<HelmholtzSolver> precond;
    if (opt.rule == StepRule::sobolev) precond.emplace(grid, std::max(e.c0, 1.0));
    double step0 = 1.0;
    if (opt.rule == StepRule::plain) {
        double lap_max = 0.0;
        for (int a = 0; a < grid->dims(); ++a) lap_max += 4.0 / (grid->spacing(a) * grid->spacing(a));
        step0 = 2.0 / (lap_max + e.c0 + std::abs(e.kappa * e.D / e.A * e.mu1) + 1.0);
    }

    MinimizeReport rep{init, false, 0, 0.0, energy_eval(e, init)};
    ScalarField u = init;
    double E = rep.energy;
    for (int it = 0; it <= opt.max_iter; ++it) {
        const ScalarField gr = energy_gradient(e, u);
        rep.gradient_norm = l2_norm(gr);
        rep.iterations = it;
        if (rep.gradient_norm <= opt.tol) {
            rep.converged = true;
            break;
        }
        if (it == opt.max_iter) break;
        const Vec dir = precond ? Vec(-precond->solve(gr.values)) : Vec(-gr.values);
        const double slope = grid->cell_volume() * gr.values.dot(dir);
        double alpha = step0;
        ScalarField trial = u;
        double Et = E;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            trial.values = u.values + alpha * dir;
            Et = energy_eval(e, trial);
            if (Et < E && Et <= E + opt.armijo_c * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Energy changes below rounding: accept the longest step that shrinks the gradient.
            for (alpha = step0; alpha > 1e-12 * step0 && !accepted; alpha *= 0.5) {
                trial.values = u.values + alpha * dir;
                accepted = l2_norm(energy_gradient(e, trial)) < rep.gradient_norm;
            }
            if (!accepted) break;
            Et = energy_eval(e, trial);
        }
        u = std::move(trial);
        E = Et;
    }
    rep.field = u;
    rep.energy = energy_eval(e, u);
    return rep;
}

struct MultiplicityReport {
    std::vector<ScalarField> solutions; // sorted by energy, then norm
    std::vector<double> energies;
    std::vector<double> residuals; // L2 energy-gradient norms
    std::size_t nonconverged = 0;
    double inf_energy_estimate = 0.0;
    std::size_t count() const { return solutions.size(); }
};

/// Minimizes from every init and keeps the distinct critical points: two fields
/// are the same when their L2 distance is <= 0.1 (1 + |a| + |b|).
inline MultiplicityReport find_stationary_multiplicity(const EnergyFunctional& e, const std::vector<ScalarField>& inits,
                                                       const MinimizeOptions& opt = {})
{
    require(!inits.empty(), "find_stationary_multiplicity: need at least one init");
    struct Found {
        ScalarField u;
        double energy, norm, mean, grad;
    };
    std::vector<Found> found;
    MultiplicityReport rep;
    rep.inf_energy_estimate = std::numeric_limits<double>::infinity();
    for (const auto& init : inits) {
        const auto r = variational_minimize(e, init, opt);
        rep.inf_energy_estimate = std::min(rep.inf_energy_estimate, r.energy);
        if (!r.converged) {
            ++rep.nonconverged;
            continue;
        }
        const double nrm = l2_norm(r.field);
        bool fresh = true;
        for (const auto& f : found) {
            const ScalarField diff{r.field.grid, r.field.values - f.u.values};
            if (l2_norm(diff) <= 0.1 * (1.0 + nrm + f.norm)) fresh = false;
        }
        if (fresh) found.push_back({r.field, r.energy, nrm, r.field.values.mean(), r.gradient_norm});
    }
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        if (a.norm != b.norm) return a.norm < b.norm;
        return a.mean < b.mean;
    });
    for (auto& f : found) {
        rep.solutions.push_back(f.u);
        rep.energies.push_back(f.energy);
        rep.residuals.push_back(f.grad);
    }
    return rep;
}

/// Product of sines vanishing on the boundary, scaled to unit sup-norm on the continuum.
inline ScalarField fundamental_mode(const GridPtr& grid)
{
    const auto& dom = grid->domain();
    return sample(grid, [&](double x, double y) {
        double v = std::sin(std::numbers::pi * x / dom.length(0));
        if (dom.dims() == 2) v *= std::sin(std::numbers::pi * y / dom.length(1));
        return v;
    });
}

} // namespace rdnet
