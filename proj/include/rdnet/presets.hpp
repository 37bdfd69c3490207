#pragma once

// Built-in systems: the three-mode switched network with its published
// feasible certificates, the scalar cellular networks with closed-form
// equilibria, the cube-root multiplicity example and a trivial zero system.

#include "rdnet/activation.hpp"
#include "rdnet/geometry.hpp"
#include "rdnet/model.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace rdnet::presets {

struct PublishedCertificate {
    Vec beta;
    double gamma;
    double q;
    double rate; // reported convergence rate gamma / 2
};

inline Mat mat2(double a, double b, double c, double d)
{
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

inline Vec vec2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

/// Activation (39 + 2 s + 1e-6 sin s) / 4 on both neurons, G = diag(0.51, 0.51).
inline Activation switched_activation()
{
    return Activation::uniform(ScalarFunction::scaled_sine(39.0 / 4.0, 0.5, 1e-6 / 4.0), 2, 0.51);
}

inline RectDomain switched_domain(int sigma)
{
    static const double side[] = {1.0, 1.3, 1.5};
    const double l = side[sigma - 1];
    return RectDomain::rectangle(l, l);
}

inline double published_certificate_gamma(int case_id)
{
    static const double g[] = {0.38, 0.44, 0.58};
    return g[case_id - 1];
}

/// Three-mode network; case 1 (base), 2 (larger diffusion), 3 (tau = 3).
inline SwitchedNetwork switched_example(int case_id)
{
    require(case_id >= 1 && case_id <= 3, "switched_example: case must be 1, 2 or 3");
    const std::vector<Mat> C{mat2(0.448, 0, 0, 0.441), mat2(0.455, 0, 0, 0.441), mat2(0.438, 0, 0, 0.433)};
    const std::vector<Mat> A{mat2(0.45, 0.00003, -0.00003, 0.44), mat2(0.452, 0.00001, -0.00001, 0.441),
                             mat2(0.439, 0.000015, -0.00001, 0.433)};
    const std::vector<Mat> B{mat2(0.446, -0.00003, 0.00003, 0.442), mat2(0.458, -0.00001, 0.00001, 0.441),
                             mat2(0.437, -0.000015, 0.00001, 0.433)};
    const std::vector<Vec> D_small{vec2(0.05, 0.055), vec2(0.07, 0.075), vec2(0.09, 0.095)};
    const std::vector<Vec> D_large{vec2(0.1, 0.15), vec2(0.15, 0.2), vec2(0.1, 0.15)};
    const auto& D = case_id == 2 ? D_large : D_small;

    SwitchedNetwork net;
    for (int s = 1; s <= 3; ++s) {
        const auto k = static_cast<std::size_t>(s - 1);
        const Vec J = vec2(0.2 * std::sin(static_cast<double>(s)), -0.1 * std::cos(static_cast<double>(s)));
        net.modes.emplace_back(D[k], Vec(C[k].diagonal()), A[k], B[k], J, switched_domain(s));
    }
    net.activation = switched_activation();
    net.delay = DelaySpec::constant(case_id == 3 ? 3.0 : 3.5);
    net.Psi = 0.00018 * Mat::Identity(2, 2);
    net.q = 1.00001;
    net.gamma = published_certificate_gamma(case_id);
    return net;
}

inline PublishedCertificate published_certificate(int case_id)
{
    require(case_id >= 1 && case_id <= 3, "published_certificate: case must be 1, 2 or 3");
    Vec beta(3);
    if (case_id == 1) beta << 0.5676, 0.3633, 0.0691;
    if (case_id == 2) beta << 0.6769, 0.2333, 0.0898;
    if (case_id == 3) beta << 0.6616, 0.3113, 0.0271;
    const double gamma = published_certificate_gamma(case_id);
    return {beta, gamma, 1.00001, gamma / 2.0};
}

inline const double kSwitchedLambda[] = {19.7392, 11.68, 8.7730};

/// Initial profile, component j in {1, 2}: prod_sigma sin^j[x1^33 (x1 - 5(sigma+1))^353
/// x2^63 (x2 - 5(sigma+1))^79], constant over the history window. The argument
/// overflows double, so it is formed in extended precision.
inline double switched_initial(int j, double x1, double x2)
{
    long double prod = 1.0L;
    for (int sigma = 1; sigma <= 3; ++sigma) {
        const long double shift = 5.0L * (sigma + 1);
        const long double arg = std::pow(static_cast<long double>(x1), 33.0L)
                                * std::pow(static_cast<long double>(x1) - shift, 353.0L)
                                * std::pow(static_cast<long double>(x2), 63.0L)
                                * std::pow(static_cast<long double>(x2) - shift, 79.0L);
        prod *= std::pow(std::sin(arg), static_cast<long double>(j));
    }
    return static_cast<double>(prod);
}

inline VectorField switched_initial_field(const GridPtr& grid)
{
    Mat v(grid->size(), 2);
    for (Eigen::Index p = 0; p < grid->size(); ++p) {
        const auto x = grid->coord(p);
        v(p, 0) = switched_initial(1, x[0], x[1]);
        v(p, 1) = switched_initial(2, x[0], x[1]);
    }
    return {grid, std::move(v)};
}

inline Mode scalar_mode(double D, double C, double A, double B, double J, const RectDomain& dom)
{
    return Mode(Vec::Constant(1, D), Vec::Constant(1, C), Mat::Constant(1, 1, A), Mat::Constant(1, 1, B),
                Vec::Constant(1, J), dom);
}

inline SwitchedNetwork scalar_network(const Mode& m, const ScalarFunction& g, double G, double tau, double psi = 0.1)
{
    SwitchedNetwork net;
    net.modes = {m};
    net.activation = Activation::uniform(g, 1, G);
    net.delay = DelaySpec::constant(tau);
    net.Psi = Mat::Constant(1, 1, psi);
    net.q = 1.00001;
    net.gamma = 0.5 * psi;
    return net;
}

/// Scalar cellular network D=0.001, C=1.8, A=0.2, B=0.1, J=1.09, f(s)=0.05(s-6)
/// on (0,1). Equilibrium of the lumped system is 200/357; tau defaults to 1.
inline SwitchedNetwork nonconstant_equilibrium(double tau = 1.0)
{
    return scalar_network(scalar_mode(0.001, 1.8, 0.2, 0.1, 1.09, RectDomain::interval(1.0)),
                          ScalarFunction::affine(0.05, -0.3), 0.05, tau);
}

inline constexpr double kNonconstantEquilibrium = 200.0 / 357.0;

/// Scalar cellular network R=0.1, B=2, C=D=0.01, g(u)=u, input 0.1 on (0,1);
/// lumped equilibrium 0.1/1.98.
inline SwitchedNetwork linear_invariance(double tau = 1.0)
{
    return scalar_network(scalar_mode(0.1, 2.0, 0.01, 0.01, 0.1, RectDomain::interval(1.0)),
                          ScalarFunction::identity(), 1.0, tau);
}

inline constexpr double kLinearInvarianceEquilibrium = 0.1 / 1.98;

enum class Mu1Choice { continuum, discrete };

/// Scalar network D u'' - C u + A f(u) = 0 with the cube-root f, B = 0, J = 0.
/// mu1 = C/D + lambda1, with lambda1 the continuum or the grid eigenvalue.
inline SwitchedNetwork multiplicity_example(const GridPtr& grid, double D = 1.0, double C = 1.0, double A = 1.0,
                                            Mu1Choice choice = Mu1Choice::discrete, double tau = 1.0)
{
    const double lambda1 =
        choice == Mu1Choice::continuum ? first_eigenvalue(grid->domain()) : grid->discrete_first_eigenvalue();
    const double mu1 = C / D + lambda1;
    return scalar_network(scalar_mode(D, C, A, 0.0, 0.0, grid->domain()), ScalarFunction::cube_root(D, A, mu1),
                          D / A * mu1, tau);
}

/// Two neurons with negligible D, C and no coupling; identity activation.
inline SwitchedNetwork zero_system(const RectDomain& dom = RectDomain::rectangle(1.0, 1.0))
{
    SwitchedNetwork net;
    net.modes.emplace_back(Vec::Constant(2, 1e-9), Vec::Constant(2, 1e-9), Mat::Zero(2, 2), Mat::Zero(2, 2),
                           Vec::Zero(2), dom);
    net.activation = Activation::uniform(ScalarFunction::identity(), 2, 1.0);
    net.delay = DelaySpec::constant(3.5);
    net.Psi = 0.00018 * Mat::Identity(2, 2);
    net.q = 1.00001;
    net.gamma = 0.38;
    return net;
}

} // namespace rdnet::presets
