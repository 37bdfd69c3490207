// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "CLI11.hpp"
#include "oracles.hpp"
#include "rdnet/certificates.hpp"
#include "rdnet/presets.hpp"
#include "rdnet/simulator.hpp"
#include "rdnet/stationary.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rdnet;

namespace {

constexpr double pi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects sub-checks of one criterion; the first failure is kept for the summary line.
struct Criterion {
    int id = 0;
    std::string title;
    bool ok = true;
    std::ostringstream detail;
    std::string first_failure;

    void check(bool cond, const std::string& what)
    {
        if (!cond && ok) first_failure = what;
        ok = ok && cond;
    }
};

std::string g(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double sup_diff(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

ScalarField oracle_field(const GridPtr& grid, double c, double scale)
{
    return sample(grid, [&](double x, double) { return scale * oracle::shifted_poisson_unit_rhs(c, x); });
}

void eigenvalues(Criterion& c)
{
    const auto t0 = Clock::now();
    double lam[3];
    for (int s = 1; s <= 3; ++s) lam[s - 1] = first_eigenvalue(presets::switched_domain(s));
    const double elapsed = seconds_since(t0);
    const double ref[] = {19.7392, 11.68, 8.7730};
    for (int s = 0; s < 3; ++s) {
        c.check(std::abs(lam[s] - ref[s]) <= 1e-3, "lambda1 of mode " + std::to_string(s + 1));
        c.detail << "lambda" << s + 1 << "=" << g(lam[s]) << " ";
    }
    c.check(elapsed < 1e-3, "runtime");
    c.detail << "time=" << g(elapsed * 1e3) << "ms";
}

void certificates(Criterion& c)
{
    const auto t0 = Clock::now();
    const double rates[] = {0.19, 0.22, 0.29};
    double got[3];
    for (int k = 1; k <= 3; ++k) {
        const auto pub = presets::published_certificate(k);
        const auto cert = verify_certificate(presets::switched_example(k), pub.beta, pub.gamma, pub.q);
        got[k - 1] = cert.rate;
        c.check(cert.feasible && cert.margin < 0.0, "case " + std::to_string(k) + " feasible");
        c.check(std::abs(cert.rate - rates[k - 1]) <= 1e-12, "case " + std::to_string(k) + " rate");
        c.check(!cert.theorem_constraint_ok, "case " + std::to_string(k) + " theorem flag reported false");
        c.detail << "case" << k << " margin=" << g(cert.margin) << " rate=" << g(cert.rate)
                 << " theorem_ok=" << cert.theorem_constraint_ok << " ";
    }
    c.check(got[1] > got[0], "diffusion ordering");
    c.check(got[2] > got[0], "delay ordering");
    const double elapsed = seconds_since(t0);
    c.check(elapsed < 1.0, "runtime");
    c.detail << "time=" << g(elapsed * 1e3) << "ms";
}

void uniqueness(Criterion& c)
{
    for (int k = 1; k <= 3; ++k) {
        const auto net = presets::switched_example(k);
        const auto v = check_uniqueness_A3(net.modes, net.activation.G(), 2.0, {1.0, 1.0, 1.0});
        for (std::size_t s = 0; s < v.size(); ++s) {
            c.check(v[s].holds, "case " + std::to_string(k) + " mode " + std::to_string(s + 1));
            c.detail << "c" << k << "m" << s + 1 << "=" << g(v[s].max_eigenvalue) << " ";
        }
    }
    const auto lin = presets::linear_invariance();
    const auto v = check_uniqueness_A3(lin.modes, lin.activation.G(), 1.0, {0.02});
    c.check(v.front().holds, "scalar instance");
    c.detail << "scalar=" << g(v.front().max_eigenvalue);
}

void nonconstant_equilibrium(Criterion& c)
{
    const auto t0 = Clock::now();
    // u'' = 1785 u - 1000 on (0, 1)
    auto closed = [](double x) { return boundary_layer_value(x, 1785.0, 1000.0 / 1785.0); };
    c.check(closed(0.0) == 0.0 && closed(1.0) == 0.0, "boundary values");
    c.check(std::abs(closed(0.5) - 0.560224) <= 1e-6, "midpoint value");
    c.check(std::abs(closed(0.3) - 1000.0 * oracle::shifted_poisson_unit_rhs(1785.0, 0.3)) <= 1e-12, "closed form vs oracle");

    const auto net = presets::nonconstant_equilibrium();
    const auto grid = make_grid(RectDomain::interval(1.0), 401);
    const double h = grid->spacing(0);
    const StationaryProblem pb(net.modes.front(), net.activation, grid);
    const auto fp = fixed_point_solve(pb, VectorField::zeros(grid, 1));
    const double err = sup_diff(fp.field.values.col(0), oracle_field(grid, 1785.0, 1000.0).values);
    c.check(fp.converged && err <= std::max(1e-4, 5.0 * h * h), "fixed point on 401 nodes");

    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 20.0;
    double worst = 0.0;
    for (double x0 : {-5.0, 0.0, 3.0}) {
        const auto tr = simulate_ode(net, cfg, History::constant(Mat::Constant(1, 1, x0)));
        worst = std::max(worst, std::abs(tr.final_state(0, 0) - 200.0 / 357.0));
    }
    c.check(worst <= 1e-6, "lumped limit");

    const VectorField plateau{grid, Mat::Constant(grid->size(), 1, 200.0 / 357.0)};
    const double res = residual(pb, plateau);
    c.check(res > 1.0, "constant is not stationary");
    const double elapsed = seconds_since(t0);
    c.check(elapsed < 10.0, "runtime");
    c.detail << "u(0.5)=" << g(closed(0.5)) << " fp_err=" << g(err) << " ode_err=" << g(worst)
             << " const_residual=" << g(res) << " time=" << g(elapsed) << "s";
}

void linear_invariance(Criterion& c)
{
    const auto net = presets::linear_invariance();
    const auto grid = make_grid(RectDomain::interval(1.0), 401);
    const StationaryProblem pb(net.modes.front(), net.activation, grid);
    const auto exact = oracle_field(grid, 19.8, 1.0);
    const auto fp = fixed_point_solve(pb, VectorField::zeros(grid, 1));
    const auto mn = variational_minimize(energy_for(pb), ScalarField::zeros(grid));
    const double e_fp = sup_diff(fp.field.values.col(0), exact.values);
    const double e_mn = sup_diff(mn.field.values, exact.values);
    const double e_pair = sup_diff(mn.field.values, fp.field.values.col(0));
    c.check(fp.converged && mn.converged, "solvers converge");
    c.check(e_fp <= 1e-4 && e_mn <= 1e-4 && e_pair <= 1e-4, "agreement with the analytic solution");

    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.T = 30.0;
    const auto tr = simulate_ode(net, cfg, History::constant(Mat::Constant(1, 1, 1.0)));
    const double e_ode = std::abs(tr.final_state(0, 0) - 0.1 / 1.98);
    c.check(e_ode <= 1e-8, "lumped limit");
    c.detail << "fp_err=" << g(e_fp) << " min_err=" << g(e_mn) << " fp_vs_min=" << g(e_pair) << " ode_err=" << g(e_ode);
}

void multiplicity(Criterion& c)
{
    const std::vector<GridPtr> grids{make_grid(RectDomain::interval(1.0), 101),
                                     make_grid(RectDomain::rectangle(1.0, 1.5), std::vector<int>{31, 41})};
    for (const auto& grid : grids) {
        const auto net = presets::multiplicity_example(grid);
        const StationaryProblem pb(net.modes.front(), net.activation, grid);
        const double h = grid->max_spacing();
        const double slope = net.activation.lipschitz()(0);
        const auto phi = fundamental_mode(grid);
        double worst = 0.0;
        for (int k = -10; k <= 10; ++k) {
            const double t = k / 10.0;
            worst = std::max(worst, residual(pb, VectorField{grid, Mat(t * phi.values)}));
        }
        c.check(worst <= 5.0 * h * h * slope, "t phi1 family on " + std::to_string(grid->dims()) + "D grid");

        const auto rep = find_stationary_multiplicity(
            energy_for(pb), {ScalarField{grid, 0.5 * phi.values}, ScalarField{grid, -0.5 * phi.values}, ScalarField::zeros(grid)});
        c.check(rep.count() >= 3, "three distinct solutions on " + std::to_string(grid->dims()) + "D grid");

        const auto& p = net.activation.fn(0).params(); // (D, A, mu1)
        const double expected = p[0] / p[1] * p[2];
        const auto a1 = check_A1_sampled(net.activation, uniform_box(1, -2.0, 2.0), 10000, 1);
        c.check(std::abs(a1.ratio(0) - expected) <= 0.01 * expected, "sampled slope");
        c.detail << grid->dims() << "D: residual=" << g(worst) << " solutions=" << rep.count()
                 << " slope=" << g(a1.ratio(0)) << "/" << g(expected) << " ";
    }
}

struct RandomSystem {
    SwitchedNetwork net;
    double gamma;
};

/// Single-mode tanh network on (0, 1) whose certificate holds with gamma < lambda_min(Psi).
/// cooperative draws A, B >= 0 entrywise, so the slowest mode is real and ln V is
/// asymptotically linear; otherwise couplings of both signs allow oscillating envelopes.
RandomSystem random_certified_system(std::mt19937_64& rng, bool cooperative)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        const Eigen::Index n = U(rng) < 0.5 ? 1 : 2;
        Vec D(n), C(n);
        Mat A(n, n), B(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            D(i) = 0.01 + 0.2 * U(rng);
            C(i) = 0.5 + 2.0 * U(rng);
            for (Eigen::Index j = 0; j < n; ++j) {
                A(i, j) = cooperative ? 0.4 * U(rng) : 0.8 * (U(rng) - 0.5);
                B(i, j) = cooperative ? 0.4 * U(rng) : 0.8 * (U(rng) - 0.5);
            }
        }
        const Mode m(D, C, A, B, Vec::Zero(n), RectDomain::interval(1.0));
        SwitchedNetwork net;
        net.modes = {m};
        net.activation = Activation::uniform(ScalarFunction::hyperbolic_tangent(), n, 1.0);
        net.delay = DelaySpec::constant(0.2 + 0.8 * U(rng));
        const double psi = 0.1 + 0.4 * U(rng);
        net.Psi = psi * Mat::Identity(n, n);
        net.q = 1.00001;
        net.gamma = psi * (0.5 + 0.45 * U(rng));
        const auto cert = verify_certificate(net, Vec::Ones(1), net.gamma, net.q);
        if (cert.feasible && cert.theorem_constraint_ok) return {net, net.gamma};
    }
}

struct SuiteResult {
    int rate_ok = 0, fit_ok = 0, systems = 0;
    double worst_ratio = std::numeric_limits<double>::infinity(), worst_r2 = 1.0;
};

SuiteResult random_suite(std::mt19937_64& rng, bool cooperative, int systems)
{
    const auto grid = make_grid(RectDomain::interval(1.0), 31);
    SuiteResult r;
    r.systems = systems;
    for (int k = 0; k < systems; ++k) {
        const auto sys = random_certified_system(rng, cooperative);
        SimConfig cfg;
        cfg.dt = std::min(0.01, sys.net.tau());
        cfg.T = 8.0;
        Mat phi(grid->size(), sys.net.size());
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (Eigen::Index j = 0; j < phi.cols(); ++j) {
            const double amp = U(rng);
            for (Eigen::Index p = 0; p < grid->size(); ++p) phi(p, j) = amp * std::sin(pi * grid->coord(p)[0]) + 0.2 * U(rng);
        }
        const auto tr = simulate(sys.net, grid, cfg, History::constant(phi));
        const auto est = estimate_decay_rate(tr);
        r.rate_ok += tr.status == SimStatus::ok && est.rate >= 0.9 * sys.gamma / 2.0;
        r.fit_ok += est.r_squared >= 0.99;
        r.worst_ratio = std::min(r.worst_ratio, est.rate / (sys.gamma / 2.0));
        r.worst_r2 = std::min(r.worst_r2, est.r_squared);
    }
    return r;
}

void decay_soundness(Criterion& c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto coop = random_suite(rng, true, 24);
    c.check(coop.rate_ok == coop.systems && coop.fit_ok == coop.systems, "cooperative randomized systems");
    const auto mixed = random_suite(rng, false, 24);
    c.check(mixed.rate_ok == mixed.systems, "mixed-sign randomized systems meet the rate bound");

    const auto g2 = make_grid(RectDomain::rectangle(1.0, 1.0), 21);
    SimConfig zc;
    zc.dt = 0.035;
    zc.T = 7.0;
    bool zero_ok = true;
    for (int k = 1; k <= 3; ++k) {
        const auto tr = simulate(presets::switched_example(k), g2, zc, History::constant(Mat::Zero(g2->size(), 2)));
        for (double v : tr.V) zero_ok = zero_ok && v == 0.0;
    }
    c.check(zero_ok, "zero data stays zero");

    const auto t0 = Clock::now();
    const auto big = make_grid(RectDomain::rectangle(1.0, 1.0), 101);
    SimConfig cfg;
    cfg.dt = 0.035;
    cfg.T = 21.0;
    const auto tr = simulate(presets::switched_example(1), big, cfg,
                             History::constant(presets::switched_initial_field(big).values));
    const auto est = estimate_decay_rate(tr);
    const double elapsed = seconds_since(t0);
    c.check(est.rate >= 0.19, "published case decay");
    c.check(elapsed < 60.0, "published case runtime");
    c.detail << "cooperative rate " << coop.rate_ok << "/" << coop.systems << " fit " << coop.fit_ok << "/"
             << coop.systems << " min(eta/(gamma/2))=" << g(coop.worst_ratio) << " min_R2=" << g(coop.worst_r2)
             << "; mixed-sign rate " << mixed.rate_ok << "/" << mixed.systems << " min(eta/(gamma/2))="
             << g(mixed.worst_ratio) << " fit " << mixed.fit_ok << "/" << mixed.systems << " (oscillating envelopes)"
             << "; zero=" << zero_ok << " case1_eta=" << g(est.rate)
             << " R2=" << g(est.r_squared) << " switches=" << tr.switch_count << " time=" << g(elapsed) << "s";
}

void delay_rate(Criterion& c)
{
    const double a = 0.002 * pi * pi + 3.575, b = 0.005, tau = 1.0;
    const double l = solve_delay_rate(a, b, tau);
    const double res = std::abs(l - a + b * std::exp(l * tau));
    const double ref = static_cast<double>(oracle::bisection_delay_root(a, b, tau));
    c.check(res <= 1e-12, "residual");
    c.check(std::abs(l - ref) <= 1e-10, "bisection oracle");
    c.check(solve_delay_rate(2.5, 0.0, 3.0) == 2.5, "b = 0");
    c.check(std::abs(solve_delay_rate(2.5, 0.7, 0.0) - 1.8) <= 1e-15, "tau = 0");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double aa = 0.1 + 5.0 * U(rng), bb = aa * 0.99 * U(rng), tt = 3.0 * U(rng);
        const double lk = solve_delay_rate(aa, bb, tt);
        worst = std::max(worst, std::abs(lk - aa + bb * std::exp(lk * tt)));
    }
    c.check(worst <= 1e-12, "random residuals");
    c.detail << "lambda=" << std::to_string(l) << " oracle_diff=" << g(std::abs(l - ref)) << " residual=" << g(res)
             << " random_worst_residual=" << g(worst);
}

void numerics(Criterion& c)
{
    auto error = [](int n) {
        const auto grid = make_grid(RectDomain::interval(1.0), n);
        const auto u = helmholtz_solve(grid, 1.0, {grid, Vec::Ones(grid->size())});
        return sup_diff(u.values, oracle_field(grid, 1.0, 1.0).values);
    };
    const double ratio = error(31) / error(63);
    c.check(std::abs(ratio - 4.0) <= 0.8, "refinement ratio");

    const auto grid = make_grid(RectDomain::rectangle(1.0, 1.0), 15);
    const auto e = cube_root_energy(grid, 1.0, 1.0, 1.0, 1.0 + grid->discrete_first_eigenvalue());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec u(grid->size()), v(grid->size());
    for (Eigen::Index p = 0; p < grid->size(); ++p) {
        u(p) = 0.5 * U(rng);
        v(p) = U(rng);
    }
    const double eps = 1e-6;
    const double fd = (energy_eval(e, {grid, u + eps * v}) - energy_eval(e, {grid, u - eps * v})) / (2.0 * eps);
    const double an = energy_gradient(e, {grid, u}).values.dot(v) * grid->cell_volume();
    const double rel = std::abs(fd - an) / std::abs(an);
    c.check(rel <= 1e-6, "energy gradient");

    const Mat L(grid->laplacian());
    const double asym = (L - L.transpose()).cwiseAbs().maxCoeff();
    c.check(asym <= 1e-12, "laplacian symmetry");
    c.detail << "ratio=" << g(ratio) << " grad_rel=" << g(rel) << " asym=" << g(asym);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::uint64_t seed = 20240501;
    app.add_option("--seed", seed, "Seed for the randomized decay suite");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> all{
        {"eigenvalue regression", eigenvalues},
        {"certificate reproduction", certificates},
        {"uniqueness condition", uniqueness},
        {"nonconstant equilibrium closed form", nonconstant_equilibrium},
        {"linear invariance example", linear_invariance},
        {"multiplicity", multiplicity},
        {"decay soundness", [seed](Criterion& c) { decay_soundness(c, seed); }},
        {"delay rate solver", delay_rate},
        {"numerics hygiene", numerics},
    };
    int failed = 0;
    for (std::size_t k = 0; k < all.size(); ++k) {
        Criterion c;
        c.id = static_cast<int>(k + 1);
        c.title = all[k].first;
        try {
            all[k].second(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %d %s: %s%s\n", c.ok ? "PASS" : "FAIL", c.id, c.title.c_str(), c.detail.str().c_str(),
                    c.ok ? "" : (" [failed: " + c.first_failure + "]").c_str());
        failed += !c.ok;
    }
    return failed == 0 ? 0 : 1;
}
