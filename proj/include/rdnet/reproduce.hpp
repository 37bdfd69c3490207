#pragma once

// Reproduction bundles for the built-in systems: each target runs its pipeline
// and returns a comparison table (reference vs computed vs pass) plus the
// emitted files, keyed by file name.

#include "rdnet/certificates.hpp"
#include "rdnet/io.hpp"
#include "rdnet/model.hpp"
#include "rdnet/presets.hpp"
#include "rdnet/simulator.hpp"
#include "rdnet/stationary.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rdnet::reproduce {

using io::json;

enum class Relation { near, at_least, at_most, flag };

inline const char* to_string(Relation r)
{
    switch (r) {
    case Relation::near: return "near";
    case Relation::at_least: return "at_least";
    case Relation::at_most: return "at_most";
    case Relation::flag: return "flag";
    }
    return "?";
}

struct Check {
    std::string stage;
    std::string quantity;
    double reference = 0.0;
    double computed = 0.0;
    double tolerance = 0.0;
    Relation relation = Relation::near;
    bool pass = false;
};

struct Bundle {
    std::string target;
    std::vector<Check> checks;
    json report;
    std::map<std::string, std::string> files;

    bool pass() const
    {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    std::optional<std::string> failing_stage() const
    {
        for (const auto& c : checks)
            if (!c.pass) return c.stage;
        return std::nullopt;
    }

    void near(const std::string& stage, const std::string& q, double ref, double got, double tol)
    {
        checks.push_back({stage, q, ref, got, tol, Relation::near, std::abs(got - ref) <= tol});
    }
    void at_least(const std::string& stage, const std::string& q, double bound, double got)
    {
        checks.push_back({stage, q, bound, got, 0.0, Relation::at_least, got >= bound});
    }
    void at_most(const std::string& stage, const std::string& q, double bound, double got)
    {
        checks.push_back({stage, q, bound, got, 0.0, Relation::at_most, got <= bound});
    }
    void flag(const std::string& stage, const std::string& q, bool expected, bool got)
    {
        checks.push_back({stage, q, expected ? 1.0 : 0.0, got ? 1.0 : 0.0, 0.0, Relation::flag, expected == got});
    }

    /// stage,quantity,reference,computed,tolerance,relation,pass
    std::string table_csv() const
    {
        std::string out = "stage,quantity,reference,computed,tolerance,relation,pass\n";
        for (const auto& c : checks)
            out += c.stage + ',' + c.quantity + ',' + io::fmt17(c.reference) + ',' + io::fmt17(c.computed) + ','
                   + io::fmt17(c.tolerance) + ',' + to_string(c.relation) + ',' + (c.pass ? "pass" : "FAIL") + '\n';
        return out;
    }

    json checks_json() const
    {
        json a = json::array();
        for (const auto& c : checks)
            a.push_back({{"stage", c.stage},
                         {"quantity", c.quantity},
                         {"reference", c.reference},
                         {"computed", std::isfinite(c.computed) ? json(c.computed) : json(io::fmt17(c.computed))},
                         {"tolerance", c.tolerance},
                         {"relation", to_string(c.relation)},
                         {"pass", c.pass}});
        return a;
    }

    /// Report plus table; called once the target has finished.
    void finish()
    {
        report["target"] = target;
        report["checks"] = checks_json();
        report["pass"] = pass();
        files["comparison.csv"] = table_csv();
        files["report.json"] = report.dump(2) + "\n";
    }
};

struct Options {
    std::optional<std::vector<int>> grid;
    std::optional<double> dt, T;
    std::uint64_t seed = 1;
};

inline io::SystemDoc resolve(const std::string& preset, const Options& opt)
{
    auto d = io::load_preset(preset, opt.grid);
    if (opt.dt) d.dt = *opt.dt;
    if (opt.T) d.T = *opt.T;
    return d;
}

inline const double kPublishedRate[] = {0.19, 0.22, 0.29};

/// Published certificate, first eigenvalues, uniqueness and a simulation on the
/// shared unit square.
inline Bundle example4_1(int case_id, const Options& opt = {})
{
    require(case_id >= 1 && case_id <= 3, "example4_1: case must be 1, 2 or 3");
    Bundle b;
    b.target = "example4_1.case" + std::to_string(case_id);
    const auto doc = resolve(b.target, opt);
    b.report["config"] = io::to_json(doc);

    const auto pub = presets::published_certificate(case_id);
    const auto cert = verify_certificate(doc.net, pub.beta, pub.gamma, pub.q);
    b.report["certificate"] = io::to_json(cert);
    b.at_most("certificate", "margin", -kDefiniteSlack, cert.margin);
    b.near("certificate", "rate", kPublishedRate[case_id - 1], cert.rate, 1e-12);
    b.flag("certificate", "theorem_constraint_ok", false, cert.theorem_constraint_ok);

    for (int s = 1; s <= 3; ++s)
        b.near("eigenvalues", "lambda1_mode" + std::to_string(s), presets::kSwitchedLambda[s - 1],
               doc.net.modes[static_cast<std::size_t>(s - 1)].lambda1, 1e-3);

    const auto uniq = check_uniqueness_A3(doc.net.modes, doc.net.activation.G(), 2.0, {1.0, 1.0, 1.0});
    for (std::size_t s = 0; s < uniq.size(); ++s)
        b.flag("uniqueness", "unique_mode" + std::to_string(s + 1), true, uniq[s].holds);

    const auto grid = doc.make_grid();
    const auto common = doc.net.on_common_domain(doc.domain);
    const auto common_cert = verify_certificate(common, pub.beta, pub.gamma, pub.q);
    b.flag("simulation", "common_domain_feasible", true, common_cert.feasible);
    SimConfig cfg;
    cfg.dt = doc.dt;
    cfg.T = doc.T;
    const auto tr = simulate(doc.net, grid, cfg, History::constant(doc.initial_state(grid)));
    b.flag("simulation", "no_blowup", true, tr.status == SimStatus::ok);
    const auto est = estimate_decay_rate(tr);
    b.at_least("simulation", "fitted_rate", kPublishedRate[case_id - 1], est.rate);
    b.report["decay"] = io::to_json(est);
    b.report["switch_count"] = tr.switch_count;
    b.files["trajectory.csv"] = io::trajectory_csv(tr);
    b.files["decay.dat"] = io::decay_dat(tr);
    b.files["field_final.csv"] = io::field_csv(*grid, tr.final_state);
    b.finish();
    return b;
}

/// Pointwise form of statement1_closed_form.
inline double nonconstant_profile(double x) { return boundary_layer_value(x, 1785.0, 200.0 / 357.0); }

inline Bundle statement1(const Options& opt = {})
{
    Bundle b;
    b.target = "statement1";
    const auto doc = resolve(b.target, opt);
    b.report["config"] = io::to_json(doc);
    const auto grid = doc.make_grid();
    const double h = grid->spacing(0);

    b.flag("closed_form", "u(0)=0", true, nonconstant_profile(0.0) == 0.0);
    b.flag("closed_form", "u(1)=0", true, nonconstant_profile(1.0) == 0.0);
    b.near("closed_form", "u(0.5)", 0.560224, nonconstant_profile(0.5), 1e-6);

    const StationaryProblem pb(doc.net.modes.front(), doc.net.activation, grid);
    const auto fp = fixed_point_solve(pb, VectorField::zeros(grid, 1));
    const ScalarField exact = statement1_closed_form(grid);
    const double err = (fp.field.values.col(0) - exact.values).cwiseAbs().maxCoeff();
    b.flag("fixed_point", "converged", true, fp.converged);
    b.at_most("fixed_point", "sup_error_vs_closed_form", std::max(1e-4, 5.0 * h * h), err);
    b.report["fixed_point"] = {{"iterations", fp.iterations}, {"residual", fp.residual}, {"sup_error", err}};

    const VectorField plateau{grid, Mat::Constant(grid->size(), 1, presets::kNonconstantEquilibrium)};
    b.at_least("stationarity", "constant_equilibrium_residual", 1.0, residual(pb, plateau));

    SimConfig ode;
    ode.dt = 0.01;
    ode.T = 20.0;
    const auto lumped = simulate_ode(doc.net, ode, History::constant(Mat::Zero(1, 1)));
    b.near("ode", "equilibrium", presets::kNonconstantEquilibrium, lumped.final_state(0, 0), 1e-6);

    SimConfig cfg;
    cfg.dt = doc.dt;
    cfg.T = doc.T;
    cfg.stationary = {fp.field.values};
    const auto tr = simulate(doc.net, grid, cfg, History::constant(doc.initial_state(grid)));
    const auto est = estimate_decay_rate(tr);
    const double lambda = solve_delay_rate(0.002 * std::numbers::pi * std::numbers::pi + 3.575, 0.005, 1.0);
    b.at_least("decay", "fitted_rate_vs_half_lambda", 0.5 * lambda, est.rate);
    b.report["decay"] = io::to_json(est);
    b.report["lambda"] = lambda;

    b.files["field.csv"] = io::field_csv(fp.field);
    b.files["closed_form.csv"] = io::field_csv(*grid, exact.values);
    b.files["trajectory.csv"] = io::trajectory_csv(tr);
    b.files["decay.dat"] = io::decay_dat(tr);
    b.finish();
    return b;
}

/// Analytic stationary profile of the linear-invariance network: u'' = 19.8 u - 1.
inline double linear_invariance_profile(double x) { return boundary_layer_value(x, 19.8, 1.0 / 19.8, 1.0); }

inline Bundle example3_5(const Options& opt = {})
{
    Bundle b;
    b.target = "example3_5";
    const auto doc = resolve(b.target, opt);
    b.report["config"] = io::to_json(doc);
    const auto grid = doc.make_grid();
    const double h = grid->spacing(0);
    const StationaryProblem pb(doc.net.modes.front(), doc.net.activation, grid);
    const ScalarField exact = sample(grid, [](double x, double) { return linear_invariance_profile(x); });

    const auto fp = fixed_point_solve(pb, VectorField::zeros(grid, 1));
    const auto mn = variational_minimize(energy_for(pb), ScalarField::zeros(grid));
    const double tol = std::max(1e-4, 5.0 * h * h);
    b.flag("stationary", "fixed_point_converged", true, fp.converged);
    b.flag("stationary", "minimizer_converged", true, mn.converged);
    b.at_most("stationary", "fixed_point_vs_analytic", tol, (fp.field.values.col(0) - exact.values).cwiseAbs().maxCoeff());
    b.at_most("stationary", "minimizer_vs_analytic", tol, (mn.field.values - exact.values).cwiseAbs().maxCoeff());
    b.at_most("stationary", "minimizer_vs_fixed_point", 1e-4, (mn.field.values - fp.field.values.col(0)).cwiseAbs().maxCoeff());
    const double spread = mn.field.values.maxCoeff() - mn.field.values.minCoeff();
    b.at_least("stationary", "minimizer_spread", 0.5 * presets::kLinearInvarianceEquilibrium, spread);

    const auto uniq = check_uniqueness_A3(doc.net.modes, doc.net.activation.G(), 1.0, {0.02});
    b.flag("uniqueness", "unique", true, uniq.front().holds);

    SimConfig ode;
    ode.dt = 0.01;
    ode.T = 30.0;
    const auto lumped = simulate_ode(doc.net, ode, History::constant(Mat::Constant(1, 1, 1.0)));
    b.near("ode", "equilibrium", presets::kLinearInvarianceEquilibrium, lumped.final_state(0, 0), 1e-8);

    b.report["fixed_point"] = {{"iterations", fp.iterations}, {"residual", fp.residual}};
    b.report["minimizer"] = {{"iterations", mn.iterations}, {"gradient_norm", mn.gradient_norm}, {"energy", mn.energy}};
    b.files["field.csv"] = io::field_csv(fp.field);
    b.files["minimizer.csv"] = io::field_csv(*grid, mn.field.values);
    b.files["analytic.csv"] = io::field_csv(*grid, exact.values);
    b.finish();
    return b;
}

inline Bundle statement2(const Options& opt = {})
{
    Bundle b;
    b.target = "statement2";
    const auto doc = resolve(b.target, opt);
    b.report["config"] = io::to_json(doc);
    const auto grid = doc.make_grid();
    const double h = grid->max_spacing();
    const StationaryProblem pb(doc.net.modes.front(), doc.net.activation, grid);
    const double slope = doc.net.activation.lipschitz()(0);

    const auto phi = fundamental_mode(grid);
    double worst = 0.0;
    for (double t : {-1.0, -0.5, 0.5, 1.0}) {
        const VectorField u{grid, Mat(t * phi.values)};
        worst = std::max(worst, residual(pb, u));
    }
    b.at_most("family", "max_residual_t_phi1", 5.0 * h * h * slope * 1.5, worst);

    const auto e = energy_for(pb);
    const auto rep = find_stationary_multiplicity(
        e, {ScalarField{grid, 0.5 * phi.values}, ScalarField{grid, -0.5 * phi.values}, ScalarField::zeros(grid)});
    b.at_least("multiplicity", "distinct_solutions", 3.0, static_cast<double>(rep.count()));

    const auto a1 = check_A1_sampled(doc.net.activation, uniform_box(1, -2.0, 2.0), 10000, opt.seed);
    b.near("lipschitz", "sampled_slope", slope, a1.ratio(0), 0.01 * slope);

    json sols = json::array();
    for (std::size_t k = 0; k < rep.count(); ++k) {
        sols.push_back({{"energy", rep.energies[k]}, {"gradient_norm", rep.residuals[k]},
                        {"sup_norm", rep.solutions[k].values.cwiseAbs().maxCoeff()}});
        Mat m = rep.solutions[k].values;
        b.files["solution" + std::to_string(k + 1) + ".csv"] = io::field_csv(*grid, m);
    }
    b.report["solutions"] = sols;
    b.report["nonconverged"] = rep.nonconverged;
    b.report["inf_energy_estimate"] = rep.inf_energy_estimate;
    b.finish();
    return b;
}

/// Certificate rates of the three cases and the orderings of the two tables.
inline Bundle tables(const Options& = {})
{
    Bundle b;
    b.target = "tables";
    double rate[3];
    json certs = json::array();
    for (int k = 1; k <= 3; ++k) {
        const auto pub = presets::published_certificate(k);
        const auto c = verify_certificate(presets::switched_example(k), pub.beta, pub.gamma, pub.q);
        rate[k - 1] = c.rate;
        b.flag("case" + std::to_string(k), "feasible", true, c.feasible);
        b.near("case" + std::to_string(k), "rate", kPublishedRate[k - 1], c.rate, 1e-12);
        certs.push_back(io::to_json(c));
    }
    b.flag("table1", "larger_diffusion_is_faster", true, rate[1] > rate[0]);
    b.flag("table2", "shorter_delay_is_faster", true, rate[2] > rate[0]);
    b.report["certificates"] = certs;
    b.finish();
    return b;
}

inline const std::vector<std::string>& targets()
{
    static const std::vector<std::string> t{"example4_1", "statement1", "example3_5", "statement2", "tables"};
    return t;
}

inline Bundle run(const std::string& target, int case_id, const Options& opt)
{
    if (target == "example4_1") return example4_1(case_id, opt);
    if (target == "statement1") return statement1(opt);
    if (target == "example3_5") return example3_5(opt);
    if (target == "statement2") return statement2(opt);
    if (target == "tables") return tables(opt);
    throw std::invalid_argument("unknown reproduction target '" + target + "'");
}

} // namespace rdnet::reproduce
