// rdnet: certify, solve and simulate switched delayed reaction-diffusion networks.
//
// Exit codes: 0 success / feasible, 1 infeasible / diverged / blow-up / failed
// reproduction, 2 bad input.

#include "CLI11.hpp"
#include "rdnet/certificates.hpp"
#include "rdnet/io.hpp"
#include "rdnet/reproduce.hpp"
#include "rdnet/simulator.hpp"
#include "rdnet/stationary.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>

namespace fs = std::filesystem;
using namespace rdnet;
using io::json;

namespace {

constexpr const char* kOutputEnv = "RDNET_OUTPUT_DIR";

struct Common {
    std::string out;
    std::uint64_t seed = 1;
};

fs::path output_dir(const Common& c)
{
    fs::path dir = "rdnet_out";
    if (const char* env = std::getenv(kOutputEnv); env && *env) dir = env;
    if (!c.out.empty()) dir = c.out;
    fs::create_directories(dir);
    return dir;
}

void emit(const fs::path& dir, const std::map<std::string, std::string>& files)
{
    for (const auto& [name, content] : files) io::write_file((dir / name).string(), content);
}

json manifest(const std::string& command, const io::SystemDoc& doc, const Common& c, const json& overrides)
{
    return {{"schema_version", io::kSchemaVersion},
            {"command", command},
            {"system", doc.source},
            {"seed", c.seed},
            {"overrides", overrides},
            {"resolved", io::to_json(doc)}};
}

Vec parse_beta(const std::string& s)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw io::ParseError("--beta: cannot parse '" + tok + "'");
        }
    }
    return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------------------

struct CertifyArgs {
    std::string system;
    std::string beta;
    std::optional<double> gamma, q;
    bool search = false;
    bool honor = false;
    double step = 0.0;
};

int cmd_certify(const CertifyArgs& a, const Common& c)
{
    const auto doc = io::load_system(a.system);
    json overrides = json::object();
    json result;
    bool feasible = false;
    if (a.search) {
        SearchOptions opt;
        opt.q = a.q.value_or(doc.net.q);
        opt.honor_theorem_constraint = a.honor;
        opt.beta_step = a.step > 0.0 ? a.step : (doc.net.mode_count() <= 3 ? 0.01 : 0.05);
        overrides = {{"search", true}, {"honor_theorem", a.honor}, {"q", opt.q}, {"beta_step", opt.beta_step}};
        const auto r = search_certificate(doc.net, opt);
        result = {{"lattice_points", r.lattice_points}, {"least_margin", r.least_margin}};
        if (r.best) {
            result["certificate"] = io::to_json(*r.best);
            feasible = true;
        }
    } else {
        Vec beta = a.beta.empty() ? doc.beta.value_or(Vec()) : parse_beta(a.beta);
        if (beta.size() == 0) throw io::ParseError("certify: no weights given (--beta) and none in the system");
        const double gamma = a.gamma.value_or(doc.net.gamma);
        const double q = a.q.value_or(doc.net.q);
        overrides = {{"beta", io::detail::vec_json(beta)}, {"gamma", gamma}, {"q", q}};
        const auto cert = verify_certificate(doc.net, beta, gamma, q);
        result = {{"certificate", io::to_json(cert)}};
        feasible = cert.feasible;
        if (a.honor && !cert.theorem_constraint_ok) feasible = false;
    }
    result["feasible"] = feasible;
    json report = manifest("certify", doc, c, overrides);
    report["result"] = result;
    const auto dir = output_dir(c);
    io::write_file((dir / "certificate.json").string(), report.dump(2) + "\n");
    std::cout << (feasible ? "feasible" : "infeasible");
    if (result.contains("certificate"))
        std::cout << " margin=" << io::fmt17(result["certificate"]["margin"].get<double>())
                  << " rate=" << io::fmt17(result["certificate"]["rate"].get<double>());
    std::cout << '\n';
    return feasible ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct StationaryArgs {
    std::string system;
    std::string solver = "fixed_point";
    double tol = 1e-8;
    int inits = 1;
    int mode = 1;
};

int cmd_stationary(const StationaryArgs& a, const Common& c)
{
    const auto doc = io::load_system(a.system);
    if (a.mode < 1 || a.mode > static_cast<int>(doc.net.mode_count()))
        throw io::ParseError("stationary: --mode out of range");
    const auto grid = doc.make_grid();
    const Mode mode = doc.net.modes[static_cast<std::size_t>(a.mode - 1)].on_domain(doc.domain);
    const StationaryProblem pb(mode, doc.net.activation, grid);
    const Eigen::Index n = pb.components();
    const json overrides{{"solver", a.solver}, {"tol", a.tol}, {"inits", a.inits}, {"mode", a.mode}};
    json report = manifest("stationary", doc, c, overrides);
    const auto dir = output_dir(c);

    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto random_init = [&] {
        Mat m(grid->size(), n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index p = 0; p < grid->size(); ++p) m(p, j) = U(rng);
        return m;
    };

    bool ok = true;
    if (a.solver == "fixed_point" || a.solver == "paper_T") {
        FixedPointOptions opt;
        opt.tol = a.tol;
        opt.form = a.solver == "paper_T" ? FixedPointForm::paper_T : FixedPointForm::helmholtz;
        json runs = json::array();
        std::optional<VectorField> first;
        double spread = 0.0;
        for (int k = 0; k < a.inits; ++k) {
            const VectorField init = k == 0 ? VectorField::zeros(grid, n) : VectorField{grid, random_init()};
            const auto r = fixed_point_solve(pb, init, opt);
            ok = ok && r.converged;
            runs.push_back({{"converged", r.converged}, {"iterations", r.iterations}, {"update_norm", r.update_norm},
                            {"residual", r.residual}});
            if (!first) {
                first = r.field;
                io::write_file((dir / "field.csv").string(), io::field_csv(r.field));
            } else {
                spread = std::max(spread, (r.field.values - first->values).cwiseAbs().maxCoeff());
            }
        }
        report["runs"] = runs;
        report["uniqueness_spread"] = spread;
        if (doc.name == "statement1" && first) {
            const ScalarField exact = statement1_closed_form(grid);
            report["closed_form_sup_error"] = (first->values.col(0) - exact.values).cwiseAbs().maxCoeff();
        }
    } else if (a.solver == "variational" || a.solver == "multiplicity") {
        if (n != 1) throw io::ParseError("stationary: the variational solvers need a scalar system");
        MinimizeOptions opt;
        opt.tol = a.tol;
        const auto e = energy_for(pb);
        std::vector<ScalarField> inits;
        if (a.solver == "multiplicity") {
            const auto phi = fundamental_mode(grid);
            inits = {{grid, 0.5 * phi.values}, {grid, -0.5 * phi.values}, ScalarField::zeros(grid)};
        } else {
            inits = {ScalarField::zeros(grid)};
        }
        for (int k = static_cast<int>(inits.size()); k < a.inits; ++k) inits.push_back({grid, Vec(random_init().col(0))});
        const auto rep = find_stationary_multiplicity(e, inits, opt);
        json sols = json::array();
        for (std::size_t k = 0; k < rep.count(); ++k) {
            sols.push_back({{"energy", rep.energies[k]}, {"gradient_norm", rep.residuals[k]},
                            {"sup_norm", rep.solutions[k].values.cwiseAbs().maxCoeff()}});
            io::write_file((dir / ("field" + std::to_string(k + 1) + ".csv")).string(),
                           io::field_csv(*grid, Mat(rep.solutions[k].values)));
        }
        report["solutions"] = sols;
        report["distinct"] = rep.count();
        report["nonconverged"] = rep.nonconverged;
        report["inf_energy_estimate"] = rep.inf_energy_estimate;
        ok = rep.count() > 0 && (a.solver == "multiplicity" || rep.nonconverged == 0);
    } else {
        throw io::ParseError("stationary: unknown solver '" + a.solver + "'");
    }
    report["converged"] = ok;
    io::write_file((dir / "stationary.json").string(), report.dump(2) + "\n");
    std::cout << (ok ? "converged" : "diverged") << '\n';
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string system;
    std::optional<double> T, dt, tau;
    std::string switching = "on";
    std::vector<double> snapshots;
    double window = 0.5;
};

int cmd_simulate(const SimulateArgs& a, const Common& c)
{
    auto doc = io::load_system(a.system);
    if (a.tau) doc.net.delay = DelaySpec::constant(*a.tau);
    SimConfig cfg;
    cfg.dt = a.dt.value_or(doc.dt);
    cfg.T = a.T.value_or(doc.T);
    if (a.switching == "off") {
        cfg.switching = false;
    } else if (a.switching == "pointwise") {
        cfg.switching_form = SwitchingForm::pointwise;
    } else if (a.switching != "on" && a.switching != "integrated") {
        throw io::ParseError("simulate: --switching must be on, off, integrated or pointwise");
    }
    cfg.snapshot_times = a.snapshots;
    try {
        cfg.validate(doc.net.tau());
    } catch (const std::invalid_argument& e) {
        throw io::ParseError(std::string("simulate: ") + e.what());
    }
    json overrides{{"T", cfg.T}, {"dt", cfg.dt}, {"tau", doc.net.tau()}, {"switching", a.switching},
                   {"snapshots", a.snapshots}, {"window", a.window}};
    const auto grid = doc.make_grid();
    const auto tr = simulate(doc.net, grid, cfg, History::constant(doc.initial_state(grid)));

    const auto dir = output_dir(c);
    json report = manifest("simulate", doc, c, overrides);
    report["status"] = tr.status == SimStatus::ok ? "ok" : "blowup";
    report["message"] = tr.message;
    report["warnings"] = tr.warnings;
    report["switch_count"] = tr.switch_count;
    io::write_file((dir / "trajectory.csv").string(), io::trajectory_csv(tr));
    io::write_file((dir / "decay.dat").string(), io::decay_dat(tr));
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
        io::write_file((dir / ("snapshot" + std::to_string(k + 1) + ".csv")).string(),
                       io::field_csv(*grid, tr.snapshots[k].state));
    if (tr.status == SimStatus::ok) {
        try {
            report["decay"] = io::to_json(estimate_decay_rate(tr, a.window));
        } catch (const std::exception& e) {
            report["decay_error"] = e.what();
        }
    }
    io::write_file((dir / "simulation.json").string(), report.dump(2) + "\n");
    for (const auto& w : tr.warnings) std::cerr << "warning: " << w << '\n';
    if (tr.status != SimStatus::ok) {
        std::cout << "blowup: " << tr.message << '\n';
        return 1;
    }
    std::cout << "ok";
    if (report.contains("decay")) std::cout << " rate=" << report["decay"]["rate"].dump();
    std::cout << " switches=" << tr.switch_count << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct ReproduceArgs {
    std::string target;
    int case_id = 1;
    std::vector<int> grid;
    std::optional<double> dt, T;
};

int cmd_reproduce(const ReproduceArgs& a, const Common& c)
{
    reproduce::Options opt;
    if (!a.grid.empty()) opt.grid = a.grid;
    opt.dt = a.dt;
    opt.T = a.T;
    opt.seed = c.seed;
    auto b = reproduce::run(a.target, a.case_id, opt);
    b.report["seed"] = c.seed;
    b.files["report.json"] = b.report.dump(2) + "\n";
    auto dir = output_dir(c) / b.target;
    fs::create_directories(dir);
    emit(dir, b.files);
    for (const auto& ch : b.checks)
        std::cout << (ch.pass ? "pass " : "FAIL ") << ch.stage << '/' << ch.quantity << " reference="
                  << io::fmt17(ch.reference) << " computed=" << io::fmt17(ch.computed) << '\n';
    if (const auto stage = b.failing_stage()) {
        std::cout << "failed stage: " << *stage << '\n';
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Certification, stationary solutions and simulation of switched delayed reaction-diffusion networks"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--out", common.out, std::string("Output directory (default: $") + kOutputEnv + " or rdnet_out)");
    app.add_option("--seed", common.seed, "Seed for sampled checks and random initial guesses");

    CertifyArgs ca;
    auto* certify = app.add_subcommand("certify", "Check or search the stability certificate");
    certify->add_option("system", ca.system, "System file or preset:<name>")->required();
    certify->add_option("--beta", ca.beta, "Comma-separated mode weights");
    certify->add_option("--gamma", ca.gamma, "Decay constant");
    certify->add_option("--q", ca.q, "Razumikhin constant (> 1)");
    certify->add_flag("--search", ca.search, "Search the weight simplex for the largest gamma");
    certify->add_flag("--honor-theorem", ca.honor, "Require gamma < lambda_min(Psi)");
    certify->add_option("--step", ca.step, "Simplex lattice spacing for --search");

    StationaryArgs sa;
    auto* stationary = app.add_subcommand("stationary", "Solve for stationary fields");
    stationary->add_option("system", sa.system, "System file or preset:<name>")->required();
    stationary->add_option("--solver", sa.solver, "fixed_point | paper_T | variational | multiplicity");
    stationary->add_option("--tol", sa.tol, "Convergence tolerance");
    stationary->add_option("--inits", sa.inits, "Number of initial guesses (extra ones are random)");
    stationary->add_option("--mode", sa.mode, "Mode (1-based)");

    SimulateArgs ma;
    auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the switched network and fit the decay rate");
    simulate_cmd->add_option("system", ma.system, "System file or preset:<name>")->required();
    simulate_cmd->add_option("--T", ma.T, "Final time");
    simulate_cmd->add_option("--dt", ma.dt, "Time step");
    simulate_cmd->add_option("--tau", ma.tau, "Constant delay override");
    simulate_cmd->add_option("--switching", ma.switching, "on | off | integrated | pointwise");
    simulate_cmd->add_option("--snapshots", ma.snapshots, "Snapshot times")->delimiter(',');
    simulate_cmd->add_option("--window", ma.window, "Trailing fraction of the run used for the decay fit");

    ReproduceArgs ra;
    auto* repro = app.add_subcommand("reproduce", "Run a built-in reproduction bundle");
    repro->add_option("target", ra.target, "example4_1 | statement1 | example3_5 | statement2 | tables")
        ->required()
        ->check(CLI::IsMember(reproduce::targets()));
    repro->add_option("--case", ra.case_id, "Case of example4_1")->check(CLI::Range(1, 3));
    repro->add_option("--grid", ra.grid, "Interior nodes per axis")->delimiter(',');
    repro->add_option("--dt", ra.dt, "Time step");
    repro->add_option("--T", ra.T, "Final time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*certify) return cmd_certify(ca, common);
        if (*stationary) return cmd_stationary(sa, common);
        if (*simulate_cmd) return cmd_simulate(ma, common);
        if (*repro) return cmd_reproduce(ra, common);
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
