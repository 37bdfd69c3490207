#pragma once

// Time integration of switched delayed reaction-diffusion networks (IMEX:
// backward-Euler diffusion, forward reaction and delay), the lumped ODE
// variants, state-dependent switching, impulses and decay-rate fitting.

#include "rdnet/certificates.hpp"
#include "rdnet/geometry.hpp"
#include "rdnet/linalg.hpp"
#include "rdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdnet {

/// State history: the initial sampler phi(s) for s <= 0 followed by stored
/// snapshots (time, nodes x n matrix) with strictly increasing times.
class History {
public:
    using Sampler = std::function<Mat(double)>;

    History() = default;
    explicit History(Sampler initial) : initial_(std::move(initial)) {}

    /// phi(s, x) independent of s.
    static History constant(Mat phi)
    {
        return History([phi = std::move(phi)](double) { return phi; });
    }

    Mat initial(double s) const
    {
        require(static_cast<bool>(initial_), "History: no initial sampler");
        return initial_(s);
    }

    void push(double t, Mat state)
    {
        require(times_.empty() || t > times_.back(), "History: times must increase");
        times_.push_back(t);
        states_.push_back(std::move(state));
    }

    /// Drops snapshots no longer needed for lookups at times >= t_min, keeping
    /// one entry at or before t_min.
    void trim(double t_min)
    {
        while (times_.size() >= 2 && times_[1] <= t_min) {
            times_.pop_front();
            states_.pop_front();
        }
    }

    bool empty() const { return times_.empty(); }
    double front_time() const { return times_.front(); }
    double back_time() const { return times_.back(); }
    std::size_t size() const { return times_.size(); }

    /// State at time t by linear interpolation; t < first stored time uses the sampler.
    Mat at(double t) const
    {
        if (times_.empty() || t < times_.front()) {
            require(t <= 0.0 || times_.empty(), "History: underrun at t = " + std::to_string(t));
            return initial(std::min(t, 0.0));
        }
        require(t <= times_.back() + 1e-12 * std::max(1.0, std::abs(t)), "History: lookup past the newest snapshot");
        if (t >= times_.back()) return states_.back();
        const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
        if (w == 0.0) return states_[lo];
        return (1.0 - w) * states_[lo] + w * states_[hi];
    }

private:
    Sampler initial_;
    std::deque<double> times_;
    std::deque<Mat> states_;
};

/// u_i(t+) = m_i u_i(t-) + sum_j n_ij h_j(u_j(t- - tau)).
struct ImpulseSchedule {
    std::vector<double> times;
    Vec M;
    Mat N;
    std::vector<ScalarFunction> h;

    bool empty() const { return times.empty(); }
};

/// Pointwise impulse update of a nodes x n state given the delayed state.
inline Mat apply_impulse(const Mat& u, const ImpulseSchedule& imp, const Mat& delayed)
{
    const Eigen::Index n = u.cols();
    require(imp.M.size() == n && imp.N.rows() == n && imp.N.cols() == n, "apply_impulse: dimension mismatch");
    require(delayed.rows() == u.rows() && delayed.cols() == n, "apply_impulse: delayed state shape mismatch");
    Mat hd(delayed.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const ScalarFunction& hj = imp.h.empty() ? ScalarFunction::identity() : imp.h.at(static_cast<std::size_t>(j));
        for (Eigen::Index p = 0; p < delayed.rows(); ++p) hd(p, j) = hj(delayed(p, j));
    }
    Mat out = u * imp.M.asDiagonal();
    if (imp.N.cwiseAbs().maxCoeff() > 0.0) out += hd * imp.N.transpose();
    return out;
}

/// Impulse at t_k using the history for the delayed argument.
inline Mat apply_impulse(const Mat& u, const ImpulseSchedule& imp, const History& history, double t_k, double tau)
{
    return apply_impulse(u, imp, history.at(t_k - tau));
}

enum class SwitchingForm { integrated, pointwise };
enum class StateForm { deviation, absolute };

struct SimConfig {
    double dt = 1e-3;
    double T = 10.0;
    bool switching = true;
    int switch_every = 1;                // evaluation cadence in steps
    double hysteresis = 0.0;             // keep the current mode while its form is < -hysteresis
    SwitchingForm switching_form = SwitchingForm::integrated;
    std::optional<double> gamma, q;      // Razumikhin constants for the mode forms (network values if unset)
    std::size_t initial_mode = 0;
    StateForm form = StateForm::deviation;
    std::vector<Mat> stationary;         // empty: zero; one: shared; one per mode: re-expressed on switches
    ImpulseSchedule impulses;
    int record_every = 1;
    std::vector<double> snapshot_times;
    double blowup_factor = 1e6;
    std::optional<double> stop_below;    // stop once V <= this value

    void validate(double tau_max) const
    {
        require(dt > 0.0 && std::isfinite(dt), "SimConfig: dt must be positive");
        require(T > 0.0 && std::isfinite(T), "SimConfig: T must be positive");
        require(tau_max == 0.0 || dt <= tau_max * (1.0 + 1e-12), "SimConfig: dt must not exceed tau");
        require(switch_every >= 1 && record_every >= 1, "SimConfig: cadences must be >= 1");
        require(hysteresis >= 0.0, "SimConfig: hysteresis must be >= 0");
        require(blowup_factor > 0.0, "SimConfig: blow-up factor must be positive");
    }
};

struct Snapshot {
    double t = 0.0;
    Mat state;
};

enum class SimStatus { ok, blowup };

struct Trajectory {
    std::vector<double> t;
    std::vector<double> V;            // squared L2 norm
    std::vector<std::size_t> mode;    // 0-based active mode
    std::vector<std::size_t> switches; // cumulative switch count
    std::vector<Snapshot> snapshots;
    Mat final_state;
    std::size_t switch_count = 0;
    SimStatus status = SimStatus::ok;
    std::string message;
    std::vector<std::string> warnings;
    double volume = 1.0; // quadrature weight used for V
};

/// Integrated form s_sigma = int u^T Q_sigma u dx from the Gram matrix, or the
/// pointwise form max_x u(x)^T Q_sigma u(x).
inline std::vector<double> switching_forms(const Mat& u, const std::vector<Mat>& Q, double volume, SwitchingForm form)
{
    std::vector<double> s;
    if (form == SwitchingForm::integrated) {
        const Mat gram = volume * (u.transpose() * u);
        for (const auto& q : Q) s.push_back((gram.array() * q.array()).sum());
    } else {
        for (const auto& q : Q) s.push_back(((u * q).array() * u.array()).rowwise().sum().maxCoeff());
    }
    return s;
}

/// Minimum switching law: keep `current` while its form is < -hysteresis,
/// otherwise take the argmin, preferring `current` and then the lowest index on ties.
inline std::size_t switching_decide(const Mat& u, const std::vector<Mat>& Q, std::size_t current, double hysteresis,
                                    double volume = 1.0, SwitchingForm form = SwitchingForm::integrated)
{
    require(!Q.empty() && current < Q.size(), "switching_decide: bad mode index");
    if (Q.size() == 1) return 0;
    const auto s = switching_forms(u, Q, volume, form);
    if (s[current] < -hysteresis) return current;
    const double least = *std::min_element(s.begin(), s.end());
    if (s[current] == least) return current;
    return static_cast<std::size_t>(std::find(s.begin(), s.end(), least) - s.begin());
}

namespace detail {

/// Right-hand side of one mode without diffusion: (mode, u, u(t - tau)) -> du/dt.
using ReactionFn = std::function<Mat(std::size_t, const Mat&, const Mat&)>;

struct Engine {
    GridPtr grid;                        // null for lumped systems
    std::vector<Vec> diffusion;          // per mode, zero entries mean none
    ReactionFn reaction;
    std::vector<Mat> Q;                  // empty disables switching
    std::vector<Mat> shift;              // per-mode stationary offset (deviation form)
    DelaySpec delay;
    double jacobian_bound = 0.0;
};

inline double squared_norm(const Mat& u, double volume) { return volume * u.squaredNorm(); }

inline Trajectory integrate(const Engine& eng, const SimConfig& cfg, const History& initial)
{
    cfg.validate(eng.delay.tau_max);
    const std::size_t modes = eng.diffusion.size();
    require(cfg.initial_mode < modes, "simulate: initial mode out of range");
    const double volume = eng.grid ? eng.grid->cell_volume() : 1.0;

    Trajectory tr;
    tr.volume = volume;
    if (eng.jacobian_bound * cfg.dt >= 2.0)
        tr.warnings.push_back("dt * reaction Jacobian bound >= 2; explicit reaction step may be unstable");

    // Implicit diffusion solvers keyed by coefficient.
    std::map<double, std::unique_ptr<HelmholtzSolver>> solvers;
    auto implicit = [&](double D, const Vec& rhs) -> Vec {
        if (D == 0.0 || !eng.grid) return rhs;
        auto& s = solvers[D];
        if (!s) s = std::make_unique<HelmholtzSolver>(eng.grid, 1.0 / (cfg.dt * D));
        return s->solve(rhs / (cfg.dt * D));
    };
    auto offset = [&](std::size_t m) -> const Mat* {
        if (eng.shift.empty()) return nullptr;
        return &eng.shift[eng.shift.size() == 1 ? 0 : m];
    };

    std::size_t mode = cfg.initial_mode;
    // History stores u + offset(mode at record time) so re-expression is exact.
    const Mat* off0 = offset(mode);
    History hist([&initial, off0](double s) {
        Mat v = initial.initial(s);
        if (off0) v += *off0;
        return v;
    });
    Mat u = initial.initial(0.0);
    const Eigen::Index rows = u.rows();
    require(u.cols() == static_cast<Eigen::Index>(eng.diffusion[0].size()), "simulate: initial state has wrong width");
    if (eng.grid) require(rows == eng.grid->size(), "simulate: initial state does not match the grid");

    double phi_norm = 0.0;
    for (double s : {0.0, -0.5 * eng.delay.tau_max, -eng.delay.tau_max})
        phi_norm = std::max(phi_norm, std::sqrt(squared_norm(initial.initial(s), volume)));
    const double blowup = cfg.blowup_factor * std::max(phi_norm, 1.0);

    auto absolute = [&](const Mat& x) {
        Mat v = x;
        if (const Mat* o = offset(mode)) v += *o;
        return v;
    };
    hist.push(0.0, absolute(u));

    std::vector<double> snaps = cfg.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto record = [&](double t) {
        tr.t.push_back(t);
        tr.V.push_back(squared_norm(u, volume));
        tr.mode.push_back(mode);
        tr.switches.push_back(tr.switch_count);
    };
    auto take_snapshots = [&](double t) {
        while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * cfg.dt) {
            tr.snapshots.push_back({t, u});
            ++next_snap;
        }
    };

    std::vector<double> impulses = cfg.impulses.times;
    std::sort(impulses.begin(), impulses.end());
    std::size_t next_imp = 0;
    while (next_imp < impulses.size() && impulses[next_imp] <= 0.0) ++next_imp;

    auto do_switch = [&](std::size_t target) {
        if (target == mode) return;
        if (const Mat* o_old = offset(mode)) {
            const Mat* o_new = offset(target);
            u += *o_old - *o_new;
        }
        mode = target;
        ++tr.switch_count;
    };

    if (cfg.switching && !eng.Q.empty()) do_switch(switching_decide(u, eng.Q, mode, cfg.hysteresis, volume, cfg.switching_form));
    record(0.0);
    take_snapshots(0.0);

    const auto steps = static_cast<long long>(std::llround(cfg.T / cfg.dt));
    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        if (cfg.switching && !eng.Q.empty() && k % cfg.switch_every == 0)
            do_switch(switching_decide(u, eng.Q, mode, cfg.hysteresis, volume, cfg.switching_form));

        const double tau_t = eng.delay(t);
        Mat delayed = hist.at(t - tau_t);
        if (const Mat* o = offset(mode)) delayed -= *o;
        const Mat F = eng.reaction(mode, u, delayed);
        Mat next = u + cfg.dt * F;
        for (Eigen::Index i = 0; i < next.cols(); ++i) next.col(i) = implicit(eng.diffusion[mode](i), next.col(i));
        u = std::move(next);
        const double t1 = static_cast<double>(k + 1) * cfg.dt;

        while (next_imp < impulses.size() && impulses[next_imp] <= t1 + 1e-12 * std::max(1.0, t1)) {
            const double tk = impulses[next_imp++];
            const double tau_k = eng.delay(tk);
            Mat d = tk - tau_k <= t ? hist.at(tk - tau_k) : absolute(u);
            if (const Mat* o = offset(mode)) d -= *o;
            u = apply_impulse(u, cfg.impulses, d);
        }

        hist.push(t1, absolute(u));
        hist.trim(t1 - eng.delay.tau_max - 2.0 * cfg.dt);

        const double V = squared_norm(u, volume);
        if (!u.allFinite() || std::sqrt(V) > blowup) {
            record(t1);
            tr.status = SimStatus::blowup;
            tr.message = "blow-up at t = " + std::to_string(t1) + ": norm " + std::to_string(std::sqrt(V))
                         + " exceeds " + std::to_string(blowup);
            break;
        }
        if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record(t1);
        take_snapshots(t1);
        if (cfg.stop_below && V <= *cfg.stop_below) {
            if (tr.t.back() != t1) record(t1);
            break;
        }
    }
    tr.final_state = u;
    return tr;
}

inline double reaction_bound(const std::vector<Mode>& modes, const Vec& G)
{
    double b = 0.0;
    const Mat Gm = G.asDiagonal();
    for (const auto& m : modes)
        b = std::max(b, m.C.maxCoeff() + spectral_norm(m.A * Gm) + spectral_norm(m.B * Gm));
    return b;
}

/// Node-wise g applied column by column, minus g(offset) when given.
inline Mat activate(const Activation& act, const Mat& Y)
{
    Mat out(Y.rows(), Y.cols());
    for (Eigen::Index j = 0; j < Y.cols(); ++j)
        for (Eigen::Index p = 0; p < Y.rows(); ++p) out(p, j) = act(j, Y(p, j));
    return out;
}

inline Engine network_engine(const SwitchedNetwork& net, const GridPtr& grid, const SimConfig& cfg, bool lumped)
{
    net.validate();
    Engine eng;
    eng.grid = lumped ? nullptr : grid;
    eng.delay = net.delay;
    const Eigen::Index n = net.size();
    const bool deviation = cfg.form == StateForm::deviation;
    for (const auto& m : net.modes) eng.diffusion.push_back(lumped ? Vec::Zero(n) : m.D);
    eng.jacobian_bound = reaction_bound(net.modes, net.activation.lipschitz());

    const Eigen::Index rows = lumped ? 1 : grid->size();
    if (deviation) {
        require(cfg.stationary.empty() || cfg.stationary.size() == 1 || cfg.stationary.size() == net.modes.size(),
                "simulate: need zero, one or one-per-mode stationary fields");
        for (const auto& s : cfg.stationary)
            require(s.rows() == rows && s.cols() == n, "simulate: stationary field has wrong shape");
        eng.shift = cfg.stationary;
    }

    // Precompute g(offset) per offset.
    std::vector<Mat> g_shift;
    for (const auto& s : eng.shift) g_shift.push_back(activate(net.activation, s));
    if (deviation && eng.shift.empty()) g_shift.push_back(activate(net.activation, Mat::Zero(rows, n)));

    eng.reaction = [&net, deviation, shift = eng.shift, g_shift](std::size_t m, const Mat& u, const Mat& ud) -> Mat {
        const Mode& mode = net.modes[m];
        Mat fu, fd;
        if (deviation) {
            const std::size_t k = g_shift.size() == 1 ? 0 : m;
            const Mat* off = shift.empty() ? nullptr : &shift[k];
            fu = activate(net.activation, off ? Mat(u + *off) : u) - g_shift[k];
            fd = activate(net.activation, off ? Mat(ud + *off) : ud) - g_shift[k];
        } else {
            fu = activate(net.activation, u);
            fd = activate(net.activation, ud);
        }
        Mat F = -(u * mode.C.asDiagonal()) + fu * mode.A.transpose() + fd * mode.B.transpose();
        if (!deviation) F.rowwise() += mode.J.transpose();
        return F;
    };

    if (cfg.switching && net.modes.size() > 1) {
        const double gamma = cfg.gamma.value_or(net.gamma);
        const double q = cfg.q.value_or(net.q);
        const Mat G = net.activation.G();
        for (const auto& m : net.modes) {
            const double lam = lumped ? 0.0 : first_eigenvalue(grid->domain());
            eng.Q.push_back(mode_margin_matrix(m, G, gamma, q, net.tau(), net.Psi, lam));
        }
    }
    return eng;
}

} // namespace detail

/// PDE simulation on the shared grid. In deviation form the state is u = y - y*,
/// f(u) = g(u + y*) - g(y*) and J drops out; the history holds u.
inline Trajectory simulate(const SwitchedNetwork& net, const GridPtr& grid, const SimConfig& cfg, const History& history)
{
    require(grid != nullptr, "simulate: missing grid");
    const auto eng = detail::network_engine(net, grid, cfg, false);
    return detail::integrate(eng, cfg, history);
}

/// Spatially lumped network (diffusion removed, one row of state) in absolute
/// coordinates, so trajectories approach the network equilibrium.
inline Trajectory simulate_ode(const SwitchedNetwork& net, const SimConfig& cfg, const History& history)
{
    SimConfig c = cfg;
    c.form = StateForm::absolute;
    const auto eng = detail::network_engine(net, nullptr, c, true);
    return detail::integrate(eng, c, history);
}

/// Lumped Cohen-Grossberg system
/// du_i/dt = -a_i(u_i)[b_i(u_i) - sum c_ij f_j(u_j) - sum d_ij g_j(u_j(t - tau)) + I_i]
/// with the impulses of the configuration.
inline Trajectory simulate_ode(const CGSystem& cg, const SimConfig& cfg, const History& history)
{
    cg.validate();
    detail::Engine eng;
    eng.delay = DelaySpec::constant(cg.tau);
    eng.diffusion = {Vec::Zero(cg.size())};
    eng.jacobian_bound = cg.A_hi.maxCoeff()
                         * (cg.Bslope.maxCoeff() + spectral_norm(cg.C) * cg.F.maxCoeff() + spectral_norm(cg.D) * cg.G.maxCoeff());
    eng.reaction = [&cg](std::size_t, const Mat& u, const Mat& ud) -> Mat {
        const Eigen::Index n = cg.size();
        Mat F(u.rows(), n);
        for (Eigen::Index p = 0; p < u.rows(); ++p) {
            Vec fu(n), gd(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                fu(j) = cg.f[static_cast<std::size_t>(j)](u(p, j));
                gd(j) = cg.g[static_cast<std::size_t>(j)](ud(p, j));
            }
            const Vec inner = cg.C * fu + cg.D * gd;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto k = static_cast<std::size_t>(i);
                F(p, i) = -cg.a[k](u(p, i)) * (cg.b[k](u(p, i)) - inner(i) + cg.I(i));
            }
        }
        return F;
    };
    SimConfig c = cfg;
    c.switching = false;
    if (c.impulses.empty() && !cg.impulse_times.empty())
        c.impulses = ImpulseSchedule{cg.impulse_times, cg.M, cg.N, cg.h};
    return detail::integrate(eng, c, history);
}

struct DecayEstimate {
    double rate = 0.0;      // eta in ||u|| ~ M' e^{-eta t}
    double prefactor = 0.0; // M'
    double r_squared = 0.0;
    double t_start = 0.0, t_end = 0.0;
    std::size_t samples = 0;
};

/// Least-squares fit of ln sqrt(V) over the trailing `window_fraction` of the run.
inline DecayEstimate estimate_decay_rate(const Trajectory& tr, double window_fraction = 0.5)
{
    require(window_fraction > 0.0 && window_fraction <= 1.0, "estimate_decay_rate: window fraction in (0, 1]");
    require(tr.t.size() == tr.V.size() && !tr.t.empty(), "estimate_decay_rate: empty trajectory");
    const double t_end = tr.t.back();
    const double t_start = t_end - window_fraction * (t_end - tr.t.front());
    std::vector<double> ts, ys;
    bool all_zero = true, any_zero = false;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        if (tr.t[k] < t_start) continue;
        ts.push_back(tr.t[k]);
        if (tr.V[k] > 0.0) {
            all_zero = false;
            ys.push_back(0.5 * std::log(tr.V[k]));
        } else {
            any_zero = true;
        }
    }
    if (ts.size() < 10) throw std::invalid_argument("estimate_decay_rate: fewer than 10 samples in the fit window");

    DecayEstimate est;
    est.t_start = ts.front();
    est.t_end = ts.back();
    est.samples = ts.size();
    if (all_zero) {
        est.rate = std::numeric_limits<double>::infinity();
        est.r_squared = 1.0;
        return est;
    }
    if (any_zero) throw std::domain_error("estimate_decay_rate: V vanishes on part of the fit window");

    const double n = static_cast<double>(ts.size());
    double tbar = 0.0, ybar_off = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        tbar += ts[k];
        ybar_off += ys[k] - ys[0];
    }
    tbar /= n;
    const double ybar = ys[0] + ybar_off / n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double dt = ts[k] - tbar, dy = (ys[k] - ys[0]) - ybar_off / n;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    const double slope = stt > 0.0 ? sty / stt : 0.0;
    est.rate = -slope;
    est.prefactor = std::exp(ybar - slope * tbar);
    if (syy == 0.0) {
        est.r_squared = 1.0;
    } else {
        const double ss_res = std::max(0.0, syy - slope * sty);
        est.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return est;
}

} // namespace rdnet
