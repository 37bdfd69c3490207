#pragma once

// Network data model (modes, switched networks, Cohen-Grossberg systems) and
// sampled verification of the activation and boundedness assumptions.

#include "rdnet/activation.hpp"
#include "rdnet/geometry.hpp"
#include "rdnet/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rdnet {

/// One network configuration: dy/dt = D Lap y - C y + A g(y) + B g(y(t - tau)) + J.
struct Mode {
    Vec D; // diffusion, diagonal entries
    Vec C; // self-decay, diagonal entries
    Mat A;
    Mat B;
    Vec J;
    RectDomain domain;
    double lambda1 = 0.0;

    Mode() = default;

    Mode(Vec d, Vec c, Mat a, Mat b, Vec j, RectDomain dom)
        : D(std::move(d)), C(std::move(c)), A(std::move(a)), B(std::move(b)), J(std::move(j)),
          domain(std::move(dom)), lambda1(first_eigenvalue(domain))
    {
        const Eigen::Index n = D.size();
        require(n >= 1, "Mode: empty state");
        require(C.size() == n && J.size() == n && A.rows() == n && A.cols() == n && B.rows() == n && B.cols() == n,
                "Mode: inconsistent dimensions");
        require((D.array() > 0.0).all(), "Mode: diffusion entries must be positive");
        require((C.array() > 0.0).all(), "Mode: C entries must be positive");
    }

    Eigen::Index size() const { return D.size(); }
    Mat Dmat() const { return D.asDiagonal(); }
    Mat Cmat() const { return C.asDiagonal(); }

    /// Copy of this mode living on another domain (lambda1 recomputed).
    Mode on_domain(const RectDomain& dom) const { return {D, C, A, B, J, dom}; }
};

enum class DelayKind { constant, sinusoid };

/// Time-varying delay 0 <= tau(t) <= tau_max. sinusoid: mean + amp * sin(omega t).
struct DelaySpec {
    DelayKind kind = DelayKind::constant;
    double tau_max = 0.0;
    double mean = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;

    static DelaySpec constant(double tau) { return {DelayKind::constant, tau, tau, 0.0, 0.0}; }
    static DelaySpec sinusoid(double tau_max, double mean, double amp, double omega)
    {
        return {DelayKind::sinusoid, tau_max, mean, amp, omega};
    }

    double operator()(double t) const
    {
        return kind == DelayKind::constant ? mean : mean + amplitude * std::sin(omega * t);
    }

    void validate(int samples = 1000) const
    {
        require(std::isfinite(tau_max) && tau_max >= 0.0, "DelaySpec: tau_max must be >= 0");
        const double period = (kind == DelayKind::sinusoid && omega != 0.0) ? 2.0 * std::numbers::pi / std::abs(omega) : 1.0;
        for (int k = 0; k <= samples; ++k) {
            const double v = (*this)(period * k / samples);
            require(v >= 0.0 && v <= tau_max * (1.0 + 1e-12), "DelaySpec: tau(t) leaves [0, tau_max]");
        }
    }
};

struct SwitchedNetwork {
    std::vector<Mode> modes;
    Activation activation;
    DelaySpec delay;
    Mat Psi;
    double q = 1.00001;
    double gamma = 0.1;

    Eigen::Index size() const { return activation.size(); }
    std::size_t mode_count() const { return modes.size(); }
    double tau() const { return delay.tau_max; }

    void validate() const
    {
        require(!modes.empty(), "SwitchedNetwork: at least one mode");
        for (const auto& m : modes) require(m.size() == activation.size(), "SwitchedNetwork: mode/activation size mismatch");
        require(Psi.rows() == activation.size() && is_symmetric(Psi, 1e-12), "SwitchedNetwork: Psi must be symmetric n x n");
        require(min_eigenvalue(Psi) > 0.0, "SwitchedNetwork: Psi must be positive definite");
        require(q > 1.0, "SwitchedNetwork: q must exceed 1");
        require(gamma > 0.0, "SwitchedNetwork: gamma must be positive");
        delay.validate();
    }

    /// Same network with every mode moved onto `dom`.
    SwitchedNetwork on_common_domain(const RectDomain& dom) const
    {
        SwitchedNetwork out = *this;
        for (auto& m : out.modes) m = m.on_domain(dom);
        return out;
    }
};

/// Delayed impulsive Cohen-Grossberg network:
/// du_i/dt = r_i Lap u_i - a_i(u_i)[b_i(u_i) - sum c_ij f_j(u_j) - sum d_ij g_j(u_j(t - tau)) + I_i],
/// u_i(t_k+) = m_i u_i(t_k-) + sum n_ij h_j(u_j(t_k- - tau)).
struct CGSystem {
    std::vector<ScalarFunction> a, b, f, g, h;
    Vec A_lo, A_hi;   // amplification bounds
    Vec Bslope;       // lower slope bound of b_i
    Vec F, G, H;      // upper slope bounds of f, g, h
    Mat C, D;         // couplings
    Vec M;            // impulse self gains m_i
    Mat N;            // impulse delayed couplings n_ij
    std::vector<double> impulse_times;
    Vec R;            // diffusion
    Vec I;            // inputs
    Vec P;            // positive diagonal weight
    double tau = 0.0;

    Eigen::Index size() const { return A_lo.size(); }

    void validate() const
    {
        const Eigen::Index n = size();
        require(n >= 1, "CGSystem: empty state");
        for (const auto* v : {&A_hi, &Bslope, &F, &G, &H, &M, &R, &I, &P})
            require(v->size() == n, "CGSystem: inconsistent vector sizes");
        for (const auto* m : {&C, &D, &N}) require(m->rows() == n && m->cols() == n, "CGSystem: inconsistent matrix sizes");
        for (const auto* fs : {&a, &b, &f, &g, &h})
            require(static_cast<Eigen::Index>(fs->size()) == n, "CGSystem: one function per neuron");
        require((A_lo.array() > 0.0).all() && (A_lo.array() <= A_hi.array()).all(), "CGSystem: need 0 < A_lo <= A_hi");
        for (const auto* v : {&Bslope, &P}) require((v->array() > 0.0).all(), "CGSystem: B and P must be positive");
        for (const auto* v : {&F, &G, &H}) require((v->array() >= 0.0).all(), "CGSystem: F, G, H must be nonnegative");
        require(tau >= 0.0, "CGSystem: tau must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Sampled assumption checks

struct Interval {
    double lo = -100.0;
    double hi = 100.0;
};

using Box = std::vector<Interval>;

inline Box uniform_box(Eigen::Index n, double lo, double hi) { return Box(static_cast<std::size_t>(n), {lo, hi}); }

inline bool contains(const Box& box, const Vec& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (v(i) < box[static_cast<std::size_t>(i)].lo || v(i) > box[static_cast<std::size_t>(i)].hi) return false;
    return true;
}

struct SlopeWitness {
    Eigen::Index neuron = 0;
    double s = 0.0;
    double t = 0.0;
};

struct A1Verdict {
    bool holds = true;
    double worst_ratio = 0.0;      // max over neurons of the observed slope
    Vec ratio;                     // per-neuron max observed slope
    std::optional<SlopeWitness> witness; // first (neuron, pair) exceeding G_i
};

namespace detail {

inline std::vector<double> sample_points(const Interval& iv, int samples)
{
    std::vector<double> xs(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k)
        xs[static_cast<std::size_t>(k)] = iv.lo + (iv.hi - iv.lo) * k / (samples - 1);
    return xs;
}

inline double checked(double v)
{
    if (!std::isfinite(v)) throw std::domain_error("non-finite function evaluation");
    return v;
}

/// Largest |f(s)-f(t)|/|s-t| over consecutive grid points and random pairs;
/// `lower` receives the smallest signed slope.
template <class Fn>
double sampled_slopes(const Fn& fn, const Interval& iv, int samples, std::mt19937_64& rng, double& lower,
                      double& arg_s, double& arg_t)
{
    double worst = 0.0;
    lower = std::numeric_limits<double>::infinity();
    auto visit = [&](double s, double t) {
        if (s == t) return;
        const double slope = (checked(fn(s)) - checked(fn(t))) / (s - t);
        lower = std::min(lower, slope);
        if (std::abs(slope) > worst) {
            worst = std::abs(slope);
            arg_s = s;
            arg_t = t;
        }
    };
    const auto xs = sample_points(iv, samples);
    for (std::size_t k = 1; k < xs.size(); ++k) visit(xs[k - 1], xs[k]);
    std::uniform_real_distribution<double> U(iv.lo, iv.hi);
    for (int k = 0; k < samples; ++k) visit(U(rng), U(rng));
    return worst;
}

} // namespace detail

/// Checks |g_i(s) - g_i(t)| <= G_i |s - t| on sampled pairs of the box. Affine
/// registry entries are decided exactly. Retained witnesses inside the box are
/// always re-tested, so a failure on X persists on every superset of X.
inline A1Verdict check_A1_sampled(const Activation& act, const Box& box, int samples, std::uint64_t seed = 1,
                                  std::span<const SlopeWitness> retained = {})
{
    require(samples >= 2, "check_A1_sampled: need at least 2 samples");
    require(static_cast<Eigen::Index>(box.size()) == act.size(), "check_A1_sampled: one interval per neuron");
    for (const auto& iv : box) require(iv.lo < iv.hi, "check_A1_sampled: empty interval");

    std::mt19937_64 rng(seed);
    A1Verdict out;
    out.ratio = Vec::Zero(act.size());
    for (Eigen::Index i = 0; i < act.size(); ++i) {
        const auto& fn = act.fn(i);
        const double Gi = act.lipschitz()(i);
        const auto& iv = box[static_cast<std::size_t>(i)];
        double lower = 0.0, s = iv.lo, t = iv.hi;
        double worst;
        if (fn.kind() == FnKind::affine) {
            worst = std::abs(fn.params()[0]);
        } else {
            worst = detail::sampled_slopes(fn, iv, samples, rng, lower, s, t);
        }
        for (const auto& w : retained) {
            if (w.neuron != i || w.s == w.t) continue;
            if (w.s < iv.lo || w.s > iv.hi || w.t < iv.lo || w.t > iv.hi) continue;
            const double slope = std::abs((detail::checked(fn(w.s)) - detail::checked(fn(w.t))) / (w.s - w.t));
            if (slope > worst) {
                worst = slope;
                s = w.s;
                t = w.t;
            }
        }
        out.ratio(i) = worst;
        if (worst > Gi * (1.0 + 1e-12)) {
            out.holds = false;
            if (!out.witness) out.witness = SlopeWitness{i, s, t};
        }
    }
    out.worst_ratio = out.ratio.maxCoeff();
    return out;
}

struct A2Verdict {
    bool holds = true;
    double worst_upper_ratio = 0.0; // max_i w_i / (c D_i) (or |w_i| / (c D_i))
    double min_value = 0.0;         // smallest w_i seen (signed check lower side)
    std::optional<Vec> violation;   // first violating sample
    std::size_t samples_checked = 0;
};

/// Samples of an n-box: corners (n <= 10), centre, then a Latin hypercube.
inline std::vector<Vec> box_samples(const Box& box, int samples, std::uint64_t seed)
{
    const auto n = static_cast<Eigen::Index>(box.size());
    std::vector<Vec> out;
    if (n == 1) {
        for (double x : detail::sample_points(box[0], std::max(samples, 2))) out.push_back(Vec::Constant(1, x));
        return out;
    }
    if (n <= 10) {
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            Vec v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v(i) = (mask >> i & 1u) ? box[static_cast<std::size_t>(i)].hi : box[static_cast<std::size_t>(i)].lo;
            out.push_back(v);
        }
    }
    Vec centre(n);
    for (Eigen::Index i = 0; i < n; ++i)
        centre(i) = 0.5 * (box[static_cast<std::size_t>(i)].lo + box[static_cast<std::size_t>(i)].hi);
    out.push_back(centre);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::vector<int>> perms(static_cast<std::size_t>(n));
    for (auto& p : perms) {
        p.resize(static_cast<std::size_t>(samples));
        for (int k = 0; k < samples; ++k) p[static_cast<std::size_t>(k)] = k;
        std::shuffle(p.begin(), p.end(), rng);
    }
    for (int k = 0; k < samples; ++k) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& iv = box[static_cast<std::size_t>(i)];
            const double cell = (perms[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] + U(rng)) / samples;
            v(i) = iv.lo + (iv.hi - iv.lo) * cell;
        }
        out.push_back(v);
    }
    return out;
}

/// Boundedness check on a box. signed_check: 0 <= w <= c D 1, otherwise |w| <= c D 1,
/// with w = -C v + (A + B) g(v) + J.
inline A2Verdict check_A2_on_box(const Mode& mode, const Activation& act, double c, const Box& box, int samples,
                                 bool signed_check, std::uint64_t seed = 1, std::span<const Vec> retained = {})
{
    require(c > 0.0, "check_A2_on_box: c must be positive");
    require(static_cast<Eigen::Index>(box.size()) == mode.size(), "check_A2_on_box: one interval per neuron");
    const Mat AB = mode.A + mode.B;
    const Vec cap = c * mode.D;

    auto pts = box_samples(box, samples, seed);
    for (const auto& r : retained)
        if (r.size() == mode.size() && contains(box, r)) pts.push_back(r);

    A2Verdict out;
    out.min_value = std::numeric_limits<double>::infinity();
    for (const auto& v : pts) {
        const Vec w = -mode.C.cwiseProduct(v) + AB * act(v) + mode.J;
        require(w.allFinite(), "check_A2_on_box: non-finite evaluation");
        const Vec mag = signed_check ? w : Vec(w.cwiseAbs());
        out.worst_upper_ratio = std::max(out.worst_upper_ratio, (mag.array() / cap.array()).maxCoeff());
        out.min_value = std::min(out.min_value, w.minCoeff());
        const bool ok = (mag.array() <= cap.array()).all() && (!signed_check || (w.array() >= 0.0).all());
        if (!ok && out.holds) {
            out.holds = false;
            out.violation = v;
        }
        ++out.samples_checked;
    }
    return out;
}

struct ConditionVerdict {
    bool holds = true;
    double worst_ratio = 0.0;
};

struct HVerdict {
    ConditionVerdict h1; // worst = max(max a / A_hi, A_lo / min a)
    ConditionVerdict h2; // worst = smallest observed slope of b (must be >= B)
    ConditionVerdict h3; // worst = largest slope ratio of f, g, h against F, G, H
    bool all() const { return h1.holds && h2.holds && h3.holds; }
};

inline HVerdict check_H_conditions(const CGSystem& cg, const Box& box, int samples, std::uint64_t seed = 1)
{
    cg.validate();
    require(samples >= 2, "check_H_conditions: need at least 2 samples");
    require(static_cast<Eigen::Index>(box.size()) == cg.size(), "check_H_conditions: one interval per neuron");
    std::mt19937_64 rng(seed);
    HVerdict out;
    out.h2.worst_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cg.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const auto& iv = box[k];
        require(iv.lo < iv.hi, "check_H_conditions: empty interval");

        // (H1)
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        for (double x : detail::sample_points(iv, samples)) {
            const double v = detail::checked(cg.a[k](x));
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        const double r1 = std::max(amax / cg.A_hi(i), cg.A_lo(i) / amin);
        out.h1.worst_ratio = std::max(out.h1.worst_ratio, r1);
        if (!(amin > 0.0 && amin >= cg.A_lo(i) && amax <= cg.A_hi(i))) out.h1.holds = false;

        // (H2)
        double lower = 0.0, s = 0.0, t = 0.0;
        if (cg.b[k].kind() == FnKind::affine) {
            lower = cg.b[k].params()[0];
        } else {
            detail::sampled_slopes(cg.b[k], iv, samples, rng, lower, s, t);
        }
        out.h2.worst_ratio = std::min(out.h2.worst_ratio, lower);
        if (lower < cg.Bslope(i) * (1.0 - 1e-12)) out.h2.holds = false;

        // (H3)
        const std::array<std::pair<const ScalarFunction*, double>, 3> fns{
            {{&cg.f[k], cg.F(i)}, {&cg.g[k], cg.G(i)}, {&cg.h[k], cg.H(i)}}};
        for (const auto& [fn, bound] : fns) {
            double lo = 0.0;
            double hi;
            if (fn->kind() == FnKind::affine) {
                hi = std::abs(fn->params()[0]);
                lo = fn->params()[0];
            } else {
                hi = detail::sampled_slopes(*fn, iv, samples, rng, lo, s, t);
            }
            const double ratio = bound > 0.0 ? hi / bound : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            out.h3.worst_ratio = std::max(out.h3.worst_ratio, ratio);
            if (lo < 0.0 || hi > bound * (1.0 + 1e-12)) out.h3.holds = false;
        }
    }
    return out;
}

} // namespace rdnet
