#pragma once

// Exponential-stability certificates: the convex-combination matrix inequality
// with Razumikhin factor e^{gamma tau} q, its simplex/rate search, the
// uniqueness condition for stationary solutions, and the Cohen-Grossberg
// conditions with their decay-rate constants.

#include "rdnet/linalg.hpp"
#include "rdnet/model.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rdnet {

/// Q_sigma = -2 lambda1 D - 2 C + A A^T + B B^T + G^2 + e^{gamma tau} q G^2 + Psi.
/// `lambda1` defaults to the mode's own first eigenvalue.
inline Mat mode_margin_matrix(const Mode& mode, const Mat& G, double gamma, double q, double tau, const Mat& Psi,
                              std::optional<double> lambda1 = std::nullopt)
{
    require(gamma >= 0.0 && q > 1.0 && tau >= 0.0, "mode_margin_matrix: need gamma >= 0, q > 1, tau >= 0");
    const double lam = lambda1.value_or(mode.lambda1);
    const Mat G2 = G * G;
    Mat Q = -2.0 * lam * mode.Dmat() - 2.0 * mode.Cmat() + mode.A * mode.A.transpose() + mode.B * mode.B.transpose()
            + G2 + std::exp(gamma * tau) * q * G2 + Psi;
    return symmetrize(Q);
}

struct Certificate {
    Vec beta;
    double gamma = 0.0;
    double q = 0.0;
    double tau = 0.0;
    double margin = 0.0; // lambda_max of the combined matrix
    Vec eigenvalues;
    bool feasible = false;
    bool theorem_constraint_ok = false; // gamma < lambda_min(Psi)
    double rate = 0.0;                  // gamma / 2 when feasible
};

namespace detail {

inline void check_simplex(const Vec& beta, std::size_t modes)
{
    require(static_cast<std::size_t>(beta.size()) == modes, "certificate: one weight per mode");
    require((beta.array() >= 0.0).all(), "certificate: weights must be nonnegative");
    require(std::abs(beta.sum() - 1.0) <= 1e-10, "certificate: weights must sum to 1");
}

/// Sum beta_s (-2 lambda1 D - 2 C + A A^T + B B^T) + G^2 + Psi; the delayed
/// term e^{gamma tau} q G^2 is added by the caller.
inline Mat combined_base(const SwitchedNetwork& net, const Vec& beta, const std::vector<double>& lambdas)
{
    const Eigen::Index n = net.size();
    Mat M = Mat::Zero(n, n);
    for (std::size_t s = 0; s < net.modes.size(); ++s) {
        if (beta(static_cast<Eigen::Index>(s)) == 0.0) continue;
        const Mode& m = net.modes[s];
        M += beta(static_cast<Eigen::Index>(s))
             * (-2.0 * lambdas[s] * m.Dmat() - 2.0 * m.Cmat() + m.A * m.A.transpose() + m.B * m.B.transpose());
    }
    const Mat G = net.activation.G();
    return M + G * G + net.Psi;
}

inline std::vector<double> mode_lambdas(const SwitchedNetwork& net)
{
    std::vector<double> out;
    for (const auto& m : net.modes) out.push_back(m.lambda1);
    return out;
}

} // namespace detail

inline Certificate verify_certificate(const SwitchedNetwork& net, const Vec& beta, double gamma, double q)
{
    require(!net.modes.empty(), "verify_certificate: no modes");
    require(gamma > 0.0, "verify_certificate: gamma must be positive");
    require(q > 1.0, "verify_certificate: q must exceed 1");
    require(is_symmetric(net.Psi, 1e-12), "verify_certificate: Psi must be symmetric");
    detail::check_simplex(beta, net.modes.size());

    const Mat G = net.activation.G();
    const Mat M = symmetrize(detail::combined_base(net, beta, detail::mode_lambdas(net))
                             + std::exp(gamma * net.tau()) * q * G * G);
    Certificate c;
    c.beta = beta;
    c.gamma = gamma;
    c.q = q;
    c.tau = net.tau();
    c.eigenvalues = sym_eigenvalues(M);
    c.margin = c.eigenvalues.maxCoeff();
    c.feasible = c.margin < -kDefiniteSlack;
    c.theorem_constraint_ok = gamma < min_eigenvalue(net.Psi);
    c.rate = c.feasible ? 0.5 * gamma : 0.0;
    return c;
}

struct SearchOptions {
    double beta_step = 0.01;
    double q = 1.00001;
    bool honor_theorem_constraint = true;
    double gamma_cap = 10.0;
    int bisection_steps = 60;
};

struct SearchResult {
    std::optional<Certificate> best;
    double least_margin = std::numeric_limits<double>::infinity(); // over all lattice points at gamma -> 0
    std::size_t lattice_points = 0;
};

/// Enumerates the simplex lattice with spacing beta_step (fixed lexicographic
/// order) and, for every weight vector, bisects for the largest feasible gamma
/// in (0, gamma_hi]. The margin is nondecreasing in gamma.
inline SearchResult search_certificate(const SwitchedNetwork& net, const SearchOptions& opt = {})
{
    require(opt.beta_step > 0.0 && opt.beta_step <= 1.0, "search_certificate: step must lie in (0, 1]");
    require(opt.q > 1.0, "search_certificate: q must exceed 1");
    const auto N = net.modes.size();
    require(N >= 1, "search_certificate: no modes");
    const int K = static_cast<int>(std::lround(1.0 / opt.beta_step));
    require(K >= 1, "search_certificate: step too large");

    const double gamma_hi = opt.honor_theorem_constraint ? min_eigenvalue(net.Psi) : opt.gamma_cap;
    require(gamma_hi > 0.0, "search_certificate: empty gamma range");
    const double tau = net.tau();
    const Mat G = net.activation.G();
    const Mat G2q = opt.q * G * G;
    const auto lambdas = detail::mode_lambdas(net);

    auto margin_at = [&](const Mat& base, double gamma) { return max_eigenvalue(base + std::exp(gamma * tau) * G2q); };

    SearchResult out;
    std::vector<int> parts(N, 0);
    auto visit = [&](const std::vector<int>& p) {
        Vec beta(static_cast<Eigen::Index>(N));
        for (std::size_t s = 0; s < N; ++s) beta(static_cast<Eigen::Index>(s)) = static_cast<double>(p[s]) / K;
        ++out.lattice_points;
        const Mat base = detail::combined_base(net, beta, lambdas);
        const double m0 = margin_at(base, 0.0);
        out.least_margin = std::min(out.least_margin, m0);
        if (m0 >= -kDefiniteSlack) return;

        // The constraint gamma < lambda_min(Psi) is strict.
        const double top = opt.honor_theorem_constraint ? gamma_hi * (1.0 - 1e-12) : gamma_hi;
        double gamma;
        if (margin_at(base, top) < -kDefiniteSlack) {
            gamma = top;
        } else {
            double lo = 0.0, hi = top;
            for (int it = 0; it < opt.bisection_steps; ++it) {
                const double mid = 0.5 * (lo + hi);
                (margin_at(base, mid) < -kDefiniteSlack ? lo : hi) = mid;
            }
            gamma = lo;
        }
        if (gamma <= 0.0) return;
        const double margin = margin_at(base, gamma);
        const auto& best = out.best;
        if (!best || gamma > best->gamma || (gamma == best->gamma && margin < best->margin)) {
            Certificate c;
            c.beta = beta;
            c.gamma = gamma;
            c.q = opt.q;
            c.tau = tau;
            c.eigenvalues = sym_eigenvalues(base + std::exp(gamma * tau) * G2q);
            c.margin = margin;
            c.feasible = true;
            c.theorem_constraint_ok = gamma < min_eigenvalue(net.Psi);
            c.rate = 0.5 * gamma;
            out.best = c;
        }
    };

    // Compositions of K into N nonnegative parts, lexicographic in parts[0..].
    auto enumerate = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == N) {
            parts[pos] = remaining;
            visit(parts);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            parts[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    enumerate(enumerate, 0, K);
    return out;
}

struct UniquenessVerdict {
    double p = 0.0;
    double max_eigenvalue = 0.0; // of -C + (p/2)(1/eps I + eps G^2) - lambda1 D
    bool holds = false;
};

/// Uniqueness of stationary solutions: -C + (p/2)(eps^{-1} I + eps G^2) < lambda1 D
/// with p^2 I >= (A+B)^T (A+B). Empty `p` selects p = ||A + B||_2 per mode.
inline std::vector<UniquenessVerdict> check_uniqueness_A3(const std::vector<Mode>& modes, const Mat& G, double epsilon,
                                                          const std::vector<double>& p = {})
{
    require(epsilon > 0.0, "check_uniqueness_A3: epsilon must be positive");
    require(p.empty() || p.size() == modes.size(), "check_uniqueness_A3: one p per mode");
    std::vector<UniquenessVerdict> out;
    for (std::size_t s = 0; s < modes.size(); ++s) {
        const Mode& m = modes[s];
        const Eigen::Index n = m.size();
        UniquenessVerdict v;
        v.p = p.empty() ? spectral_norm(m.A + m.B) : p[s];
        require(v.p > 0.0, "check_uniqueness_A3: p must be positive");
        const Mat lhs = -m.Cmat() + 0.5 * v.p * (Mat::Identity(n, n) / epsilon + epsilon * G * G)
                        - m.lambda1 * m.Dmat();
        v.max_eigenvalue = max_eigenvalue(lhs);
        v.holds = v.max_eigenvalue < -kDefiniteSlack;
        out.push_back(v);
    }
    return out;
}

/// Cellular specialization (a_i = 1, b_i(u) = b_i u):
/// -B + (p/2)(eps^{-1} I + eps G^2) < lambda1 R with p^2 I >= (C+D)^T (C+D).
inline UniquenessVerdict check_corollary34(const Vec& b, const Mat& C, const Mat& D, const Vec& G, const Vec& R,
                                           double lambda1, double epsilon, std::optional<double> p = std::nullopt)
{
    require(epsilon > 0.0, "check_corollary34: epsilon must be positive");
    const Eigen::Index n = b.size();
    require(C.rows() == n && D.rows() == n && G.size() == n && R.size() == n, "check_corollary34: dimension mismatch");
    UniquenessVerdict v;
    v.p = p.value_or(spectral_norm(C + D));
    require(v.p > 0.0, "check_corollary34: p must be positive");
    const Mat G2 = G.cwiseProduct(G).asDiagonal();
    const Mat lhs = -Mat(b.asDiagonal()) + 0.5 * v.p * (Mat::Identity(n, n) / epsilon + epsilon * G2)
                    - lambda1 * Mat(R.asDiagonal());
    v.max_eigenvalue = max_eigenvalue(lhs);
    v.holds = v.max_eigenvalue < -kDefiniteSlack;
    return v;
}

struct C1Verdict {
    Mat Psi_tilde;
    double max_eigenvalue = 0.0;
    bool holds = false;
};

/// 3n x 3n block matrix
/// [[-2 P A_lo B + F^2, P A_hi |C|, P A_hi |D|], [|C|^T A_hi P, -I, 0], [|D|^T A_hi P, 0, -I]] < 0.
inline C1Verdict cg_check_C1(const CGSystem& cg)
{
    cg.validate();
    const Eigen::Index n = cg.size();
    const Mat P = cg.P.asDiagonal();
    const Mat Alo = cg.A_lo.asDiagonal();
    const Mat Ahi = cg.A_hi.asDiagonal();
    const Mat B = cg.Bslope.asDiagonal();
    const Mat F2 = cg.F.cwiseProduct(cg.F).asDiagonal();
    const Mat absC = cg.C.cwiseAbs();
    const Mat absD = cg.D.cwiseAbs();
    const Mat I = Mat::Identity(n, n);

    Mat Psi = Mat::Zero(3 * n, 3 * n);
    Psi.block(0, 0, n, n) = -2.0 * P * Alo * B + F2;
    Psi.block(0, n, n, n) = P * Ahi * absC;
    Psi.block(0, 2 * n, n, n) = P * Ahi * absD;
    Psi.block(n, 0, n, n) = absC.transpose() * Ahi * P;
    Psi.block(2 * n, 0, n, n) = absD.transpose() * Ahi * P;
    Psi.block(n, n, n, n) = -I;
    Psi.block(2 * n, 2 * n, n, n) = -I;

    C1Verdict v;
    v.Psi_tilde = Psi;
    v.max_eigenvalue = max_eigenvalue(Psi);
    v.holds = v.max_eigenvalue < -kDefiniteSlack;
    return v;
}

/// Unique root of lambda = a - b e^{lambda tau} on [0, a] for a > b >= 0.
inline double solve_delay_rate(double a, double b, double tau)
{
    require(b >= 0.0 && a > b, "solve_delay_rate: need a > b >= 0");
    require(tau >= 0.0, "solve_delay_rate: tau must be >= 0");
    if (b == 0.0) return a;
    if (tau == 0.0) return a - b;
    auto h = [&](double l) { return l - a + b * std::exp(l * tau); };
    double lo = 0.0, hi = a;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
}

struct CGRates {
    Mat Phi_tilde;
    double a_tilde = 0.0;
    double b = 0.0;
    double lambda = 0.0;
    double rho = 1.0;
    double delta_min = 0.0;
    double delta = 0.0; // delta used for `rate`
    double rate = 0.0;  // (lambda - ln(rho e^{lambda tau}) / (delta tau)) / 2
};

/// Rate constants of the Cohen-Grossberg certificate. Without an explicit
/// delta, the rate is evaluated at delta_min.
inline CGRates cg_rates(const CGSystem& cg, std::optional<double> delta = std::nullopt)
{
    cg.validate();
    const Mat P = cg.P.asDiagonal();
    const Mat Alo = cg.A_lo.asDiagonal();
    const Mat Ahi = cg.A_hi.asDiagonal();
    const Mat B = cg.Bslope.asDiagonal();
    const Mat absC = cg.C.cwiseAbs();
    const Mat absD = cg.D.cwiseAbs();
    const Mat F2 = cg.F.cwiseProduct(cg.F).asDiagonal();
    const Mat G2 = cg.G.cwiseProduct(cg.G).asDiagonal();

    CGRates r;
    r.Phi_tilde = symmetrize(2.0 * P * Alo * B - P * Ahi * absC * absC.transpose() * Ahi * P
                             - P * Ahi * absD * absD.transpose() * Ahi * P - F2);
    const double pmin = cg.P.minCoeff();
    const double pmax = cg.P.maxCoeff();
    const double phi_min = min_eigenvalue(r.Phi_tilde);
    if (!(phi_min > 0.0)) throw std::domain_error("C2 violated: Phi_tilde is not positive definite");
    r.a_tilde = phi_min / pmax;
    r.b = max_eigenvalue(G2) / pmin;
    if (!(r.a_tilde > r.b)) throw std::domain_error("C2 violated: a_tilde <= b");

    r.lambda = solve_delay_rate(r.a_tilde, r.b, cg.tau);
    const Mat M = cg.M.asDiagonal();
    const Mat H = cg.H.asDiagonal();
    const double eterm = std::exp(r.lambda * cg.tau);
    r.rho = std::max(1.0, 2.0 * max_eigenvalue(P * M * P) / pmin
                              + 2.0 * max_eigenvalue(H * cg.N.transpose() * P * cg.N * H) / pmin * eterm);
    const double log_term = std::log(r.rho * eterm);
    if (cg.tau > 0.0) {
        r.delta_min = std::sqrt(log_term / cg.tau);
    } else {
        r.delta_min = log_term > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    r.delta = delta.value_or(r.delta_min);
    if (cg.tau > 0.0 && r.delta > 0.0 && std::isfinite(r.delta)) {
        r.rate = 0.5 * (r.lambda - log_term / (r.delta * cg.tau));
    } else {
        r.rate = log_term == 0.0 ? 0.5 * r.lambda : -std::numeric_limits<double>::infinity();
    }
    return r;
}

} // namespace rdnet
