#pragma once

// Registry of scalar neuron functions used as activations, amplifications and
// impulse maps, plus the per-neuron activation bundle with its Lipschitz bounds.

#include "rdnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdnet {

/// Cube-root-capped activation whose slope never exceeds (D/A) mu1; linear on
/// [-1, 1]. The cube root is the real, sign-preserving one.
inline double cube_root_activation(double u, double D, double A, double mu1)
{
    const double k = D / A * mu1;
    if (u <= -1.0) return 3.0 * k * std::cbrt(u) + 2.0 * k;
    if (u >= 1.0) return 3.0 * k * std::cbrt(u) - 2.0 * k;
    return k * u;
}

/// Antiderivative of cube_root_activation with F(0) = 0.
inline double cube_root_antiderivative(double u, double D, double A, double mu1)
{
    const double k = D / A * mu1;
    if (u <= -1.0) return 2.25 * k * std::pow(std::abs(u), 4.0 / 3.0) + 2.0 * k * u + 0.25 * k;
    if (u >= 1.0) return 2.25 * k * std::pow(u, 4.0 / 3.0) - 2.0 * k * u + 0.25 * k;
    return 0.5 * k * u * u;
}

inline double statement2_f(double u, double D, double A, double mu1) { return cube_root_activation(u, D, A, mu1); }
inline double statement2_F(double u, double D, double A, double mu1) { return cube_root_antiderivative(u, D, A, mu1); }

enum class FnKind {
    affine,      // a*s + b
    scaled_sine, // a + b*s + c*sin(s)
    cube_root,   // capped cube root, params (D, A, mu1)
    saturation,  // (|s+1| - |s-1|) / 2
    tanh,        // tanh(s)
    polynomial,  // sum_k c_k s^k
    tabulated    // piecewise linear through (xs, ys), constant outside
};

inline const char* to_string(FnKind k)
{
    switch (k) {
    case FnKind::affine: return "affine";
    case FnKind::scaled_sine: return "scaled_sine";
    case FnKind::cube_root: return "cube_root";
    case FnKind::saturation: return "saturation";
    case FnKind::tanh: return "tanh";
    case FnKind::polynomial: return "polynomial";
    case FnKind::tabulated: return "tabulated";
    }
    return "?";
}

inline FnKind fn_kind_from_string(const std::string& s)
{
    for (FnKind k : {FnKind::affine, FnKind::scaled_sine, FnKind::cube_root, FnKind::saturation, FnKind::tanh,
                     FnKind::polynomial, FnKind::tabulated})
        if (s == to_string(k)) return k;
    if (s == "identity") return FnKind::affine;
    throw std::invalid_argument("unknown function kind '" + s + "'");
}

class ScalarFunction {
public:
    ScalarFunction() : ScalarFunction(FnKind::affine, {1.0, 0.0}) {}

    ScalarFunction(FnKind kind, std::vector<double> params, std::vector<double> xs = {}, std::vector<double> ys = {})
        : kind_(kind), params_(std::move(params)), xs_(std::move(xs)), ys_(std::move(ys))
    {
        auto need = [&](std::size_t n) {
            require(params_.size() == n, std::string("function '") + to_string(kind_) + "' expects "
                                             + std::to_string(n) + " parameters");
        };
        switch (kind_) {
        case FnKind::affine: need(2); break;
        case FnKind::scaled_sine: need(3); break;
        case FnKind::cube_root:
            need(3);
            require(params_[1] != 0.0, "cube_root: A must be nonzero");
            break;
        case FnKind::saturation:
        case FnKind::tanh: need(0); break;
        case FnKind::polynomial: require(!params_.empty(), "polynomial: needs coefficients"); break;
        case FnKind::tabulated:
            require(xs_.size() >= 2 && xs_.size() == ys_.size(), "tabulated: need >= 2 matching (x, y) pairs");
            require(std::is_sorted(xs_.begin(), xs_.end())
                        && std::adjacent_find(xs_.begin(), xs_.end()) == xs_.end(),
                    "tabulated: abscissae must be strictly increasing");
            break;
        }
        for (double p : params_) require(std::isfinite(p), "function parameters must be finite");
    }

    static ScalarFunction affine(double a, double b) { return {FnKind::affine, {a, b}}; }
    static ScalarFunction identity() { return affine(1.0, 0.0); }
    static ScalarFunction scaled_sine(double a, double b, double c) { return {FnKind::scaled_sine, {a, b, c}}; }
    static ScalarFunction cube_root(double D, double A, double mu1) { return {FnKind::cube_root, {D, A, mu1}}; }
    static ScalarFunction saturation() { return {FnKind::saturation, {}}; }
    static ScalarFunction hyperbolic_tangent() { return {FnKind::tanh, {}}; }
    static ScalarFunction polynomial(std::vector<double> coeffs) { return {FnKind::polynomial, std::move(coeffs)}; }
    static ScalarFunction tabulated(std::vector<double> xs, std::vector<double> ys)
    {
        return {FnKind::tabulated, {}, std::move(xs), std::move(ys)};
    }

    FnKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }

    double operator()(double s) const
    {
        switch (kind_) {
        case FnKind::affine: return params_[0] * s + params_[1];
        case FnKind::scaled_sine: return params_[0] + params_[1] * s + params_[2] * std::sin(s);
        case FnKind::cube_root: return cube_root_activation(s, params_[0], params_[1], params_[2]);
        case FnKind::saturation: return 0.5 * (std::abs(s + 1.0) - std::abs(s - 1.0));
        case FnKind::tanh: return std::tanh(s);
        case FnKind::polynomial: {
            double acc = 0.0;
            for (auto it = params_.rbegin(); it != params_.rend(); ++it) acc = acc * s + *it;
            return acc;
        }
        case FnKind::tabulated: {
            if (s <= xs_.front()) return ys_.front();
            if (s >= xs_.back()) return ys_.back();
            const auto hi = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), s) - xs_.begin());
            const std::size_t lo = hi - 1;
            const double w = (s - xs_[lo]) / (xs_[hi] - xs_[lo]);
            return (1.0 - w) * ys_[lo] + w * ys_[hi];
        }
        }
        return 0.0;
    }

    /// Closed-form global Lipschitz constant when one is known.
    std::optional<double> exact_lipschitz() const
    {
        switch (kind_) {
        case FnKind::affine: return std::abs(params_[0]);
        case FnKind::scaled_sine: return std::abs(params_[1]) + std::abs(params_[2]);
        case FnKind::cube_root: return std::abs(params_[0] / params_[1] * params_[2]);
        case FnKind::saturation:
        case FnKind::tanh: return 1.0;
        case FnKind::polynomial:
            if (params_.size() <= 2) return params_.size() == 2 ? std::abs(params_[1]) : 0.0;
            return std::nullopt;
        case FnKind::tabulated: {
            double m = 0.0;
            for (std::size_t i = 1; i < xs_.size(); ++i)
                m = std::max(m, std::abs((ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1])));
            return m;
        }
        }
        return std::nullopt;
    }

private:
    FnKind kind_;
    std::vector<double> params_;
    std::vector<double> xs_, ys_;
};

/// Per-neuron activation functions with declared Lipschitz constants G_i.
class Activation {
public:
    Activation() = default;

    Activation(std::vector<ScalarFunction> fns, Vec lipschitz) : fns_(std::move(fns)), lipschitz_(std::move(lipschitz))
    {
        require(!fns_.empty(), "Activation: at least one neuron");
        require(static_cast<Eigen::Index>(fns_.size()) == lipschitz_.size(),
                "Activation: one Lipschitz constant per neuron");
        require((lipschitz_.array() > 0.0).all(), "Activation: Lipschitz constants must be positive");
    }

    /// Same function on every neuron.
    static Activation uniform(const ScalarFunction& fn, Eigen::Index n, double lipschitz)
    {
        return {std::vector<ScalarFunction>(static_cast<std::size_t>(n), fn), Vec::Constant(n, lipschitz)};
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(fns_.size()); }
    const ScalarFunction& fn(Eigen::Index i) const { return fns_.at(static_cast<std::size_t>(i)); }
    const std::vector<ScalarFunction>& functions() const { return fns_; }
    const Vec& lipschitz() const { return lipschitz_; }

    /// Diagonal Lipschitz matrix G.
    Mat G() const { return lipschitz_.asDiagonal(); }

    double operator()(Eigen::Index i, double s) const { return fns_[static_cast<std::size_t>(i)](s); }

    Vec operator()(const Vec& v) const
    {
        Vec out(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = (*this)(i, v(i));
        return out;
    }

private:
    std::vector<ScalarFunction> fns_;
    Vec lipschitz_;
};

} // namespace rdnet
