#pragma once

// Dense linear-algebra helpers shared by the certificate and model layers.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdnet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Absolute slack used by every negative-definiteness test.
inline constexpr double kDefiniteSlack = 1e-10;

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Eigenvalues (ascending) of the symmetric part of `m`.
inline Vec sym_eigenvalues(const Mat& m)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double max_eigenvalue(const Mat& m) { return sym_eigenvalues(m).maxCoeff(); }
inline double min_eigenvalue(const Mat& m) { return sym_eigenvalues(m).minCoeff(); }

inline bool is_negative_definite(const Mat& m, double slack = kDefiniteSlack)
{
    return max_eigenvalue(m) < -slack;
}

inline double spectral_norm(const Mat& m)
{
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

inline bool is_symmetric(const Mat& m, double tol = 1e-12)
{
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline bool is_diagonal(const Mat& m, double tol = 0.0)
{
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && std::abs(m(i, j)) > tol) return false;
    return true;
}

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw std::invalid_argument(what);
}

} // namespace rdnet
