// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace secirs::conic {

inline void require_hermitian(const Eigen::MatrixXcd& M, double tol = 1e-10) {
    if (M.rows() != M.cols()) throw std::invalid_argument("matrix must be square");
    const double dev = (M - M.adjoint()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (dev > tol * scale)
        throw std::invalid_argument("matrix is not Hermitian within tolerance");
}

/// Orthonormal eigenvectors for the `count` smallest eigenvalues of a Hermitian
/// matrix, ascending. Each column's phase is canonicalized (first entry with
/// magnitude > 1e-8 made real positive) so repeated calls on identical input
/// give identical output.
inline Eigen::MatrixXcd smallest_eigvecs(const Eigen::MatrixXcd& M, int count) {
    require_hermitian(M);
    const int d = static_cast<int>(M.rows());
    if (count < 1 || count > d)
        throw std::invalid_argument("smallest_eigvecs: count must be in [1, dim]");
    Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("smallest_eigvecs: eigendecomposition failed");
    Eigen::MatrixXcd U = es.eigenvectors().leftCols(count);
    for (int c = 0; c < count; ++c) {
        for (int i = 0; i < d; ++i) {
            const std::complex<double> v = U(i, c);
            if (std::abs(v) > 1e-8) {
                U.col(c) *= std::conj(v) / std::abs(v);
                break;
            }
        }
    }
    return U;
}

/// Ratio of the second-largest to largest eigenvalue of a PSD matrix:
/// 0 for rank-one, 1 for a scaled identity. Small negative eigenvalues within
/// the PSD tolerance are clamped to zero.
inline double rank_residual(const Eigen::MatrixXcd& M, double psd_tol = 1e-7) {
    require_hermitian(M);
    const int d = static_cast<int>(M.rows());
    if (d == 1) {
        if (M(0, 0).real() <= 0.0) throw std::invalid_argument("rank_residual: zero matrix");
        return 0.0;
    }
    Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();  // ascending
    const double lmax = ev[d - 1];
    if (lmax <= 0.0) throw std::invalid_argument("rank_residual: zero or negative matrix");
    if (ev[0] < -psd_tol * lmax)
        throw std::invalid_argument("rank_residual: matrix is not PSD within tolerance");
    const double l2 = std::max(ev[d - 2], 0.0);
    return l2 / lmax;
}

}  // namespace secirs::conic
