// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace secirs::conic {

// Symmetric/Hermitian matrices enter the solver as packed real coefficient
// vectors ("svec"). The packing is isometric: <A,B>_F = svec(A).svec(B), so the
// same inner products and norms hold on either side. Layout (column-major over
// the strict upper triangle):
//   real symmetric d x d  ->  [diag(0..d-1); sqrt(2)*upper(i<j)]        dim d(d+1)/2
//   Hermitian      d x d  ->  [diag(0..d-1); sqrt(2)*Re, sqrt(2)*Im per pair]  dim d^2
// Pack followed by unpack reproduces the matrix to machine precision.

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2 = 0.7071067811865475;

inline int svec_dim_sym(int d) { return d * (d + 1) / 2; }
inline int svec_dim_herm(int d) { return d * d; }

inline void svec_pack(const Eigen::Ref<const Eigen::MatrixXd>& M,
                      Eigen::Ref<Eigen::VectorXd> out) {
    const int d = static_cast<int>(M.rows());
    for (int i = 0; i < d; ++i) out[i] = M(i, i);
    int k = d;
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) out[k++] = kSqrt2 * M(i, j);
}

inline void svec_unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int d,
                        Eigen::Ref<Eigen::MatrixXd> M) {
    for (int i = 0; i < d; ++i) M(i, i) = v[i];
    int k = d;
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) {
            const double x = kInvSqrt2 * v[k++];
            M(i, j) = x;
            M(j, i) = x;
        }
}

inline void svec_pack(const Eigen::Ref<const Eigen::MatrixXcd>& M,
                      Eigen::Ref<Eigen::VectorXd> out) {
    const int d = static_cast<int>(M.rows());
    for (int i = 0; i < d; ++i) out[i] = M(i, i).real();
    int k = d;
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) {
            out[k++] = kSqrt2 * M(i, j).real();
            out[k++] = kSqrt2 * M(i, j).imag();
        }
}

inline void svec_unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int d,
                        Eigen::Ref<Eigen::MatrixXcd> M) {
    for (int i = 0; i < d; ++i) M(i, i) = v[i];
    int k = d;
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i) {
            const std::complex<double> x(kInvSqrt2 * v[k], kInvSqrt2 * v[k + 1]);
            k += 2;
            M(i, j) = x;
            M(j, i) = std::conj(x);
        }
}

}  // namespace secirs::conic
