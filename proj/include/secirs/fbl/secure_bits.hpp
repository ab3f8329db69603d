// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "secirs/common.hpp"
#include "secirs/fbl/qfunc.hpp"
#include "secirs/scenario/channel.hpp"
#include "secirs/scenario/config.hpp"

namespace secirs::fbl {

/// Channel dispersion Z = 1 - (1 + gamma)^-2; strictly increasing on [0, 1).
inline double dispersion(double gamma) {
    const double t = 1.0 + gamma;
    return 1.0 - 1.0 / (t * t);
}

/// SINRs for all (k,m,n) and (j,k,m,n). Entries masked by the delay filter are
/// zero because the corresponding beamformers are zero.
struct SinrTensor {
    int K = 0, J = 0, M = 0, N = 0;
    std::vector<double> user;  // [k][m][n]
    std::vector<double> eve;   // [j][k][m][n]

    SinrTensor() = default;
    SinrTensor(int K_, int J_, int M_, int N_)
        : K(K_), J(J_), M(M_), N(N_),
          user(static_cast<std::size_t>(K_) * M_ * N_, 0.0),
          eve(static_cast<std::size_t>(J_) * K_ * M_ * N_, 0.0) {}

    double& at_user(int k, int m, int n) {
        return user[(static_cast<std::size_t>(k) * M + m) * N + n];
    }
    double at_user(int k, int m, int n) const {
        return user[(static_cast<std::size_t>(k) * M + m) * N + n];
    }
    double& at_eve(int j, int k, int m, int n) {
        return eve[((static_cast<std::size_t>(j) * K + k) * M + m) * N + n];
    }
    double at_eve(int j, int k, int m, int n) const {
        return eve[((static_cast<std::size_t>(j) * K + k) * M + m) * N + n];
    }
};

/// Secure-bits functional split into its parts; b_bar = rate - dispersion
/// penalty - worst leakage, exactly.
struct SecureBitsBreakdown {
    double rate = 0.0;                // R_k
    double dispersion_penalty = 0.0;  // C_k
    std::vector<double> leakage;      // C_{j,k} per j
    double tau = 0.0;                 // max_j C_{j,k} (0 when J = 0)
    double b_bar = 0.0;               // R_k - C_k - tau_k
};

/// Trace-form SINR of one endpoint at (m, n): signal trace over interference
/// traces plus AN trace plus noise. W holds all users' beamformer matrices at
/// (m, n); `which` selects the served user.
inline double sinr_from_traces(const Eigen::MatrixXcd& Gx, const Eigen::MatrixXcd& phi_lift,
                               const std::vector<Eigen::MatrixXcd>& W, int which,
                               const Eigen::MatrixXcd& V, double sigma2) {
    const Eigen::MatrixXcd Mx = Gx.adjoint() * phi_lift * Gx;  // trace reduction
    auto rtrace = [&Mx](const Eigen::MatrixXcd& X) {
        return (Mx.cwiseProduct(X.transpose())).sum().real();
    };
    const double sig = rtrace(W[which]);
    double denom = sigma2;
    for (std::size_t l = 0; l < W.size(); ++l)
        if (static_cast<int>(l) != which) denom += rtrace(W[l]);
    if (V.size() > 0) denom += rtrace(V);
    if (sig < -1e-9 || denom < sigma2 - 1e-9)
        throw std::invalid_argument("sinr_from_traces: negative trace beyond tolerance");
    return std::max(sig, 0.0) / denom;
}

/// Full SINR tensor from solution matrices. W[k][m][n] may hold empty matrices
/// for delay-masked slots (treated as zero); V[m][n] likewise.
inline SinrTensor compute_sinr_tensor(
    const std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>& W,
    const std::vector<std::vector<Eigen::MatrixXcd>>& V,
    const std::vector<Eigen::MatrixXcd>& phi_lift, const scenario::ChannelSet& cs,
    double sigma2) {
    const int K = static_cast<int>(W.size());
    const int M = cs.M;
    const int N = K > 0 ? static_cast<int>(W[0][0].size()) : 0;
    const int J = cs.num_eves();
    SinrTensor t(K, J, M, N);
    std::vector<Eigen::MatrixXcd> Wmn(K);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) {
                Wmn[k] = W[k][m][n].size() > 0
                             ? W[k][m][n]
                             : Eigen::MatrixXcd::Zero(cs.Nt, cs.Nt);
            }
            const Eigen::MatrixXcd Vmn =
                V[m][n].size() > 0 ? V[m][n] : Eigen::MatrixXcd::Zero(cs.Nt, cs.Nt);
            for (int k = 0; k < K; ++k) {
                t.at_user(k, m, n) = sinr_from_traces(scenario::composite_user(cs, k, m),
                                                      phi_lift[n], Wmn, k, Vmn, sigma2);
            }
            for (int j = 0; j < J; ++j) {
                const Eigen::MatrixXcd Gj = scenario::composite_eve(cs, j, m);
                for (int k = 0; k < K; ++k)
                    t.at_eve(j, k, m, n) =
                        sinr_from_traces(Gj, phi_lift[n], Wmn, k, Vmn, sigma2);
            }
        }
    }
    return t;
}

/// Secure bits delivered to user k with the required error probability and
/// leakage targets: rate sum minus the dispersion penalty minus the worst
/// eavesdropper's decodable share.
inline SecureBitsBreakdown secure_bits(const SinrTensor& t, const scenario::SystemConfig& cfg,
                                       int k) {
    SecureBitsBreakdown out;
    const double nb = static_cast<double>(cfg.n_bar);
    double rate = 0.0, zsum = 0.0;
    for (int m = 0; m < t.M; ++m)
        for (int n = 0; n < t.N; ++n) {
            const double g = t.at_user(k, m, n);
            rate += std::log2(1.0 + g);
            zsum += dispersion(g);
        }
    out.rate = nb * rate;
    if (cfg.dispersion_enabled && cfg.eps[k] < 0.5)
        out.dispersion_penalty =
            cfg.dispersion_a * qfunc_inv(cfg.eps[k]) * std::sqrt(nb * zsum);

    out.leakage.assign(t.J, 0.0);
    for (int j = 0; j < t.J; ++j) {
        double lrate = 0.0, lz = 0.0;
        for (int m = 0; m < t.M; ++m)
            for (int n = 0; n < t.N; ++n) {
                const double g = t.at_eve(j, k, m, n);
                lrate += std::log2(1.0 + g);
                lz += dispersion(g);
            }
        double c = nb * lrate;
        if (cfg.dispersion_enabled && cfg.delta_for(j, k) < 0.5)
            c += cfg.dispersion_a * qfunc_inv(cfg.delta_for(j, k)) * std::sqrt(nb * lz);
        out.leakage[j] = c;
    }
    out.tau = 0.0;
    for (double c : out.leakage) out.tau = std::max(out.tau, c);
    out.b_bar = out.rate - out.dispersion_penalty - out.tau;
    return out;
}

}  // namespace secirs::fbl
