// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "secirs/common.hpp"
#include "secirs/conic/problem.hpp"
#include "secirs/conic/solver.hpp"
#include "secirs/conic/spectral.hpp"
#include "secirs/fbl/secure_bits.hpp"
#include "secirs/fbl/taylor.hpp"
#include "secirs/scenario/channel.hpp"

namespace secirs::txopt {

/// Index bookkeeping over the delay-masked (k,m,n) grid: user k only occupies
/// slots n < D_k, and all per-(k,m,n) variables follow this layout.
struct ActiveGrid {
    int K = 0, J = 0, M = 0, N = 0;
    std::vector<int> delay;      // per user, slots
    std::vector<int> user_base;  // prefix offsets into the active user grid

    ActiveGrid() = default;
    ActiveGrid(const scenario::SystemConfig& cfg)
        : K(cfg.K), J(cfg.J), M(cfg.M), N(cfg.N), delay(cfg.delay) {
        user_base.resize(K + 1, 0);
        for (int k = 0; k < K; ++k) user_base[k + 1] = user_base[k] + M * delay[k];
    }

    bool active(int k, int n) const { return n < delay[k]; }
    int user_count() const { return user_base[K]; }
    int eve_count() const { return J * user_count(); }
    int user_index(int k, int m, int n) const { return user_base[k] + m * delay[k] + n; }
    int eve_index(int j, int k, int m, int n) const {
        return j * user_count() + user_index(k, m, n);
    }
};

/// SCA anchor state: previous-iterate values at which all surrogates are
/// expanded. Entries are indexed by ActiveGrid.
struct ScaAnchors {
    Eigen::VectorXd alpha;     // user SINR lower bounds
    Eigen::VectorXd beta;      // user interference-plus-noise (normalized)
    Eigen::VectorXd zeta;      // eavesdropper SINR upper bounds
    Eigen::VectorXd beta_bar;  // eavesdropper interference-plus-noise
    Eigen::VectorXd tau;       // per-user worst leakage (informational)
};

/// Normalized trace operators: M_x[m,n] = G_x[m]^H Phi_lift[n] G_x[m] / sigma^2,
/// so that <M_x, W> is the received power in noise units.
struct TraceOps {
    std::vector<Eigen::MatrixXcd> user;  // [k*M*N + m*N + n]
    std::vector<Eigen::MatrixXcd> eve;   // [j*M*N + m*N + n]
    int M = 0, N = 0;

    const Eigen::MatrixXcd& u(int k, int m, int n) const {
        return user[(static_cast<std::size_t>(k) * M + m) * N + n];
    }
    const Eigen::MatrixXcd& e(int j, int m, int n) const {
        return eve[(static_cast<std::size_t>(j) * M + m) * N + n];
    }
};

inline TraceOps make_trace_ops(const scenario::ChannelSet& cs,
                               const std::vector<Eigen::MatrixXcd>& phi_lift,
                               const scenario::SystemConfig& cfg) {
    TraceOps ops;
    ops.M = cfg.M;
    ops.N = cfg.N;
    ops.user.resize(static_cast<std::size_t>(cfg.K) * cfg.M * cfg.N);
    ops.eve.resize(static_cast<std::size_t>(cfg.J) * cfg.M * cfg.N);
    const double inv_s2 = 1.0 / cfg.sigma2_w;
    for (int m = 0; m < cfg.M; ++m) {
        for (int k = 0; k < cfg.K; ++k) {
            const Eigen::MatrixXcd G = scenario::composite_user(cs, k, m);
            for (int n = 0; n < cfg.N; ++n)
                ops.user[(static_cast<std::size_t>(k) * cfg.M + m) * cfg.N + n] =
                    inv_s2 * (G.adjoint() * phi_lift[n] * G);
        }
        for (int j = 0; j < cfg.J; ++j) {
            const Eigen::MatrixXcd G = scenario::composite_eve(cs, j, m);
            for (int n = 0; n < cfg.N; ++n)
                ops.eve[(static_cast<std::size_t>(j) * cfg.M + m) * cfg.N + n] =
                    inv_s2 * (G.adjoint() * phi_lift[n] * G);
        }
    }
    return ops;
}

/// Transmit-side solution: beamforming matrices, AN covariance, extracted
/// rank-one beamformers, and the SCA/tightness diagnostics.
struct TxSolution {
    bool feasible = false;
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> W;  // [k][m][n], empty if masked
    std::vector<std::vector<Eigen::MatrixXcd>> V;               // [m][n]
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> w;  // extracted beamformers
    double total_power = 0.0;                                   // sum of traces, watts
    std::vector<fbl::SecureBitsBreakdown> per_user;             // from the SDP matrices
    std::vector<fbl::SecureBitsBreakdown> per_user_extracted;   // from rank-one beams
    std::vector<double> sca_trace;                              // objective per iteration
    bool sca_monotone = true;
    double max_rank_residual = 0.0;
    double max_tightness_gap = 0.0;  // max |alpha - gamma| / max(gamma, 1e-9)
    double raw_bound_gap = 0.0;      // same, for the solver's own bound variables
    bool extraction_randomized = false;
    bool extraction_degraded = false;
    double extraction_inflation = 1.0;  // power factor applied to meet QoS
    ScaAnchors anchors;                 // at the returned point
    int iterations = 0;
};

/// Handles into the conic program built for one SCA iteration.
struct P1Model {
    conic::ConicProblem prob;
    ActiveGrid grid;
    std::vector<conic::HermitianVar> Wv;  // per active user index
    std::vector<conic::HermitianVar> Vv;  // per (m,n)
    std::vector<int> alpha, tvar, beta;   // per active user index
    std::vector<int> zeta, beta_bar;      // per active eve index
    std::vector<int> tau;                 // per user
    int v_index(int m, int n) const { return m * grid.N + n; }
};

namespace detail {

/// Piecewise-linear concave under-estimator of log2(1+a) on [0, alpha_max]:
/// chord knots with a cluster pinned at the anchor so the hypograph is exact
/// there. Returns knots sorted ascending, first 0, last alpha_max.
inline std::vector<double> pwl_knots(double anchor, double alpha_max, int segments,
                                     double cluster_width) {
    std::vector<double> ks;
    ks.push_back(0.0);
    const int n_cluster = anchor > 1e-8 ? std::max(6, segments * 2 / 5) : 0;
    const int n_backbone = segments - 1 - n_cluster;
    const double lo = 1e-4;
    for (int i = 0; i < n_backbone; ++i)
        ks.push_back(lo * std::pow(alpha_max / lo, static_cast<double>(i) / (n_backbone - 1)));
    if (n_cluster > 0) {
        const double w = std::max(cluster_width, 1e-6);
        for (int i = 0; i < n_cluster; ++i) {
            const double t = -1.0 + 2.0 * i / (n_cluster - 1);
            ks.push_back(std::clamp(anchor * std::pow(1.0 + w, t), 0.0, alpha_max));
        }
        ks.push_back(anchor);
    }
    ks.push_back(alpha_max);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1 + b); }),
             ks.end());
    return ks;
}

inline double hermitian_rtrace(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    return A.cwiseProduct(B.transpose()).sum().real();
}

}  // namespace detail

/// Inner-approximation of C9 at the anchor, two-sided product split:
///   beta >= I + 1,    (alpha + beta)^2/4 <= S + [(alpha-beta)^2/4 linearized]
/// expressed as the 2x2 LMI [[S + lin, (a+b)/2], [(a+b)/2, 1]] >= 0. Any point
/// feasible for the surrogate satisfies alpha*beta <= S, hence alpha <= gamma.
inline void add_c9_surrogate(conic::ConicProblem& prob, const conic::LinExpr& S,
                             const conic::LinExpr& interference, int alpha_var, int beta_var,
                             double alpha_anchor, double beta_anchor) {
    using conic::LinExpr;
    prob.add_nonneg(LinExpr::variable(beta_var) - interference - 1.0);
    const double diff = alpha_anchor - beta_anchor;
    LinExpr lin = 0.25 * (2.0 * diff *
                              (LinExpr::variable(alpha_var) - LinExpr::variable(beta_var)) -
                          LinExpr(diff * diff));
    conic::SymExpr lmi(2);
    lmi.diag(0) = S + lin;
    lmi.diag(1) = LinExpr(1.0);
    lmi.upper(0, 1) = 0.5 * (LinExpr::variable(alpha_var) + LinExpr::variable(beta_var));
    prob.add_psd(std::move(lmi));
}

/// Inner-approximation of C10: beta_bar <= I + 1 and
///   2(z^+b^)(zeta+beta_bar) - (z^+b^)^2 - (zeta-beta_bar)^2 >= 4 S
/// as the 2x2 LMI [[lin - 4S, zeta - beta_bar], [zeta - beta_bar, 1]] >= 0.
inline void add_c10_surrogate(conic::ConicProblem& prob, const conic::LinExpr& S,
                              const conic::LinExpr& interference, int zeta_var,
                              int beta_bar_var, double zeta_anchor, double bbar_anchor) {
    using conic::LinExpr;
    prob.add_nonneg(interference + 1.0 - LinExpr::variable(beta_bar_var));
    const double sum = zeta_anchor + bbar_anchor;
    LinExpr lin = 2.0 * sum *
                      (LinExpr::variable(zeta_var) + LinExpr::variable(beta_bar_var)) -
                  LinExpr(sum * sum);
    conic::SymExpr lmi(2);
    lmi.diag(0) = lin - 4.0 * S;
    lmi.diag(1) = LinExpr(1.0);
    lmi.upper(0, 1) = LinExpr::variable(zeta_var) - LinExpr::variable(beta_bar_var);
    prob.add_psd(std::move(lmi));
}

/// Builds the convexified transmit sub-problem at the given anchors: minimize
/// total power over {W, V, alpha, zeta, slacks} with the delay mask applied by
/// variable elimination (no W variables exist for n >= D_k).
inline P1Model build_p1(const TraceOps& ops, const ScaAnchors& anchors,
                        const scenario::SystemConfig& cfg, double cluster_width = 1e-3) {
    using conic::LinExpr;
    P1Model mdl;
    mdl.grid = ActiveGrid(cfg);
    const ActiveGrid& gr = mdl.grid;
    auto& prob = mdl.prob;

    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n) {
                auto hv = prob.add_hermitian(cfg.Nt);
                prob.add_psd(hv);
                mdl.Wv.push_back(hv);
            }
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n) {
            auto hv = prob.add_hermitian(cfg.Nt);
            prob.add_psd(hv);
            mdl.Vv.push_back(hv);
        }

    const int nu = gr.user_count();
    const int ne = gr.eve_count();
    mdl.alpha = prob.add_vars(nu, "alpha");
    mdl.tvar = prob.add_vars(nu, "t");
    mdl.beta = prob.add_vars(nu, "beta");
    mdl.zeta = prob.add_vars(ne, "zeta");
    mdl.beta_bar = prob.add_vars(ne, "bbar");
    mdl.tau = prob.add_vars(cfg.K, "tau");
    for (int i = 0; i < nu; ++i) {
        prob.add_nonneg(LinExpr::variable(mdl.alpha[i]));
        prob.add_nonneg(LinExpr(cfg.alpha_max) - LinExpr::variable(mdl.alpha[i]));
        prob.add_nonneg(LinExpr::variable(mdl.tvar[i]));
        prob.add_nonneg(LinExpr::variable(mdl.beta[i]));
    }
    for (int i = 0; i < ne; ++i) {
        prob.add_nonneg(LinExpr::variable(mdl.zeta[i]));
        prob.add_nonneg(LinExpr::variable(mdl.beta_bar[i]));
    }
    for (int k = 0; k < cfg.K; ++k) prob.add_nonneg(LinExpr::variable(mdl.tau[k]));

    LinExpr power;
    for (const auto& hv : mdl.Wv) power += hv.trace();
    for (const auto& hv : mdl.Vv) power += hv.trace();
    prob.set_objective(power);

    // hypograph of log2(1 + alpha), chords only (under-estimator)
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n) {
                const int i = gr.user_index(k, m, n);
                const auto ks = detail::pwl_knots(anchors.alpha[i], cfg.alpha_max,
                                                  cfg.pwl_segments, cluster_width);
                for (std::size_t s = 0; s + 1 < ks.size(); ++s) {
                    const double x0 = ks[s], x1 = ks[s + 1];
                    const double y0 = std::log2(1.0 + x0), y1 = std::log2(1.0 + x1);
                    const double slope = (y1 - y0) / (x1 - x0);
                    // t <= y0 + slope (alpha - x0)
                    prob.add_nonneg(LinExpr(y0 - slope * x0) +
                                    slope * LinExpr::variable(mdl.alpha[i]) -
                                    LinExpr::variable(mdl.tvar[i]));
                }
            }

    // C1a / C1b with the dispersion terms linearized at the anchors
    const double nb = static_cast<double>(cfg.n_bar);
    for (int k = 0; k < cfg.K; ++k) {
        const int cnt = cfg.M * gr.delay[k];
        LinExpr lhs;
        if (cnt > 0) {
            Eigen::VectorXd a_anchor(cnt);
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < gr.delay[k]; ++n)
                    a_anchor[m * gr.delay[k] + n] = anchors.alpha[gr.user_index(k, m, n)];
            const auto cs = fbl::taylor_C(a_anchor, fbl::CKind::user, cfg.eps[k], cfg);
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < gr.delay[k]; ++n) {
                    const int i = gr.user_index(k, m, n);
                    lhs += nb * LinExpr::variable(mdl.tvar[i]);
                    const double gcoef = cs.grad[m * gr.delay[k] + n];
                    lhs -= gcoef * LinExpr::variable(mdl.alpha[i]);
                    lhs += LinExpr(gcoef * a_anchor[m * gr.delay[k] + n]);
                }
            lhs -= LinExpr(cs.value_at_anchor);
        }
        lhs -= LinExpr::variable(mdl.tau[k]);
        lhs -= LinExpr(cfg.b_req[k]);
        prob.add_nonneg(std::move(lhs));

        for (int j = 0; j < cfg.J && cnt > 0; ++j) {
            Eigen::VectorXd z_anchor(cnt);
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < gr.delay[k]; ++n)
                    z_anchor[m * gr.delay[k] + n] = anchors.zeta[gr.eve_index(j, k, m, n)];
            const auto ce = fbl::taylor_C(z_anchor, fbl::CKind::eve, cfg.delta_for(j, k), cfg);
            LinExpr rhs = LinExpr::variable(mdl.tau[k]) - LinExpr(ce.value_at_anchor);
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < gr.delay[k]; ++n) {
                    const int i = gr.eve_index(j, k, m, n);
                    const double gcoef = ce.grad[m * gr.delay[k] + n];
                    rhs -= gcoef * LinExpr::variable(mdl.zeta[i]);
                    rhs += LinExpr(gcoef * z_anchor[m * gr.delay[k] + n]);
                }
            prob.add_nonneg(std::move(rhs));
        }
    }

    // C9 / C10 surrogates per active grid point
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n) {
                const int i = gr.user_index(k, m, n);
                LinExpr S = mdl.Wv[i].inner(ops.u(k, m, n));
                LinExpr intf;
                for (int l = 0; l < cfg.K; ++l) {
                    if (l == k || !gr.active(l, n)) continue;
                    intf += mdl.Wv[gr.user_index(l, m, n)].inner(ops.u(k, m, n));
                }
                intf += mdl.Vv[mdl.v_index(m, n)].inner(ops.u(k, m, n));
                add_c9_surrogate(prob, S, intf, mdl.alpha[i], mdl.beta[i],
                                 anchors.alpha[i], anchors.beta[i]);
                for (int j = 0; j < cfg.J; ++j) {
                    const int ie = gr.eve_index(j, k, m, n);
                    LinExpr Se = mdl.Wv[i].inner(ops.e(j, m, n));
                    LinExpr intfe;
                    for (int l = 0; l < cfg.K; ++l) {
                        if (l == k || !gr.active(l, n)) continue;
                        intfe += mdl.Wv[gr.user_index(l, m, n)].inner(ops.e(j, m, n));
                    }
                    intfe += mdl.Vv[mdl.v_index(m, n)].inner(ops.e(j, m, n));
                    add_c10_surrogate(prob, Se, intfe, mdl.zeta[ie], mdl.beta_bar[ie],
                                      anchors.zeta[ie], anchors.beta_bar[ie]);
                }
            }
    return mdl;
}

}  // namespace secirs::txopt
