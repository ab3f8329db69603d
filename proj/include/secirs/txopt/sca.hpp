// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "secirs/txopt/p1.hpp"

namespace secirs::txopt {

/// Raw variable values of one solved SCA sub-problem.
struct P1Values {
    double objective = 0.0;
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> W;
    std::vector<std::vector<Eigen::MatrixXcd>> V;
    Eigen::VectorXd alpha, beta, zeta, beta_bar, tau;
};

inline P1Values read_p1(const P1Model& mdl, const conic::ConicSolution& sol,
                        const scenario::SystemConfig& cfg) {
    P1Values v;
    v.objective = sol.objective;
    const ActiveGrid& gr = mdl.grid;
    v.W.assign(cfg.K, std::vector<std::vector<Eigen::MatrixXcd>>(
                          cfg.M, std::vector<Eigen::MatrixXcd>(cfg.N)));
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n)
                v.W[k][m][n] = mdl.Wv[gr.user_index(k, m, n)].value(sol.x);
    v.V.assign(cfg.M, std::vector<Eigen::MatrixXcd>(cfg.N));
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n) v.V[m][n] = mdl.Vv[mdl.v_index(m, n)].value(sol.x);
    auto gather = [&sol](const std::vector<int>& idx) {
        Eigen::VectorXd out(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = sol.x[idx[i]];
        return out;
    };
    v.alpha = gather(mdl.alpha);
    v.beta = gather(mdl.beta);
    v.zeta = gather(mdl.zeta);
    v.beta_bar = gather(mdl.beta_bar);
    v.tau = gather(mdl.tau);
    return v;
}

/// Noise-normalized SINRs recomputed from solution matrices (masked slots are
/// zero). Independent of the solver's alpha/zeta variables.
inline fbl::SinrTensor tensor_from_ops(
    const TraceOps& ops, const std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>& W,
    const std::vector<std::vector<Eigen::MatrixXcd>>& V, const scenario::SystemConfig& cfg,
    const ActiveGrid& gr) {
    fbl::SinrTensor t(cfg.K, cfg.J, cfg.M, cfg.N);
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n) {
            for (int k = 0; k < cfg.K; ++k) {
                if (!gr.active(k, n)) continue;
                double sig = 0.0, intf = 0.0;
                for (int l = 0; l < cfg.K; ++l) {
                    if (!gr.active(l, n) || W[l][m][n].size() == 0) continue;
                    const double tr = detail::hermitian_rtrace(ops.u(k, m, n), W[l][m][n]);
                    (l == k ? sig : intf) += tr;
                }
                if (V[m][n].size() > 0)
                    intf += detail::hermitian_rtrace(ops.u(k, m, n), V[m][n]);
                t.at_user(k, m, n) = std::max(sig, 0.0) / (1.0 + std::max(intf, 0.0));
                for (int j = 0; j < cfg.J; ++j) {
                    double sige = 0.0, intfe = 0.0;
                    for (int l = 0; l < cfg.K; ++l) {
                        if (!gr.active(l, n) || W[l][m][n].size() == 0) continue;
                        const double tr =
                            detail::hermitian_rtrace(ops.e(j, m, n), W[l][m][n]);
                        (l == k ? sige : intfe) += tr;
                    }
                    if (V[m][n].size() > 0)
                        intfe += detail::hermitian_rtrace(ops.e(j, m, n), V[m][n]);
                    t.at_eve(j, k, m, n) =
                        std::max(sige, 0.0) / (1.0 + std::max(intfe, 0.0));
                }
            }
        }
    return t;
}

/// Floors anchor entries that would make the sqrt-term gradient singular.
inline void sanitize_anchors(ScaAnchors& a) {
    auto floor_vec = [](Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 1e-9);
    };
    floor_vec(a.alpha);
    floor_vec(a.zeta);
    for (int i = 0; i < a.beta.size(); ++i) a.beta[i] = std::max(a.beta[i], 1.0);
    for (int i = 0; i < a.beta_bar.size(); ++i) a.beta_bar[i] = std::max(a.beta_bar[i], 1.0);
}

/// Anchors evaluated exactly at a (W, V) point: alpha/zeta are the achieved
/// SINRs, beta/beta_bar the achieved interference-plus-noise levels, making
/// every surrogate tight there.
inline ScaAnchors anchors_at_point(
    const TraceOps& ops, const std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>& W,
    const std::vector<std::vector<Eigen::MatrixXcd>>& V, const scenario::SystemConfig& cfg,
    const ActiveGrid& gr) {
    ScaAnchors a;
    a.alpha.setZero(gr.user_count());
    a.beta.setOnes(gr.user_count());
    a.zeta.setZero(gr.eve_count());
    a.beta_bar.setOnes(gr.eve_count());
    a.tau.setZero(cfg.K);
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n)
            for (int k = 0; k < cfg.K; ++k) {
                if (!gr.active(k, n)) continue;
                const int i = gr.user_index(k, m, n);
                double sig = 0.0, intf = 0.0;
                for (int l = 0; l < cfg.K; ++l) {
                    if (!gr.active(l, n) || W[l][m][n].size() == 0) continue;
                    const double tr = detail::hermitian_rtrace(ops.u(k, m, n), W[l][m][n]);
                    (l == k ? sig : intf) += tr;
                }
                if (V[m][n].size() > 0)
                    intf += detail::hermitian_rtrace(ops.u(k, m, n), V[m][n]);
                a.beta[i] = 1.0 + std::max(intf, 0.0);
                a.alpha[i] = std::max(sig, 0.0) / a.beta[i];
                for (int j = 0; j < cfg.J; ++j) {
                    const int ie = gr.eve_index(j, k, m, n);
                    double sige = 0.0, intfe = 0.0;
                    for (int l = 0; l < cfg.K; ++l) {
                        if (!gr.active(l, n) || W[l][m][n].size() == 0) continue;
                        const double tr =
                            detail::hermitian_rtrace(ops.e(j, m, n), W[l][m][n]);
                        (l == k ? sige : intfe) += tr;
                    }
                    if (V[m][n].size() > 0)
                        intfe += detail::hermitian_rtrace(ops.e(j, m, n), V[m][n]);
                    a.beta_bar[ie] = 1.0 + std::max(intfe, 0.0);
                    a.zeta[ie] = std::max(sige, 0.0) / a.beta_bar[ie];
                }
            }
    return a;
}

/// Starting point for the transmit SCA: per-(m,n) regularized zero-forcing
/// beam directions (plain matched filtering when a slot serves one user, where
/// inter-user interference would otherwise cap the rate below any demand),
/// zero AN, and a common per-beam power swept then bisected until every user's
/// secure-bits demand holds. Returns nullopt when the demand is unreachable
/// below ten times the power cap (draw declared infeasible).
struct InitPoint {
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> W;
    std::vector<std::vector<Eigen::MatrixXcd>> V;
    ScaAnchors anchors;
};

inline std::optional<InitPoint> initialize_transmit_point(
    const scenario::ChannelSet& cs, const std::vector<Eigen::MatrixXcd>& phi_lift,
    const TraceOps& ops, const scenario::SystemConfig& cfg) {
    const ActiveGrid gr(cfg);
    std::vector<Eigen::VectorXcd> phi(cfg.N);
    for (int n = 0; n < cfg.N; ++n) {
        // recover a representative phase vector from the lift
        Eigen::VectorXcd ph(cs.Ni);
        for (int i = 0; i < cs.Ni; ++i) {
            const cxd v = phi_lift[n](i, cs.Ni);
            ph[i] = std::abs(v) > 0 ? cxd(std::conj(v) / std::abs(v)) : cxd(1.0, 0.0);
        }
        phi[n] = ph;
    }

    InitPoint pt;
    pt.W.assign(cfg.K, std::vector<std::vector<Eigen::MatrixXcd>>(
                           cfg.M, std::vector<Eigen::MatrixXcd>(cfg.N)));
    pt.V.assign(cfg.M, std::vector<Eigen::MatrixXcd>(
                           cfg.N, Eigen::MatrixXcd::Zero(cfg.Nt, cfg.Nt)));
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> dirs(
        cfg.K, std::vector<std::vector<Eigen::VectorXcd>>(
                   cfg.M, std::vector<Eigen::VectorXcd>(cfg.N)));
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n) {
            Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(cfg.Nt, cfg.Nt);
            double tr = 0.0;
            for (int l = 0; l < cfg.K; ++l) {
                if (!gr.active(l, n)) continue;
                const Eigen::VectorXcd h = cs.effective_user(l, m, phi[n]).adjoint();
                gram += h * h.adjoint();
                tr += h.squaredNorm();
            }
            gram += std::max(tr, 1e-300) * 1e-4 / cfg.Nt *
                    Eigen::MatrixXcd::Identity(cfg.Nt, cfg.Nt);
            const Eigen::MatrixXcd ginv = gram.inverse();
            for (int k = 0; k < cfg.K; ++k) {
                if (!gr.active(k, n)) continue;
                const Eigen::VectorXcd h = cs.effective_user(k, m, phi[n]).adjoint();
                Eigen::VectorXcd d = ginv * h;
                const double nn = d.norm();
                dirs[k][m][n] = nn > 0 ? Eigen::VectorXcd(d / nn)
                                       : Eigen::VectorXcd(Eigen::VectorXcd::Unit(cfg.Nt, 0));
            }
        }

    // beam power p with an isotropic AN share per (m,n); leakage-limited draws
    // (no IRS, strong eavesdroppers) often need the jamming to reach the demand
    auto apply_power = [&](double p, double an_ratio) {
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < gr.delay[k]; ++n)
                    pt.W[k][m][n] = p * dirs[k][m][n] * dirs[k][m][n].adjoint();
        const double an = an_ratio * p / cfg.Nt;
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n)
                pt.V[m][n] = an * Eigen::MatrixXcd::Identity(cfg.Nt, cfg.Nt);
    };
    auto passes = [&](double p, double an_ratio) {
        apply_power(p, an_ratio);
        const auto t = tensor_from_ops(ops, pt.W, pt.V, cfg, gr);
        for (int k = 0; k < cfg.K; ++k) {
            const auto bb = fbl::secure_bits(t, cfg, k);
            if (bb.b_bar < cfg.b_req[k]) return false;
        }
        return true;
    };

    const double p_cap = 10.0 * cfg.p_cap_w();
    double p_pass = -1.0, p_fail = 0.0, an_pass = 0.0;
    if (passes(0.0, 0.0)) {
        p_pass = 0.0;
    } else {
        for (double an : {0.0, 0.5, 2.0, 8.0}) {
            p_fail = 0.0;
            for (double p = 1e-9; p <= p_cap; p *= 2.0) {
                if (passes(p, an)) {
                    p_pass = p;
                    an_pass = an;
                    break;
                }
                p_fail = p;
            }
            if (p_pass >= 0.0) break;
        }
    }
    if (p_pass < 0.0) return std::nullopt;
    for (int it = 0; it < 16 && p_pass > 0.0; ++it) {
        const double mid = 0.5 * (p_fail + p_pass);
        if (mid <= 0.0) break;
        if (passes(mid, an_pass))
            p_pass = mid;
        else
            p_fail = mid;
    }
    apply_power(p_pass, an_pass);
    pt.anchors = anchors_at_point(ops, pt.W, pt.V, cfg, gr);
    return pt;
}

}  // namespace secirs::txopt
