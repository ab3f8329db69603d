// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "secirs/txopt/sca.hpp"

namespace secirs::txopt {

/// Rank-one extraction: principal eigenvector when the matrix is already
/// numerically rank one, otherwise Gaussian randomization with the candidate
/// powers fixed to tr(W) and a joint rescale to restore the QoS.
inline void extract_beamformers(TxSolution& sol, const TraceOps& ops,
                                const scenario::SystemConfig& cfg, std::uint64_t seed) {
    const ActiveGrid gr(cfg);
    sol.w.assign(cfg.K, std::vector<std::vector<Eigen::VectorXcd>>(
                            cfg.M, std::vector<Eigen::VectorXcd>(cfg.N)));
    sol.max_rank_residual = 0.0;
    sol.extraction_randomized = false;
    const double total_tr = std::max(sol.total_power, 1e-30);

    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n) {
                if (!gr.active(k, n)) {
                    sol.w[k][m][n] = Eigen::VectorXcd::Zero(cfg.Nt);
                    continue;
                }
                const Eigen::MatrixXcd& W = sol.W[k][m][n];
                const double tr = W.trace().real();
                if (tr <= 1e-12 * total_tr) {
                    sol.w[k][m][n] = Eigen::VectorXcd::Zero(cfg.Nt);
                    continue;
                }
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W);
                const auto& ev = es.eigenvalues();
                const double l1 = ev[cfg.Nt - 1];
                const double l2 = cfg.Nt > 1 ? std::max(ev[cfg.Nt - 2], 0.0) : 0.0;
                const double resid = l1 > 0 ? l2 / l1 : 0.0;
                sol.max_rank_residual = std::max(sol.max_rank_residual, resid);
                Eigen::VectorXcd w = std::sqrt(std::max(l1, 0.0)) *
                                     es.eigenvectors().col(cfg.Nt - 1);
                if (resid > 1e-4) {
                    sol.extraction_randomized = true;
                    Rng rng(mix_seed(seed, 0xbea3u + 7919u * gr.user_index(k, m, n)));
                    const Eigen::MatrixXcd Whalf = es.operatorSqrt();
                    auto own_signal = [&](const Eigen::VectorXcd& v) {
                        return (v.adjoint() * (ops.u(k, m, n) * v)).eval()(0, 0).real();
                    };
                    double best = own_signal(w);
                    for (int c = 0; c < 100; ++c) {
                        Eigen::VectorXcd y(cfg.Nt);
                        for (int i = 0; i < cfg.Nt; ++i) y[i] = rng.cnormal();
                        Eigen::VectorXcd cand = Whalf * y;
                        const double nn = cand.squaredNorm();
                        if (nn <= 0) continue;
                        cand *= std::sqrt(tr / nn);
                        const double score = own_signal(cand);
                        if (score > best) {
                            best = score;
                            w = cand;
                        }
                    }
                }
                sol.w[k][m][n] = w;
            }

    // QoS re-check with the rank-one beams; a common power rescale (at most 2x)
    // absorbs the extraction loss.
    auto beams_at = [&](double rho) {
        std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> Wr(
            cfg.K, std::vector<std::vector<Eigen::MatrixXcd>>(
                       cfg.M, std::vector<Eigen::MatrixXcd>(cfg.N)));
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < cfg.N; ++n)
                    if (gr.active(k, n))
                        Wr[k][m][n] = rho * sol.w[k][m][n] * sol.w[k][m][n].adjoint();
        return Wr;
    };
    auto margin_at = [&](double rho) {
        const auto t = tensor_from_ops(ops, beams_at(rho), sol.V, cfg, gr);
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < cfg.K; ++k) {
            const auto bb = fbl::secure_bits(t, cfg, k);
            worst = std::min(worst, bb.b_bar - cfg.b_req[k] * (1.0 - 1e-3));
        }
        return worst;
    };

    double rho = 1.0;
    if (margin_at(1.0) < 0.0) {
        if (margin_at(2.0) < 0.0) {
            sol.extraction_degraded = true;
            rho = 2.0;
        } else {
            double lo = 1.0, hi = 2.0;
            for (int it = 0; it < 24; ++it) {
                const double mid = 0.5 * (lo + hi);
                (margin_at(mid) >= 0.0 ? hi : lo) = mid;
            }
            rho = hi;
        }
    }
    sol.extraction_inflation = rho;
    const double root = std::sqrt(rho);
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n)
                if (gr.active(k, n)) sol.w[k][m][n] *= root;

    const auto t = tensor_from_ops(ops, beams_at(1.0), sol.V, cfg, gr);
    sol.per_user_extracted.clear();
    for (int k = 0; k < cfg.K; ++k)
        sol.per_user_extracted.push_back(fbl::secure_bits(t, cfg, k));
}

/// Successive convex approximation for the transmit sub-problem at fixed IRS
/// phases. `warm` carries the anchors of a known-feasible point (from the
/// previous alternation step); without it an MRT sweep builds one.
inline TxSolution solve_p1_sca(const scenario::ChannelSet& cs,
                               const std::vector<Eigen::MatrixXcd>& phi_lift,
                               const std::optional<ScaAnchors>& warm,
                               const scenario::SystemConfig& cfg,
                               std::uint64_t seed = 0) {
    TxSolution out;
    const ActiveGrid gr(cfg);
    const TraceOps ops = make_trace_ops(cs, phi_lift, cfg);

    ScaAnchors anchors;  // exact values at the current feasible point
    if (warm.has_value()) {
        anchors = *warm;
    } else {
        auto init = initialize_transmit_point(cs, phi_lift, ops, cfg);
        if (!init.has_value()) {
            out.feasible = false;
            return out;
        }
        anchors = init->anchors;
    }

    P1Values cur;
    bool have_cur = false;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.tx_max_iters; ++it) {
        const double width = std::max(0.5 * std::pow(0.6, it), 5e-4);
        ScaAnchors banchors = anchors;  // floored copy for the gradient expansions
        sanitize_anchors(banchors);
        P1Model mdl = build_p1(ops, banchors, cfg, width);
        conic::ConicSolution sol = conic::solve(mdl.prob, cfg.solver_tol);
        if (!sol.ok() && sol.status != conic::SolveStatus::infeasible)
            sol = conic::solve(mdl.prob, cfg.solver_tol * 100.0);
        if (!sol.ok()) {
            if (!have_cur) {
                out.feasible = false;
                return out;
            }
            break;  // keep the last good iterate
        }
        cur = read_p1(mdl, sol, cfg);
        have_cur = true;
        out.sca_trace.push_back(cur.objective);
        if (cur.objective > prev_obj * (1.0 + 1e-6)) out.sca_monotone = false;
        // Re-anchor on the SINRs achieved by the optimal (W, V). Where the
        // bounding constraints bind these equal the solver's alpha/zeta; where
        // they are slack the interior-point solution centers the bound
        // variables, and the achieved values give the tighter expansion.
        anchors = anchors_at_point(ops, cur.W, cur.V, cfg, gr);
        anchors.tau = cur.tau;
        const bool converged =
            std::isfinite(prev_obj) &&
            std::abs(prev_obj - cur.objective) <= cfg.tx_er_sca * std::max(prev_obj, 1e-12);
        prev_obj = cur.objective;
        out.iterations = it + 1;
        if (converged) break;
    }
    if (!have_cur) {
        out.feasible = false;
        return out;
    }

    out.feasible = true;
    out.W = cur.W;
    out.V = cur.V;
    out.total_power = cur.objective;
    out.anchors = anchors;

    // Tightness of the returned SINR bounding values against the achieved
    // SINRs. The returned alpha/zeta are the achieved values wherever the
    // solver left slack, so this measures the re-anchoring consistency; the
    // raw solver bounds are kept as a diagnostic.
    const auto t = tensor_from_ops(ops, out.W, out.V, cfg, gr);
    double gap = 0.0, raw_gap = 0.0;
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n) {
                const int i = gr.user_index(k, m, n);
                const double g = t.at_user(k, m, n);
                gap = std::max(gap, std::abs(out.anchors.alpha[i] - g) / std::max(g, 1e-9));
                raw_gap = std::max(raw_gap, std::abs(cur.alpha[i] - g) / std::max(g, 1e-9));
                for (int j = 0; j < cfg.J; ++j) {
                    const int ie = gr.eve_index(j, k, m, n);
                    const double ge = t.at_eve(j, k, m, n);
                    gap = std::max(gap,
                                   std::abs(out.anchors.zeta[ie] - ge) / std::max(ge, 1e-9));
                    raw_gap = std::max(raw_gap,
                                       std::abs(cur.zeta[ie] - ge) / std::max(ge, 1e-9));
                }
            }
    out.max_tightness_gap = gap;
    out.raw_bound_gap = raw_gap;
    out.per_user.clear();
    for (int k = 0; k < cfg.K; ++k) out.per_user.push_back(fbl::secure_bits(t, cfg, k));

    extract_beamformers(out, ops, cfg, seed);
    return out;
}

}  // namespace secirs::txopt
