// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "secirs/common.hpp"
#include "secirs/conic/problem.hpp"
#include "secirs/conic/solver.hpp"
#include "secirs/conic/spectral.hpp"
#include "secirs/scenario/channel.hpp"
#include "secirs/txopt/sca.hpp"

namespace secirs::irsopt {

/// Phase-shift solution of the lifted sub-problem: per-slot lifted matrices
/// with unit diagonal, the extracted unit-modulus phases, and the penalty
/// trace of the rank-reduction schedule.
struct PhaseSolution {
    bool solved = false;
    std::vector<Eigen::MatrixXcd> phi_lift;  // per slot, diag = 1
    std::vector<Eigen::VectorXcd> phi;       // extracted phases, |phi_i| = 1
    double p_watts = 0.0;                    // power implied by the scaling variable
    std::vector<double> rank_residuals;      // lambda2/lambda1 per slot
    double max_rank_residual = 0.0;
    bool rank_penalty_failed = false;
    bool monotone_at_fixed_lambda = true;
    int iterations = 0;

    struct TraceRow {
        int iter;
        double p_watts;
        double sum_r;
        double lambda;
        double max_rank_residual;
        double upsilon;
    };
    std::vector<TraceRow> trace;
};

/// Fixed data of the lifted phase problem, normalized so the current transmit
/// power and the noise are both one: B = G W G^H / sigma^2 and the scale
/// variable is p' = p / p_hat.
struct P2Data {
    int Ni1 = 0;  // N_I + 1
    double p_hat = 0.0;
    // per (k, m, n<=Dk): own-signal matrix and interference matrices
    std::vector<Eigen::MatrixXcd> b_user_sig;    // index: grid user_index
    std::vector<Eigen::MatrixXcd> b_user_intf;   // sum over l != k plus AN
    std::vector<Eigen::MatrixXcd> b_eve_sig;     // index: grid eve_index
    std::vector<Eigen::MatrixXcd> b_eve_intf;
    txopt::ActiveGrid grid;
};

inline P2Data make_p2_data(const std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>& W,
                           const std::vector<std::vector<Eigen::MatrixXcd>>& V,
                           const scenario::ChannelSet& cs,
                           const scenario::SystemConfig& cfg) {
    P2Data d;
    d.grid = txopt::ActiveGrid(cfg);
    d.Ni1 = cfg.Ni + 1;
    double ph = 0.0;
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < d.grid.delay[k]; ++n) ph += W[k][m][n].trace().real();
    for (int m = 0; m < cfg.M; ++m)
        for (int n = 0; n < cfg.N; ++n) ph += V[m][n].trace().real();
    d.p_hat = ph;
    if (!(ph > 0.0))
        throw std::invalid_argument("make_p2_data: no transmit power to scale against");

    const double inv_s2 = 1.0 / cfg.sigma2_w;
    d.b_user_sig.resize(d.grid.user_count());
    d.b_user_intf.resize(d.grid.user_count());
    d.b_eve_sig.resize(d.grid.eve_count());
    d.b_eve_intf.resize(d.grid.eve_count());
    for (int m = 0; m < cfg.M; ++m) {
        std::vector<Eigen::MatrixXcd> Gu(cfg.K), Ge(cfg.J);
        for (int k = 0; k < cfg.K; ++k) Gu[k] = scenario::composite_user(cs, k, m);
        for (int j = 0; j < cfg.J; ++j) Ge[j] = scenario::composite_eve(cs, j, m);
        for (int n = 0; n < cfg.N; ++n) {
            for (int k = 0; k < cfg.K; ++k) {
                if (!d.grid.active(k, n)) continue;
                const int i = d.grid.user_index(k, m, n);
                Eigen::MatrixXcd intf =
                    Gu[k] * V[m][n] * Gu[k].adjoint();
                for (int l = 0; l < cfg.K; ++l) {
                    if (l == k || !d.grid.active(l, n)) continue;
                    intf += Gu[k] * W[l][m][n] * Gu[k].adjoint();
                }
                d.b_user_sig[i] = inv_s2 * (Gu[k] * W[k][m][n] * Gu[k].adjoint());
                d.b_user_intf[i] = inv_s2 * intf;
                for (int j = 0; j < cfg.J; ++j) {
                    const int ie = d.grid.eve_index(j, k, m, n);
                    Eigen::MatrixXcd intfe = Ge[j] * V[m][n] * Ge[j].adjoint();
                    for (int l = 0; l < cfg.K; ++l) {
                        if (l == k || !d.grid.active(l, n)) continue;
                        intfe += Ge[j] * W[l][m][n] * Ge[j].adjoint();
                    }
                    d.b_eve_sig[ie] = inv_s2 * (Ge[j] * W[k][m][n] * Ge[j].adjoint());
                    d.b_eve_intf[ie] = inv_s2 * intfe;
                }
            }
        }
    }
    return d;
}

/// Handles into one penalty-SCA sub-problem.
struct P2Model {
    conic::ConicProblem prob;
    int p_var = -1;
    std::vector<int> r_vars;                 // per slot
    std::vector<std::vector<int>> re_vars;   // per slot, strict upper pairs
    std::vector<std::vector<int>> im_vars;
    int Ni1 = 0;

    /// Reassembles the normalized lifted matrix of one slot from a solution.
    Eigen::MatrixXcd phi_check(const Eigen::VectorXd& x, int n) const {
        Eigen::MatrixXcd M(Ni1, Ni1);
        const double p = x[p_var];
        for (int i = 0; i < Ni1; ++i) M(i, i) = p;
        int q = 0;
        for (int jj = 1; jj < Ni1; ++jj)
            for (int ii = 0; ii < jj; ++ii, ++q) {
                const cxd v(x[re_vars[n][q]], x[im_vars[n][q]]);
                M(ii, jj) = v;
                M(jj, ii) = std::conj(v);
            }
        return M;
    }
};

/// Real inner product tr(B * PhiExpr) as an affine expression over the shared
/// diagonal variable p and the off-diagonal variables of one slot.
inline conic::LinExpr phi_inner(const Eigen::MatrixXcd& B, int p_var,
                                const std::vector<int>& re, const std::vector<int>& im) {
    conic::LinExpr e;
    const int d = static_cast<int>(B.rows());
    double diag = 0.0;
    for (int i = 0; i < d; ++i) diag += B(i, i).real();
    e.add(p_var, diag);
    int q = 0;
    for (int j = 1; j < d; ++j)
        for (int i = 0; i < j; ++i, ++q) {
            e.add(re[q], 2.0 * B(i, j).real());
            e.add(im[q], 2.0 * B(i, j).imag());
        }
    return e;
}

/// Builds the penalized lifted phase problem at the eigenvector anchors U:
/// minimize p + lambda * sum_n r_n subject to the per-slot PSD lift with
/// uniform diagonal p, the linearized SINR-bound rows, and the rank-surrogate
/// LMIs r_n I - U^H PhiCheck U >= 0.
inline P2Model build_p2(const P2Data& d, const std::vector<double>& alpha_hat,
                        const std::vector<double>& zeta_hat,
                        const std::vector<Eigen::MatrixXcd>& U, double lambda,
                        const scenario::SystemConfig& cfg) {
    using conic::LinExpr;
    P2Model mdl;
    mdl.Ni1 = d.Ni1;
    auto& prob = mdl.prob;
    const int npairs = d.Ni1 * (d.Ni1 - 1) / 2;

    mdl.p_var = prob.add_var("p");
    prob.add_nonneg(LinExpr::variable(mdl.p_var));
    mdl.r_vars.resize(cfg.N);
    mdl.re_vars.assign(cfg.N, {});
    mdl.im_vars.assign(cfg.N, {});
    for (int n = 0; n < cfg.N; ++n) {
        mdl.r_vars[n] = prob.add_var("r" + std::to_string(n));
        prob.add_nonneg(LinExpr::variable(mdl.r_vars[n]));
        mdl.re_vars[n].reserve(npairs);
        mdl.im_vars[n].reserve(npairs);
        for (int q = 0; q < npairs; ++q) {
            mdl.re_vars[n].push_back(prob.add_var());
            mdl.im_vars[n].push_back(prob.add_var());
        }
    }

    LinExpr obj = LinExpr::variable(mdl.p_var);
    for (int n = 0; n < cfg.N; ++n) obj += lambda * LinExpr::variable(mdl.r_vars[n]);
    prob.set_objective(obj);

    // per-slot PSD lift with shared diagonal p
    for (int n = 0; n < cfg.N; ++n) {
        conic::HermExpr lift(d.Ni1);
        for (int i = 0; i < d.Ni1; ++i) lift.diag(i).add(mdl.p_var, 1.0);
        int q = 0;
        for (int jj = 1; jj < d.Ni1; ++jj)
            for (int ii = 0; ii < jj; ++ii, ++q) {
                lift.upper(ii, jj).add(mdl.re_vars[n][q], 1.0);
                lift.upper(ii, jj).add(mdl.im_vars[n][q], {0.0, 1.0});
            }
        prob.add_psd(std::move(lift));
    }

    // rank surrogate: r_n I - U^H PhiCheck U >= 0
    for (int n = 0; n < cfg.N; ++n) {
        const Eigen::MatrixXcd& Un = U[n];
        const int du = static_cast<int>(Un.cols());
        conic::HermExpr lmi(du);
        for (int a = 0; a < du; ++a) {
            LinExpr diag = LinExpr::variable(mdl.r_vars[n]);
            // p * (U^H U)_{aa} = p for orthonormal columns
            diag.add(mdl.p_var, -1.0);
            int q = 0;
            for (int jj = 1; jj < d.Ni1; ++jj)
                for (int ii = 0; ii < jj; ++ii, ++q) {
                    const cxd c = std::conj(Un(ii, a)) * Un(jj, a);
                    if (c != cxd(0.0, 0.0)) {
                        diag.add(mdl.re_vars[n][q], -2.0 * c.real());
                        diag.add(mdl.im_vars[n][q], 2.0 * c.imag());
                    }
                }
            lmi.diag(a) = std::move(diag);
            for (int b = a + 1; b < du; ++b) {
                conic::CxExpr ent;
                int qq = 0;
                for (int jj = 1; jj < d.Ni1; ++jj)
                    for (int ii = 0; ii < jj; ++ii, ++qq) {
                        const cxd c1 = std::conj(Un(ii, a)) * Un(jj, b);
                        const cxd c2 = std::conj(Un(jj, a)) * Un(ii, b);
                        ent.add(mdl.re_vars[n][qq], -(c1 + c2));
                        ent.add(mdl.im_vars[n][qq], -cxd(0.0, 1.0) * (c1 - c2));
                    }
                lmi.upper(a, b) = std::move(ent);
            }
        }
        prob.add_psd(std::move(lmi));
    }

    // linearized SINR-bound rows; the noise term stays unscaled by design
    const txopt::ActiveGrid& gr = d.grid;
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < gr.delay[k]; ++n) {
                const int i = gr.user_index(k, m, n);
                LinExpr row = phi_inner(d.b_user_sig[i], mdl.p_var, mdl.re_vars[n],
                                        mdl.im_vars[n]);
                row -= alpha_hat[i] * phi_inner(d.b_user_intf[i], mdl.p_var,
                                                mdl.re_vars[n], mdl.im_vars[n]);
                row.add_constant(-alpha_hat[i]);
                prob.add_nonneg(std::move(row));
                for (int j = 0; j < cfg.J; ++j) {
                    const int ie = gr.eve_index(j, k, m, n);
                    LinExpr rowe = zeta_hat[ie] * phi_inner(d.b_eve_intf[ie], mdl.p_var,
                                                            mdl.re_vars[n], mdl.im_vars[n]);
                    rowe -= phi_inner(d.b_eve_sig[ie], mdl.p_var, mdl.re_vars[n],
                                      mdl.im_vars[n]);
                    rowe.add_constant(zeta_hat[ie]);
                    prob.add_nonneg(std::move(rowe));
                }
            }
    return mdl;
}

/// Unit-modulus phases from a lifted matrix: dominant eigenvector, phase
/// reference fixed by the last entry (or the largest-magnitude entry when the
/// last one vanishes).
inline Eigen::VectorXcd extract_phases(const Eigen::MatrixXcd& phi_lift) {
    conic::require_hermitian(phi_lift);
    const int d = static_cast<int>(phi_lift.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (phi_lift + phi_lift.adjoint()));
    const Eigen::VectorXcd u = es.eigenvectors().col(d - 1);
    int ref = d - 1;
    if (std::abs(u[ref]) < 1e-12) {
        Eigen::Index imax = 0;
        u.cwiseAbs().maxCoeff(&imax);
        ref = static_cast<int>(imax);
    }
    const cxd phase_ref = u[ref] / std::abs(u[ref]);
    Eigen::VectorXcd phi(d - 1);
    for (int i = 0; i < d - 1; ++i) {
        const cxd v = u[i] / phase_ref;
        // the lift stores conj(phi); invert it and project to unit modulus
        phi[i] = std::abs(v) > 1e-14 ? cxd(std::conj(v) / std::abs(v)) : cxd(1.0, 0.0);
    }
    return phi;
}

/// As above, but when the lift is far from rank one additionally tries
/// Gaussian-randomized candidates and keeps the best according to `score`.
template <typename Scorer>
Eigen::VectorXcd extract_phases_randomized(const Eigen::MatrixXcd& phi_lift,
                                           const Scorer& score, std::uint64_t seed,
                                           int candidates = 100) {
    Eigen::VectorXcd best = extract_phases(phi_lift);
    if (conic::rank_residual(phi_lift) <= 1e-4) return best;
    double best_score = score(best);
    const int d = static_cast<int>(phi_lift.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (phi_lift + phi_lift.adjoint()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXcd half = es.eigenvectors() * ev.asDiagonal();
    Rng rng(mix_seed(seed, 0x9e15u));
    for (int c = 0; c < candidates; ++c) {
        Eigen::VectorXcd y(d);
        for (int i = 0; i < d; ++i) y[i] = rng.cnormal();
        Eigen::VectorXcd v = half * y;
        const cxd refv = v[d - 1];
        const cxd phase_ref =
            std::abs(refv) > 1e-12 ? cxd(refv / std::abs(refv)) : cxd(1.0, 0.0);
        Eigen::VectorXcd cand(d - 1);
        for (int i = 0; i < d - 1; ++i) {
            const cxd w = v[i] / phase_ref;
            cand[i] = std::abs(w) > 1e-14 ? cxd(std::conj(w) / std::abs(w)) : cxd(1.0, 0.0);
        }
        const double s = score(cand);
        if (s > best_score) {
            best_score = s;
            best = cand;
        }
    }
    return best;
}

/// Penalty SCA over the lifted, scaled phase matrix: eigenvector anchors from
/// the previous iterate, geometric growth of the rank penalty, stop on the
/// relative change of the penalized objective once the lift is numerically
/// rank one.
inline PhaseSolution solve_p2_penalty(
    const std::vector<std::vector<std::vector<Eigen::MatrixXcd>>>& W,
    const std::vector<std::vector<Eigen::MatrixXcd>>& V,
    const std::vector<double>& alpha_hat, const std::vector<double>& zeta_hat,
    const scenario::ChannelSet& cs, const std::vector<Eigen::MatrixXcd>& lift_current,
    const scenario::SystemConfig& cfg, std::uint64_t seed = 0) {
    PhaseSolution out;
    const P2Data d = make_p2_data(W, V, cs, cfg);

    // start from the current lifted matrices (p_hat times the current lift in
    // unnormalized units), p' = 1; feasible by the scaling substitution
    std::vector<Eigen::MatrixXcd> check = lift_current;

    double lambda = cfg.irs_lambda1;
    double prev_upsilon = std::numeric_limits<double>::infinity();
    double prev_p = 1.0, prev_sum_r = 0.0;
    double p_cur = 1.0;
    bool have = false;
    for (int it = 0; it < cfg.irs_max_iters; ++it) {
        std::vector<Eigen::MatrixXcd> U(cfg.N);
        for (int n = 0; n < cfg.N; ++n)
            U[n] = conic::smallest_eigvecs(check[n], cfg.Ni);
        P2Model mdl = build_p2(d, alpha_hat, zeta_hat, U, lambda, cfg);
        conic::ConicSolution sol = conic::solve(mdl.prob, cfg.solver_tol);
        if (!sol.ok()) sol = conic::solve(mdl.prob, cfg.solver_tol * 100.0);
        if (!sol.ok()) break;
        have = true;
        p_cur = sol.x[mdl.p_var];
        double sum_r = 0.0;
        for (int n = 0; n < cfg.N; ++n) sum_r += sol.x[mdl.r_vars[n]];
        for (int n = 0; n < cfg.N; ++n) check[n] = mdl.phi_check(sol.x, n);

        double max_res = 0.0;
        out.rank_residuals.assign(cfg.N, 0.0);
        for (int n = 0; n < cfg.N; ++n) {
            out.rank_residuals[n] = conic::rank_residual(check[n]);
            max_res = std::max(max_res, out.rank_residuals[n]);
        }
        const double upsilon = p_cur + lambda * sum_r;
        // monotone at the previous lambda: the prior iterate stays feasible
        if (std::isfinite(prev_upsilon)) {
            const double prev_at_lambda = prev_p + lambda * prev_sum_r;
            const double cur_at_lambda = p_cur + lambda * sum_r;
            if (cur_at_lambda > prev_at_lambda * (1.0 + 1e-6))
                out.monotone_at_fixed_lambda = false;
        }
        out.trace.push_back({it + 1, p_cur * d.p_hat, sum_r * d.p_hat, lambda, max_res,
                             upsilon * d.p_hat});
        out.iterations = it + 1;
        out.max_rank_residual = max_res;

        const bool obj_settled =
            std::isfinite(prev_upsilon) &&
            std::abs(upsilon - prev_upsilon) <= cfg.irs_er_sca * std::abs(prev_upsilon);
        prev_upsilon = upsilon;
        prev_p = p_cur;
        prev_sum_r = sum_r;
        if (obj_settled && max_res <= 1e-4) break;
        if (obj_settled && lambda >= cfg.irs_lambda_max) {
            if (sum_r > 1e-3) out.rank_penalty_failed = true;
            break;
        }
        lambda = std::min(cfg.irs_eta * lambda, cfg.irs_lambda_max);
    }
    if (!have) return out;

    out.solved = true;
    out.p_watts = p_cur * d.p_hat;
    out.phi_lift.resize(cfg.N);
    out.phi.resize(cfg.N);
    for (int n = 0; n < cfg.N; ++n)
        out.phi_lift[n] = check[n] / p_cur;  // unit diagonal by construction
    for (int n = 0; n < cfg.N; ++n) {
        // QoS margin of a candidate phase vector at the scaled transmit point
        auto scorer = [&](const Eigen::VectorXcd& cand) {
            std::vector<Eigen::MatrixXcd> lift_eval(cfg.N);
            for (int nn = 0; nn < cfg.N; ++nn)
                lift_eval[nn] = nn == n ? scenario::lifted_phase_matrix(cand)
                                        : out.phi_lift[nn];
            double margin = std::numeric_limits<double>::infinity();
            const auto ops = txopt::make_trace_ops(cs, lift_eval, cfg);
            auto Ws = W;
            auto Vs = V;
            for (auto& a : Ws)
                for (auto& b : a)
                    for (auto& c : b)
                        if (c.size() > 0) c *= p_cur;
            for (auto& a : Vs)
                for (auto& b : a) b *= p_cur;
            const auto t = txopt::tensor_from_ops(ops, Ws, Vs, cfg, d.grid);
            for (int k = 0; k < cfg.K; ++k)
                margin = std::min(margin,
                                  fbl::secure_bits(t, cfg, k).b_bar - cfg.b_req[k]);
            return margin;
        };
        out.phi[n] = out.rank_residuals[n] > 1e-4
                         ? extract_phases_randomized(out.phi_lift[n], scorer,
                                                     mix_seed(seed, 0x701 + n))
                         : extract_phases(out.phi_lift[n]);
    }
    return out;
}

}  // namespace secirs::irsopt
