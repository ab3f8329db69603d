// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include "secirs/conic/problem.hpp"
#include "secirs/conic/solution.hpp"
#include "secirs/conic/svec.hpp"

namespace secirs::conic {

// Primal-dual path-following solver for the homogeneous self-dual embedding of
//   min c'x  s.t.  Ax = b,  Gx + s = h,  s in K,
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step. The cone
// K is a product of the nonnegative orthant, second-order cones, and PSD cones
// over real symmetric or complex Hermitian matrices; Hermitian blocks are
// handled natively (no real embedding, so no doubled eigenvalue multiplicity).
//
// Each KKT solve eliminates the cone block and factors the reduced saddle
// system [[H + dI, A'], [A, -dI]] with H = G'(W'W)^-1 G, followed by iterative
// refinement against the unregularized 3x3 system.

struct SolverSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double feastol_inacc = 1e-4;
    double abstol_inacc = 5e-5;
    double reltol_inacc = 5e-5;
    int max_iters = 100;
    double step_scale = 0.99;
    double step_min = 1e-7;
    double step_max = 0.9999;
    double sigma_min = 1e-4;
    double sigma_max = 0.9999;
    double static_reg = 1e-9;
    int refine_iters = 3;
    double refine_stop = 5e-14;
    int equil_iters = 3;
    double safeguard = 500.0;
    bool verbose = false;
};

namespace detail {

/// Pivoted LDLT with clamped tiny pivots: solution components along collapsed
/// pivot directions are dropped rather than amplified (modified-Cholesky
/// handling of the rank-degenerate normal equations an interior-point method
/// produces near convergence).
struct ClampedLdlt {
    Eigen::LDLT<Eigen::MatrixXd> f;
    Eigen::VectorXd dinv;

    bool compute(const Eigen::MatrixXd& M) {
        f.compute(M);
        if (f.info() != Eigen::Success) return false;
        const Eigen::VectorXd d = f.vectorD();
        const double dmax = d.maxCoeff();
        if (!(dmax > 0.0) || !std::isfinite(dmax)) return false;
        dinv.resize(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i)
            dinv[i] = d[i] > dmax * 1e-14 ? 1.0 / d[i] : 0.0;
        return true;
    }

    template <typename Rhs>
    Eigen::MatrixXd solve(const Rhs& b) const {
        Eigen::MatrixXd t = f.transpositionsP() * Eigen::MatrixXd(b);
        f.matrixL().solveInPlace(t);
        t.array().colwise() *= dinv.array();
        f.matrixU().solveInPlace(t);
        return f.transpositionsP().transpose() * t;
    }
};

struct LpBlock {
    int offset = 0;
    int dim = 0;
    Eigen::VectorXd w2;  // s ./ z
    Eigen::VectorXd w;   // sqrt(w2)
};

struct SocBlock {
    int offset = 0;
    int dim = 0;
    double eta = 1.0;  // scaling magnitude
    double a = 0.0;    // NT point head
    Eigen::VectorXd q;  // NT point tail
};

struct PsdBlock {
    int offset = 0;
    int dim = 0;
    bool herm = false;
    int vdim = 0;
    // complex-path state (herm) and real-path state share names via two sets
    Eigen::MatrixXcd Rc, Rinvc, Tc, Tinvc;
    Eigen::MatrixXd Rr, Rinvr, Tr, Tinvr;
    Eigen::VectorXd sigma;  // NT scaled spectrum
    // work buffers
    mutable Eigen::MatrixXcd W1c, W2c;
    mutable Eigen::MatrixXd W1r, W2r;

    void alloc() {
        vdim = herm ? svec_dim_herm(dim) : svec_dim_sym(dim);
        if (herm) {
            W1c.resize(dim, dim);
            W2c.resize(dim, dim);
        } else {
            W1r.resize(dim, dim);
            W2r.resize(dim, dim);
        }
        sigma.resize(dim);
    }
};

// Cholesky-SVD computation of the NT scaling for a PSD block:
//   L_s = chol(S), L_z = chol(Z), L_z^H L_s = U Sig V^H,
//   R = L_s V Sig^{-1/2},  R^{-1} = Sig^{-1/2} U^H L_z^H,  T = R R^H.
// The scaled point is diagonal: R^H Z R = R^{-1} S R^{-H} = Sig.
template <typename Mat>
bool nt_scaling(const Mat& S, const Mat& Z, Mat& R, Mat& Rinv, Mat& T, Mat& Tinv,
                Eigen::VectorXd& sigma) {
    Eigen::LLT<Mat> ls(S);
    if (ls.info() != Eigen::Success) return false;
    Eigen::LLT<Mat> lz(Z);
    if (lz.info() != Eigen::Success) return false;
    const Mat Ls = ls.matrixL();
    const Mat Lz = lz.matrixL();
    Eigen::JacobiSVD<Mat> svd(Lz.adjoint() * Ls, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    if (sigma.minCoeff() <= 0.0 || !sigma.allFinite()) return false;
    const Eigen::VectorXd isq = sigma.cwiseSqrt().cwiseInverse();
    R = Ls * svd.matrixV() * isq.asDiagonal();
    Rinv = isq.asDiagonal() * svd.matrixU().adjoint() * Lz.adjoint();
    T = R * R.adjoint();
    Tinv = Rinv.adjoint() * Rinv;
    return true;
}

}  // namespace detail

class IpmSolver {
  public:
    explicit IpmSolver(SolverSettings settings = {}) : st_(settings) {}

    SolverSettings& settings() { return st_; }

    ConicSolution solve(const ConicProblem& problem, double tol) {
        SolverSettings s = st_;
        s.feastol = s.abstol = s.reltol = tol;
        IpmSolver inner(s);
        return inner.solve(problem.compile());
    }

    ConicSolution solve(const ConicProblem& problem) { return solve(problem.compile()); }

    ConicSolution solve(StandardForm sf) {
        if (!(st_.feastol > 0)) throw std::invalid_argument("solver tolerance must be > 0");
        if (sf.cones.total_dim() == 0)
            throw std::invalid_argument("conic solve requires at least one cone constraint");
        setup(sf);
        return run();
    }

  private:
    using VecXd = Eigen::VectorXd;
    using MatXd = Eigen::MatrixXd;
    using SpMat = Eigen::SparseMatrix<double>;

    SolverSettings st_;

    int n_ = 0, p_ = 0, m_ = 0;
    SpMat A_, G_, At_, Gt_;
    VecXd c_, b_, h_;
    VecXd e_col_, e_rowA_, e_rowG_;

    detail::LpBlock lp_;
    std::vector<detail::SocBlock> socs_;
    std::vector<detail::PsdBlock> psds_;
    std::vector<int> row_psd_;  // row -> psd block index (or -1)
    int barrier_nu_ = 0;

    // iterate
    VecXd x_, y_, z_, s_, lambda_;
    double tau_ = 1.0, kap_ = 1.0;

    // residual state
    VecXd rx_, ry_, rz_;
    double rt_ = 0, hresx_ = 0, hresy_ = 0, hresz_ = 0;
    double cx_ = 0, by_ = 0, hz_ = 0;
    double resx0_ = 1, resy0_ = 1, resz0_ = 1;

    struct Info {
        double pcost = 0, dcost = 0, gap = 0, mu = 0;
        double pres = 0, dres = 0;
        std::optional<double> relgap, pinfres, dinfres;
        double kapovert = 0;
    } info_;

    // KKT strategy: large PSD blocks are eliminated into H = G'(W'W)^-1 G,
    // which is cheap but squares their conditioning; small cone blocks and LP
    // rows with collapsed scaling (the active constraints near convergence,
    // where that squaring destroys the search direction) are instead kept in
    // augmented form and solved through the Schur complement
    //   S = F + B H^-1 B',  B = [G_aug; A],  F = blkdiag(W'W_aug, delta*I_p),
    // with two positive-definite Choleskys plus iterative refinement.
    MatXd WG_, H_, Bd_, HinvBt_, S_, F_;
    detail::ClampedLdlt hllt_, sllt_;
    std::vector<int> aug_coords_;   // cone rows moved to the Schur block (B order)
    std::vector<char> psd_is_aug_;  // per PSD block
    std::vector<char> soc_is_aug_;  // per SOC block
    std::vector<char> col_touch_;
    double delta_ = 0.0;

    // Sparse quasi-definite path: problems whose cone blocks are all small are
    // factored as one regularized LDL' of the full 3x3 KKT (no elimination, no
    // conditioning squared); used automatically when applicable.
    bool sparse_kkt_ = false;
    Eigen::SimplicialLDLT<SpMat> skkt_;
    SpMat K_;

    void setup(StandardForm& sf) {
        n_ = static_cast<int>(sf.c.size());
        p_ = static_cast<int>(sf.A.rows());
        m_ = sf.cones.total_dim();
        equilibrate(sf);
        A_ = sf.A;
        G_ = sf.G;
        At_ = A_.transpose();
        Gt_ = G_.transpose();
        c_ = sf.c;
        b_ = sf.b;
        h_ = sf.h;

        int off = 0;
        lp_.offset = 0;
        lp_.dim = sf.cones.n_nonneg;
        lp_.w2.resize(lp_.dim);
        lp_.w.resize(lp_.dim);
        off += lp_.dim;
        socs_.clear();
        for (int q : sf.cones.soc_dims) {
            detail::SocBlock sb;
            sb.offset = off;
            sb.dim = q;
            sb.q.resize(q - 1);
            socs_.push_back(std::move(sb));
            off += q;
        }
        psds_.clear();
        row_psd_.assign(m_, -1);
        for (const auto& pb : sf.cones.psd_blocks) {
            detail::PsdBlock blk;
            blk.offset = off;
            blk.dim = pb.dim;
            blk.herm = pb.hermitian;
            blk.alloc();
            for (int r = 0; r < blk.vdim; ++r) row_psd_[off + r] = static_cast<int>(psds_.size());
            psds_.push_back(std::move(blk));
            off += psds_.back().vdim;
        }
        barrier_nu_ = sf.cones.barrier_degree();

        sparse_kkt_ = true;
        for (const auto& pb : psds_)
            if (pb.dim > 8) sparse_kkt_ = false;
        for (const auto& sc : socs_)
            if (sc.dim > 24) sparse_kkt_ = false;

        x_.setZero(n_);
        y_.setZero(p_);
        z_.setZero(m_);
        s_.setZero(m_);
        lambda_.setZero(m_);
        rx_.resize(n_);
        ry_.resize(p_);
        rz_.resize(m_);
        WG_.resize(m_, n_);
        H_.resize(n_, n_);
        col_touch_.assign(static_cast<std::size_t>(std::max<std::size_t>(1, psds_.size())) * n_, 0);
    }

    // ---- Ruiz equilibration (uniform scale inside each SOC/PSD block) ----
    void equilibrate(StandardForm& sf) {
        e_col_ = VecXd::Ones(n_);
        e_rowA_ = VecXd::Ones(p_);
        e_rowG_ = VecXd::Ones(m_);
        VecXd ct(n_), at(p_), gt(m_);
        for (int it = 0; it < st_.equil_iters; ++it) {
            ct.setZero();
            at.setZero();
            gt.setZero();
            for (int j = 0; j < sf.A.outerSize(); ++j)
                for (SpMat::InnerIterator k(sf.A, j); k; ++k) {
                    const double v = std::abs(k.value());
                    ct[j] = std::max(ct[j], v);
                    at[k.row()] = std::max(at[k.row()], v);
                }
            for (int j = 0; j < sf.G.outerSize(); ++j)
                for (SpMat::InnerIterator k(sf.G, j); k; ++k) {
                    const double v = std::abs(k.value());
                    ct[j] = std::max(ct[j], v);
                    gt[k.row()] = std::max(gt[k.row()], v);
                }
            int off = sf.cones.n_nonneg;
            auto collapse = [&gt](int o, int d) {
                const double v = gt.segment(o, d).maxCoeff();
                gt.segment(o, d).setConstant(v);
            };
            for (int q : sf.cones.soc_dims) {
                collapse(off, q);
                off += q;
            }
            for (const auto& pbk : sf.cones.psd_blocks) {
                collapse(off, pbk.svec_dim());
                off += pbk.svec_dim();
            }
            auto root = [](double v) { return v < 1e-12 ? 1.0 : std::sqrt(v); };
            ct = ct.unaryExpr(root);
            at = at.unaryExpr(root);
            gt = gt.unaryExpr(root);
            for (int j = 0; j < sf.A.outerSize(); ++j)
                for (SpMat::InnerIterator k(sf.A, j); k; ++k)
                    k.valueRef() /= at[k.row()] * ct[j];
            for (int j = 0; j < sf.G.outerSize(); ++j)
                for (SpMat::InnerIterator k(sf.G, j); k; ++k)
                    k.valueRef() /= gt[k.row()] * ct[j];
            e_col_.array() *= ct.array();
            e_rowA_.array() *= at.array();
            e_rowG_.array() *= gt.array();
        }
        sf.c.array() /= e_col_.array();
        if (p_ > 0) sf.b.array() /= e_rowA_.array();
        sf.h.array() /= e_rowG_.array();
    }

    // ---- cone operations -------------------------------------------------
    bool update_scalings() {
        if (lp_.dim > 0) {
            for (int i = 0; i < lp_.dim; ++i) {
                if (s_[i] <= 0.0 || z_[i] <= 0.0) return false;
                lp_.w2[i] = s_[i] / z_[i];
                lp_.w[i] = std::sqrt(lp_.w2[i]);
                lambda_[i] = std::sqrt(s_[i] * z_[i]);
            }
        }
        for (auto& sc : socs_) {
            const auto sseg = s_.segment(sc.offset, sc.dim);
            const auto zseg = z_.segment(sc.offset, sc.dim);
            const double sres = sseg[0] * sseg[0] - sseg.tail(sc.dim - 1).squaredNorm();
            const double zres = zseg[0] * zseg[0] - zseg.tail(sc.dim - 1).squaredNorm();
            if (sres <= 0.0 || zres <= 0.0) return false;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            VecXd sbar = sseg / snorm, zbar = zseg / znorm;
            sc.eta = std::sqrt(snorm / znorm);
            double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            sc.a = (0.5 / gamma) * (sbar[0] + zbar[0]);
            sc.q = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
            // lambda = W z for this block
            scale_soc(sc, zseg, lambda_.segment(sc.offset, sc.dim), false);
        }
        for (auto& pb : psds_) {
            if (pb.herm) {
                svec_unpack(s_.segment(pb.offset, pb.vdim), pb.dim, pb.W1c);
                svec_unpack(z_.segment(pb.offset, pb.vdim), pb.dim, pb.W2c);
                if (!detail::nt_scaling(pb.W1c, pb.W2c, pb.Rc, pb.Rinvc, pb.Tc, pb.Tinvc,
                                        pb.sigma))
                    return false;
            } else {
                Eigen::MatrixXd S(pb.dim, pb.dim), Z(pb.dim, pb.dim);
                svec_unpack(s_.segment(pb.offset, pb.vdim), pb.dim, S);
                svec_unpack(z_.segment(pb.offset, pb.vdim), pb.dim, Z);
                if (!detail::nt_scaling(S, Z, pb.Rr, pb.Rinvr, pb.Tr, pb.Tinvr, pb.sigma))
                    return false;
            }
            auto lam = lambda_.segment(pb.offset, pb.vdim);
            lam.setZero();
            lam.head(pb.dim) = pb.sigma;
        }
        return true;
    }

    // W applied to one SOC block; adjoint equals itself.
    void scale_soc(const detail::SocBlock& sc, const Eigen::Ref<const VecXd>& u,
                   Eigen::Ref<VecXd> out, bool inverse) const {
        const double u0 = u[0];
        const auto u1 = u.tail(sc.dim - 1);
        const double qs = sc.q.dot(u1);
        if (!inverse) {
            out[0] = sc.eta * (sc.a * u0 + qs);
            out.tail(sc.dim - 1) = sc.eta * (u1 + (u0 + qs / (1.0 + sc.a)) * sc.q);
        } else {
            out[0] = (sc.a * u0 - qs) / sc.eta;
            out.tail(sc.dim - 1) = (u1 + (-u0 + qs / (1.0 + sc.a)) * sc.q) / sc.eta;
        }
    }

    enum class WOp { scale, scale_adjoint, scale_invT };

    // W u, W' u, or W^{-T} u over the full cone vector.
    void apply_w(const VecXd& u, VecXd& out, WOp op, bool identity) const {
        if (identity) {
            out = u;
            return;
        }
        if (lp_.dim > 0) {
            if (op == WOp::scale_invT)
                out.head(lp_.dim) = u.head(lp_.dim).cwiseQuotient(lp_.w);
            else
                out.head(lp_.dim) = u.head(lp_.dim).cwiseProduct(lp_.w);
        }
        for (const auto& sc : socs_)
            scale_soc(sc, u.segment(sc.offset, sc.dim), out.segment(sc.offset, sc.dim),
                      op == WOp::scale_invT);
        for (const auto& pb : psds_) {
            if (pb.herm) {
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, pb.W1c);
                if (op == WOp::scale)
                    pb.W2c.noalias() = pb.Rc.adjoint() * pb.W1c * pb.Rc;
                else if (op == WOp::scale_adjoint)
                    pb.W2c.noalias() = pb.Rc * pb.W1c * pb.Rc.adjoint();
                else
                    pb.W2c.noalias() = pb.Rinvc * pb.W1c * pb.Rinvc.adjoint();
                svec_pack(pb.W2c, out.segment(pb.offset, pb.vdim));
            } else {
                Eigen::MatrixXd U(pb.dim, pb.dim);
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, U);
                if (op == WOp::scale)
                    pb.W2r.noalias() = pb.Rr.transpose() * U * pb.Rr;
                else if (op == WOp::scale_adjoint)
                    pb.W2r.noalias() = pb.Rr * U * pb.Rr.transpose();
                else
                    pb.W2r.noalias() = pb.Rinvr * U * pb.Rinvr.transpose();
                svec_pack(pb.W2r, out.segment(pb.offset, pb.vdim));
            }
        }
    }

    // (W'W) u or its inverse.
    void apply_w2(const VecXd& u, VecXd& out, bool inverse, bool identity) const {
        if (identity) {
            out = u;
            return;
        }
        if (lp_.dim > 0) {
            if (inverse)
                out.head(lp_.dim) = u.head(lp_.dim).cwiseQuotient(lp_.w2);
            else
                out.head(lp_.dim) = u.head(lp_.dim).cwiseProduct(lp_.w2);
        }
        VecXd tmp;
        for (const auto& sc : socs_) {
            tmp.resize(sc.dim);
            scale_soc(sc, u.segment(sc.offset, sc.dim), tmp, inverse);
            scale_soc(sc, tmp, out.segment(sc.offset, sc.dim), inverse);
        }
        for (const auto& pb : psds_) {
            if (pb.herm) {
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, pb.W1c);
                const Eigen::MatrixXcd& Tm = inverse ? pb.Tinvc : pb.Tc;
                pb.W2c.noalias() = Tm * pb.W1c * Tm;
                svec_pack(pb.W2c, out.segment(pb.offset, pb.vdim));
            } else {
                Eigen::MatrixXd U(pb.dim, pb.dim);
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, U);
                const Eigen::MatrixXd& Tm = inverse ? pb.Tinvr : pb.Tr;
                pb.W2r.noalias() = Tm * U * Tm;
                svec_pack(pb.W2r, out.segment(pb.offset, pb.vdim));
            }
        }
    }

    // Jordan product u o v.
    void cone_product(const VecXd& u, const VecXd& v, VecXd& out) const {
        if (lp_.dim > 0)
            out.head(lp_.dim) = u.head(lp_.dim).cwiseProduct(v.head(lp_.dim));
        for (const auto& sc : socs_) {
            const auto us = u.segment(sc.offset, sc.dim);
            const auto vs = v.segment(sc.offset, sc.dim);
            out[sc.offset] = us.dot(vs);
            out.segment(sc.offset + 1, sc.dim - 1) =
                us[0] * vs.tail(sc.dim - 1) + vs[0] * us.tail(sc.dim - 1);
        }
        for (const auto& pb : psds_) {
            if (pb.herm) {
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, pb.W1c);
                svec_unpack(v.segment(pb.offset, pb.vdim), pb.dim, pb.W2c);
                Eigen::MatrixXcd P = pb.W1c * pb.W2c;
                P = 0.5 * (P + P.adjoint()).eval();
                svec_pack(P, out.segment(pb.offset, pb.vdim));
            } else {
                Eigen::MatrixXd U(pb.dim, pb.dim), V(pb.dim, pb.dim);
                svec_unpack(u.segment(pb.offset, pb.vdim), pb.dim, U);
                svec_unpack(v.segment(pb.offset, pb.vdim), pb.dim, V);
                Eigen::MatrixXd P = U * V;
                P = 0.5 * (P + P.transpose()).eval();
                svec_pack(P, out.segment(pb.offset, pb.vdim));
            }
        }
    }

    // lambda \ d (inverse Jordan product against the scaled point).
    void lambda_division(const VecXd& d, VecXd& out) const {
        if (lp_.dim > 0)
            out.head(lp_.dim) = d.head(lp_.dim).cwiseQuotient(lambda_.head(lp_.dim));
        for (const auto& sc : socs_) {
            const auto l = lambda_.segment(sc.offset, sc.dim);
            const auto w = d.segment(sc.offset, sc.dim);
            const double l0 = l[0];
            const double rho = l0 * l0 - l.tail(sc.dim - 1).squaredNorm();
            const double zeta = l.tail(sc.dim - 1).dot(w.tail(sc.dim - 1));
            const double factor = (zeta / l0 - w[0]) / rho;
            out[sc.offset] = (l0 * w[0] - zeta) / rho;
            out.segment(sc.offset + 1, sc.dim - 1) =
                factor * l.tail(sc.dim - 1) + w.tail(sc.dim - 1) / l0;
        }
        for (const auto& pb : psds_) {
            // lambda is diagonal: X_ij = 2 D_ij / (sig_i + sig_j)
            if (pb.herm) {
                svec_unpack(d.segment(pb.offset, pb.vdim), pb.dim, pb.W1c);
                for (int jj = 0; jj < pb.dim; ++jj)
                    for (int ii = 0; ii < pb.dim; ++ii)
                        pb.W1c(ii, jj) *= 2.0 / (pb.sigma[ii] + pb.sigma[jj]);
                svec_pack(pb.W1c, out.segment(pb.offset, pb.vdim));
            } else {
                Eigen::MatrixXd D(pb.dim, pb.dim);
                svec_unpack(d.segment(pb.offset, pb.vdim), pb.dim, D);
                for (int jj = 0; jj < pb.dim; ++jj)
                    for (int ii = 0; ii < pb.dim; ++ii)
                        D(ii, jj) *= 2.0 / (pb.sigma[ii] + pb.sigma[jj]);
                svec_pack(D, out.segment(pb.offset, pb.vdim));
            }
        }
    }

    // subtracts v on the cone identity coordinates
    void sub_on_identity(VecXd& u, double v) const {
        u.head(lp_.dim).array() -= v;
        for (const auto& sc : socs_) u[sc.offset] -= v;
        for (const auto& pb : psds_) u.segment(pb.offset, pb.dim).array() -= v;
    }

    double min_eig_scaled(const detail::PsdBlock& pb, const Eigen::Ref<const VecXd>& dvec,
                          bool use_sigma) const {
        const VecXd isq = use_sigma ? VecXd(pb.sigma.cwiseSqrt().cwiseInverse())
                                    : VecXd(VecXd::Ones(pb.dim));
        if (pb.herm) {
            svec_unpack(dvec, pb.dim, pb.W1c);
            pb.W2c = isq.asDiagonal() * pb.W1c * isq.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pb.W2c,
                                                               Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff();
        }
        Eigen::MatrixXd D(pb.dim, pb.dim);
        svec_unpack(dvec, pb.dim, D);
        D = isq.asDiagonal() * D * isq.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    // s = r + (1 + alpha) e, alpha = worst cone violation of r
    void bring_to_cone(const VecXd& r, VecXd& out) const {
        double alpha = -0.99;
        for (int i = 0; i < lp_.dim; ++i)
            if (r[i] <= 0.0) alpha = std::max(alpha, -r[i]);
        for (const auto& sc : socs_) {
            const double cres =
                r[sc.offset] - r.segment(sc.offset + 1, sc.dim - 1).norm();
            if (cres <= 0.0) alpha = std::max(alpha, -cres);
        }
        for (const auto& pb : psds_) {
            const double emin = min_eig_scaled(pb, r.segment(pb.offset, pb.vdim), false);
            if (emin <= 0.0) alpha = std::max(alpha, -emin);
        }
        out = r;
        alpha += 1.0;
        out.head(lp_.dim).array() += alpha;
        for (const auto& sc : socs_) out[sc.offset] += alpha;
        for (const auto& pb : psds_) out.segment(pb.offset, pb.dim).array() += alpha;
    }

    // Max step to the cone boundary in scaled space, including tau/kappa.
    double max_step(const VecXd& ds, const VecXd& dz, double tau, double dtau, double kap,
                    double dkap) const {
        double limit = std::numeric_limits<double>::infinity();
        auto cap = [&limit](double slope) {
            if (slope < 0.0) limit = std::min(limit, 1.0 / (-slope));
        };
        for (int i = 0; i < lp_.dim; ++i) {
            cap(ds[i] / lambda_[i]);
            cap(dz[i] / lambda_[i]);
        }
        if (dtau < 0.0) limit = std::min(limit, -tau / dtau);
        if (dkap < 0.0) limit = std::min(limit, -kap / dkap);
        for (const auto& sc : socs_) {
            const auto l = lambda_.segment(sc.offset, sc.dim);
            const double ln2 = l[0] * l[0] - l.tail(sc.dim - 1).squaredNorm();
            if (ln2 <= 0.0) continue;
            const double ln = std::sqrt(ln2);
            const VecXd lbar = l / ln;
            for (const VecXd* dv : {&ds, &dz}) {
                const auto d = dv->segment(sc.offset, sc.dim);
                const double ldot =
                    lbar[0] * d[0] - lbar.tail(sc.dim - 1).dot(d.tail(sc.dim - 1));
                const double f = (ldot + d[0]) / (lbar[0] + 1.0);
                VecXd rho(sc.dim);
                rho[0] = ldot / ln;
                rho.tail(sc.dim - 1) =
                    (d.tail(sc.dim - 1) - f * lbar.tail(sc.dim - 1)) / ln;
                const double viol = rho.tail(sc.dim - 1).norm() - rho[0];
                if (viol > 0.0) limit = std::min(limit, 1.0 / viol);
            }
        }
        for (const auto& pb : psds_) {
            for (const VecXd* dv : {&ds, &dz}) {
                const double emin =
                    min_eig_scaled(pb, dv->segment(pb.offset, pb.vdim), true);
                if (emin < 0.0) limit = std::min(limit, 1.0 / (-emin));
            }
        }
        return std::clamp(limit, st_.step_min, st_.step_max);
    }

    // ---- KKT -------------------------------------------------------------
    MatXd soc_w2_dense(const detail::SocBlock& sc) const {
        MatXd W2(sc.dim, sc.dim);
        VecXd unit = VecXd::Zero(sc.dim), w1(sc.dim), w2(sc.dim);
        for (int c = 0; c < sc.dim; ++c) {
            unit.setZero();
            unit[c] = 1.0;
            scale_soc(sc, unit, w1, false);
            scale_soc(sc, w1, w2, false);
            W2.col(c) = w2;
        }
        return W2;
    }

    MatXd psd_w2_dense(const detail::PsdBlock& pb) const {
        MatXd W2(pb.vdim, pb.vdim);
        VecXd unit = VecXd::Zero(pb.vdim), out(pb.vdim);
        for (int c = 0; c < pb.vdim; ++c) {
            unit.setZero();
            unit[c] = 1.0;
            if (pb.herm) {
                svec_unpack(unit, pb.dim, pb.W1c);
                pb.W2c.noalias() = pb.Tc * pb.W1c * pb.Tc;
                svec_pack(pb.W2c, out);
            } else {
                Eigen::MatrixXd U(pb.dim, pb.dim);
                svec_unpack(unit, pb.dim, U);
                pb.W2r.noalias() = pb.Tr * U * pb.Tr;
                svec_pack(pb.W2r, out);
            }
            W2.col(c) = out;
        }
        return W2;
    }

    bool kkt_factor_sparse(bool identity) {
        const int dim = n_ + p_ + m_;
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(2 * (A_.nonZeros() + G_.nonZeros()) + dim + 64 * (psds_.size() + 1));
        delta_ = st_.static_reg;
        for (int attempt = 0; attempt < 4; ++attempt) {
            t.clear();
            for (int i = 0; i < n_; ++i) t.emplace_back(i, i, delta_);
            for (int j = 0; j < A_.outerSize(); ++j)
                for (SpMat::InnerIterator it(A_, j); it; ++it) {
                    t.emplace_back(n_ + it.row(), j, it.value());
                    t.emplace_back(j, n_ + it.row(), it.value());
                }
            for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -delta_);
            const int zoff = n_ + p_;
            for (int j = 0; j < G_.outerSize(); ++j)
                for (SpMat::InnerIterator it(G_, j); it; ++it) {
                    t.emplace_back(zoff + it.row(), j, it.value());
                    t.emplace_back(j, zoff + it.row(), it.value());
                }
            if (identity) {
                for (int i = 0; i < m_; ++i)
                    t.emplace_back(zoff + i, zoff + i, -1.0 - delta_);
            } else {
                for (int i = 0; i < lp_.dim; ++i)
                    t.emplace_back(zoff + i, zoff + i, -lp_.w2[i] - delta_);
                for (const auto& sc : socs_) {
                    const MatXd W2 = soc_w2_dense(sc);
                    for (int c = 0; c < sc.dim; ++c)
                        for (int r = 0; r < sc.dim; ++r)
                            t.emplace_back(zoff + sc.offset + r, zoff + sc.offset + c,
                                           -W2(r, c) - (r == c ? delta_ : 0.0));
                }
                for (const auto& pb : psds_) {
                    const MatXd W2 = psd_w2_dense(pb);
                    for (int c = 0; c < pb.vdim; ++c)
                        for (int r = 0; r < pb.vdim; ++r)
                            t.emplace_back(zoff + pb.offset + r, zoff + pb.offset + c,
                                           -W2(r, c) - (r == c ? delta_ : 0.0));
                }
            }
            K_.resize(dim, dim);
            K_.setFromTriplets(t.begin(), t.end());
            skkt_.compute(K_);
            if (skkt_.info() == Eigen::Success) return true;
            delta_ *= 100.0;
        }
        return false;
    }

    void kkt_solve_sparse(const VecXd& bx, const VecXd& by, const VecXd& bz, VecXd& dx,
                          VecXd& dy, VecXd& dz, bool identity) const {
        VecXd rhs(n_ + p_ + m_);
        rhs << bx, by, bz;
        VecXd sol = skkt_.solve(rhs);
        dx = sol.head(n_);
        dy = sol.segment(n_, p_);
        dz = sol.tail(m_);

        VecXd ex(n_), ey(p_), ez(m_), w2dz(m_);
        VecXd px = dx, py = dy, pz = dz;
        double prev_err = std::numeric_limits<double>::infinity();
        for (int it = 0; it <= st_.refine_iters; ++it) {
            ex = bx - Gt_ * dz;
            if (p_ > 0) ex -= At_ * dy;
            if (p_ > 0) ey = by - A_ * dx;
            apply_w2(dz, w2dz, false, identity);
            ez = bz - G_ * dx + w2dz;
            double err = ex.lpNorm<Eigen::Infinity>();
            if (p_ > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());
            err = std::max(err, ez.lpNorm<Eigen::Infinity>());
            if (!std::isfinite(err) || err >= prev_err) {
                dx = px;
                dy = py;
                dz = pz;
                err = prev_err;
                break;
            }
            last_kkt_err_ = err;
            if (err < st_.refine_stop || it == st_.refine_iters) break;
            prev_err = err;
            px = dx;
            py = dy;
            pz = dz;
            rhs << ex, ey, ez;
            sol = skkt_.solve(rhs);
            dx += sol.head(n_);
            dy += sol.segment(n_, p_);
            dz += sol.tail(m_);
        }
    }

    bool kkt_factor(bool identity) {
        if (sparse_kkt_) return kkt_factor_sparse(identity);
        aug_coords_.clear();
        psd_is_aug_.assign(psds_.size(), 0);
        soc_is_aug_.assign(socs_.size(), 0);
        if (!identity) {
            for (int i = 0; i < lp_.dim; ++i)
                if (lp_.w2[i] < 1e-6) aug_coords_.push_back(i);
            for (std::size_t si = 0; si < socs_.size(); ++si)
                if (socs_[si].dim <= 10) {
                    soc_is_aug_[si] = 1;
                    for (int r = 0; r < socs_[si].dim; ++r)
                        aug_coords_.push_back(socs_[si].offset + r);
                }
            for (std::size_t bi = 0; bi < psds_.size(); ++bi)
                if (psds_[bi].dim <= 8) {
                    psd_is_aug_[bi] = 1;
                    for (int r = 0; r < psds_[bi].vdim; ++r)
                        aug_coords_.push_back(psds_[bi].offset + r);
                }
        }
        const int e = static_cast<int>(aug_coords_.size());

        WG_.setZero();
        std::fill(col_touch_.begin(), col_touch_.end(), 0);
        for (int j = 0; j < G_.outerSize(); ++j)
            for (SpMat::InnerIterator it(G_, j); it; ++it) {
                WG_(it.row(), j) = it.value();
                const int bidx = row_psd_[it.row()];
                if (bidx >= 0 && !psd_is_aug_[bidx])
                    col_touch_[bidx * static_cast<std::size_t>(n_) + j] = 1;
            }
        Bd_.setZero(e + p_, n_);
        for (int r = 0; r < e; ++r) {
            Bd_.row(r) = WG_.row(aug_coords_[r]);
            WG_.row(aug_coords_[r]).setZero();
        }
        if (p_ > 0) {
            for (int j = 0; j < A_.outerSize(); ++j)
                for (SpMat::InnerIterator it(A_, j); it; ++it)
                    Bd_(e + it.row(), j) = it.value();
        }

        // W'W of the augmented blocks (their unsquared scaling lives in F)
        F_.setZero(e + p_, e + p_);
        if (!identity) {
            int r = 0;
            while (r < e && row_psd_[aug_coords_[r]] < 0 &&
                   aug_coords_[r] < lp_.dim) {
                F_(r, r) = lp_.w2[aug_coords_[r]];
                ++r;
            }
            for (std::size_t si = 0; si < socs_.size(); ++si) {
                if (!soc_is_aug_[si]) continue;
                const auto& sc = socs_[si];
                F_.block(r, r, sc.dim, sc.dim) = soc_w2_dense(sc);
                r += sc.dim;
            }
            for (std::size_t bi = 0; bi < psds_.size(); ++bi) {
                if (!psd_is_aug_[bi]) continue;
                const auto& pb = psds_[bi];
                F_.block(r, r, pb.vdim, pb.vdim) = psd_w2_dense(pb);
                r += pb.vdim;
            }
        }
        if (!identity) {
            if (lp_.dim > 0)
                WG_.topRows(lp_.dim).array().colwise() /= lp_.w2.array();
            for (std::size_t si = 0; si < socs_.size(); ++si) {
                if (soc_is_aug_[si]) continue;
                const auto& sc = socs_[si];
                auto blk = WG_.middleRows(sc.offset, sc.dim);
                for (int pass = 0; pass < 2; ++pass) {
                    Eigen::RowVectorXd qs = sc.q.transpose() * blk.bottomRows(sc.dim - 1);
                    Eigen::RowVectorXd top = blk.row(0);
                    blk.row(0) = (sc.a * top - qs) / sc.eta;
                    blk.bottomRows(sc.dim - 1) =
                        (blk.bottomRows(sc.dim - 1) +
                         sc.q * (qs / (1.0 + sc.a) - top)) /
                        sc.eta;
                }
            }
            for (std::size_t bi = 0; bi < psds_.size(); ++bi) {
                if (psd_is_aug_[bi]) continue;
                const auto& pb = psds_[bi];
                for (int j = 0; j < n_; ++j) {
                    if (!col_touch_[bi * static_cast<std::size_t>(n_) + j]) continue;
                    auto seg = WG_.col(j).segment(pb.offset, pb.vdim);
                    if (pb.herm) {
                        svec_unpack(seg, pb.dim, pb.W1c);
                        pb.W2c.noalias() = pb.Tinvc * pb.W1c * pb.Tinvc;
                        svec_pack(pb.W2c, seg);
                    } else {
                        Eigen::MatrixXd U(pb.dim, pb.dim);
                        svec_unpack(seg, pb.dim, U);
                        pb.W2r.noalias() = pb.Tinvr * U * pb.Tinvr;
                        svec_pack(pb.W2r, seg);
                    }
                }
            }
        }
        H_.noalias() = Gt_ * WG_;

        delta_ = st_.static_reg * std::max(1.0, H_.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 4; ++attempt) {
            MatXd Hreg = H_;
            Hreg.diagonal().array() += delta_;
            if (hllt_.compute(Hreg)) {
                if (e + p_ == 0) return true;
                HinvBt_ = hllt_.solve(Bd_.transpose());
                S_.noalias() = Bd_ * HinvBt_;
                S_ += F_;
                S_.bottomRightCorner(p_, p_).diagonal().array() += delta_;
                if (sllt_.compute(S_)) return true;
            }
            delta_ *= 100.0;
        }
        return false;
    }

    // Solves [0 A' G'; A 0 0; G 0 -W'W] [dx dy dz] = [bx by bz] with refinement.
    void kkt_solve(const VecXd& bx, const VecXd& by, const VecXd& bz, VecXd& dx, VecXd& dy,
                   VecXd& dz, bool identity) const {
        if (sparse_kkt_) {
            kkt_solve_sparse(bx, by, bz, dx, dy, dz, identity);
            return;
        }
        const int e = static_cast<int>(aug_coords_.size());
        VecXd wz(m_), r1(n_), rv(e + p_), u(e + p_);
        VecXd cx = VecXd::Zero(n_), cy = VecXd::Zero(p_), cz = VecXd::Zero(m_);

        auto sub_solve = [&](const VecXd& fx, const VecXd& fy, const VecXd& fz) {
            // eliminated cone rows fold into H; augmented rows keep their
            // unsquared scaling in the Schur block
            VecXd fz_reg = fz;
            for (int r = 0; r < e; ++r) fz_reg[aug_coords_[r]] = 0.0;
            apply_w2(fz_reg, wz, true, identity);
            for (int r = 0; r < e; ++r) wz[aug_coords_[r]] = 0.0;
            r1 = fx + Gt_ * wz;
            if (e + p_ > 0) {
                for (int r = 0; r < e; ++r) rv[r] = fz[aug_coords_[r]];
                if (p_ > 0) rv.tail(p_) = fy;
                u = sllt_.solve(Bd_ * hllt_.solve(r1) - rv);
                cx = hllt_.solve(r1 - Bd_.transpose() * u);
                if (p_ > 0) cy = u.tail(p_);
            } else {
                cx = hllt_.solve(r1);
            }
            VecXd gz = G_ * cx - fz;
            apply_w2(gz, cz, true, identity);
            for (int r = 0; r < e; ++r) cz[aug_coords_[r]] = u[r];
        };

        sub_solve(bx, by, bz);
        dx = cx;
        dy = cy;
        dz = cz;

        VecXd ex(n_), ey(p_), ez(m_), w2dz(m_);
        VecXd px = dx, py = dy, pz = dz;
        double prev_err = std::numeric_limits<double>::infinity();
        for (int it = 0; it <= st_.refine_iters; ++it) {
            ex = bx - Gt_ * dz;
            if (p_ > 0) ex -= At_ * dy;
            if (p_ > 0) ey = by - A_ * dx;
            apply_w2(dz, w2dz, false, identity);
            ez = bz - G_ * dx + w2dz;
            double err = ex.lpNorm<Eigen::Infinity>();
            if (p_ > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());
            err = std::max(err, ez.lpNorm<Eigen::Infinity>());
            if (!std::isfinite(err) || err >= prev_err) {
                // refinement stopped helping; keep the previous iterate
                dx = px;
                dy = py;
                dz = pz;
                err = prev_err;
                break;
            }
            last_kkt_err_ = err;
            if (err < st_.refine_stop || it == st_.refine_iters) break;
            prev_err = err;
            px = dx;
            py = dy;
            pz = dz;
            sub_solve(ex, ey, ez);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        if (st_.verbose) std::printf("      kkt err %.2e\n", last_kkt_err_);
    }

    mutable double last_kkt_err_ = 0.0;

    // ---- residuals and statistics -----------------------------------------
    void compute_residuals() {
        rx_ = -(Gt_ * z_);
        if (p_ > 0) rx_ -= At_ * y_;
        hresx_ = rx_.norm();
        rx_ -= tau_ * c_;
        if (p_ > 0) {
            ry_ = A_ * x_;
            hresy_ = ry_.norm();
            ry_ -= tau_ * b_;
        } else {
            ry_.setZero(0);
            hresy_ = 0.0;
        }
        rz_ = s_ + G_ * x_;
        hresz_ = rz_.norm();
        rz_ -= tau_ * h_;
        cx_ = c_.dot(x_);
        by_ = p_ > 0 ? b_.dot(y_) : 0.0;
        hz_ = h_.dot(z_);
        rt_ = kap_ + cx_ + by_ + hz_;
    }

    void trace_iter(int iter) const {
        if (!st_.verbose) return;
        std::printf(
            "ipm %3d  pcost %+12.5e dcost %+12.5e gap %9.2e pres %8.2e dres %8.2e "
            "k/t %8.2e\n",
            iter, info_.pcost, info_.dcost, info_.gap, info_.pres, info_.dres,
            info_.kapovert);
    }

    void update_info() {
        const double nx = x_.norm(), ny = y_.norm(), nz = z_.norm(), ns = s_.norm();
        info_.gap = s_.dot(z_);
        info_.mu = (info_.gap + kap_ * tau_) / (barrier_nu_ + 1);
        info_.kapovert = kap_ / tau_;
        info_.pcost = cx_ / tau_;
        info_.dcost = -(hz_ + by_) / tau_;
        if (info_.pcost < 0.0)
            info_.relgap = info_.gap / (-info_.pcost);
        else if (info_.dcost > 0.0)
            info_.relgap = info_.gap / info_.dcost;
        else
            info_.relgap = std::nullopt;
        const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx, 1.0) : 0.0;
        const double nrz = rz_.norm() / std::max(resz0_ + nx + ns, 1.0);
        info_.pres = std::max(nry, nrz) / tau_;
        info_.dres = rx_.norm() / std::max(resx0_ + ny + nz, 1.0) / tau_;
        info_.pinfres.reset();
        info_.dinfres.reset();
        if ((hz_ + by_) / std::max(ny + nz, 1.0) < -st_.reltol)
            info_.pinfres = hresx_ / std::max(ny + nz, 1.0);
        if (cx_ / std::max(nx, 1.0) < -st_.reltol)
            info_.dinfres = std::max(hresy_ / std::max(nx, 1.0),
                                     hresz_ / std::max(nx + ns, 1.0));
    }

    enum class Exit { none, optimal, pinf, dinf };

    Exit check_exit(bool reduced) const {
        const double ft = reduced ? st_.feastol_inacc : st_.feastol;
        const double at = reduced ? st_.abstol_inacc : st_.abstol;
        const double rt = reduced ? st_.reltol_inacc : st_.reltol;
        const bool relgap_ok = info_.relgap.has_value() && *info_.relgap < rt;
        if ((-cx_ > 0 || -by_ - hz_ >= -at) && info_.pres < ft && info_.dres < ft &&
            (info_.gap < at || relgap_ok))
            return Exit::optimal;
        if (info_.dinfres.has_value() && *info_.dinfres < ft && tau_ < kap_)
            return Exit::dinf;
        if ((info_.pinfres.has_value() && *info_.pinfres < ft && tau_ < kap_) ||
            (tau_ < ft && kap_ < ft && info_.pinfres.has_value() && *info_.pinfres < ft))
            return Exit::pinf;
        return Exit::none;
    }

    struct Snapshot {
        VecXd x, y, z, s;
        double tau, kap;
        double score;
    };

    double iterate_score() const {
        double sc = std::max(info_.pres, info_.dres);
        const double denom = std::max({1.0, std::abs(info_.pcost), std::abs(info_.dcost)});
        sc = std::max(sc, std::abs(info_.gap) / denom);
        return sc;
    }

    // ---- main loop ---------------------------------------------------------
    ConicSolution run() {
        ConicSolution result;
        result.stats.tolerance = st_.feastol;

        resx0_ = std::max(1.0, c_.norm());
        resy0_ = std::max(1.0, b_.norm());
        resz0_ = std::max(1.0, h_.norm());

        if (!kkt_factor(true)) {
            result.status = SolveStatus::numerical_failure;
            return result;
        }
        VecXd x1(n_), y1(p_), z1(m_), x2(n_), y2(p_), z2(m_);
        kkt_solve(VecXd::Zero(n_), b_, h_, x1, y1, z1, true);
        x_ = x1;
        bring_to_cone(-z1, s_);
        kkt_solve(-c_, VecXd::Zero(p_), VecXd::Zero(m_), x2, y2, z2, true);
        y_ = y2;
        bring_to_cone(z2, z_);
        tau_ = 1.0;
        kap_ = 1.0;

        Snapshot best;
        best.score = std::numeric_limits<double>::infinity();
        double pres_prev = std::numeric_limits<double>::infinity();
        double stag_best = std::numeric_limits<double>::infinity();
        int stag_count = 0;

        VecXd wdz(m_), ds_w(m_), dsvec(m_), dsbar(m_), ds_rhs(m_), ds_final(m_);
        SolveStatus status = SolveStatus::iteration_limit;
        bool full_acc = false;

        auto save_best = [&]() {
            const double sc = iterate_score();
            if (sc < best.score) best = {x_, y_, z_, s_, tau_, kap_, sc};
        };
        auto restore_best = [&]() {
            if (best.score == std::numeric_limits<double>::infinity()) return;
            x_ = best.x;
            y_ = best.y;
            z_ = best.z;
            s_ = best.s;
            tau_ = best.tau;
            kap_ = best.kap;
            compute_residuals();
            update_info();
        };

        int iter = 0;
        for (iter = 0; iter <= st_.max_iters; ++iter) {
            compute_residuals();
            update_info();
            trace_iter(iter);
            result.stats.iterations = iter;

            const bool broken = !std::isfinite(info_.pcost) || !std::isfinite(info_.gap);
            if (iter > 0 && (broken || info_.pres > st_.safeguard * pres_prev ||
                             info_.gap < 0.0)) {
                restore_best();
                const Exit e = check_exit(true);
                status = e == Exit::optimal   ? SolveStatus::optimal
                         : e == Exit::pinf    ? SolveStatus::infeasible
                         : e == Exit::dinf    ? SolveStatus::unbounded
                                              : SolveStatus::numerical_failure;
                full_acc = false;
                break;
            }
            pres_prev = info_.pres;

            const Exit e = check_exit(false);
            if (e != Exit::none) {
                status = e == Exit::optimal ? SolveStatus::optimal
                         : e == Exit::pinf  ? SolveStatus::infeasible
                                            : SolveStatus::unbounded;
                full_acc = true;
                break;
            }
            // stagnation: iterate stopped improving (typically a floored dual
            // residual on a degenerate optimal face); accept reduced accuracy
            // once the iterate classifies at the relaxed tolerances
            const double score = iterate_score();
            if (score < stag_best * 0.98) {
                stag_best = score;
                stag_count = 0;
            } else {
                ++stag_count;
            }
            if (stag_count >= 8 && iter >= 20) {
                const Exit er = check_exit(true);
                if (er != Exit::none) {
                    status = er == Exit::optimal ? SolveStatus::optimal
                             : er == Exit::pinf  ? SolveStatus::infeasible
                                                 : SolveStatus::unbounded;
                    full_acc = false;
                    break;
                }
                stag_count = 0;
            }
            if (iter == st_.max_iters) {
                save_best();
                restore_best();
                const Exit er = check_exit(true);
                if (er != Exit::none) {
                    status = er == Exit::optimal ? SolveStatus::optimal
                             : er == Exit::pinf  ? SolveStatus::infeasible
                                                 : SolveStatus::unbounded;
                    full_acc = false;
                } else {
                    status = SolveStatus::iteration_limit;
                }
                break;
            }
            save_best();

            if (!update_scalings()) {
                restore_best();
                const Exit er = check_exit(true);
                status = er == Exit::optimal ? SolveStatus::optimal
                         : er == Exit::pinf  ? SolveStatus::infeasible
                         : er == Exit::dinf  ? SolveStatus::unbounded
                                             : SolveStatus::numerical_failure;
                full_acc = false;
                break;
            }
            if (!kkt_factor(false)) {
                restore_best();
                status = SolveStatus::numerical_failure;
                break;
            }

            kkt_solve(-c_, b_, h_, x1, y1, z1, false);
            const double dtau_denom =
                kap_ / tau_ - (c_.dot(x1) + by_safe(y1) + h_.dot(z1));

            // predictor
            kkt_solve(rx_, -ry_, s_ - rz_, x2, y2, z2, false);
            const double dtauaff =
                (rt_ - kap_ + c_.dot(x2) + by_safe(y2) + h_.dot(z2)) / dtau_denom;
            z2 += dtauaff * z1;
            apply_w(z2, wdz, WOp::scale, false);
            ds_w = -wdz - lambda_;
            const double dkapaff = -kap_ - kap_ / tau_ * dtauaff;
            const double step_aff =
                max_step(ds_w, wdz, tau_, dtauaff, kap_, dkapaff);
            const double sigma =
                std::clamp(std::pow(1.0 - step_aff, 3.0), st_.sigma_min, st_.sigma_max);

            // corrector
            cone_product(lambda_, lambda_, dsvec);
            VecXd corr(m_);
            cone_product(ds_w, wdz, corr);
            dsvec += corr;
            sub_on_identity(dsvec, sigma * info_.mu);
            lambda_division(dsvec, dsbar);
            apply_w(dsbar, ds_rhs, WOp::scale_adjoint, false);
            const double oms = 1.0 - sigma;
            kkt_solve(oms * rx_, -oms * ry_, -oms * rz_ + ds_rhs, x2, y2, z2, false);
            const double bkap = kap_ * tau_ + dkapaff * dtauaff - sigma * info_.mu;
            const double dtau = (oms * rt_ - bkap / tau_ + c_.dot(x2) + by_safe(y2) +
                                 h_.dot(z2)) /
                                dtau_denom;
            x2 += dtau * x1;
            if (p_ > 0) y2 += dtau * y1;
            z2 += dtau * z1;
            apply_w(z2, wdz, WOp::scale, false);
            ds_w = -(dsbar + wdz);
            const double dkap = -(bkap + kap_ * dtau) / tau_;
            const double step =
                st_.step_scale * max_step(ds_w, wdz, tau_, dtau, kap_, dkap);
            apply_w(ds_w, ds_final, WOp::scale_adjoint, false);

            x_ += step * x2;
            if (p_ > 0) y_ += step * y2;
            z_ += step * z2;
            s_ += step * ds_final;
            kap_ += step * dkap;
            tau_ += step * dtau;

            if (step <= st_.step_min * st_.step_scale * (1.0 + 1e-9)) {
                // line search cannot move; bail out with the best iterate
                compute_residuals();
                update_info();
                save_best();
                restore_best();
                const Exit er = check_exit(true);
                status = er == Exit::optimal ? SolveStatus::optimal
                         : er == Exit::pinf  ? SolveStatus::infeasible
                         : er == Exit::dinf  ? SolveStatus::unbounded
                                             : SolveStatus::numerical_failure;
                full_acc = false;
                break;
            }
        }

        result.stats.primal_residual = info_.pres;
        result.stats.dual_residual = info_.dres;
        result.stats.gap = info_.gap;
        result.stats.rel_gap = info_.relgap.value_or(0.0);
        result.stats.full_accuracy = full_acc;
        // the level the exit status was actually certified against
        result.stats.tolerance =
            full_acc ? st_.feastol : std::max({info_.pres, info_.dres, st_.feastol});
        result.status = status;
        if (status == SolveStatus::optimal) {
            result.x = (x_ / tau_).cwiseQuotient(e_col_);
            result.y = (y_ / tau_).cwiseQuotient(e_rowA_);
            result.z = (z_ / tau_).cwiseQuotient(e_rowG_);
            result.objective = info_.pcost;
        }
        return result;
    }

    double by_safe(const VecXd& y) const { return p_ > 0 ? b_.dot(y) : 0.0; }
};

/// Solves a conic problem at the given residual/gap tolerance. Deterministic:
/// identical inputs produce identical outputs.
inline ConicSolution solve(const ConicProblem& problem, double tol = 1e-8) {
    IpmSolver solver;
    return solver.solve(problem, tol);
}

}  // namespace secirs::conic
