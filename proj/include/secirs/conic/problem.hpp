// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <ostream>
#include <string>
#include <vector>

#include "secirs/conic/expr.hpp"
#include "secirs/conic/svec.hpp"

namespace secirs::conic {

/// Handle to a Hermitian matrix variable. The d^2 real degrees of freedom are
/// laid out as [diag; (Re, Im) per strict-upper pair, column-major], matching
/// the svec packing, so values round-trip losslessly.
class HermitianVar {
  public:
    HermitianVar() = default;
    HermitianVar(int base, int dim) : base_(base), dim_(dim) {}

    int dim() const { return dim_; }
    int base() const { return base_; }
    int num_scalars() const { return dim_ * dim_; }

    int diag_index(int i) const { return base_ + i; }
    int re_index(int i, int j) const { return base_ + dim_ + 2 * pair_index(i, j); }
    int im_index(int i, int j) const { return base_ + dim_ + 2 * pair_index(i, j) + 1; }

    /// Affine expression for entry (i,j); entries below the diagonal conjugate.
    CxExpr entry(int i, int j) const {
        CxExpr e;
        if (i == j) {
            e.add(diag_index(i), 1.0);
        } else if (i < j) {
            e.add(re_index(i, j), 1.0);
            e.add(im_index(i, j), {0.0, 1.0});
        } else {
            e.add(re_index(j, i), 1.0);
            e.add(im_index(j, i), {0.0, -1.0});
        }
        return e;
    }

    LinExpr trace() const {
        LinExpr t;
        for (int i = 0; i < dim_; ++i) t.add(diag_index(i), 1.0);
        return t;
    }

    /// Real inner product <M, X> = Re tr(M^H X) for Hermitian data M.
    LinExpr inner(const Eigen::MatrixXcd& M) const {
        LinExpr e;
        for (int i = 0; i < dim_; ++i) e.add(diag_index(i), M(i, i).real());
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) {
                e.add(re_index(i, j), 2.0 * M(i, j).real());
                e.add(im_index(i, j), 2.0 * M(i, j).imag());
            }
        return e;
    }

    HermExpr as_expr() const {
        HermExpr e(dim_);
        for (int i = 0; i < dim_; ++i) e.diag(i).add(diag_index(i), 1.0);
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) e.upper(i, j) = entry(i, j);
        return e;
    }

    Eigen::MatrixXcd value(const Eigen::VectorXd& x) const {
        Eigen::MatrixXcd M(dim_, dim_);
        for (int i = 0; i < dim_; ++i) M(i, i) = x[diag_index(i)];
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) {
                const std::complex<double> v(x[re_index(i, j)], x[im_index(i, j)]);
                M(i, j) = v;
                M(j, i) = std::conj(v);
            }
        return M;
    }

    /// Writes a Hermitian matrix into the scalar vector (pack); value() inverts it.
    void set_value(const Eigen::MatrixXcd& M, Eigen::VectorXd& x) const {
        for (int i = 0; i < dim_; ++i) x[diag_index(i)] = M(i, i).real();
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) {
                x[re_index(i, j)] = M(i, j).real();
                x[im_index(i, j)] = M(i, j).imag();
            }
    }

  private:
    int pair_index(int i, int j) const { return j * (j - 1) / 2 + i; }

    int base_ = -1;
    int dim_ = 0;
};

struct PsdBlockInfo {
    bool hermitian = false;
    int dim = 0;
    int svec_dim() const { return hermitian ? svec_dim_herm(dim) : svec_dim_sym(dim); }
};

struct ConeLayout {
    int n_nonneg = 0;
    std::vector<int> soc_dims;
    std::vector<PsdBlockInfo> psd_blocks;

    int total_dim() const {
        int t = n_nonneg;
        for (int q : soc_dims) t += q;
        for (const auto& b : psd_blocks) t += b.svec_dim();
        return t;
    }
    int barrier_degree() const {
        int nu = n_nonneg + static_cast<int>(soc_dims.size());
        for (const auto& b : psd_blocks) nu += b.dim;
        return nu;
    }
};

/// Canonical data consumed by the interior-point backend:
///   minimize c'x  s.t.  A x = b,  G x + s = h,  s in K,
/// with K = R+^l x SOC(q_1) x ... x PSD(d_1) x ...  Rows of G follow that order.
struct StandardForm {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;
    Eigen::VectorXd h;
    ConeLayout cones;
};

/// Solver-agnostic conic program: free scalar variables (Hermitian matrix
/// variables are packed groups of scalars), a linear objective, affine equality
/// constraints, and cone memberships of affine expressions.
class ConicProblem {
  public:
    int num_vars() const { return n_vars_; }

    int add_var(const std::string& name = "") {
        names_.push_back(name.empty() ? "x" + std::to_string(n_vars_) : name);
        return n_vars_++;
    }

    std::vector<int> add_vars(int count, const std::string& prefix = "") {
        std::vector<int> idx(count);
        for (int i = 0; i < count; ++i)
            idx[i] = add_var(prefix.empty() ? "" : prefix + "[" + std::to_string(i) + "]");
        return idx;
    }

    HermitianVar add_hermitian(int dim, const std::string& name = "") {
        const int base = n_vars_;
        const std::string nm = name.empty() ? "H" + std::to_string(base) : name;
        for (int i = 0; i < dim * dim; ++i) names_.push_back(nm + "#" + std::to_string(i));
        n_vars_ += dim * dim;
        return {base, dim};
    }

    /// Objective is always minimized.
    void set_objective(LinExpr obj) {
        obj.compress();
        objective_ = std::move(obj);
    }
    const LinExpr& objective() const { return objective_; }

    void add_equality(LinExpr e) {
        e.compress();
        check_indices(e);
        equalities_.push_back(std::move(e));
    }
    void add_nonneg(LinExpr e) {
        e.compress();
        check_indices(e);
        nonneg_.push_back(std::move(e));
    }
    /// (t, x): t >= ||x||_2. exprs[0] is t.
    void add_soc(std::vector<LinExpr> exprs) {
        if (exprs.size() < 2) throw std::invalid_argument("add_soc: need dim >= 2");
        for (auto& e : exprs) {
            e.compress();
            check_indices(e);
        }
        socs_.push_back(std::move(exprs));
    }
    void add_psd(SymExpr e) { psd_real_.push_back(std::move(e)); }
    void add_psd(HermExpr e) { psd_herm_.push_back(std::move(e)); }
    void add_psd(const HermitianVar& v) { add_psd(v.as_expr()); }

    int num_equalities() const { return static_cast<int>(equalities_.size()); }
    int num_nonneg() const { return static_cast<int>(nonneg_.size()); }
    int num_socs() const { return static_cast<int>(socs_.size()); }
    int num_psd_blocks() const { return static_cast<int>(psd_real_.size() + psd_herm_.size()); }

    /// Lowers the model to the standard conic form. The problem itself is not
    /// modified; safe to call from multiple threads on a const problem.
    StandardForm compile() const {
        StandardForm sf;
        sf.c = Eigen::VectorXd::Zero(n_vars_);
        for (const auto& [i, v] : objective_.terms()) {
            if (i >= n_vars_) throw std::invalid_argument("objective references undeclared variable");
            sf.c[i] += v;
        }

        std::vector<Eigen::Triplet<double>> at;
        sf.b.resize(equalities_.size());
        for (std::size_t r = 0; r < equalities_.size(); ++r) {
            for (const auto& [i, v] : equalities_[r].terms())
                at.emplace_back(static_cast<int>(r), i, v);
            sf.b[static_cast<Eigen::Index>(r)] = -equalities_[r].constant();
        }
        sf.A.resize(static_cast<int>(equalities_.size()), n_vars_);
        sf.A.setFromTriplets(at.begin(), at.end());

        sf.cones.n_nonneg = static_cast<int>(nonneg_.size());
        for (const auto& s : socs_) sf.cones.soc_dims.push_back(static_cast<int>(s.size()));
        for (const auto& p : psd_real_) sf.cones.psd_blocks.push_back({false, p.dim()});
        for (const auto& p : psd_herm_) sf.cones.psd_blocks.push_back({true, p.dim()});

        const int m = sf.cones.total_dim();
        std::vector<Eigen::Triplet<double>> gt;
        sf.h.setZero(m);
        int row = 0;
        auto emit = [&](const LinExpr& e, double scale) {
            for (const auto& [i, v] : e.terms()) gt.emplace_back(row, i, -scale * v);
            sf.h[row] = scale * e.constant();
            ++row;
        };
        for (const auto& e : nonneg_) emit(e, 1.0);
        for (const auto& s : socs_)
            for (const auto& e : s) emit(e, 1.0);
        for (const auto& p : psd_real_) {
            for (int i = 0; i < p.dim(); ++i) emit(p.diag(i), 1.0);
            for (int j = 1; j < p.dim(); ++j)
                for (int i = 0; i < j; ++i) emit(p.upper(i, j), kSqrt2);
        }
        for (const auto& p : psd_herm_) {
            for (int i = 0; i < p.dim(); ++i) emit(p.diag(i), 1.0);
            for (int j = 1; j < p.dim(); ++j)
                for (int i = 0; i < j; ++i) {
                    emit(p.upper(i, j).re(), kSqrt2);
                    emit(p.upper(i, j).im(), kSqrt2);
                }
        }
        sf.G.resize(m, n_vars_);
        sf.G.setFromTriplets(gt.begin(), gt.end());
        return sf;
    }

    /// Plain-text dump for cross-checking against external solvers. Format:
    /// header counts, then objective / equality / cone sections as sparse
    /// "index:coeff" triplets plus constants, one constraint per line.
    void dump(std::ostream& os) const {
        os << "conic-problem v1\n";
        os << "vars " << n_vars_ << "\n";
        os << "eq " << equalities_.size() << " nonneg " << nonneg_.size() << " soc "
           << socs_.size() << " psd " << num_psd_blocks() << "\n";
        auto put = [&os](const LinExpr& e) {
            os << e.constant();
            for (const auto& [i, v] : e.terms()) os << " " << i << ":" << v;
            os << "\n";
        };
        os << "objective ";
        put(objective_);
        for (const auto& e : equalities_) {
            os << "eq ";
            put(e);
        }
        for (const auto& e : nonneg_) {
            os << "nonneg ";
            put(e);
        }
        for (const auto& s : socs_) {
            os << "soc " << s.size() << "\n";
            for (const auto& e : s) {
                os << "  ";
                put(e);
            }
        }
        for (const auto& p : psd_real_) {
            os << "psd real " << p.dim() << "\n";
            for (int i = 0; i < p.dim(); ++i) {
                os << "  d" << i << " ";
                put(p.diag(i));
            }
            for (int j = 1; j < p.dim(); ++j)
                for (int i = 0; i < j; ++i) {
                    os << "  u" << i << "," << j << " ";
                    put(p.upper(i, j));
                }
        }
        for (const auto& p : psd_herm_) {
            os << "psd herm " << p.dim() << "\n";
            for (int i = 0; i < p.dim(); ++i) {
                os << "  d" << i << " ";
                put(p.diag(i));
            }
            for (int j = 1; j < p.dim(); ++j)
                for (int i = 0; i < j; ++i) {
                    os << "  re" << i << "," << j << " ";
                    put(p.upper(i, j).re());
                    os << "  im" << i << "," << j << " ";
                    put(p.upper(i, j).im());
                }
        }
    }

  private:
    void check_indices(const LinExpr& e) const {
        if (e.max_var_index() >= n_vars_)
            throw std::invalid_argument("constraint references undeclared variable");
    }

    int n_vars_ = 0;
    std::vector<std::string> names_;
    LinExpr objective_;
    std::vector<LinExpr> equalities_;
    std::vector<LinExpr> nonneg_;
    std::vector<std::vector<LinExpr>> socs_;
    std::vector<SymExpr> psd_real_;
    std::vector<HermExpr> psd_herm_;
};

}  // namespace secirs::conic
