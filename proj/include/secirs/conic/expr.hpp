// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace secirs::conic {

/// Real affine expression over the scalar variables of a ConicProblem:
/// sum_i coeff_i * x[idx_i] + constant.
class LinExpr {
  public:
    LinExpr() = default;
    explicit LinExpr(double constant) : constant_(constant) {}

    static LinExpr variable(int idx, double coeff = 1.0) {
        LinExpr e;
        e.add(idx, coeff);
        return e;
    }

    void add(int idx, double coeff) {
        if (idx < 0) throw std::invalid_argument("LinExpr: negative variable index");
        if (coeff != 0.0) terms_.emplace_back(idx, coeff);
    }
    void add_constant(double v) { constant_ += v; }

    LinExpr& operator+=(const LinExpr& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        constant_ += o.constant_;
        return *this;
    }
    LinExpr& operator-=(const LinExpr& o) {
        terms_.reserve(terms_.size() + o.terms_.size());
        for (const auto& [i, v] : o.terms_) terms_.emplace_back(i, -v);
        constant_ -= o.constant_;
        return *this;
    }
    LinExpr& operator*=(double a) {
        for (auto& [i, v] : terms_) v *= a;
        constant_ *= a;
        return *this;
    }

    friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
    friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
    friend LinExpr operator*(double a, LinExpr e) { return e *= a; }
    friend LinExpr operator*(LinExpr e, double a) { return e *= a; }
    friend LinExpr operator+(LinExpr a, double c) { a.add_constant(c); return a; }
    friend LinExpr operator+(double c, LinExpr a) { a.add_constant(c); return a; }
    friend LinExpr operator-(LinExpr a, double c) { a.add_constant(-c); return a; }
    friend LinExpr operator-(double c, LinExpr a) { a *= -1.0; a.add_constant(c); return a; }
    friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

    /// Merges duplicate indices and drops exact zeros.
    void compress() {
        if (terms_.empty()) return;
        std::sort(terms_.begin(), terms_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t out = 0;
        for (std::size_t i = 0; i < terms_.size();) {
            int idx = terms_[i].first;
            double sum = 0.0;
            while (i < terms_.size() && terms_[i].first == idx) sum += terms_[i++].second;
            if (sum != 0.0) terms_[out++] = {idx, sum};
        }
        terms_.resize(out);
    }

    double eval(const Eigen::VectorXd& x) const {
        double v = constant_;
        for (const auto& [i, c] : terms_) v += c * x[i];
        return v;
    }

    const std::vector<std::pair<int, double>>& terms() const { return terms_; }
    double constant() const { return constant_; }
    int max_var_index() const {
        int m = -1;
        for (const auto& [i, c] : terms_) m = std::max(m, i);
        return m;
    }

  private:
    std::vector<std::pair<int, double>> terms_;
    double constant_ = 0.0;
};

/// Complex affine expression over real variables (pair of real expressions).
class CxExpr {
  public:
    CxExpr() = default;
    CxExpr(LinExpr re, LinExpr im) : re_(std::move(re)), im_(std::move(im)) {}
    explicit CxExpr(std::complex<double> c) : re_(c.real()), im_(c.imag()) {}

    void add(int idx, std::complex<double> coeff) {
        re_.add(idx, coeff.real());
        im_.add(idx, coeff.imag());
    }
    void add_constant(std::complex<double> c) {
        re_.add_constant(c.real());
        im_.add_constant(c.imag());
    }

    CxExpr& operator+=(const CxExpr& o) {
        re_ += o.re_;
        im_ += o.im_;
        return *this;
    }

    CxExpr conj() const { return {re_, -im_}; }

    std::complex<double> eval(const Eigen::VectorXd& x) const {
        return {re_.eval(x), im_.eval(x)};
    }

    const LinExpr& re() const { return re_; }
    const LinExpr& im() const { return im_; }
    LinExpr& re() { return re_; }
    LinExpr& im() { return im_; }

  private:
    LinExpr re_, im_;
};

/// Affine d x d Hermitian-matrix expression. Stores the diagonal (real) and the
/// strict upper triangle (complex); the lower triangle is implied by conjugation.
class HermExpr {
  public:
    explicit HermExpr(int dim) : dim_(dim), diag_(dim), upper_(dim * (dim - 1) / 2) {
        if (dim < 1) throw std::invalid_argument("HermExpr: dim must be >= 1");
    }

    int dim() const { return dim_; }
    LinExpr& diag(int i) { return diag_.at(i); }
    const LinExpr& diag(int i) const { return diag_.at(i); }
    /// Requires i < j.
    CxExpr& upper(int i, int j) { return upper_.at(pair_index(i, j)); }
    const CxExpr& upper(int i, int j) const { return upper_.at(pair_index(i, j)); }

    Eigen::MatrixXcd eval(const Eigen::VectorXd& x) const {
        Eigen::MatrixXcd M(dim_, dim_);
        for (int i = 0; i < dim_; ++i) M(i, i) = diag_[i].eval(x);
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) {
                const std::complex<double> v = upper(i, j).eval(x);
                M(i, j) = v;
                M(j, i) = std::conj(v);
            }
        return M;
    }

  private:
    int pair_index(int i, int j) const {
        if (!(0 <= i && i < j && j < dim_))
            throw std::out_of_range("HermExpr: upper-triangle index (i<j) required");
        return j * (j - 1) / 2 + i;
    }

    int dim_;
    std::vector<LinExpr> diag_;
    std::vector<CxExpr> upper_;
};

/// Affine d x d real symmetric matrix expression (diagonal + strict upper triangle).
class SymExpr {
  public:
    explicit SymExpr(int dim) : dim_(dim), diag_(dim), upper_(dim * (dim - 1) / 2) {
        if (dim < 1) throw std::invalid_argument("SymExpr: dim must be >= 1");
    }

    int dim() const { return dim_; }
    LinExpr& diag(int i) { return diag_.at(i); }
    const LinExpr& diag(int i) const { return diag_.at(i); }
    LinExpr& upper(int i, int j) { return upper_.at(pair_index(i, j)); }
    const LinExpr& upper(int i, int j) const { return upper_.at(pair_index(i, j)); }

    Eigen::MatrixXd eval(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd M(dim_, dim_);
        for (int i = 0; i < dim_; ++i) M(i, i) = diag_[i].eval(x);
        for (int j = 1; j < dim_; ++j)
            for (int i = 0; i < j; ++i) M(i, j) = M(j, i) = upper(i, j).eval(x);
        return M;
    }

  private:
    int pair_index(int i, int j) const {
        if (!(0 <= i && i < j && j < dim_))
            throw std::out_of_range("SymExpr: upper-triangle index (i<j) required");
        return j * (j - 1) / 2 + i;
    }

    int dim_;
    std::vector<LinExpr> diag_;
    std::vector<LinExpr> upper_;
};

}  // namespace secirs::conic
