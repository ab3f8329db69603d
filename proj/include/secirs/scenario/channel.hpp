// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "secirs/common.hpp"
#include "secirs/scenario/config.hpp"
#include "secirs/scenario/geometry.hpp"

namespace secirs::scenario {

/// Complex channel matrices for one frame, per sub-carrier. Conventions:
/// channel vectors are stored as columns; the row vector acting on the
/// transmit signal is the adjoint. The IRS applies Phi = diag(phi), and the
/// effective downlink row for endpoint x on sub-carrier m is
///   hbar^H = h_x^H Phi H[m] + g_x^H.
struct ChannelSet {
    int Nt = 0, Ni = 0, M = 0;
    std::vector<Eigen::MatrixXcd> H;                // per m: Ni x Nt (BS-IRS)
    std::vector<std::vector<Eigen::VectorXcd>> hu;  // [m][k]: Ni  (IRS-user)
    std::vector<std::vector<Eigen::VectorXcd>> gu;  // [m][k]: Nt  (BS-user)
    std::vector<std::vector<Eigen::VectorXcd>> he;  // [m][j]: Ni  (IRS-eve)
    std::vector<std::vector<Eigen::VectorXcd>> ge;  // [m][j]: Nt  (BS-eve)
    std::vector<Eigen::Vector2d> user_pos;
    std::vector<Eigen::Vector2d> eve_pos;

    int num_users() const { return H.empty() ? 0 : static_cast<int>(hu[0].size()); }
    int num_eves() const { return H.empty() ? 0 : static_cast<int>(he[0].size()); }

    /// Effective row channel for a given phase vector (user endpoint).
    Eigen::RowVectorXcd effective_user(int k, int m, const Eigen::VectorXcd& phi) const {
        if (Ni == 0) return gu[m][k].adjoint();
        return hu[m][k].adjoint() * phi.asDiagonal() * H[m] + gu[m][k].adjoint();
    }
    Eigen::RowVectorXcd effective_eve(int j, int m, const Eigen::VectorXcd& phi) const {
        if (Ni == 0) return ge[m][j].adjoint();
        return he[m][j].adjoint() * phi.asDiagonal() * H[m] + ge[m][j].adjoint();
    }

    /// Returns a copy with the IRS-side channels nulled (direct links only).
    ChannelSet without_irs() const {
        ChannelSet c = *this;
        for (auto& Hm : c.H) Hm.setZero();
        for (auto& v : c.hu)
            for (auto& h : v) h.setZero();
        for (auto& v : c.he)
            for (auto& h : v) h.setZero();
        return c;
    }
};

/// Composite (N_I+1) x N_T matrix G_x[m] = [diag(h_x^H) H[m]; g_x^H] tying the
/// lifted phase matrix to the effective channel: with the lift
/// phit = [conj(phi); 1],  |hbar^H w|^2 = tr(phit phit^H G w w^H G^H).
inline Eigen::MatrixXcd composite_matrix(const Eigen::MatrixXcd& H,
                                         const Eigen::VectorXcd& h,
                                         const Eigen::VectorXcd& g) {
    const int Ni = static_cast<int>(H.rows());
    const int Nt = static_cast<int>(g.size());
    if (Ni > 0 && H.cols() != Nt)
        throw std::invalid_argument("composite_matrix: dimension mismatch between H and g");
    if (h.size() != Ni)
        throw std::invalid_argument("composite_matrix: dimension mismatch between H and h");
    Eigen::MatrixXcd G(Ni + 1, Nt);
    if (Ni > 0) G.topRows(Ni) = h.conjugate().asDiagonal() * H;
    G.row(Ni) = g.adjoint();
    return G;
}

inline Eigen::MatrixXcd composite_user(const ChannelSet& cs, int k, int m) {
    return composite_matrix(cs.H[m], cs.hu[m][k], cs.gu[m][k]);
}
inline Eigen::MatrixXcd composite_eve(const ChannelSet& cs, int j, int m) {
    return composite_matrix(cs.H[m], cs.he[m][j], cs.ge[m][j]);
}

/// Lift of a unit-modulus phase vector: phit = [conj(phi); 1].
inline Eigen::VectorXcd lift_phases(const Eigen::VectorXcd& phi) {
    Eigen::VectorXcd t(phi.size() + 1);
    t.head(phi.size()) = phi.conjugate();
    t[phi.size()] = 1.0;
    return t;
}

inline Eigen::MatrixXcd lifted_phase_matrix(const Eigen::VectorXcd& phi) {
    const Eigen::VectorXcd t = lift_phases(phi);
    return t * t.adjoint();
}

namespace detail {

inline Eigen::VectorXcd ula_response(int n, double angle, Rng& /*unused*/) {
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i) {
        const double ph = kPi * i * std::sin(angle);
        a[i] = cxd(std::cos(ph), std::sin(ph));
    }
    return a;
}

/// Rician small-scale fading vector with unit average entry power.
inline Eigen::VectorXcd rician_vector(int n, double ric, Rng& rng) {
    const double a_los = std::sqrt(ric / (1.0 + ric));
    const double a_sc = std::sqrt(1.0 / (1.0 + ric));
    Eigen::VectorXcd v(n);
    Eigen::VectorXcd los = ula_response(n, rng.uniform(-kPi / 2, kPi / 2), rng);
    for (int i = 0; i < n; ++i) v[i] = a_los * los[i] + a_sc * rng.cnormal();
    return v;
}

inline Eigen::MatrixXcd rician_matrix(int rows, int cols, double ric, Rng& rng) {
    const double a_los = std::sqrt(ric / (1.0 + ric));
    const double a_sc = std::sqrt(1.0 / (1.0 + ric));
    Eigen::VectorXcd ar = ula_response(rows, rng.uniform(-kPi / 2, kPi / 2), rng);
    Eigen::VectorXcd at = ula_response(cols, rng.uniform(-kPi / 2, kPi / 2), rng);
    Eigen::MatrixXcd m = a_los * (ar * at.adjoint());
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) += a_sc * rng.cnormal();
    return m;
}

/// Lower Cholesky factor of the exponential correlation matrix rho^{|i-j|}.
inline Eigen::MatrixXcd correlation_root(int n, double rho) {
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = std::pow(rho, std::abs(i - j));
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    return llt.matrixL().toDenseMatrix().cast<cxd>();
}

inline Eigen::Vector2d draw_in_disk(const Eigen::Vector2d& center, double radius, Rng& rng) {
    const double r = radius * std::sqrt(rng.uniform());
    const double th = rng.uniform(0.0, 2.0 * kPi);
    return center + r * Eigen::Vector2d(std::cos(th), std::sin(th));
}

}  // namespace detail

/// Draws one frame of channels: uniform endpoint positions in their disks,
/// Rician small-scale fading scaled by the path-loss power gain, independent
/// across sub-carriers in the scattered part, optionally spatially correlated
/// direct channels. Fully reproducible from the seed.
inline ChannelSet generate_channels(const SystemConfig& cfg, const Geometry& geom,
                                    std::uint64_t seed) {
    cfg.require_valid();
    geom.require_valid();
    Rng rng(mix_seed(seed, 0x6368616eull));

    ChannelSet cs;
    cs.Nt = cfg.Nt;
    cs.Ni = cfg.Ni;
    cs.M = cfg.M;
    cs.H.resize(cfg.M);
    cs.hu.assign(cfg.M, std::vector<Eigen::VectorXcd>(cfg.K));
    cs.gu.assign(cfg.M, std::vector<Eigen::VectorXcd>(cfg.K));
    cs.he.assign(cfg.M, std::vector<Eigen::VectorXcd>(cfg.J));
    cs.ge.assign(cfg.M, std::vector<Eigen::VectorXcd>(cfg.J));

    for (int k = 0; k < cfg.K; ++k)
        cs.user_pos.push_back(detail::draw_in_disk(geom.user_center, geom.r_user, rng));
    for (int j = 0; j < cfg.J; ++j)
        cs.eve_pos.push_back(detail::draw_in_disk(geom.eve_center, geom.r_eve, rng));

    const bool sq = geom.pathloss_squared;
    const double d_bi = (geom.bs - geom.irs).norm();
    const double pl_bi =
        cfg.Ni > 0 ? pathloss(d_bi, geom.gamma_bi, 1.0, geom.fc_hz, geom.d_ref, sq) : 0.0;

    Eigen::MatrixXcd corr_root;
    if (geom.correlated && geom.rho > 0.0)
        corr_root = detail::correlation_root(cfg.Nt, geom.rho);

    // Correlation applies to the scattered component; with a zero Rician
    // factor this reduces to the plain R^{1/2} w construction.
    auto direct = [&](const Eigen::Vector2d& pos, double gamma_exp, double ric, double b,
                      Rng& r) {
        const double d = std::max((geom.bs - pos).norm(), geom.d_ref);
        const double pl = pathloss(d, gamma_exp, b, geom.fc_hz, geom.d_ref, sq);
        const double a_los = std::sqrt(ric / (1.0 + ric));
        const double a_sc = std::sqrt(1.0 / (1.0 + ric));
        const Eigen::VectorXcd los =
            detail::ula_response(cfg.Nt, r.uniform(-kPi / 2, kPi / 2), r);
        Eigen::VectorXcd w(cfg.Nt);
        for (int i = 0; i < cfg.Nt; ++i) w[i] = r.cnormal();
        if (geom.correlated && geom.rho > 0.0) w = (corr_root * w).eval();
        return Eigen::VectorXcd(std::sqrt(pl) * (a_los * los + a_sc * w));
    };
    auto irs_side = [&](const Eigen::Vector2d& pos, double gamma_exp, double ric, Rng& r) {
        const double d = std::max((geom.irs - pos).norm(), geom.d_ref);
        const double pl = pathloss(d, gamma_exp, 1.0, geom.fc_hz, geom.d_ref, sq);
        return Eigen::VectorXcd(std::sqrt(pl) * detail::rician_vector(cfg.Ni, ric, r));
    };

    for (int m = 0; m < cfg.M; ++m) {
        cs.H[m] = cfg.Ni > 0 ? Eigen::MatrixXcd(std::sqrt(pl_bi) *
                                                detail::rician_matrix(cfg.Ni, cfg.Nt,
                                                                      geom.ric_bi, rng))
                             : Eigen::MatrixXcd(0, cfg.Nt);
        for (int k = 0; k < cfg.K; ++k) {
            cs.hu[m][k] = cfg.Ni > 0 ? irs_side(cs.user_pos[k], geom.gamma_iu, geom.ric_iu, rng)
                                     : Eigen::VectorXcd(0);
            cs.gu[m][k] = direct(cs.user_pos[k], geom.gamma_bu, geom.ric_bu, geom.b_bu, rng);
        }
        for (int j = 0; j < cfg.J; ++j) {
            cs.he[m][j] = cfg.Ni > 0 ? irs_side(cs.eve_pos[j], geom.gamma_ie, geom.ric_ie, rng)
                                     : Eigen::VectorXcd(0);
            cs.ge[m][j] = direct(cs.eve_pos[j], geom.gamma_be, geom.ric_be, geom.b_be, rng);
        }
    }
    return cs;
}

}  // namespace secirs::scenario
