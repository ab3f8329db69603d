// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "secirs/common.hpp"
#include "secirs/fbl/qfunc.hpp"
#include "secirs/fbl/secure_bits.hpp"
#include "secirs/scenario/config.hpp"

namespace secirs::fbl {

enum class CKind { user, eve };  // C_k(alpha) or C_{j,k}(zeta)

/// First-order expansion of C at an anchor: value(v) = C(a) + grad.(v - a).
/// C is concave on the nonnegative orthant, so the surrogate upper-bounds C
/// and touches it at the anchor.
struct AffineSurrogate {
    Eigen::VectorXd anchor;
    Eigen::VectorXd grad;
    double value_at_anchor = 0.0;

    double eval(const Eigen::VectorXd& v) const {
        return value_at_anchor + grad.dot(v - anchor);
    }
};

/// Exact value of C_k / C_{j,k} at a SINR vector (entries over the active
/// (m,n) grid). `prob` is eps_k or delta_{j,k}.
inline double c_value(const Eigen::VectorXd& v, CKind kind, double prob,
                      const scenario::SystemConfig& cfg) {
    const double nb = static_cast<double>(cfg.n_bar);
    const double qinv =
        (cfg.dispersion_enabled && prob < 0.5) ? qfunc_inv(prob) : 0.0;
    double zsum = 0.0, lsum = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        zsum += dispersion(v[i]);
        lsum += std::log2(1.0 + v[i]);
    }
    double c = cfg.dispersion_a * qinv * std::sqrt(nb * zsum);
    if (kind == CKind::eve) c += nb * lsum;
    return c;
}

/// Taylor surrogate of C at the anchor. The sqrt-of-dispersions term has a
/// singular gradient at an all-zero anchor; callers must perturb first.
inline AffineSurrogate taylor_C(const Eigen::VectorXd& anchor, CKind kind, double prob,
                                const scenario::SystemConfig& cfg) {
    for (int i = 0; i < anchor.size(); ++i)
        if (anchor[i] < 0.0)
            throw std::invalid_argument("taylor_C: anchor entries must be >= 0");
    const double nb = static_cast<double>(cfg.n_bar);
    const double qinv =
        (cfg.dispersion_enabled && prob < 0.5) ? qfunc_inv(prob) : 0.0;

    AffineSurrogate s;
    s.anchor = anchor;
    s.grad = Eigen::VectorXd::Zero(anchor.size());

    double zsum = 0.0;
    for (int i = 0; i < anchor.size(); ++i) zsum += dispersion(anchor[i]);
    if (qinv > 0.0) {
        if (zsum <= 0.0)
            throw std::invalid_argument(
                "taylor_C: all-zero anchor makes the sqrt gradient singular; perturb");
        const double root = std::sqrt(nb * zsum);
        const double front = cfg.dispersion_a * qinv * nb / (2.0 * root);
        for (int i = 0; i < anchor.size(); ++i) {
            const double t = 1.0 + anchor[i];
            s.grad[i] += front * 2.0 / (t * t * t);  // dZ/dgamma = 2 (1+g)^-3
        }
        s.value_at_anchor += cfg.dispersion_a * qinv * root;
    }
    if (kind == CKind::eve) {
        for (int i = 0; i < anchor.size(); ++i) {
            s.grad[i] += nb / ((1.0 + anchor[i]) * std::numbers::ln2);
            s.value_at_anchor += nb * std::log2(1.0 + anchor[i]);
        }
    }
    return s;
}

}  // namespace secirs::fbl
