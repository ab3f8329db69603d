// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include <cmath>

#include "secirs/fbl/qfunc.hpp"
#include "secirs/fbl/secure_bits.hpp"
#include "secirs/fbl/taylor.hpp"

using namespace secirs;
using namespace secirs::fbl;

namespace {

// high-precision Gaussian tail in long double, for the bisection oracle
long double q_tail_ld(long double x) { return 0.5L * erfcl(x * 0.70710678118654752440L); }

double qinv_bisect(double p) {
    long double lo = -40.0L, hi = 40.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (q_tail_ld(mid) > static_cast<long double>(p))
            lo = mid;
        else
            hi = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

scenario::SystemConfig tensor_config(int K, int J, int M, int N, int n_bar) {
    scenario::SystemConfig c;
    c.K = K;
    c.J = J;
    c.Nt = 2;
    c.Ni = 2;
    c.M = M;
    c.N = N;
    c.Bs_hz = 240e3;
    c.Tf_s = static_cast<double>(n_bar) * N / 240e3;
    c.normalize();
    return c;
}

// independent long-double evaluation of the secure-bits expression
double oracle_secure_bits(const SinrTensor& t, const scenario::SystemConfig& cfg, int k) {
    const long double nb = cfg.n_bar;
    long double rate = 0.0L, z = 0.0L;
    for (int m = 0; m < t.M; ++m)
        for (int n = 0; n < t.N; ++n) {
            const long double g = t.at_user(k, m, n);
            rate += logl(1.0L + g) / logl(2.0L);
            z += 1.0L - 1.0L / ((1.0L + g) * (1.0L + g));
        }
    long double b = nb * rate;
    if (cfg.eps[k] < 0.5)
        b -= static_cast<long double>(cfg.dispersion_a) *
             static_cast<long double>(qinv_bisect(cfg.eps[k])) * sqrtl(nb * z);
    long double worst = 0.0L;
    for (int j = 0; j < t.J; ++j) {
        long double lr = 0.0L, lz = 0.0L;
        for (int m = 0; m < t.M; ++m)
            for (int n = 0; n < t.N; ++n) {
                const long double g = t.at_eve(j, k, m, n);
                lr += logl(1.0L + g) / logl(2.0L);
                lz += 1.0L - 1.0L / ((1.0L + g) * (1.0L + g));
            }
        long double c = nb * lr;
        if (cfg.delta_for(j, k) < 0.5)
            c += static_cast<long double>(cfg.dispersion_a) *
                 static_cast<long double>(qinv_bisect(cfg.delta_for(j, k))) * sqrtl(nb * lz);
        worst = std::max(worst, c);
    }
    return static_cast<double>(b - worst);
}

}  // namespace

TEST_CASE("inverse Q function") {
    CHECK(qfunc_inv(0.5) == 0.0);
    CHECK(qfunc_inv(0.9) == Approx(-qfunc_inv(0.1)).margin(1e-13));
    SECTION("small tail against the bisection oracle") {
        const double x = qfunc_inv(1e-6);
        CHECK(x == Approx(4.7534).margin(5e-4));
        CHECK(std::abs(x - qinv_bisect(1e-6)) <= 1e-10);
    }
    SECTION("round trip over the probability grid") {
        for (double p : {1e-9, 1e-6, 1e-3, 0.1, 0.4}) {
            CHECK(std::abs(qfunc(qfunc_inv(p)) - p) <= 1e-12);
        }
    }
    SECTION("domain errors") {
        CHECK_THROWS_AS(qfunc_inv(0.0), std::invalid_argument);
        CHECK_THROWS_AS(qfunc_inv(1.0), std::invalid_argument);
        CHECK_THROWS_AS(qfunc_inv(-0.2), std::invalid_argument);
    }
}

TEST_CASE("channel dispersion") {
    CHECK(dispersion(0.0) == 0.0);
    CHECK(dispersion(1.0) == Approx(0.75));
    CHECK(dispersion(1e6) == Approx(1.0).margin(1e-11));
    // strictly increasing
    double prev = -1.0;
    for (double g = 0.0; g < 10.0; g += 0.5) {
        CHECK(dispersion(g) > prev);
        prev = dispersion(g);
    }
}

TEST_CASE("secure bits functional") {
    SECTION("silent system") {
        auto cfg = tensor_config(1, 2, 2, 2, 13);
        SinrTensor t(1, 2, 2, 2);
        const auto bb = secure_bits(t, cfg, 0);
        CHECK(bb.rate == 0.0);
        CHECK(bb.dispersion_penalty == 0.0);
        CHECK(bb.tau == 0.0);
        CHECK(bb.b_bar == 0.0);
    }
    SECTION("dispersion-free limit reduces to the log-difference rate") {
        auto cfg = tensor_config(1, 1, 2, 2, 13);
        cfg.eps = {0.5};
        cfg.delta = {0.5};
        SinrTensor t(1, 1, 2, 2);
        Rng rng(5);
        double expect = 0.0;
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) {
                t.at_user(0, m, n) = rng.uniform(0.5, 20.0);
                t.at_eve(0, 0, m, n) = rng.uniform(0.0, 0.3);
                expect += 13.0 * (std::log2(1 + t.at_user(0, m, n)));
            }
        double leak = 0.0;
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) leak += 13.0 * std::log2(1 + t.at_eve(0, 0, m, n));
        const auto bb = secure_bits(t, cfg, 0);
        CHECK(bb.b_bar == Approx(expect - leak).margin(1e-12 * std::abs(expect)));
    }
    SECTION("single-carrier case against the high-precision oracle") {
        auto cfg = tensor_config(1, 1, 1, 1, 13);
        SinrTensor t(1, 1, 1, 1);
        t.at_user(0, 0, 0) = 10.0;
        t.at_eve(0, 0, 0, 0) = 0.1;
        const auto bb = secure_bits(t, cfg, 0);
        const double expect = oracle_secure_bits(t, cfg, 0);
        CHECK(bb.b_bar == Approx(expect).epsilon(1e-9));
        // hand evaluation: R = 13 log2(11) = 44.97, C_k = 24.62, C_jk = 12.09
        CHECK(bb.b_bar == Approx(8.26).margin(0.02));
    }
    SECTION("decomposition identity is exact") {
        auto cfg = tensor_config(2, 3, 3, 2, 13);
        SinrTensor t(2, 3, 3, 2);
        Rng rng(17);
        for (auto& v : t.user) v = rng.uniform(0.0, 30.0);
        for (auto& v : t.eve) v = rng.uniform(0.0, 2.0);
        for (int k = 0; k < 2; ++k) {
            const auto bb = secure_bits(t, cfg, k);
            CHECK(bb.b_bar == bb.rate - bb.dispersion_penalty - bb.tau);  // bitwise
            CHECK(bb.rate >= 0.0);
            CHECK(bb.dispersion_penalty >= 0.0);
            double worst = 0.0;
            for (double c : bb.leakage) worst = std::max(worst, c);
            CHECK(bb.tau == worst);
        }
    }
    SECTION("monotone in the SINRs in the operating region") {
        auto cfg = tensor_config(1, 2, 2, 2, 13);
        Rng rng(31);
        for (int trial = 0; trial < 30; ++trial) {
            SinrTensor t(1, 2, 2, 2);
            for (auto& v : t.user) v = rng.uniform(0.5, 50.0);
            for (auto& v : t.eve) v = rng.uniform(0.0, 3.0);
            const double base = secure_bits(t, cfg, 0).b_bar;
            SinrTensor up = t;
            up.at_user(0, 1, 1) *= 1.01;
            CHECK(secure_bits(up, cfg, 0).b_bar >= base - 1e-9);
            SinrTensor worse = t;
            worse.at_eve(1, 0, 0, 1) *= 1.01;
            CHECK(secure_bits(worse, cfg, 0).b_bar <= base + 1e-9);
        }
    }
    SECTION("no eavesdroppers and eps = 0.5 equals the plain rate") {
        auto cfg = tensor_config(1, 0, 2, 2, 13);
        cfg.eps = {0.5};
        cfg.delta.clear();
        cfg.normalize();
        cfg.eps = {0.5};
        SinrTensor t(1, 0, 2, 2);
        Rng rng(7);
        double expect = 0.0;
        for (auto& v : t.user) {
            v = rng.uniform(0.1, 5.0);
            expect += 13.0 * std::log2(1.0 + v);
        }
        CHECK(secure_bits(t, cfg, 0).b_bar == Approx(expect).margin(1e-12 * expect));
    }
}

TEST_CASE("trace-form SINR") {
    auto cfg = tensor_config(1, 0, 1, 1, 13);
    cfg.Nt = 2;
    cfg.Ni = 4;
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(cfg, geom, 11);
    Rng rng(23);
    Eigen::VectorXcd phi(cfg.Ni);
    for (int i = 0; i < cfg.Ni; ++i) {
        const double th = rng.uniform(0, 2 * kPi);
        phi[i] = cxd(std::cos(th), std::sin(th));
    }
    const Eigen::MatrixXcd lift = scenario::lifted_phase_matrix(phi);
    const Eigen::MatrixXcd G = scenario::composite_user(cs, 0, 0);

    SECTION("zero beamformers give zero SINR") {
        std::vector<Eigen::MatrixXcd> W{Eigen::MatrixXcd::Zero(2, 2)};
        CHECK(sinr_from_traces(G, lift, W, 0, Eigen::MatrixXcd::Zero(2, 2), cfg.sigma2_w) ==
              0.0);
    }
    SECTION("single user, no AN matches direct arithmetic") {
        Eigen::VectorXcd w(2);
        w << cxd(0.01, 0.002), cxd(-0.004, 0.01);
        std::vector<Eigen::MatrixXcd> W{w * w.adjoint()};
        const double direct =
            std::norm((cs.effective_user(0, 0, phi) * w)(0)) / cfg.sigma2_w;
        CHECK(sinr_from_traces(G, lift, W, 0, Eigen::MatrixXcd::Zero(2, 2), cfg.sigma2_w) ==
              Approx(direct).epsilon(1e-10));
    }
    SECTION("artificial noise only lowers the SINR") {
        Eigen::VectorXcd w(2);
        w << cxd(0.01, 0.0), cxd(0.0, 0.01);
        std::vector<Eigen::MatrixXcd> W{w * w.adjoint()};
        const double clean =
            sinr_from_traces(G, lift, W, 0, Eigen::MatrixXcd::Zero(2, 2), cfg.sigma2_w);
        const double with_an = sinr_from_traces(
            G, lift, W, 0, Eigen::MatrixXcd::Identity(2, 2) * 1e-6, cfg.sigma2_w);
        CHECK(with_an < clean);
    }
}

TEST_CASE("Taylor surrogates of the dispersion terms") {
    auto cfg = tensor_config(1, 1, 2, 2, 13);
    Rng rng(41);
    SECTION("tangency at the anchor") {
        for (CKind kind : {CKind::user, CKind::eve}) {
            Eigen::VectorXd a(6);
            for (int i = 0; i < 6; ++i) a[i] = rng.uniform(0.01, 10.0);
            const auto s = taylor_C(a, kind, 1e-6, cfg);
            CHECK(s.eval(a) == Approx(c_value(a, kind, 1e-6, cfg)).epsilon(1e-12));
        }
    }
    SECTION("gradient against central finite differences") {
        for (CKind kind : {CKind::user, CKind::eve}) {
            Eigen::VectorXd a(5);
            for (int i = 0; i < 5; ++i) a[i] = rng.uniform(0.05, 8.0);
            const auto s = taylor_C(a, kind, 1e-6, cfg);
            for (int i = 0; i < 5; ++i) {
                const double h = 1e-6;
                Eigen::VectorXd up = a, dn = a;
                up[i] += h;
                dn[i] -= h;
                const double fd =
                    (c_value(up, kind, 1e-6, cfg) - c_value(dn, kind, 1e-6, cfg)) / (2 * h);
                CHECK(s.grad[i] == Approx(fd).epsilon(1e-5));
            }
        }
    }
    SECTION("surrogate upper-bounds the concave function") {
        for (CKind kind : {CKind::user, CKind::eve}) {
            Eigen::VectorXd a(4);
            for (int i = 0; i < 4; ++i) a[i] = rng.uniform(0.05, 5.0);
            const auto s = taylor_C(a, kind, 1e-6, cfg);
            for (int probe = 0; probe < 100; ++probe) {
                Eigen::VectorXd v(4);
                for (int i = 0; i < 4; ++i) v[i] = rng.uniform(0.0, 20.0);
                CHECK(s.eval(v) >= c_value(v, kind, 1e-6, cfg) - 1e-9);
            }
        }
    }
    SECTION("singular gradient at an all-zero anchor") {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
        CHECK_THROWS_AS(taylor_C(zero, CKind::user, 1e-6, cfg), std::invalid_argument);
        // with the dispersion term disabled there is no singularity
        CHECK_NOTHROW(taylor_C(zero, CKind::eve, 0.5, cfg));
        auto relaxed = cfg;
        relaxed.dispersion_enabled = false;
        CHECK_NOTHROW(taylor_C(zero, CKind::user, 1e-6, relaxed));
    }
}
