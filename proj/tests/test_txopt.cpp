// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include "secirs/txopt/solve.hpp"

using namespace secirs;
using namespace secirs::txopt;

namespace {

scenario::SystemConfig make_config(int K, int J, int Nt, int Ni, int M, int N,
                                   double breq) {
    scenario::SystemConfig c;
    c.K = K;
    c.J = J;
    c.Nt = Nt;
    c.Ni = Ni;
    c.M = M;
    c.N = N;
    c.Bs_hz = 240e3;
    c.Tf_s = 13.0 * N / 240e3;
    c.b_req.assign(K, breq);
    c.delay.assign(K, N);
    c.normalize();
    return c;
}

std::vector<Eigen::MatrixXcd> random_lift(const scenario::SystemConfig& cfg,
                                          std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x11));
    std::vector<Eigen::MatrixXcd> lift(cfg.N);
    for (int n = 0; n < cfg.N; ++n) {
        Eigen::VectorXcd phi(cfg.Ni);
        for (int i = 0; i < cfg.Ni; ++i) {
            const double th = rng.uniform(0, 2 * kPi);
            phi[i] = cxd(std::cos(th), std::sin(th));
        }
        lift[n] = scenario::lifted_phase_matrix(phi);
    }
    return lift;
}

}  // namespace

TEST_CASE("problem census for the smallest layout") {
    auto cfg = make_config(1, 1, 2, 4, 1, 1, 40.0);
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(cfg, geom, 3);
    const auto ops = make_trace_ops(cs, random_lift(cfg, 3), cfg);
    ScaAnchors a;
    a.alpha = Eigen::VectorXd::Constant(1, 2.0);
    a.beta = Eigen::VectorXd::Constant(1, 1.0);
    a.zeta = Eigen::VectorXd::Constant(1, 0.1);
    a.beta_bar = Eigen::VectorXd::Constant(1, 1.0);
    a.tau = Eigen::VectorXd::Zero(1);
    P1Model mdl = build_p1(ops, a, cfg, 0.3);

    // two Hermitian matrix variables: W_1 and V
    CHECK(mdl.Wv.size() == 1);
    CHECK(mdl.Vv.size() == 1);
    // PSD blocks: the two matrix variables plus one C9 and one C10 LMI
    CHECK(mdl.prob.num_psd_blocks() == 4);
    CHECK(mdl.prob.num_socs() == 0);
    CHECK(mdl.prob.num_equalities() == 0);
    // scalars: alpha, t, beta, zeta, beta_bar, tau on top of 2 * Nt^2 matrix dofs
    CHECK(mdl.prob.num_vars() == 2 * 4 + 6);
    // nonnegative rows: alpha >= 0, alpha <= cap, t >= 0, beta >= 0, zeta >= 0,
    // bbar >= 0, tau >= 0  (7), the 32-segment hypograph, C1a, C1b, and the two
    // interference link rows
    CHECK(mdl.prob.num_nonneg() == 7 + cfg.pwl_segments + 1 + 1 + 2);
}

TEST_CASE("fully masked delay forces an infeasible demand") {
    auto cfg = make_config(1, 0, 2, 2, 1, 1, 40.0);
    cfg.delay = {0};  // builder-level degenerate case, below the config contract
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(make_config(1, 0, 2, 2, 1, 1, 40.0), geom, 4);
    const auto ops = make_trace_ops(cs, random_lift(make_config(1, 0, 2, 2, 1, 1, 40.0), 4),
                                    cfg);
    ScaAnchors a;  // empty active grid
    a.alpha = Eigen::VectorXd(0);
    a.beta = Eigen::VectorXd(0);
    a.zeta = Eigen::VectorXd(0);
    a.beta_bar = Eigen::VectorXd(0);
    a.tau = Eigen::VectorXd::Zero(1);
    P1Model mdl = build_p1(ops, a, cfg, 0.3);
    CHECK(mdl.Wv.empty());
    const auto sol = conic::solve(mdl.prob, 1e-8);
    CHECK(sol.status == conic::SolveStatus::infeasible);
}

TEST_CASE("zero demand with no eavesdroppers costs nothing") {
    auto cfg = make_config(1, 0, 2, 4, 1, 1, 0.0);
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(cfg, geom, 5);
    const auto sol = solve_p1_sca(cs, random_lift(cfg, 5), std::nullopt, cfg, 5);
    REQUIRE(sol.feasible);
    CHECK(sol.total_power <= 1e-8);
}

TEST_CASE("single-user closed form", "[oracle]") {
    auto cfg = make_config(1, 0, 2, 4, 1, 1, 60.0);
    cfg.eps = {0.5};  // dispersion-free
    const scenario::Geometry geom;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto cs = scenario::generate_channels(cfg, geom, seed);
        const auto lift = random_lift(cfg, seed);
        const auto sol = solve_p1_sca(cs, lift, std::nullopt, cfg, seed);
        REQUIRE(sol.feasible);
        // oracle: matched filtering against the effective channel
        Eigen::VectorXcd phi(cfg.Ni);
        for (int i = 0; i < cfg.Ni; ++i) {
            const cxd v = lift[0](i, cfg.Ni);
            phi[i] = std::conj(v) / std::abs(v);
        }
        const double hn2 = cs.effective_user(0, 0, phi).squaredNorm();
        const double p_star =
            cfg.sigma2_w * (std::pow(2.0, cfg.b_req[0] / cfg.n_bar) - 1.0) / hn2;
        CHECK(sol.total_power == Approx(p_star).epsilon(1e-4));
        CHECK(sol.sca_monotone);
        CHECK(sol.max_tightness_gap <= 1e-3);
    }
}

TEST_CASE("doubling the channels quarters the power") {
    auto cfg = make_config(1, 0, 2, 4, 1, 1, 60.0);
    cfg.eps = {0.5};
    const scenario::Geometry geom;
    auto cs = scenario::generate_channels(cfg, geom, 9);
    const auto lift = random_lift(cfg, 9);
    const auto base = solve_p1_sca(cs, lift, std::nullopt, cfg, 9);
    for (auto& m : cs.H) m *= 2.0;
    for (auto& v : cs.hu)
        for (auto& h : v) h *= 2.0;
    for (auto& v : cs.gu)
        for (auto& h : v) h *= 2.0;
    const auto scaled = solve_p1_sca(cs, lift, std::nullopt, cfg, 9);
    REQUIRE(base.feasible);
    REQUIRE(scaled.feasible);
    CHECK(scaled.total_power == Approx(base.total_power / 4.0).epsilon(1e-3));
}

TEST_CASE("C9/C10 surrogates are inner approximations") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const double ah = rng.uniform(0.1, 5.0);
        const double bh = rng.uniform(1.0, 3.0);
        const double S9 = ah * bh;  // anchor exactly tight
        conic::ConicProblem p;
        const int av = p.add_var(), bv = p.add_var();
        add_c9_surrogate(p, conic::LinExpr(S9), conic::LinExpr(bh - 1.0), av, bv, ah, bh);
        const auto sf = p.compile();
        auto feasible_at = [&](double aval, double bval) {
            Eigen::VectorXd x(2);
            x << aval, bval;
            const Eigen::VectorXd s = sf.h - sf.G * x;
            // rows: [beta - intf - 1 >= 0], then the 2x2 LMI svec
            if (s[0] < -1e-9) return false;
            Eigen::MatrixXd Mm(2, 2);
            conic::svec_unpack(Eigen::VectorXd(s.tail(3)), 2, Mm);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mm, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() >= -1e-9;
        };
        // tangency: the anchor point is feasible with equality
        CHECK(feasible_at(ah, bh));
        // any surrogate-feasible probe satisfies the original product bound
        for (int probe = 0; probe < 100; ++probe) {
            const double aval = rng.uniform(0.0, 8.0);
            const double bval = rng.uniform(bh, 3.0 * bh);
            if (!feasible_at(aval, bval)) continue;
            CHECK(aval * bval <= S9 + 1e-7);
        }
    }
    // C10 side: zeta * bbar >= S implied
    for (int trial = 0; trial < 20; ++trial) {
        const double zh = rng.uniform(0.05, 2.0);
        const double bh = rng.uniform(1.0, 3.0);
        const double S10 = zh * bh;
        conic::ConicProblem p;
        const int zv = p.add_var(), bv = p.add_var();
        add_c10_surrogate(p, conic::LinExpr(S10), conic::LinExpr(bh - 1.0), zv, bv, zh, bh);
        const auto sf = p.compile();
        auto feasible_at = [&](double zval, double bval) {
            Eigen::VectorXd x(2);
            x << zval, bval;
            const Eigen::VectorXd s = sf.h - sf.G * x;
            if (s[0] < -1e-9) return false;
            Eigen::MatrixXd Mm(2, 2);
            conic::svec_unpack(Eigen::VectorXd(s.tail(3)), 2, Mm);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mm, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() >= -1e-9;
        };
        CHECK(feasible_at(zh, bh));
        for (int probe = 0; probe < 100; ++probe) {
            const double zval = rng.uniform(0.0, 6.0);
            const double bval = rng.uniform(0.0, bh);
            if (!feasible_at(zval, bval)) continue;
            CHECK(zval * bval >= S10 - 1e-7);
        }
    }
}

TEST_CASE("beamformer extraction") {
    auto cfg = make_config(1, 0, 3, 2, 1, 1, 0.0);
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(cfg, geom, 12);
    const auto ops = make_trace_ops(cs, random_lift(cfg, 12), cfg);
    Rng rng(71);

    SECTION("rank-one input is reproduced") {
        Eigen::VectorXcd w(3);
        for (int i = 0; i < 3; ++i) w[i] = rng.cnormal() * 0.01;
        TxSolution sol;
        sol.feasible = true;
        sol.W.assign(1, {{{w * w.adjoint()}}});
        sol.V.assign(1, {Eigen::MatrixXcd::Zero(3, 3)});
        sol.total_power = w.squaredNorm();
        extract_beamformers(sol, ops, cfg, 12);
        const Eigen::MatrixXcd back = sol.w[0][0][0] * sol.w[0][0][0].adjoint();
        CHECK((back - w * w.adjoint()).norm() <= 1e-8 * w.squaredNorm());
        CHECK(sol.max_rank_residual <= 1e-10);
        CHECK_FALSE(sol.extraction_randomized);
    }
    SECTION("constructed rank-2 takes the randomization path") {
        Eigen::VectorXcd w1(3), w2(3);
        w1 << 1.0, 0.0, 0.0;
        w2 << 0.0, 1.0, 0.0;
        TxSolution sol;
        sol.feasible = true;
        sol.W.assign(1, {{{0.5 * (w1 * w1.adjoint() + w2 * w2.adjoint())}}});
        sol.V.assign(1, {Eigen::MatrixXcd::Zero(3, 3)});
        sol.total_power = 1.0;
        extract_beamformers(sol, ops, cfg, 12);
        CHECK(sol.max_rank_residual == Approx(1.0));
        CHECK(sol.extraction_randomized);
        // candidate keeps the full trace power
        CHECK(sol.w[0][0][0].squaredNorm() == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("multiuser SCA at reduced scale", "[slow]") {
    auto cfg = make_config(2, 1, 2, 4, 2, 2, 30.0);
    cfg.delay = {1, 2};
    cfg.normalize();
    const scenario::Geometry geom;
    int feasible = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto cs = scenario::generate_channels(cfg, geom, seed);
        const auto sol = solve_p1_sca(cs, random_lift(cfg, seed), std::nullopt, cfg, seed);
        if (!sol.feasible) continue;
        ++feasible;
        CHECK(sol.sca_monotone);
        CHECK(sol.max_tightness_gap <= 1e-3);
        const ActiveGrid gr(cfg);
        double total = 0.0;
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < cfg.N; ++n) {
                    if (!gr.active(k, n)) {
                        // C2 by variable elimination: masked beams identically zero
                        CHECK(sol.w[k][m][n].cwiseAbs().maxCoeff() == 0.0);
                        continue;
                    }
                    const Eigen::MatrixXcd& W = sol.W[k][m][n];
                    total += W.trace().real();
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                        W, Eigen::EigenvaluesOnly);
                    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
                }
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n) {
                total += sol.V[m][n].trace().real();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sol.V[m][n],
                                                                   Eigen::EigenvaluesOnly);
                CHECK(es.eigenvalues().minCoeff() >= -1e-8);
            }
        CHECK(sol.total_power == Approx(total).epsilon(1e-9));
        for (int k = 0; k < cfg.K; ++k)
            CHECK(sol.per_user[k].b_bar >= cfg.b_req[k] * (1.0 - 1e-3));
    }
    CHECK(feasible >= 7);  // reduced-scale draws are occasionally infeasible
}
