// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include "secirs/irsopt/p2.hpp"
#include "secirs/txopt/solve.hpp"

using namespace secirs;
using namespace secirs::irsopt;

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

std::vector<Eigen::VectorXcd> random_phases(const scenario::SystemConfig& cfg,
                                            std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x22));
    std::vector<Eigen::VectorXcd> phi(cfg.N);
    for (int n = 0; n < cfg.N; ++n) {
        phi[n].resize(cfg.Ni);
        for (int i = 0; i < cfg.Ni; ++i) {
            const double th = rng.uniform(0, 2 * kPi);
            phi[n][i] = cxd(std::cos(th), std::sin(th));
        }
    }
    return phi;
}

struct MiniPipeline {
    scenario::SystemConfig cfg;
    scenario::ChannelSet cs;
    std::vector<Eigen::VectorXcd> phi;
    std::vector<Eigen::MatrixXcd> lift;
    txopt::TxSolution tx;
};

MiniPipeline solved_p1(int Ni, std::uint64_t seed, double breq = 30.0, int J = 1) {
    MiniPipeline mp;
    mp.cfg = make_config(2, J, 2, Ni, 2, 2, breq);
    mp.cfg.delay = {1, 2};
    mp.cfg.normalize();
    const scenario::Geometry geom;
    mp.cs = scenario::generate_channels(mp.cfg, geom, seed);
    mp.phi = random_phases(mp.cfg, seed);
    mp.lift.resize(mp.cfg.N);
    for (int n = 0; n < mp.cfg.N; ++n)
        mp.lift[n] = scenario::lifted_phase_matrix(mp.phi[n]);
    mp.tx = txopt::solve_p1_sca(mp.cs, mp.lift, std::nullopt, mp.cfg, seed);
    return mp;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

TEST_CASE("scaling substitution keeps the current point feasible") {
    const auto mp = solved_p1(6, 21);
    REQUIRE(mp.tx.feasible);
    const auto d = make_p2_data(mp.tx.W, mp.tx.V, mp.cs, mp.cfg);
    std::vector<Eigen::MatrixXcd> U(mp.cfg.N);
    for (int n = 0; n < mp.cfg.N; ++n) U[n] = conic::smallest_eigvecs(mp.lift[n], mp.cfg.Ni);
    P2Model mdl = build_p2(d, to_vec(mp.tx.anchors.alpha), to_vec(mp.tx.anchors.zeta), U,
                           0.1, mp.cfg);
    // candidate: PhiCheck = current lift, p = 1, r = 0
    Eigen::VectorXd x = Eigen::VectorXd::Zero(mdl.prob.num_vars());
    x[mdl.p_var] = 1.0;
    for (int n = 0; n < mp.cfg.N; ++n) {
        int q = 0;
        for (int jj = 1; jj < d.Ni1; ++jj)
            for (int ii = 0; ii < jj; ++ii, ++q) {
                x[mdl.re_vars[n][q]] = mp.lift[n](ii, jj).real();
                x[mdl.im_vars[n][q]] = mp.lift[n](ii, jj).imag();
            }
    }
    const auto sf = mdl.prob.compile();
    const Eigen::VectorXd s = sf.h - sf.G * x;
    // all linearized SINR rows must hold at the substitution point
    for (int i = 0; i < sf.cones.n_nonneg; ++i) CHECK(s[i] >= -1e-9);
    // and the lift itself reproduces: diag p, off-diagonals as set
    for (int n = 0; n < mp.cfg.N; ++n) {
        const Eigen::MatrixXcd back = mdl.phi_check(x, n);
        CHECK((back - mp.lift[n]).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("rank-one start makes the rank surrogate feasible at zero") {
    const auto mp = solved_p1(6, 22);
    REQUIRE(mp.tx.feasible);
    for (int n = 0; n < mp.cfg.N; ++n) {
        const Eigen::MatrixXcd U = conic::smallest_eigvecs(mp.lift[n], mp.cfg.Ni);
        CHECK((U.adjoint() * mp.lift[n] * U).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("zero penalty weight reduces the objective to the scale variable") {
    const auto mp = solved_p1(4, 23);
    REQUIRE(mp.tx.feasible);
    const auto d = make_p2_data(mp.tx.W, mp.tx.V, mp.cs, mp.cfg);
    std::vector<Eigen::MatrixXcd> U(mp.cfg.N);
    for (int n = 0; n < mp.cfg.N; ++n) U[n] = conic::smallest_eigvecs(mp.lift[n], mp.cfg.Ni);
    P2Model mdl = build_p2(d, to_vec(mp.tx.anchors.alpha), to_vec(mp.tx.anchors.zeta), U,
                           0.0, mp.cfg);
    const auto sol = conic::solve(mdl.prob, 1e-8);
    REQUIRE(sol.ok());
    CHECK(sol.objective == Approx(sol.x[mdl.p_var]).margin(1e-9));
}

TEST_CASE("single IRS element against an exhaustive phase grid", "[oracle]") {
    // one element, one slot: the optimal scale p(phase) can be enumerated
    auto cfg = make_config(1, 1, 2, 1, 1, 1, 30.0);
    const scenario::Geometry geom;
    const auto cs = scenario::generate_channels(cfg, geom, 31);
    const auto phi = random_phases(cfg, 31);
    std::vector<Eigen::MatrixXcd> lift{scenario::lifted_phase_matrix(phi[0])};
    const auto tx = txopt::solve_p1_sca(cs, lift, std::nullopt, cfg, 31);
    REQUIRE(tx.feasible);
    const auto ph = solve_p2_penalty(tx.W, tx.V, to_vec(tx.anchors.alpha),
                                     to_vec(tx.anchors.zeta), cs, lift, cfg, 31);
    REQUIRE(ph.solved);

    // oracle: for each candidate phase, the smallest feasible p solves the
    // linearized rows in closed form
    const auto d = make_p2_data(tx.W, tx.V, cs, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 3600; ++g) {
        const double th = 2.0 * kPi * g / 3600.0;
        Eigen::VectorXcd cand(1);
        cand[0] = cxd(std::cos(th), std::sin(th));
        const Eigen::MatrixXcd L = scenario::lifted_phase_matrix(cand);
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        bool ok = true;
        auto rtrace = [&L](const Eigen::MatrixXcd& B) {
            return (B.cwiseProduct(L.transpose())).sum().real();
        };
        const double a = tx.anchors.alpha[0];
        const double sig = rtrace(d.b_user_sig[0]);
        const double intf = rtrace(d.b_user_intf[0]);
        // a (p*intf + 1) <= p*sig  =>  p >= a / (sig - a*intf)
        const double den = sig - a * intf;
        if (den <= 0) ok = false;
        else lo = std::max(lo, a / den);
        const double z = tx.anchors.zeta[0];
        const double sige = rtrace(d.b_eve_sig[0]);
        const double intfe = rtrace(d.b_eve_intf[0]);
        // z (p*intfe + 1) >= p*sige  =>  p (sige - z*intfe) <= z
        const double dene = sige - z * intfe;
        if (dene > 0) hi = z / dene;
        if (ok && lo <= hi) best = std::min(best, lo);
    }
    REQUIRE(std::isfinite(best));
    CHECK(ph.p_watts / d.p_hat == Approx(best).epsilon(1e-3));
}

TEST_CASE("restart from a converged solution stops immediately") {
    const auto mp = solved_p1(6, 24);
    REQUIRE(mp.tx.feasible);
    const auto first = solve_p2_penalty(mp.tx.W, mp.tx.V, to_vec(mp.tx.anchors.alpha),
                                        to_vec(mp.tx.anchors.zeta), mp.cs, mp.lift, mp.cfg,
                                        24);
    REQUIRE(first.solved);
    REQUIRE(first.max_rank_residual <= 1e-4);
    // scale the beams onto the new lift and re-run from the converged output
    auto W = mp.tx.W;
    auto V = mp.tx.V;
    const double scale = first.p_watts / mp.tx.total_power;
    for (auto& a : W)
        for (auto& b : a)
            for (auto& c : b)
                if (c.size() > 0) c *= scale;
    for (auto& a : V)
        for (auto& b : a) b *= scale;
    const auto ops = txopt::make_trace_ops(mp.cs, first.phi_lift, mp.cfg);
    const auto anchors =
        txopt::anchors_at_point(ops, W, V, mp.cfg, txopt::ActiveGrid(mp.cfg));
    const auto second = solve_p2_penalty(W, V, to_vec(anchors.alpha), to_vec(anchors.zeta),
                                         mp.cs, first.phi_lift, mp.cfg, 24);
    REQUIRE(second.solved);
    CHECK(second.iterations <= 2);
    CHECK(std::abs(second.p_watts - first.p_watts) <=
          10 * mp.cfg.irs_er_sca * first.p_watts + 1e-12);
}

TEST_CASE("schedule parameters default to the reference values") {
    scenario::SystemConfig cfg;
    CHECK(cfg.irs_lambda1 == Approx(0.1));
    CHECK(cfg.irs_lambda_max == Approx(1e5));
    CHECK(cfg.irs_eta == Approx(1.2));
    CHECK(cfg.irs_er_sca == Approx(1e-5));
    CHECK(cfg.tx_penalty_t == Approx(10.0));
    CHECK(cfg.tx_penalty_tmax == Approx(1e6));
    CHECK(cfg.tx_eta == Approx(6.0));
    CHECK(cfg.tx_max_iters == 16);
}

TEST_CASE("penalty run reaches a rank-one lift with unit diagonal") {
    const auto mp = solved_p1(8, 25);
    REQUIRE(mp.tx.feasible);
    const auto ph = solve_p2_penalty(mp.tx.W, mp.tx.V, to_vec(mp.tx.anchors.alpha),
                                     to_vec(mp.tx.anchors.zeta), mp.cs, mp.lift, mp.cfg, 25);
    REQUIRE(ph.solved);
    CHECK(ph.max_rank_residual <= 1e-4);
    CHECK(ph.monotone_at_fixed_lambda);
    CHECK(ph.p_watts <= mp.tx.total_power * (1.0 + 1e-6));
    for (int n = 0; n < mp.cfg.N; ++n) {
        for (int i = 0; i <= mp.cfg.Ni; ++i)
            CHECK(std::abs(ph.phi_lift[n](i, i) - 1.0) <= 1e-8);
        for (int i = 0; i < mp.cfg.Ni; ++i)
            CHECK(std::abs(std::abs(ph.phi[n][i]) - 1.0) <= 1e-12);
    }
    // the trace rows carry the schedule
    REQUIRE_FALSE(ph.trace.empty());
    CHECK(ph.trace.front().lambda == Approx(mp.cfg.irs_lambda1));
}

TEST_CASE("phase extraction") {
    Rng rng(61);
    SECTION("exact lift recovers the phases") {
        Eigen::VectorXcd phi(5);
        for (int i = 0; i < 5; ++i) {
            const double th = rng.uniform(0, 2 * kPi);
            phi[i] = cxd(std::cos(th), std::sin(th));
        }
        const Eigen::VectorXcd back = extract_phases(scenario::lifted_phase_matrix(phi));
        CHECK((back - phi).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("all-ones is a fixed point") {
        const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(4);
        const Eigen::VectorXcd back = extract_phases(scenario::lifted_phase_matrix(ones));
        CHECK((back - ones).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("vanishing reference entry falls back deterministically") {
        Eigen::MatrixXcd lift(3, 3);
        lift << 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0;
        const Eigen::VectorXcd a = extract_phases(lift);
        const Eigen::VectorXcd b = extract_phases(lift);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(std::abs(a[i]) - 1.0) < 1e-12);
    }
    SECTION("rank-two lift picks the best-scoring candidate deterministically") {
        Eigen::VectorXcd u1(4), u2(4);
        for (int i = 0; i < 4; ++i) {
            u1[i] = rng.cnormal();
            u2[i] = rng.cnormal();
        }
        Eigen::MatrixXcd lift = u1 * u1.adjoint() + 0.8 * (u2 * u2.adjoint());
        lift = 0.5 * (lift + lift.adjoint()).eval();
        // normalize the diagonal to mimic a unit-diagonal lift
        Eigen::VectorXd dinv = lift.diagonal().real().cwiseInverse().cwiseSqrt();
        lift = dinv.asDiagonal() * lift * dinv.asDiagonal();
        auto score = [](const Eigen::VectorXcd& cand) { return cand[0].real(); };
        const auto a = extract_phases_randomized(lift, score, 7);
        const auto b = extract_phases_randomized(lift, score, 7);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        CHECK(score(a) >= score(extract_phases(lift)) - 1e-12);
    }
}
