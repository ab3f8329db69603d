// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include "secirs/scenario/channel.hpp"

using namespace secirs;
using namespace secirs::scenario;

namespace {

SystemConfig mini_config(int K, int J, int Nt, int Ni, int M, int N) {
    SystemConfig c;
    c.K = K;
    c.J = J;
    c.Nt = Nt;
    c.Ni = Ni;
    c.M = M;
    c.N = N;
    c.Bs_hz = 240e3;
    c.Tf_s = 13.0 * N / 240e3;
    c.normalize();
    return c;
}

}  // namespace

TEST_CASE("path loss follows the reference-distance power law") {
    const double fc = 6e9;
    // at d = d_ref the gain is c/(4 pi f_c d_ref), about 3.9789e-3 at 6 GHz
    const double expect = 299792458.0 / (4.0 * kPi * fc);
    CHECK(pathloss(1.0, 2.1, 1.0, fc, 1.0) == Approx(expect).epsilon(1e-12));
    // about 3.98e-3; the exact speed of light is used, not the 3e8 shorthand
    CHECK(expect == Approx(3.9789e-3).epsilon(1e-2));

    SECTION("linear in the shadowing gain") {
        const double full = pathloss(10.0, 3.5, 1.0, fc, 1.0);
        CHECK(pathloss(10.0, 3.5, 0.5, fc, 1.0) == Approx(0.5 * full).epsilon(1e-14));
    }
    SECTION("power law in distance") {
        CHECK(pathloss(10.0, 2.0, 1.0, fc, 1.0) / pathloss(100.0, 2.0, 1.0, fc, 1.0) ==
              Approx(100.0).epsilon(1e-12));
    }
    SECTION("invalid below the reference distance") {
        CHECK_THROWS_AS(pathloss(0.5, 2.0, 1.0, fc, 1.0), std::invalid_argument);
    }
    SECTION("squared variant squares only the reference factor") {
        const double base = pathloss(10.0, 2.0, 0.5, fc, 1.0);
        const double sq = pathloss(10.0, 2.0, 0.5, fc, 1.0, true);
        CHECK(sq == Approx(base * expect).epsilon(1e-12));
    }
}

TEST_CASE("noise power conversions") {
    CHECK(noise_power(-174.0, 1.0) == Approx(std::pow(10.0, -20.4)).epsilon(1e-12));
    // Table-scale bandwidth: -174 + 10 log10(240e3) dBm
    const double dbm = -174.0 + 10.0 * std::log10(240e3);
    CHECK(watt_to_dbm(noise_power(-174.0, 240e3)) == Approx(dbm).margin(1e-9));
    CHECK(dbm == Approx(-120.2).margin(5e-3));
    // doubling the bandwidth adds 3.01 dB
    const double d1 = watt_to_dbm(noise_power(-174.0, 1e6));
    const double d2 = watt_to_dbm(noise_power(-174.0, 2e6));
    CHECK(d2 - d1 == Approx(10.0 * std::log10(2.0)).margin(1e-12));
    CHECK_THROWS_AS(noise_power(-174.0, 0.0), std::invalid_argument);
}

TEST_CASE("frame arithmetic validation") {
    SystemConfig c = mini_config(2, 2, 2, 8, 4, 4);
    SECTION("paper-scale values give 13 symbols per slot") {
        c.Bs_hz = 240e3;
        c.Tf_s = 0.21667e-3;
        c.N = 4;
        c.normalize();
        CHECK(c.n_bar == 13);
        CHECK(c.validate().empty());
    }
    SECTION("an exact integer case is accepted") {
        c.Bs_hz = 240e3;
        c.Tf_s = 0.2e-3;
        c.N = 4;
        c.normalize();
        CHECK(c.n_bar == 12);
        CHECK(c.validate().empty());
    }
    SECTION("non-integer symbol counts are rejected") {
        c.Bs_hz = 240e3;
        c.Tf_s = 0.215e-3;  // 51.6 / 4 = 12.9
        c.N = 4;
        c.normalize();
        const auto errs = c.validate();
        REQUIRE_FALSE(errs.empty());
        CHECK(errs[0].find("n_bar") != std::string::npos);
    }
    SECTION("delay bounds") {
        c.delay = {0, 2};
        REQUIRE_FALSE(c.validate().empty());
        c.delay = {5, 2};
        REQUIRE_FALSE(c.validate().empty());
    }
}

TEST_CASE("same seed reproduces channels bit for bit") {
    const SystemConfig c = mini_config(2, 2, 2, 6, 2, 2);
    const Geometry g;
    const auto a = generate_channels(c, g, 42);
    const auto b = generate_channels(c, g, 42);
    for (int m = 0; m < c.M; ++m) {
        CHECK((a.H[m] - b.H[m]).cwiseAbs().maxCoeff() == 0.0);
        for (int k = 0; k < c.K; ++k) {
            CHECK((a.hu[m][k] - b.hu[m][k]).cwiseAbs().maxCoeff() == 0.0);
            CHECK((a.gu[m][k] - b.gu[m][k]).cwiseAbs().maxCoeff() == 0.0);
        }
        for (int j = 0; j < c.J; ++j) {
            CHECK((a.he[m][j] - b.he[m][j]).cwiseAbs().maxCoeff() == 0.0);
            CHECK((a.ge[m][j] - b.ge[m][j]).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    const auto d = generate_channels(c, g, 43);
    CHECK((a.H[0] - d.H[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("uncorrelated direct channels have identity covariance") {
    SystemConfig c = mini_config(1, 0, 2, 0, 50, 1);
    Geometry g;
    g.correlated = false;
    // accumulate the empirical covariance of the normalized direct channel
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(c.Nt, c.Nt);
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto cs = generate_channels(c, g, seed);
        const double pl = pathloss((g.bs - cs.user_pos[0]).norm(), g.gamma_bu, g.b_bu,
                                   g.fc_hz, g.d_ref);
        for (int m = 0; m < c.M; ++m) {
            const Eigen::VectorXcd v = cs.gu[m][0] / std::sqrt(pl);
            cov += v * v.adjoint();
            ++count;
        }
    }
    cov /= count;
    CHECK(cov(0, 0).real() == Approx(1.0).epsilon(0.05));
    CHECK(cov(1, 1).real() == Approx(1.0).epsilon(0.05));
    CHECK(std::abs(cov(0, 1)) < 0.05);
}

TEST_CASE("correlated direct channels follow rho^{|i-j|}") {
    SystemConfig c = mini_config(1, 0, 4, 0, 50, 1);
    Geometry g;
    g.correlated = true;
    g.rho = 0.95;
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(c.Nt, c.Nt);
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        const auto cs = generate_channels(c, g, seed);
        const double pl = pathloss((g.bs - cs.user_pos[0]).norm(), g.gamma_bu, g.b_bu,
                                   g.fc_hz, g.d_ref);
        for (int m = 0; m < c.M; ++m) {
            const Eigen::VectorXcd v = cs.gu[m][0] / std::sqrt(pl);
            cov += v * v.adjoint();
            ++count;
        }
    }
    cov /= count;
    CHECK(cov(0, 1).real() == Approx(0.95).margin(0.05));
    CHECK(cov(0, 2).real() == Approx(0.95 * 0.95).margin(0.05));
}

TEST_CASE("large Rician factor approaches the deterministic ray") {
    // fixed endpoint position: entry powers must collapse onto the path loss
    SystemConfig c = mini_config(1, 0, 2, 4, 60, 1);
    Geometry g;
    g.ric_iu = 1e6;
    const auto cs = generate_channels(c, g, 3);
    std::vector<double> powers;
    for (int m = 0; m < c.M; ++m)
        for (int i = 0; i < c.Ni; ++i) powers.push_back(std::norm(cs.hu[m][0][i]));
    double mean_p = 0.0, var_acc = 0.0;
    for (double p : powers) mean_p += p;
    mean_p /= powers.size();
    for (double p : powers) var_acc += (p - mean_p) * (p - mean_p);
    var_acc /= powers.size();
    CHECK(var_acc / (mean_p * mean_p) < 1e-4);
}

TEST_CASE("composite matrix satisfies the trace identity") {
    SystemConfig c = mini_config(1, 1, 2, 4, 1, 1);
    const Geometry g;
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto cs = generate_channels(c, g, 1000 + trial);
        Eigen::VectorXcd phi(c.Ni);
        for (int i = 0; i < c.Ni; ++i) {
            const double th = rng.uniform(0, 2 * kPi);
            phi[i] = cxd(std::cos(th), std::sin(th));
        }
        Eigen::VectorXcd w(c.Nt);
        for (int i = 0; i < c.Nt; ++i) w[i] = rng.cnormal();

        // left side: direct complex arithmetic
        const Eigen::RowVectorXcd hbar = cs.effective_user(0, 0, phi);
        const double direct = std::norm((hbar * w)(0));
        // right side: trace form through the composite matrix and the lift
        const Eigen::MatrixXcd G = composite_user(cs, 0, 0);
        const Eigen::MatrixXcd lift = lifted_phase_matrix(phi);
        const double via_trace =
            (lift * G * (w * w.adjoint()) * G.adjoint()).trace().real();
        CHECK(std::abs(direct - via_trace) <= 1e-10 * std::max(direct, 1e-300));

        // eavesdropper side
        const Eigen::RowVectorXcd ebar = cs.effective_eve(0, 0, phi);
        const double edirect = std::norm((ebar * w)(0));
        const Eigen::MatrixXcd Ge = composite_eve(cs, 0, 0);
        const double etrace =
            (lift * Ge * (w * w.adjoint()) * Ge.adjoint()).trace().real();
        CHECK(std::abs(edirect - etrace) <= 1e-10 * std::max(edirect, 1e-300));
    }
}

TEST_CASE("composite matrix degenerate reductions") {
    SECTION("no IRS: single row from the direct channel") {
        SystemConfig c = mini_config(1, 0, 3, 0, 1, 1);
        const Geometry g;
        const auto cs = generate_channels(c, g, 5);
        const Eigen::MatrixXcd G = composite_user(cs, 0, 0);
        REQUIRE(G.rows() == 1);
        CHECK((G.row(0) - cs.gu[0][0].adjoint()).cwiseAbs().maxCoeff() < 1e-15);
        Eigen::VectorXcd w = Eigen::VectorXcd::Ones(3);
        const Eigen::MatrixXcd lift = lifted_phase_matrix(Eigen::VectorXcd(0));
        const double via = (lift * G * (w * w.adjoint()) * G.adjoint()).trace().real();
        CHECK(via == Approx(std::norm((cs.gu[0][0].adjoint() * w)(0))).epsilon(1e-12));
    }
    SECTION("zero IRS-side channel reduces to the direct term") {
        SystemConfig c = mini_config(1, 0, 2, 4, 1, 1);
        const Geometry g;
        auto cs = generate_channels(c, g, 6);
        cs.hu[0][0].setZero();
        const Eigen::VectorXcd phi = Eigen::VectorXcd::Ones(c.Ni);
        Eigen::VectorXcd w(2);
        w << cxd(0.3, -0.1), cxd(1.0, 0.4);
        const double direct = std::norm((cs.gu[0][0].adjoint() * w)(0));
        const Eigen::MatrixXcd G = composite_user(cs, 0, 0);
        const double via =
            (lifted_phase_matrix(phi) * G * (w * w.adjoint()) * G.adjoint()).trace().real();
        CHECK(via == Approx(direct).epsilon(1e-10));
        CHECK(std::norm((cs.effective_user(0, 0, phi) * w)(0)) ==
              Approx(direct).epsilon(1e-10));
    }
    SECTION("dimension mismatch throws") {
        Eigen::MatrixXcd H(4, 2);
        H.setZero();
        Eigen::VectorXcd h(3), gg(2);
        h.setZero();
        gg.setZero();
        CHECK_THROWS_AS(composite_matrix(H, h, gg), std::invalid_argument);
    }
}

TEST_CASE("geometry presets carry the table parameters") {
    const Geometry g;
    CHECK(g.r_eve == 50.0);
    CHECK(g.r_user == 5.0);
    CHECK(g.gamma_bi == Approx(2.1));
    CHECK(g.gamma_bu == Approx(3.5));
    CHECK(g.gamma_iu == Approx(2.1));
    CHECK(g.ric_bi == Approx(10.0));
    CHECK(g.ric_bu == 0.0);
    CHECK(g.ric_iu == 0.0);
    CHECK(linear_to_db(g.b_bu) == Approx(-10.0));
    CHECK(linear_to_db(g.b_be) == Approx(-10.0));
    CHECK(g.fc_hz == Approx(6e9));
    // eavesdroppers reuse the user-link exponents and Rician factors
    CHECK(g.gamma_be == Approx(g.gamma_bu));
    CHECK(g.gamma_ie == Approx(g.gamma_iu));
    CHECK(g.ric_be == Approx(g.ric_bu));
}
