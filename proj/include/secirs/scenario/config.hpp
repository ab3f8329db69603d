// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "secirs/common.hpp"

namespace secirs::scenario {

/// Converts a noise power density in dBm/Hz to the noise power in watts over
/// bandwidth B_s.
inline double noise_power(double n0_dbm_hz, double bs_hz) {
    if (!(bs_hz > 0.0)) throw std::invalid_argument("noise_power: bandwidth must be > 0");
    return std::pow(10.0, (n0_dbm_hz + 10.0 * std::log10(bs_hz) - 30.0) / 10.0);
}

/// All scalar system parameters. Defaults follow the full-scale operating
/// point (2 users, 2 eavesdroppers, 32 sub-carriers, 50 IRS elements).
struct SystemConfig {
    int K = 2;    // users
    int J = 2;    // eavesdroppers
    int Nt = 2;   // BS antennas
    int Ni = 50;  // IRS elements
    int M = 32;   // sub-carriers
    int N = 4;    // time slots per frame

    double Bs_hz = 240e3;       // per-sub-carrier bandwidth
    double Tf_s = 0.21667e-3;   // frame duration
    int n_bar = 13;             // symbols per slot, = Bs*Tf/N (integer)
    double n0_dbm_hz = -174.0;  // noise power density
    double sigma2_w = 0.0;      // noise power, derived on normalize()

    std::vector<double> eps;       // per-user packet error probability
    std::vector<double> delta;     // information leakage, flattened [j*K + k]
    std::vector<double> b_req;     // per-user secure bits per frame
    std::vector<int> delay;        // per-user delay budget D_k in slots
    double dispersion_a = kLog2E;  // prefactor of the Q^-1 sqrt terms

    double p_max_dbm = 45.0;  // reporting / infeasibility cap (not a constraint)

    // transmit sub-problem (SCA over W, V)
    double tx_penalty_t = 10.0;    // stored for config fidelity; rank penalty off
    double tx_penalty_tmax = 1e6;  // (rank constraint is dropped instead)
    double tx_eta = 6.0;
    int tx_max_iters = 16;
    double tx_er_sca = 1e-6;
    bool tx_rank_penalty = false;  // optional trace-minus-top-eigenvalue penalty

    // phase sub-problem (penalty SCA over the lifted phase matrix)
    double irs_lambda1 = 0.1;
    double irs_lambda_max = 1e5;
    double irs_eta = 1.2;
    double irs_er_sca = 1e-5;
    int irs_max_iters = 60;

    // outer alternation
    double bcd_er = 1e-3;
    int bcd_mu_max = 20;

    double solver_tol = 1e-8;
    bool dispersion_enabled = true;  // false reproduces the infinite-blocklength scheme

    int pwl_segments = 32;
    double alpha_max = 1e4;

    double delta_for(int j, int k) const { return delta[static_cast<std::size_t>(j) * K + k]; }

    double p_cap_w() const { return dbm_to_watt(p_max_dbm); }

    /// Fills derived quantities and per-user vectors that were left empty.
    void normalize() {
        sigma2_w = noise_power(n0_dbm_hz, Bs_hz);
        const double nb = Bs_hz * Tf_s / N;
        n_bar = static_cast<int>(std::lround(nb));
        if (eps.empty()) eps.assign(K, 1e-6);
        if (delta.empty()) delta.assign(static_cast<std::size_t>(J) * K, 1e-6);
        if (b_req.empty()) b_req.assign(K, 160.0);
        if (delay.empty()) {
            delay.assign(K, N);
            if (K > 0) delay[0] = std::max(1, N / 2);
        }
    }

    /// Checks every invariant; returns one message per violation.
    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        auto bad = [&errs](const std::string& m) { errs.push_back(m); };
        if (K < 1) bad("K: need at least one user");
        if (J < 0) bad("J: negative eavesdropper count");
        if (Nt < 1) bad("N_T: need at least one BS antenna");
        if (Ni < 0) bad("N_I: negative IRS element count");
        if (M < 1) bad("M: need at least one sub-carrier");
        if (N < 1) bad("N: need at least one time slot");
        if (!(Bs_hz > 0)) bad("B_s: bandwidth must be > 0");
        if (!(Tf_s > 0)) bad("T_f: frame duration must be > 0");
        const double nb = Bs_hz * Tf_s / N;
        if (std::abs(nb - std::lround(nb)) > 0.01)
            bad("n_bar: B_s*T_f/N = " + std::to_string(nb) + " is not an integer (slack 0.01)");
        if (std::lround(nb) < 1) bad("n_bar: must be a positive integer");
        if (!(sigma2_w > 0)) bad("sigma2: noise power must be > 0 (call normalize())");
        if (static_cast<int>(eps.size()) != K) bad("eps: need one entry per user");
        if (static_cast<int>(delta.size()) != J * K) bad("delta: need one entry per (j,k)");
        if (static_cast<int>(b_req.size()) != K) bad("b_req: need one entry per user");
        if (static_cast<int>(delay.size()) != K) bad("delay: need one entry per user");
        for (std::size_t i = 0; i < eps.size(); ++i)
            if (!(eps[i] > 0.0 && eps[i] <= 0.5))
                bad("eps[" + std::to_string(i) + "]: must lie in (0, 0.5]");
        for (std::size_t i = 0; i < delta.size(); ++i)
            if (!(delta[i] > 0.0 && delta[i] <= 0.5))
                bad("delta[" + std::to_string(i) + "]: must lie in (0, 0.5]");
        for (std::size_t i = 0; i < b_req.size(); ++i)
            if (b_req[i] < 0.0) bad("b_req[" + std::to_string(i) + "]: must be >= 0");
        for (std::size_t k = 0; k < delay.size(); ++k)
            if (delay[k] < 1 || delay[k] > N)
                bad("delay[" + std::to_string(k) + "]: D_k must lie in [1, N]");
        if (!(dispersion_a > 0)) bad("a: dispersion prefactor must be > 0");
        if (!(solver_tol > 0)) bad("solver_tol: must be > 0");
        if (!(irs_lambda1 > 0) || !(irs_lambda_max >= irs_lambda1))
            bad("lambda schedule: need 0 < lambda1 <= lambda_max");
        if (!(irs_eta > 1.0)) bad("eta_irs: schedule growth must exceed 1");
        if (pwl_segments < 4) bad("pwl_segments: need at least 4");
        if (!(alpha_max > 1.0)) bad("alpha_max: must exceed 1");
        return errs;
    }

    void require_valid() const {
        const auto errs = validate();
        if (!errs.empty()) {
            std::string all = "invalid SystemConfig:";
            for (const auto& e : errs) all += "\n  " + e;
            throw std::invalid_argument(all);
        }
    }
};

}  // namespace secirs::scenario
