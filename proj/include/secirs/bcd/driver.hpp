// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "secirs/irsopt/p2.hpp"
#include "secirs/txopt/solve.hpp"

namespace secirs::bcd {

enum class Scheme { proposed, sc, baseline1, baseline2 };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::proposed: return "proposed";
        case Scheme::sc: return "sc";
        case Scheme::baseline1: return "baseline1";
        case Scheme::baseline2: return "baseline2";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "proposed") return Scheme::proposed;
    if (s == "sc") return Scheme::sc;
    if (s == "baseline1") return Scheme::baseline1;
    if (s == "baseline2") return Scheme::baseline2;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct TraceRow {
    std::string stage;  // "p1" | "alg1" | "bcd"
    int bcd_iter = 0;
    int iter = 0;
    double objective_w = 0.0;
    double lambda = 0.0;
    double sum_r = 0.0;
    double max_rank_residual = 0.0;
};

/// One alternating-optimization run: the per-iteration power trace, the final
/// transmit and phase solutions, and the diagnostics the reports consume.
struct BcdRun {
    Scheme scheme = Scheme::proposed;
    std::uint64_t seed = 0;
    bool feasible = false;
    bool converged = false;
    int iterations = 0;                // BCD iterations executed
    double final_power_w = 0.0;
    std::vector<double> power_trace;   // objective after each stage, watts
    std::vector<double> bcd_trace;     // P^(mu) per BCD iteration, watts
    txopt::TxSolution tx;
    irsopt::PhaseSolution phase;
    std::vector<Eigen::VectorXcd> phi; // phases the final tx was solved with
    double max_phase_rank_residual = 0.0;
    double min_bbar_margin = 0.0;      // min_k (Bbar_k - Breq_k), SDP matrices
    double min_bbar_margin_extracted = 0.0;
    double wallclock_s = 0.0;
    bool sca_monotone = true;
    std::vector<TraceRow> trace;
};

namespace detail {

inline std::vector<Eigen::VectorXcd> random_phases(const scenario::SystemConfig& cfg,
                                                   std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x70686173ull));  // independent of the channel stream
    std::vector<Eigen::VectorXcd> phi(cfg.N);
    for (int n = 0; n < cfg.N; ++n) {
        phi[n].resize(cfg.Ni);
        for (int i = 0; i < cfg.Ni; ++i) {
            const double th = rng.uniform(0.0, 2.0 * kPi);
            phi[n][i] = cxd(std::cos(th), std::sin(th));
        }
    }
    return phi;
}

inline std::vector<Eigen::MatrixXcd> lift_all(const std::vector<Eigen::VectorXcd>& phi) {
    std::vector<Eigen::MatrixXcd> out(phi.size());
    for (std::size_t n = 0; n < phi.size(); ++n)
        out[n] = scenario::lifted_phase_matrix(phi[n]);
    return out;
}

inline void finalize(BcdRun& run, const scenario::SystemConfig& cfg) {
    run.final_power_w = run.tx.total_power;
    double margin = std::numeric_limits<double>::infinity();
    double margin_x = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.K; ++k) {
        margin = std::min(margin, run.tx.per_user[k].b_bar - cfg.b_req[k]);
        margin_x =
            std::min(margin_x, run.tx.per_user_extracted[k].b_bar - cfg.b_req[k]);
    }
    run.min_bbar_margin = margin;
    run.min_bbar_margin_extracted = margin_x;
}

inline void append_p1_trace(BcdRun& run, const txopt::TxSolution& tx, int mu) {
    for (std::size_t i = 0; i < tx.sca_trace.size(); ++i)
        run.trace.push_back(
            {"p1", mu, static_cast<int>(i + 1), tx.sca_trace[i], 0.0, 0.0, 0.0});
    if (!tx.sca_monotone) run.sca_monotone = false;
}

inline void append_alg1_trace(BcdRun& run, const irsopt::PhaseSolution& ph, int mu) {
    for (const auto& row : ph.trace)
        run.trace.push_back({"alg1", mu, row.iter, row.p_watts, row.lambda, row.sum_r,
                             row.max_rank_residual});
}

}  // namespace detail

/// Algorithm: alternate the transmit SCA (fixed phases) with the penalty SCA
/// over the lifted phase matrix (fixed beamformers), stopping once one full
/// alternation improves the power by no more than the configured ratio.
inline BcdRun run_bcd(const scenario::SystemConfig& cfg, const scenario::ChannelSet& cs,
                      std::uint64_t seed) {
    cfg.require_valid();
    if (cfg.Ni < 1)
        throw std::invalid_argument("run_bcd: the joint design requires an IRS (N_I >= 1)");
    const auto t0 = std::chrono::steady_clock::now();
    BcdRun run;
    run.scheme = cfg.dispersion_enabled ? Scheme::proposed : Scheme::sc;
    run.seed = seed;

    // The alternation runs on the lifted phase matrices; unit-modulus phases
    // are extracted once at the end (the extraction loss is absorbed by the
    // final QoS rescale instead of perturbing every iteration).
    std::vector<Eigen::MatrixXcd> cur_lift =
        detail::lift_all(detail::random_phases(cfg, seed));
    std::optional<txopt::ScaAnchors> warm;

    txopt::TxSolution tx;
    irsopt::PhaseSolution phase;
    bool have_phase = false;
    auto scale_tx = [](txopt::TxSolution& t, double factor) {
        for (auto& a : t.W)
            for (auto& b : a)
                for (auto& c : b)
                    if (c.size() > 0) c *= factor;
        for (auto& a : t.V)
            for (auto& b : a) b *= factor;
        t.total_power *= factor;
    };

    for (int mu = 1; mu <= cfg.bcd_mu_max; ++mu) {
        txopt::TxSolution cur = txopt::solve_p1_sca(cs, cur_lift, warm, cfg, seed);
        if (!cur.feasible && warm.has_value()) {
            // dispersion can leave the rescaled warm point a hair short of the
            // demand at the new lift; a small power bump restores it
            txopt::TxSolution bumped = tx;
            scale_tx(bumped, 1.05);
            const auto ops = txopt::make_trace_ops(cs, cur_lift, cfg);
            warm = txopt::anchors_at_point(ops, bumped.W, bumped.V, cfg,
                                           txopt::ActiveGrid(cfg));
            cur = txopt::solve_p1_sca(cs, cur_lift, warm, cfg, seed);
        }
        if (!cur.feasible) {
            if (mu == 1) {
                cur = txopt::solve_p1_sca(cs, cur_lift, std::nullopt, cfg, seed);
                if (!cur.feasible) {
                    run.feasible = false;
                    run.wallclock_s =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      t0)
                            .count();
                    return run;
                }
            } else {
                break;  // keep the previous iterate
            }
        }
        if (mu > 1 && cur.total_power > tx.total_power * (1.0 + 1e-9)) {
            run.converged = true;  // descent exhausted; keep the previous iterate
            break;
        }
        tx = cur;
        detail::append_p1_trace(run, tx, mu);
        run.power_trace.push_back(tx.total_power);
        run.bcd_trace.push_back(tx.total_power);
        run.iterations = mu;
        run.trace.push_back({"bcd", mu, mu, tx.total_power, 0.0, 0.0, 0.0});

        irsopt::PhaseSolution attempt = irsopt::solve_p2_penalty(
            tx.W, tx.V,
            std::vector<double>(tx.anchors.alpha.data(),
                                tx.anchors.alpha.data() + tx.anchors.alpha.size()),
            std::vector<double>(tx.anchors.zeta.data(),
                                tx.anchors.zeta.data() + tx.anchors.zeta.size()),
            cs, cur_lift, cfg, seed);
        if (!attempt.solved) {
            // the phase block found no usable step from an already-converged
            // lift: a zero-improvement alternation, i.e. the fixed point
            if (have_phase) run.converged = true;
            break;
        }
        detail::append_alg1_trace(run, attempt, mu);

        const double improvement = (tx.total_power - attempt.p_watts) /
                                   std::max(tx.total_power, 1e-30);
        if (attempt.p_watts <= tx.total_power * (1.0 + 1e-9)) {
            // adopt the new lift and the correspondingly scaled beamformers
            phase = std::move(attempt);
            run.phase = phase;
            have_phase = true;
            run.max_phase_rank_residual = phase.max_rank_residual;
            run.power_trace.push_back(phase.p_watts);
            cur_lift = phase.phi_lift;
            scale_tx(tx, phase.p_watts / std::max(tx.total_power, 1e-30));
            const auto ops = txopt::make_trace_ops(cs, cur_lift, cfg);
            warm = txopt::anchors_at_point(ops, tx.W, tx.V, cfg, txopt::ActiveGrid(cfg));
        }
        if (improvement <= cfg.bcd_er) {
            run.converged = true;
            break;
        }
    }
    run.feasible = tx.feasible;
    if (run.feasible) {
        // book-keep against the lifted matrices the final beamformers were
        // optimized for, then extract unit-modulus phases and re-check QoS on
        // the realizable configuration
        const auto ops = txopt::make_trace_ops(cs, cur_lift, cfg);
        const auto t = txopt::tensor_from_ops(ops, tx.W, tx.V, cfg, txopt::ActiveGrid(cfg));
        tx.per_user.clear();
        tx.anchors = txopt::anchors_at_point(ops, tx.W, tx.V, cfg, txopt::ActiveGrid(cfg));
        double total = 0.0;
        for (int k = 0; k < cfg.K; ++k) tx.per_user.push_back(fbl::secure_bits(t, cfg, k));
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M; ++m)
                for (int n = 0; n < cfg.N; ++n)
                    if (tx.W[k][m][n].size() > 0) total += tx.W[k][m][n].trace().real();
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n) total += tx.V[m][n].trace().real();
        tx.total_power = total;

        run.phi.resize(cfg.N);
        for (int n = 0; n < cfg.N; ++n) run.phi[n] = irsopt::extract_phases(cur_lift[n]);
        if (have_phase) run.phi = phase.phi;
        const auto ops_x = txopt::make_trace_ops(cs, detail::lift_all(run.phi), cfg);
        txopt::extract_beamformers(tx, ops_x, cfg, seed);
        run.tx = tx;
        detail::finalize(run, cfg);
    }
    run.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

/// Infinite-blocklength benchmark: the identical alternation with every
/// channel-dispersion term removed from the rate constraints.
inline BcdRun run_sc(scenario::SystemConfig cfg, const scenario::ChannelSet& cs,
                     std::uint64_t seed) {
    cfg.dispersion_enabled = false;
    BcdRun run = run_bcd(cfg, cs, seed);
    run.scheme = Scheme::sc;
    return run;
}

/// Random IRS phases, beamformers and AN optimized once; no phase update.
inline BcdRun run_baseline1(const scenario::SystemConfig& cfg,
                            const scenario::ChannelSet& cs, std::uint64_t seed) {
    cfg.require_valid();
    if (cfg.Ni < 1)
        throw std::invalid_argument("run_baseline1 requires an IRS (N_I >= 1)");
    const auto t0 = std::chrono::steady_clock::now();
    BcdRun run;
    run.scheme = Scheme::baseline1;
    run.seed = seed;
    std::vector<Eigen::VectorXcd> phi = detail::random_phases(cfg, seed);
    run.phi = phi;
    run.tx = txopt::solve_p1_sca(cs, detail::lift_all(phi), std::nullopt, cfg, seed);
    run.feasible = run.tx.feasible;
    run.converged = run.feasible;
    run.iterations = 1;
    if (run.feasible) {
        detail::append_p1_trace(run, run.tx, 1);
        run.power_trace.push_back(run.tx.total_power);
        run.bcd_trace.push_back(run.tx.total_power);
        detail::finalize(run, cfg);
    }
    run.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

/// Conventional secure transmission without an IRS: the identical pipeline on
/// channels whose IRS paths are nulled.
inline BcdRun run_baseline2(const scenario::SystemConfig& cfg,
                            const scenario::ChannelSet& cs, std::uint64_t seed) {
    cfg.require_valid();
    const auto t0 = std::chrono::steady_clock::now();
    BcdRun run;
    run.scheme = Scheme::baseline2;
    run.seed = seed;
    const scenario::ChannelSet direct = cs.without_irs();
    std::vector<Eigen::VectorXcd> phi(cfg.N, Eigen::VectorXcd::Ones(cfg.Ni));
    run.phi = phi;
    run.tx = txopt::solve_p1_sca(direct, detail::lift_all(phi), std::nullopt, cfg, seed);
    run.feasible = run.tx.feasible;
    run.converged = run.feasible;
    run.iterations = 1;
    if (run.feasible) {
        detail::append_p1_trace(run, run.tx, 1);
        run.power_trace.push_back(run.tx.total_power);
        run.bcd_trace.push_back(run.tx.total_power);
        detail::finalize(run, cfg);
    }
    run.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

inline BcdRun run_scheme(Scheme s, const scenario::SystemConfig& cfg,
                         const scenario::ChannelSet& cs, std::uint64_t seed) {
    switch (s) {
        case Scheme::proposed: return run_bcd(cfg, cs, seed);
        case Scheme::sc: return run_sc(cfg, cs, seed);
        case Scheme::baseline1: return run_baseline1(cfg, cs, seed);
        case Scheme::baseline2: return run_baseline2(cfg, cs, seed);
    }
    throw std::logic_error("unreachable");
}

}  // namespace secirs::bcd
