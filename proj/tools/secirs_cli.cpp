// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner for the IRS-assisted secure-URLLC power-minimization
// simulator. Subcommands:
//   run <spec.json>       Monte-Carlo sweep, writes results/trace/summary CSVs
//   validate <spec.json>  check a spec and echo the fully resolved version
//   trace <spec.json>     single-seed run with the per-iteration trace

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "secirs/cli/experiment.hpp"

using namespace secirs;

namespace {

int load_or_fail(const std::string& path, cli::ExperimentSpec& spec) {
    std::vector<std::string> errs;
    spec = cli::load_spec(path, errs);
    if (const char* tol = std::getenv("SECIRS_SOLVER_TOL")) {
        spec.base.solver_tol = std::atof(tol);
        if (!(spec.base.solver_tol > 0)) errs.push_back("SECIRS_SOLVER_TOL: must be > 0");
    }
    if (!errs.empty()) {
        std::cerr << "invalid experiment spec (" << errs.size() << " problem"
                  << (errs.size() == 1 ? "" : "s") << "):\n";
        for (const auto& e : errs) std::cerr << "  - " << e << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-assisted secure-URLLC transmit power minimization"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, preset;
    int workers = 1;
    bool timings = false;
    std::uint64_t trace_seed = 1;

    auto* run = app.add_subcommand("run", "run the experiment grid of a spec");
    run->add_option("spec", spec_path, "experiment JSON")->required();
    run->add_option("--out", out_dir, "output directory (overrides spec)");
    run->add_option("--workers", workers, "worker threads")->default_val(1);
    run->add_option("--preset", preset, "base preset override: desk|paper");
    run->add_flag("--timings", timings,
                  "record real wall-clock times (reruns stop being byte-identical)");

    auto* val = app.add_subcommand("validate", "validate a spec and echo it resolved");
    val->add_option("spec", spec_path, "experiment JSON")->required();

    auto* tr = app.add_subcommand("trace", "run one seed and write its trace");
    tr->add_option("spec", spec_path, "experiment JSON")->required();
    tr->add_option("--seed", trace_seed, "seed to run")->required();
    tr->add_option("--out", out_dir, "output directory (overrides spec)");

    CLI11_PARSE(app, argc, argv);

    cli::ExperimentSpec spec;
    if (!preset.empty()) {
        // inject the preset override before parsing the rest
        std::vector<std::string> errs;
        std::ifstream in(spec_path);
        if (!in) {
            std::cerr << "cannot open spec file: " << spec_path << "\n";
            return 1;
        }
        cli::json root;
        try {
            in >> root;
        } catch (const std::exception& ex) {
            std::cerr << "JSON parse error: " << ex.what() << "\n";
            return 1;
        }
        root["preset"] = preset;
        spec = cli::parse_spec(root, errs);
        if (const char* tol = std::getenv("SECIRS_SOLVER_TOL"))
            spec.base.solver_tol = std::atof(tol);
        if (!errs.empty()) {
            for (const auto& e : errs) std::cerr << "  - " << e << "\n";
            return 1;
        }
    } else if (load_or_fail(spec_path, spec) != 0) {
        return 1;
    }
    if (!out_dir.empty()) spec.out_dir = out_dir;
    spec.timings = timings;

    if (*val) {
        std::cout << cli::resolved_spec_json(spec).dump(2) << "\n";
        return 0;
    }
    if (*tr) {
        spec.seeds = {trace_seed};
        spec.schemes = {bcd::Scheme::proposed};
        return cli::run_experiment(spec, 1, &std::cout);
    }
    return cli::run_experiment(spec, workers, &std::cout);
}
