// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch.hpp>

#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include "secirs/cli/experiment.hpp"

using namespace secirs;
using namespace secirs::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json mini_spec(const std::string& out) {
    json j;
    j["preset"] = "desk";
    j["system"] = {{"N_I", 6},   {"M", 2},          {"N", 2},
                   {"J", 1},     {"T_f_s", 13.0 * 2 / 240e3},
                   {"B_req_bits", 30.0}, {"delay_slots", {1, 2}}};
    j["schemes"] = {"baseline1", "baseline2"};
    j["seeds"] = {1, 2};
    j["out_dir"] = out;
    return j;
}

}  // namespace

TEST_CASE("spec validation reports every violation with its path") {
    SECTION("empty document gives the desk defaults") {
        std::vector<std::string> errs;
        const auto spec = parse_spec(json::object(), errs);
        CHECK(errs.empty());
        CHECK(spec.base.K == 2);
        CHECK(spec.base.Ni == 16);
        CHECK(spec.base.M == 4);
        CHECK(spec.base.n_bar == 13);
        CHECK(spec.geometry.fc_hz == Approx(6e9));  // table default carried over
    }
    SECTION("paper preset restores the table-scale values") {
        std::vector<std::string> errs;
        json j;
        j["preset"] = "paper";
        const auto spec = parse_spec(j, errs);
        CHECK(errs.empty());
        CHECK(spec.base.N == 4);
        CHECK(spec.base.M == 32);
        CHECK(spec.base.Ni == 50);
        CHECK(spec.base.b_req[0] == Approx(160.0));
        CHECK(spec.base.n_bar == 13);
        CHECK(spec.base.Tf_s == Approx(0.21667e-3));
    }
    SECTION("an exact-integer frame is accepted") {
        std::vector<std::string> errs;
        json j;
        j["preset"] = "paper";
        j["system"] = {{"T_f_s", 0.2e-3}};
        const auto spec = parse_spec(j, errs);
        CHECK(errs.empty());
        CHECK(spec.base.n_bar == 12);
    }
    SECTION("violations are listed field by field") {
        std::vector<std::string> errs;
        json j;
        j["system"] = {{"T_f_s", 0.215e-3}, {"K", 0}};
        j["sweep"] = {{"axis", "B_req"}, {"values", json::array()}};
        j["seeds"] = {1, 1};
        parse_spec(j, errs);
        REQUIRE(errs.size() >= 3);
        bool saw_nbar = false, saw_seeds = false, saw_sweep = false;
        for (const auto& e : errs) {
            saw_nbar = saw_nbar || e.find("n_bar") != std::string::npos;
            saw_seeds = saw_seeds || e.find("seeds") != std::string::npos;
            saw_sweep = saw_sweep || e.find("sweep") != std::string::npos;
        }
        CHECK(saw_nbar);
        CHECK(saw_seeds);
        CHECK(saw_sweep);
    }
    SECTION("scenario preset applies the correlated geometry") {
        std::vector<std::string> errs;
        json j;
        j["geometry"] = {{"scenario", "correlated-close-eavesdropper"}};
        const auto spec = parse_spec(j, errs);
        CHECK(errs.empty());
        CHECK(spec.geometry.correlated);
        CHECK(spec.geometry.rho == Approx(0.95));
        CHECK((spec.geometry.eve_center - spec.geometry.bs).norm() == Approx(250.0));
    }
    SECTION("resolved spec echo carries the derived values") {
        std::vector<std::string> errs;
        const auto spec = parse_spec(json::object(), errs);
        const json echo = resolved_spec_json(spec);
        CHECK(echo["system"]["n_bar"] == 13);
        CHECK(echo["system"]["sigma2_w"].get<double>() > 0.0);
    }
}

TEST_CASE("experiment grid writes deterministic CSVs", "[slow]") {
    const fs::path dir1 = fs::temp_directory_path() / "secirs_test_run1";
    const fs::path dir2 = fs::temp_directory_path() / "secirs_test_run2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    std::vector<std::string> errs;
    auto spec = parse_spec(mini_spec(dir1.string()), errs);
    REQUIRE(errs.empty());

    REQUIRE(run_experiment(spec, 1) == 0);
    spec.out_dir = dir2.string();
    REQUIRE(run_experiment(spec, 1) == 0);

    SECTION("row count and byte-identical rerun") {
        const std::string r1 = slurp(dir1 / "results.csv");
        const std::string r2 = slurp(dir2 / "results.csv");
        CHECK(r1 == r2);
        CHECK(slurp(dir1 / "trace.csv") == slurp(dir2 / "trace.csv"));
        CHECK(slurp(dir1 / "summary.csv") == slurp(dir2 / "summary.csv"));
        // 1 sweep point x 2 schemes x 2 seeds data rows + header
        CHECK(std::count(r1.begin(), r1.end(), '\n') == 1 + 2 * 2);
    }

    SECTION("summary means match a recomputation from results.csv") {
        std::ifstream in(dir1 / "results.csv");
        std::string line;
        std::getline(in, line);  // header
        std::map<std::string, std::pair<double, int>> acc;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> f;
            while (std::getline(ss, field, ',')) f.push_back(field);
            REQUIRE(f.size() == 11);
            if (f[4] == "1") {
                acc[f[2]].first += std::stod(f[5]);
                acc[f[2]].second += 1;
            }
        }
        std::ifstream ins(dir1 / "summary.csv");
        std::getline(ins, line);
        while (std::getline(ins, line)) {
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> f;
            while (std::getline(ss, field, ',')) f.push_back(field);
            REQUIRE(f.size() == 7);
            const auto& [sum, count] = acc[f[2]];
            if (count > 0)
                CHECK(std::stod(f[5]) == Approx(sum / count).epsilon(1e-9));
        }
    }

    SECTION("per-run transmit traces are non-increasing") {
        std::ifstream in(dir1 / "trace.csv");
        std::string line;
        std::getline(in, line);
        std::map<std::string, double> last;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> f;
            while (std::getline(ss, field, ',')) f.push_back(field);
            REQUIRE(f.size() == 11);
            if (f[4] != "p1") continue;
            const std::string key = f[2] + "/" + f[3] + "/" + f[5];
            const double obj = std::stod(f[7]);
            auto it = last.find(key);
            if (it != last.end()) CHECK(obj <= it->second * (1.0 + 1e-6));
            last[key] = obj;
        }
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("wallclock column is zeroed unless timings are requested") {
    std::vector<std::string> errs;
    auto spec = parse_spec(mini_spec((fs::temp_directory_path() / "secirs_tm").string()),
                           errs);
    REQUIRE(errs.empty());
    spec.schemes = {bcd::Scheme::baseline2};
    spec.seeds = {1};
    const auto row = run_one(spec, 0.0, bcd::Scheme::baseline2, 1);
    CHECK(row.wallclock_s == 0.0);
    spec.timings = true;
    const auto row_t = run_one(spec, 0.0, bcd::Scheme::baseline2, 1);
    CHECK(row_t.wallclock_s > 0.0);
}
