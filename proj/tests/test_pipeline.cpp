#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "swiptrelay/pipeline.hpp"

using namespace swiptrelay;

namespace {

Scenario small_scenario(int n = 8) {
    Scenario s;
    s.start = {0.0, 0.5};
    s.end = {0.3, 0.4};
    s.num_slots = n;
    validate_scenario(s);
    return s;
}

std::filesystem::path fresh_dir(const std::string& leaf) {
    const auto dir = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_exact(const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    REQUIRE(res.ec == std::errc{});
    REQUIRE(res.ptr == text.data() + text.size());
    return v;
}

std::string write_temp(const std::string& leaf, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / leaf;
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.close();
    return path.string();
}

ExperimentConfig small_grid_config() {
    ExperimentConfig cfg;
    cfg.scenario = small_scenario();
    cfg.sweep.name = "source_power";
    cfg.sweep.values = {0.5, 1.0};
    return cfg;
}

}  // namespace

TEST_CASE("alternation improves on the profile-only solve and keeps a monotone trace") {
    const Scenario s = small_scenario(10);
    const Trajectory init = semicircle_init(s);
    for (Protocol proto : {Protocol::AF, Protocol::DF}) {
        const double profile_only = optimize_profile(s, init, proto).throughput;
        const RunRecord rec = alternate_optimize(s, proto, init);

        CHECK(rec.completed);
        CHECK(rec.throughput >= profile_only - 1e-9);
        CHECK(rec.outer_rounds >= 1);
        CHECK(rec.outer_rounds <= 50);
        CHECK(rec.trace.size() == static_cast<std::size_t>(rec.outer_rounds));
        for (std::size_t i = 1; i < rec.trace.size(); ++i)
            CHECK(rec.trace[i] >= rec.trace[i - 1] - 1e-9);
        CHECK(rec.throughput == rec.trace.back());
        CHECK(validate_trajectory(s, rec.trajectory).feasible);
        CHECK(causally_feasible(s, rec.trajectory, rec.profile));
        CHECK(rec.throughput ==
              Catch::Approx(total_throughput(s, rec.trajectory, rec.profile, proto))
                  .margin(1e-12));
    }
}

TEST_CASE("alternation records the initialization and both starts are reported") {
    Scenario s = small_scenario(20);
    s.end = {1.0, 0.3};  // make room so the straight line is feasible too
    validate_scenario(s);
    const RunRecord from_straight = alternate_optimize(s, Protocol::AF, straight_line_init(s));
    const RunRecord from_arc = alternate_optimize(s, Protocol::AF, semicircle_init(s));
    CHECK(from_straight.completed);
    CHECK(from_arc.completed);
    // both runs carry enough to compare and flag the larger one
    const double best = std::max(from_straight.throughput, from_arc.throughput);
    CHECK(best > 0.0);
}

TEST_CASE("alternation rejects an infeasible initialization") {
    const Scenario s = small_scenario(6);
    Trajectory bad(6, Vec2{5.0, 5.0});
    CHECK_THROWS_AS(alternate_optimize(s, Protocol::AF, bad), std::invalid_argument);
}

TEST_CASE("greedy-mode alternation uses the greedy profile rule") {
    const Scenario s = small_scenario(8);
    AlternateOptOptions opts;
    opts.mode = ProfileMode::Greedy;
    const RunRecord rec = alternate_optimize(s, Protocol::DF, semicircle_init(s), opts);
    CHECK(rec.strategy == Strategy::Greedy);
    for (double r : causality_residuals(s, rec.trajectory, rec.profile)) CHECK(r == 0.0);
}

TEST_CASE("experiment grid runs every cell and reports a summary") {
    const ExperimentConfig cfg = small_grid_config();
    const ExperimentResult res = run_experiment(cfg);

    CHECK(res.all_completed);
    CHECK(res.failures.empty());
    // 2 protocols x 3 strategies x 2 sweep values
    REQUIRE(res.records.size() == 12);
    for (const RunRecord& r : res.records) {
        CHECK(r.completed);
        CHECK(r.throughput > 0.0);
        CHECK(validate_trajectory(r.scenario, r.trajectory).feasible);
        CHECK(causally_feasible(r.scenario, r.trajectory, r.profile));
        if (r.strategy == Strategy::Static) {
            CHECK(r.init_name == "hover");
        } else {
            CHECK(r.init_name.rfind("semicircle", 0) == 0);
            CHECK(std::isfinite(r.alt_init_throughput));
            CHECK(r.throughput >= r.alt_init_throughput);
        }
    }
    CHECK(res.summary.find("protocol,strategy,init,source_power") == 0);
    // one summary line per record plus the header
    CHECK(std::count(res.summary.begin(), res.summary.end(), '\n') == 13);
}

TEST_CASE("empty sweep list runs a single cell per strategy and protocol") {
    ExperimentConfig cfg = small_grid_config();
    cfg.sweep.values.clear();
    cfg.protocols = {Protocol::DF};
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.records.size() == 3);
    for (const RunRecord& r : res.records) CHECK(r.sweep_value == cfg.scenario.ps);
}

TEST_CASE("failed cells are reported without aborting the sweep") {
    // at N=23 the chord fits the step budget but the semicircle arc does not,
    // so the arc-initialized cells fail while the static cell survives
    ExperimentConfig cfg;
    cfg.scenario.num_slots = 23;
    cfg.init = "semicircle";
    cfg.protocols = {Protocol::AF};
    cfg.strategies = {Strategy::Optimal, Strategy::Static};
    cfg.sweep.values = {1.0};
    const ExperimentResult res = run_experiment(cfg);
    CHECK_FALSE(res.all_completed);
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].find("af/optimal") == 0);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].strategy == Strategy::Static);
}

TEST_CASE("config validation rejects bad axes, values, and empty lists") {
    ExperimentConfig cfg = small_grid_config();
    cfg.strategies.clear();
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = small_grid_config();
    cfg.sweep.values = {1.0, -2.0};
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = small_grid_config();
    cfg.sweep.name = "velocity";
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = small_grid_config();
    cfg.init = "spiral";
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
}

TEST_CASE("csv emission writes the documented families with exact round-trip values") {
    ExperimentConfig cfg = small_grid_config();
    cfg.protocols = {Protocol::AF};
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.all_completed);

    const auto dir = fresh_dir("swipt_csv_test");
    const auto paths = emit_csv(res.records, dir.string());
    REQUIRE(paths.size() == 5);

    SECTION("power profile has exactly N data rows per record") {
        const std::string text = slurp((dir / "power_profile.csv").string());
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        CHECK(line == "protocol,strategy,init,sweep_value,slot,p_n");
        std::size_t rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == res.records.size() * cfg.scenario.num_slots);
    }

    SECTION("trajectory csv reconstructs every coordinate bitwise") {
        const std::string text = slurp((dir / "trajectory.csv").string());
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        CHECK(line == "protocol,strategy,init,sweep_value,slot,x_n,y_n");
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            REQUIRE(cells.size() == 7);
            const std::size_t rec_idx = row / cfg.scenario.num_slots;
            const std::size_t slot = row % cfg.scenario.num_slots;
            REQUIRE(rec_idx < res.records.size());
            CHECK(parse_exact(cells[4]) == static_cast<double>(slot + 1));
            CHECK(parse_exact(cells[5]) == res.records[rec_idx].trajectory[slot].x);
            CHECK(parse_exact(cells[6]) == res.records[rec_idx].trajectory[slot].y);
            ++row;
        }
        CHECK(row == res.records.size() * cfg.scenario.num_slots);
    }

    SECTION("throughput csv has one row per sweep value per strategy") {
        const std::string text = slurp((dir / "throughput.csv").string());
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        CHECK(line == "protocol,strategy,init,sweep_value,throughput");
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            REQUIRE(cells.size() == 5);
            CHECK(parse_exact(cells[4]) == res.records[rows].throughput);
            ++rows;
        }
        CHECK(rows == cfg.strategies.size() * cfg.sweep.values.size());
    }
}

TEST_CASE("identical configurations emit bitwise-identical csv files") {
    const ExperimentConfig cfg = small_grid_config();
    const auto dir_a = fresh_dir("swipt_det_a");
    const auto dir_b = fresh_dir("swipt_det_b");
    const auto paths_a = emit_csv(run_experiment(cfg).records, dir_a.string());
    const auto paths_b = emit_csv(run_experiment(cfg).records, dir_b.string());
    REQUIRE(paths_a.size() == paths_b.size());
    for (std::size_t i = 0; i < paths_a.size(); ++i) {
        const std::string a = slurp(paths_a[i]);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(paths_b[i]));
    }
}

TEST_CASE("emission refuses records that fail the feasibility checks") {
    ExperimentConfig cfg = small_grid_config();
    cfg.protocols = {Protocol::DF};
    cfg.strategies = {Strategy::Greedy};
    cfg.sweep.values = {1.0};
    ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.records.size() == 1);

    const auto dir = fresh_dir("swipt_gate_test");
    SECTION("energy overdraft is rejected") {
        res.records[0].profile.power[0] += 10.0;
        CHECK_THROWS_AS(emit_csv(res.records, dir.string()), std::runtime_error);
    }
    SECTION("broken mobility chain is rejected") {
        res.records[0].trajectory[1] = {9.0, 9.0};
        CHECK_THROWS_AS(emit_csv(res.records, dir.string()), std::runtime_error);
    }
}

TEST_CASE("plot emission writes standalone svg documents") {
    ExperimentConfig cfg = small_grid_config();
    cfg.protocols = {Protocol::AF};
    cfg.strategies = {Strategy::Greedy, Strategy::Static};
    const ExperimentResult res = run_experiment(cfg);
    const auto dir = fresh_dir("swipt_svg_test");
    const auto paths = emit_plot(res.records, dir.string(), cfg.scenario);
    REQUIRE(paths.size() == 4);
    for (const std::string& p : paths) {
        const std::string text = slurp(p);
        CHECK(text.rfind("<svg", 0) == 0);
        CHECK(text.find("</svg>") != std::string::npos);
        CHECK(text.find("polyline") != std::string::npos);
        // self-contained: no scripts, no external resource loads
        CHECK(text.find("<script") == std::string::npos);
        CHECK(text.find("<image") == std::string::npos);
        CHECK(text.find("@import") == std::string::npos);
    }
}

TEST_CASE("empty config file yields the full default configuration") {
    const std::string path = write_temp("swipt_empty.json", "  \n\t ");
    const ExperimentConfig cfg = parse_config(path);
    const Scenario d;
    CHECK(cfg.scenario.ps == d.ps);
    CHECK(cfg.scenario.altitude == d.altitude);
    CHECK(cfg.scenario.num_slots == d.num_slots);
    CHECK(cfg.scenario.max_step == d.max_step);
    CHECK(cfg.protocols.size() == 2);
    CHECK(cfg.strategies.size() == 3);
    CHECK(cfg.init == "semicircle");
    CHECK(cfg.sweep.name == "source_power");
    CHECK(cfg.sweep.values.empty());
    CHECK(cfg.outer_tol == 0.001);
    CHECK(cfg.max_outer == 50);
}

TEST_CASE("config parsing applies partial overrides and keeps other defaults") {
    const std::string path = write_temp("swipt_partial.json",
                                        R"({"scenario": {"source_power_Ps": 2.5},
                                            "sweep": {"axis": "source_power",
                                                      "values": [0.5, 1, 2]}})");
    const ExperimentConfig cfg = parse_config(path);
    CHECK(cfg.scenario.ps == 2.5);
    CHECK(cfg.scenario.num_slots == Scenario{}.num_slots);
    REQUIRE(cfg.sweep.values.size() == 3);
    CHECK(cfg.sweep.values[0] == 0.5);
    CHECK(cfg.sweep.values[2] == 2.0);
}

TEST_CASE("config errors carry the offending key name") {
    const std::string neg = write_temp("swipt_neg.json", R"({"scenario": {"altitude_H": -1}})");
    CHECK_THROWS_WITH(parse_config(neg), Catch::Matchers::ContainsSubstring("altitude_H"));

    const std::string unknown = write_temp("swipt_unknown.json", R"({"bogus_key": 1})");
    CHECK_THROWS_WITH(parse_config(unknown), Catch::Matchers::ContainsSubstring("bogus_key"));

    const std::string nested =
        write_temp("swipt_nested.json", R"({"scenario": {"wingspan": 1}})");
    CHECK_THROWS_WITH(parse_config(nested), Catch::Matchers::ContainsSubstring("wingspan"));

    const std::string badtype =
        write_temp("swipt_badtype.json", R"({"scenario": {"num_slots_N": 2.5}})");
    CHECK_THROWS_WITH(parse_config(badtype), Catch::Matchers::ContainsSubstring("num_slots_N"));

    const std::string malformed = write_temp("swipt_malformed.json", "{ not json");
    CHECK_THROWS_WITH(parse_config(malformed), Catch::Matchers::ContainsSubstring("parse error"));

    CHECK_THROWS_AS(parse_config("/nonexistent/swipt.json"), std::runtime_error);
}

TEST_CASE("config strategy and protocol lists are parsed and validated") {
    const std::string ok = write_temp("swipt_lists.json",
                                      R"({"protocols": ["df"],
                                          "strategies": ["greedy", "static"],
                                          "init": "straight",
                                          "hover": [0.5, 0.2],
                                          "max_outer": 7})");
    const ExperimentConfig cfg = parse_config(ok);
    REQUIRE(cfg.protocols.size() == 1);
    CHECK(cfg.protocols[0] == Protocol::DF);
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[0] == Strategy::Greedy);
    CHECK(cfg.init == "straight");
    CHECK(cfg.hover.x == 0.5);
    CHECK(cfg.max_outer == 7);

    const std::string bad = write_temp("swipt_badstrat.json", R"({"strategies": ["lazy"]})");
    CHECK_THROWS_WITH(parse_config(bad), Catch::Matchers::ContainsSubstring("lazy"));
}

#ifdef SWIPT_CLI_PATH
TEST_CASE("cli exits zero exactly when all cells complete") {
    const auto dir = fresh_dir("swipt_cli_test");
    const std::string base = std::string(SWIPT_CLI_PATH);

    const std::string ok_cmd = base + " --protocol df --strategy static --out " +
                               (dir / "ok").string() + " > /dev/null 2>&1";
    CHECK(std::system(ok_cmd.c_str()) == 0);
    CHECK(std::filesystem::exists(dir / "ok" / "throughput.csv"));
    CHECK(std::filesystem::exists(dir / "ok" / "trajectory.svg"));

    // at N=23 the semicircle arc violates the step budget, so the cell fails
    const std::string cfg_path = write_temp(
        "swipt_cli_fail.json", R"({"scenario": {"num_slots_N": 23}, "init": "semicircle",
                                   "protocols": ["af"], "strategies": ["optimal"]})");
    const std::string fail_cmd = base + " --config " + cfg_path + " --out " +
                                 (dir / "fail").string() + " > /dev/null 2>&1";
    CHECK(std::system(fail_cmd.c_str()) != 0);
}
#endif
