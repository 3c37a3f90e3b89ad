#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>

#include "support.hpp"

using namespace tpsim;
namespace fs = std::filesystem;

namespace {

int tpsim_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + TPSIM_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path demand() { return support::data_dir() / "synthetic_demand.csv"; }

// Self-contained copy of a bundled scenario with edits applied.
fs::path write_config(const fs::path& dir, const std::string& name, const std::function<void(json&)>& edit) {
    json doc = to_json(support::bundled("a1"));
    edit(doc);
    const auto path = dir / name;
    io::write_text(path, doc.dump(2));
    return path;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(tpsim::detail::split_csv_line(line));
    return rows;
}

} // namespace

TEST_CASE("run writes outputs identical to the library") {
    const auto dir = support::scratch_dir("cli_run");
    const auto a1 = support::scenario_dir() / "a1.json";
    REQUIRE(tpsim_cli("run --config " + q(a1) + " --demand " + q(demand()) + " --out " + q(dir / "out"), dir / "log") == 0);
    const auto lib = run_single(support::bundled("a1"), support::bundled_demand());
    CHECK(support::slurp(dir / "out" / "timeseries.csv") == io::timeseries_csv(lib));
    CHECK(support::slurp(dir / "out" / "kpis.json") == io::kpi_document(lib).dump(2) + "\n");

    REQUIRE(tpsim_cli("run --config " + q(a1) + " --demand " + q(demand()) + " --out " + q(dir / "json") +
                          " --format json",
                      dir / "log") == 0);
    CHECK(fs::exists(dir / "json" / "result.json"));
}

TEST_CASE("run with draws writes an ensemble summary") {
    const auto dir = support::scratch_dir("cli_ensemble");
    const auto a1 = support::scenario_dir() / "a1.json";
    REQUIRE(tpsim_cli("run --config " + q(a1) + " --demand " + q(demand()) + " --draws 6 --seed 4 --out " + q(dir),
                      dir / "log") == 0);
    EnsembleOptions o;
    o.n_draws = 6;
    o.seed = 4;
    const auto lib = run_ensemble(support::bundled("a1"), support::bundled_demand(), o);
    CHECK(support::slurp(dir / "timeseries.csv") == io::timeseries_csv(lib));
}

TEST_CASE("run exit codes") {
    const auto dir = support::scratch_dir("cli_codes");
    const auto a1 = support::scenario_dir() / "a1.json";
    CHECK(tpsim_cli("run --config " + q(a1) + " --demand " + q(dir / "missing.csv") + " --out " + q(dir / "o"),
                    dir / "log") == 2);
    CHECK(support::slurp(dir / "log").find("missing.csv") != std::string::npos);

    const auto stiff = write_config(dir, "stiff.json", [](json& d) {
        d["solver"]["tolerance"] = 1e-30;
        d["solver"]["max_iterations"] = 1;
    });
    CHECK(tpsim_cli("run --config " + q(stiff) + " --demand " + q(demand()) + " --out " + q(dir / "o"), dir / "log") == 3);
    CHECK(support::slurp(dir / "log").find("did not converge") != std::string::npos);

    const auto bad = write_config(dir, "bad.json", [](json& d) { d["fleet"]["class_shares"][0] = 0.5; });
    CHECK(tpsim_cli("run --config " + q(bad) + " --demand " + q(demand()) + " --out " + q(dir / "o"), dir / "log") == 1);
    CHECK(support::slurp(dir / "log").find("fleet.class_shares") != std::string::npos);

    const auto edge = write_config(dir, "edge.json", [](json& d) { d["policy"]["t_start"] = 0; });
    CHECK(tpsim_cli("run --config " + q(edge) + " --demand " + q(demand()) + " --out " + q(dir / "o"), dir / "log") == 3);

    CHECK(tpsim_cli("run --demand " + q(demand()), dir / "log") == 1);
}

TEST_CASE("suite runs all bundled scenarios plus baseline") {
    const auto dir = support::scratch_dir("cli_suite");
    REQUIRE(tpsim_cli("suite --demand " + q(demand()) + " --out " + q(dir), dir / "log") == 0);
    for (const char* id : {"baseline", "a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3"}) {
        INFO(id);
        CHECK(fs::exists(dir / id / "timeseries.csv"));
        CHECK(fs::exists(dir / id / "kpis.json"));
    }
    const auto rows = read_csv(dir / "comparison.csv");
    REQUIRE(rows.size() == 1 + 10 * 8);
    for (const auto& r : rows) {
        if (r[0] == "baseline") CHECK(r[4] == "0");
        if (r[0] == "B3" && r[1] == "mode_shifted") CHECK(r[3] == "0");
    }
}

TEST_CASE("suite records failures and keeps going") {
    const auto dir = support::scratch_dir("cli_suite_fail");
    const auto scen = dir / "scenarios";
    fs::create_directories(scen);
    for (const char* id : {"a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3"})
        io::write_text(scen / (std::string(id) + ".json"), to_json(support::bundled(id)).dump());
    io::write_text(scen / "a4.json", "{ broken");
    CHECK(tpsim_cli("suite --demand " + q(demand()) + " --out " + q(dir / "out") + " --scenarios " + q(scen),
                    dir / "log") == 4);
    CHECK(fs::exists(dir / "out" / "b3" / "kpis.json"));
    CHECK(fs::exists(dir / "out" / "failures.json"));
    CHECK(fs::exists(dir / "out" / "comparison.csv"));
}

TEST_CASE("sweep over the fee") {
    const auto dir = support::scratch_dir("cli_sweep");
    const auto a1 = support::scenario_dir() / "a1.json";
    REQUIRE(tpsim_cli("sweep --config " + q(a1) + " --param policy.fee_by_class --from 0 --to 10 --steps 11 --demand " +
                          q(demand()) + " --out " + q(dir),
                      dir / "log") == 0);
    const auto rows = read_csv(dir / "sweep.csv");
    REQUIRE(rows.front() == std::vector<std::string>{"param_value", "kpi", "value"});
    std::vector<double> fee, inflow;
    for (const auto& r : rows)
        if (r[1] == "daily_inflow") {
            fee.push_back(std::stod(r[0]));
            inflow.push_back(std::stod(r[2]));
        }
    REQUIRE(inflow.size() == 11);
    CHECK(fee.front() == 0.0);
    CHECK(fee.back() == 10.0);
    for (std::size_t i = 1; i < inflow.size(); ++i) CHECK(inflow[i] <= inflow[i - 1]);
}

TEST_CASE("sweep edge cases") {
    const auto dir = support::scratch_dir("cli_sweep_edges");
    const auto a1 = support::scenario_dir() / "a1.json";
    REQUIRE(tpsim_cli("sweep --config " + q(a1) + " --param behavior.cost_median --from 3 --to 9 --steps 1 --demand " +
                          q(demand()) + " --out " + q(dir / "one"),
                      dir / "log") == 0);
    auto rows = read_csv(dir / "one" / "sweep.csv");
    CHECK(rows.size() == 1 + 8);
    CHECK(rows[1][0] == "3");

    REQUIRE(tpsim_cli("sweep --config " + q(a1) + " --param policy.exempt_fraction --from 0 --to 1 --steps 3 --demand " +
                          q(demand()) + " --out " + q(dir / "fe"),
                      dir / "log") == 0);
    rows = read_csv(dir / "fe" / "sweep.csv");
    const auto baseline = run_single(support::bundled("a1"), support::bundled_demand()).kpis;
    for (const auto& r : rows)
        if (r[0] == "1" && r[1] != "kpi") {
            INFO(r[1]);
            CHECK(std::stod(r[2]) == std::stod(io::format_number(baseline.at(r[1]).baseline)));
        }

    CHECK(tpsim_cli("sweep --config " + q(a1) + " --param policy.no_such --from 0 --to 1 --steps 2 --demand " +
                        q(demand()) + " --out " + q(dir / "x"),
                    dir / "log") == 1);
    const auto log = support::slurp(dir / "log");
    CHECK(log.find("policy.exempt_fraction") != std::string::npos);
    CHECK(log.find("behavior.cost_median") != std::string::npos);
    CHECK(tpsim_cli("sweep --config " + q(a1) + " --param zones --from 0 --to 1 --steps 2 --demand " + q(demand()) +
                        " --out " + q(dir / "x"),
                    dir / "log") == 1);
}

TEST_CASE("compare writes a comparison table") {
    const auto dir = support::scratch_dir("cli_compare");
    REQUIRE(tpsim_cli("compare --config " + q(support::scenario_dir() / "a1.json") + " --config " +
                          q(support::scenario_dir() / "a2.json") + " --demand " + q(demand()) + " --out " + q(dir),
                      dir / "log") == 0);
    const auto doc = json::parse(support::slurp(dir / "comparison.json"));
    CHECK(doc["scenarios"][0]["name"] == "A1");
    CHECK(doc["scenarios"][1]["name"] == "A2");
    CHECK(doc["pairwise"].size() == 1);
}
