// Command-line front end: scenario runs, parameter checking/suggestion,
// graph inspection, and the built-in reproduction presets.
//
// Exit codes: 0 success, 1 input or usage error, 2 monitor failure,
// 3 parameter warnings (check-params without --strict).

#include "ccsim/errors.hpp"
#include "ccsim/sim.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace ccsim;

namespace {

struct Overrides {
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<std::uint64_t> seed;
};

void apply_overrides(nlohmann::ordered_json& j, const Overrides& o) {
    if (o.dt) j["sim"]["dt_seconds"] = *o.dt;
    if (o.t_end) j["sim"]["t_end_seconds"] = *o.t_end;
    if (o.seed) j["seed"] = *o.seed;
}

Scenario load_with_overrides(const std::string& path, const Overrides& o) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(path + ": " + err.what());
    }
    apply_overrides(j, o);
    return scenario_from_json(j);
}

nlohmann::ordered_json feasibility_file_json(const Scenario& s,
                                             const std::vector<FeasibilityReport>& reports,
                                             bool strict) {
    nlohmann::ordered_json out;
    bool all = true;
    auto agents = nlohmann::ordered_json::array();
    const Eigen::VectorXd degrees = in_degrees(s.graph);
    for (size_t i = 0; i < reports.size(); ++i) {
        all = all && reports[i].all_pass();
        agents.push_back({{"agent", i + 1},
                          {"degree", degrees(static_cast<int>(i))},
                          {"all_pass", reports[i].all_pass()},
                          {"conditions", feasibility_to_json(reports[i])}});
    }
    out["all_pass"] = all;
    out["strict"] = strict;
    out["agents"] = std::move(agents);
    return out;
}

// Runs one scenario and writes trace.csv, monitor_report.json and
// feasibility_report.json into out_dir. Returns the process exit code.
int run_one(const Scenario& scenario, const fs::path& out_dir, bool strict) {
    const auto reports = scenario.feasibility_reports();
    const bool feasible = std::all_of(reports.begin(), reports.end(),
                                      [](const FeasibilityReport& r) { return r.all_pass(); });
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "feasibility_report.json");
        f << feasibility_file_json(scenario, reports, strict).dump(2) << "\n";
    }
    if (strict && !feasible) {
        std::cerr << "parameter conditions failed for scenario '" << scenario.name
                  << "' (strict mode)\n";
        return 1;
    }
    const RunResult result = run(scenario);
    {
        std::ofstream f(out_dir / "trace.csv");
        write_trace_csv(result.trace, f);
    }
    {
        std::ofstream f(out_dir / "monitor_report.json");
        f << monitor_report_to_json(result.monitors).dump(2) << "\n";
    }
    if (!result.monitors.all_pass) {
        std::cerr << "monitor failure in scenario '" << scenario.name << "' (see "
                  << (out_dir / "monitor_report.json").string() << ")\n";
        return 2;
    }
    std::cout << "scenario '" << scenario.name << "': all monitors passed; outputs in "
              << out_dir.string() << "\n";
    return 0;
}

int cmd_run(const std::vector<std::string>& paths, const std::string& out,
            const Overrides& overrides, bool strict, int jobs) {
    std::vector<Scenario> scenarios;
    for (const auto& path : paths) {
        scenarios.push_back(load_with_overrides(path, overrides));
    }
    if (scenarios.size() == 1) {
        return run_one(scenarios.front(), out, strict);
    }
    std::vector<int> codes(scenarios.size(), 0);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < scenarios.size(); i = next.fetch_add(1)) {
            const fs::path dir = fs::path(out) / fs::path(paths[i]).stem();
            try {
                codes[i] = run_one(scenarios[i], dir, strict);
            } catch (const std::exception& err) {
                std::cerr << paths[i] << ": " << err.what() << "\n";
                codes[i] = 1;
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(scenarios.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return *std::max_element(codes.begin(), codes.end());
}

int cmd_check_params(const std::string& path, bool strict) {
    const Scenario scenario = load_with_overrides(path, {});
    const auto reports = scenario.feasibility_reports();
    const Eigen::VectorXd degrees = in_degrees(scenario.graph);
    bool all = true;
    for (size_t i = 0; i < reports.size(); ++i) {
        std::printf("agent %zu (degree %g):\n", i + 1, degrees(static_cast<int>(i)));
        for (const auto& c : reports[i].conditions) {
            std::printf("  %-52s lhs=%-12.6g rhs=%-12.6g margin=%-12.6g %s\n", c.condition.c_str(),
                        c.lhs, c.rhs, c.margin, c.pass ? "ok" : (strict ? "FAIL" : "warn"));
            all = all && c.pass;
        }
    }
    if (all) {
        std::printf("all parameter conditions hold\n");
        return 0;
    }
    if (strict) {
        std::printf("parameter conditions failed (strict mode)\n");
        return 1;
    }
    std::printf("parameter warnings: some sufficient conditions do not hold\n");
    return 3;
}

int cmd_suggest_params(const std::string& path, double safety) {
    const Scenario scenario = load_with_overrides(path, {});
    const Eigen::VectorXd degrees = in_degrees(scenario.graph);
    nlohmann::ordered_json out;
    auto params = nlohmann::ordered_json::array();
    double shared_m = 0.0;
    for (int i = 0; i < scenario.n(); ++i) {
        const AgentControllerParams p = suggest_params(scenario.variant, scenario.bounds,
                                                       scenario.constraints, degrees(i), safety);
        shared_m = p.m;
        params.push_back({{"alpha", p.alpha}, {"z", p.z}, {"k", p.k}, {"gamma", p.gamma}});
    }
    out["m"] = shared_m;
    out["params"] = std::move(params);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_graph_info(const std::string& path) {
    const DirectedGraph g = load_graph(path);
    std::printf("nodes: %d\n", g.size());
    const Eigen::VectorXd degrees = in_degrees(g);
    std::printf("in-degrees:");
    for (int i = 0; i < g.size(); ++i) std::printf(" %g", degrees(i));
    std::printf("\n");
    const bool sc = is_strongly_connected(g);
    const bool tree = has_spanning_tree(g);
    std::printf("strongly connected: %s\n", sc ? "yes" : "no");
    std::printf("spanning tree: %s\n", tree ? "yes" : "no");
    if (sc) {
        const Eigen::VectorXd omega = left_eigenvector(g);
        std::printf("left eigenvector:");
        for (int i = 0; i < g.size(); ++i) std::printf(" %.17g", omega(i));
        std::printf("\n");
    }
    if (tree) {
        const GraphDecomposition d = perron_frobenius_form(g);
        std::printf("block structure (%zu blocks):\n", d.blocks.size());
        for (size_t b = 0; b < d.blocks.size(); ++b) {
            std::printf("  block %zu (%s):", b + 1,
                        d.block_kinds[b] == BlockKind::RootScc ? "root component" : "M-matrix block");
            for (int node : d.blocks[b]) std::printf(" %d", node + 1);
            std::printf("\n");
        }
    } else {
        std::printf("block decomposition refused: multiple source components\n");
    }
    return 0;
}

int cmd_reproduce(const std::string& case_name, const std::string& out, const Overrides& overrides,
                  bool strict) {
    Scenario scenario = reproduction_scenario(case_name);
    nlohmann::ordered_json j = scenario_to_json(scenario);
    apply_overrides(j, overrides);
    scenario = scenario_from_json(j);
    fs::create_directories(out);
    save_scenario(scenario, (fs::path(out) / "scenario.json").string());
    return run_one(scenario, out, strict);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained-consensus simulation for second-order multiagent systems"};
    app.require_subcommand(1);

    Overrides overrides;
    bool strict = false;
    std::string out = "out";
    double dt_value = 0.0, t_end_value = 0.0;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* cmd, bool with_out) {
        cmd->add_flag("--strict", strict, "treat parameter warnings as errors");
        cmd->add_option("--dt", dt_value, "override the integrator step (seconds)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--t-end", t_end_value, "override the horizon (seconds)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed_value, "override the scenario seed");
        if (with_out) cmd->add_option("--out", out, "output directory");
    };
    auto collect_overrides = [&](CLI::App* cmd) {
        if (cmd->count("--dt") > 0) overrides.dt = dt_value;
        if (cmd->count("--t-end") > 0) overrides.t_end = t_end_value;
        if (cmd->count("--seed") > 0) overrides.seed = seed_value;
    };

    std::vector<std::string> scenario_paths;
    int jobs = 1;
    CLI::App* run_cmd = app.add_subcommand("run", "simulate scenarios and write outputs");
    run_cmd->add_option("scenario", scenario_paths, "scenario JSON file(s)")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--jobs", jobs, "run a batch concurrently")->check(CLI::PositiveNumber);
    add_common(run_cmd, true);

    std::string check_path;
    CLI::App* check_cmd = app.add_subcommand("check-params", "evaluate the parameter conditions");
    check_cmd->add_option("scenario", check_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    check_cmd->add_flag("--strict", strict, "treat parameter warnings as errors");

    std::string suggest_path;
    double safety = 0.5;
    CLI::App* suggest_cmd =
        app.add_subcommand("suggest-params", "propose parameters with uniform margins");
    suggest_cmd->add_option("scenario", suggest_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    suggest_cmd->add_option("--safety", safety, "fraction of each admissible interval, in (0, 1)");

    std::string graph_path;
    CLI::App* graph_cmd = app.add_subcommand("graph-info", "connectivity and spectral facts");
    graph_cmd->add_option("graph", graph_path, "graph JSON file")
        ->required()
        ->check(CLI::ExistingFile);

    std::string case_name;
    CLI::App* repro_cmd =
        app.add_subcommand("reproduce-paper", "run the built-in 7-manipulator study");
    repro_cmd->add_option("--case", case_name, "symmetric or asymmetric")->required();
    add_common(repro_cmd, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            collect_overrides(run_cmd);
            return cmd_run(scenario_paths, out, overrides, strict, jobs);
        }
        if (check_cmd->parsed()) return cmd_check_params(check_path, strict);
        if (suggest_cmd->parsed()) return cmd_suggest_params(suggest_path, safety);
        if (graph_cmd->parsed()) return cmd_graph_info(graph_path);
        if (repro_cmd->parsed()) {
            collect_overrides(repro_cmd);
            return cmd_reproduce(case_name, out, overrides, strict);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 1;
}
