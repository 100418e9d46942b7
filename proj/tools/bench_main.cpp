// bench: run planner x run matrices over the reference scenarios.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "eirm/bench.hpp"

namespace bench = eirm::bench;

int main(int argc, char** argv) {
    CLI::App app{"Multiquery motion-planning benchmark"};
    app.require_subcommand(1);

    bench::BenchmarkSpec spec;
    std::string mode = "subregion";
    std::string planners = "eirm,lazyprmstar,rrtconnect";
    double budget = 0.0;
    std::int64_t iterations = 0;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Run a benchmark matrix");
    run->add_option("--scenario", spec.scenario, "wall_gap | repeating_rectangles")->required();
    run->add_option("--dim", spec.dim, "2, 4 or 8")->required();
    run->add_option("--mode", mode, "subregion | global");
    run->add_option("--queries", spec.n_queries, "queries per run");
    run->add_option("--runs", spec.n_runs, "runs per planner");
    run->add_option("--budget", budget, "seconds per query (default: 0.5 in 2D, 2 otherwise)");
    run->add_option("--planners", planners, "comma-separated: eirm,eit_like,lazyprmstar,rrtconnect");
    run->add_option("--seed", spec.master_seed, "master seed");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--initial-only", spec.initial_only, "stop each query at its first solution");
    run->add_option("--iterations", iterations, "iteration budget per query (deterministic mode)");
    run->add_option("--threads", spec.threads, "worker threads (default: BENCH_THREADS or hardware concurrency)");

    std::string export_dir;
    auto* scenarios = app.add_subcommand("scenarios", "Scenario definitions");
    scenarios->require_subcommand(1);
    auto* exp = scenarios->add_subcommand("export", "Write the reference scenario JSON files");
    exp->add_option("dir", export_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*exp) {
            bench::export_scenarios(export_dir);
            return 0;
        }
        spec.mode = bench::parse_mode(mode);
        spec.planners.clear();
        std::size_t pos = 0;
        while (pos <= planners.size()) {
            const std::size_t comma = std::min(planners.find(',', pos), planners.size());
            if (comma > pos) spec.planners.push_back(planners.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (iterations > 0) {
            spec.budget = eirm::Budget::in_iterations(iterations);
        } else {
            spec.budget = eirm::Budget::in_seconds(budget > 0.0 ? budget : bench::default_budget_seconds(spec.dim));
        }
        spec.validate();

        const auto table = bench::run_benchmark(spec);
        const auto summary = bench::aggregate(table, spec);
        bench::emit_outputs(out_dir, table, summary, spec);
        for (const auto& p : summary.planners) {
            std::printf("%-12s cumulative median t_init %s  c_final %s  unsolved %zu  failed %zu\n",
                        p.planner.c_str(), bench::format_number(p.cumulative_t_init).c_str(),
                        bench::format_number(p.cumulative_c_final).c_str(), p.unsolved, p.failures);
        }
    } catch (const bench::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
