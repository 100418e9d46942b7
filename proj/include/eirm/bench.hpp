// Benchmark scenarios, seeded query sequences, planner x run matrices,
// median aggregation with order-statistic confidence intervals, and output.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eirm/planner.hpp"

namespace eirm::bench {

/// Bad command-line or spec input.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScenarioDef {
    std::string name;
    Scenario scenario;
    Box start_box;
    Box goal_box;

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] const std::vector<std::string>& scenario_names();
[[nodiscard]] ScenarioDef build_scenario(const std::string& name, std::size_t dim);

/// True when no obstacle interior overlaps the box.
[[nodiscard]] bool box_is_free(const Box& box, const Scenario& s);

enum class QueryMode : std::uint8_t { Subregion, Global };
[[nodiscard]] QueryMode parse_mode(const std::string& s);
[[nodiscard]] std::string to_string(QueryMode m);

/// Pure function of its arguments; budgets are left at their default.
[[nodiscard]] std::vector<Query> generate_queries(const ScenarioDef& def, QueryMode mode, std::size_t n,
                                                  std::uint64_t seed);
[[nodiscard]] std::string query_sequence_hash(const std::vector<Query>& queries);

struct BenchmarkSpec {
    std::string scenario = "wall_gap";
    std::size_t dim = 2;
    QueryMode mode = QueryMode::Subregion;
    std::size_t n_queries = 20;
    std::size_t n_runs = 25;
    Budget budget = Budget::in_seconds(0.5);
    std::vector<std::string> planners{"eirm", "lazyprmstar"};
    std::uint64_t master_seed = 0;
    bool initial_only = false;
    unsigned threads = 0;  // 0: BENCH_THREADS or hardware concurrency

    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Per-dimension default query budgets: 0.5 s in 2D, 2 s otherwise.
[[nodiscard]] double default_budget_seconds(std::size_t dim);

[[nodiscard]] const std::vector<std::string>& planner_names();
[[nodiscard]] std::unique_ptr<QueryPlanner> make_planner(const std::string& name, const Scenario& scenario,
                                                         std::uint64_t seed, bool initial_only);

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, const std::string& planner, std::uint64_t run) noexcept;

struct Row {
    std::string planner;
    std::size_t run = 0;
    std::size_t query = 0;
    double t_init = kInfCost;
    double c_init = kInfCost;
    double c_final = kInfCost;
    Effort full_checks = 0;
    Effort sparse_checks = 0;
    std::size_t graph_size_at_init = 0;
    bool solved = false;
    bool failed = false;  // planner raised; not part of the CSV schema
    std::string diagnostic;
};

struct ResultsTable {
    std::vector<Row> rows;  // sorted by (planner order, run, query)
    std::string query_hash;
};

/// Optional per-result hook, called from worker threads under a lock.
using ResultHook = std::function<void(const Row&, const PlanResult&)>;

[[nodiscard]] ResultsTable run_benchmark(const BenchmarkSpec& spec, const ResultHook& hook = {});

struct MedianCi {
    double median = kInfCost;
    double lo = kInfCost;
    double hi = kInfCost;
};

/// Median with infinities participating; even counts average the middle pair.
[[nodiscard]] double median(std::vector<double> values);
/// 1-based order-statistic index l with [x_(l), x_(n+1-l)] covering the
/// median with probability at least `confidence`; 1 when n is too small.
[[nodiscard]] std::size_t median_ci_rank(std::size_t n, double confidence);
[[nodiscard]] MedianCi median_with_ci(std::vector<double> values, double confidence = 0.99);

struct PlannerSummary {
    std::string planner;
    std::vector<MedianCi> t_init, c_init, c_final;  // per query
    double cumulative_t_init = 0.0;
    double cumulative_c_init = 0.0;
    double cumulative_c_final = 0.0;
    std::size_t failures = 0;
    std::size_t unsolved = 0;
};

struct Summary {
    std::vector<PlannerSummary> planners;
    [[nodiscard]] const PlannerSummary& at(const std::string& planner) const;
};

[[nodiscard]] Summary aggregate(const ResultsTable& table, const BenchmarkSpec& spec);

[[nodiscard]] std::string format_number(double v);
[[nodiscard]] std::string results_csv(const ResultsTable& table);
void emit_outputs(const std::filesystem::path& dir, const ResultsTable& table, const Summary& summary,
                  const BenchmarkSpec& spec);
void export_scenarios(const std::filesystem::path& dir);

/// Writes through a temporary file and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace eirm::bench
