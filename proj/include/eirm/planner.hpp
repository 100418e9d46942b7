// Multiquery sessions: per-query rewind, the interleaved reverse/forward
// main loop with batch refinement, budgets, and result bookkeeping.

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eirm/approximation.hpp"
#include "eirm/search.hpp"
#include "eirm/space.hpp"

namespace eirm {

/// Either wall-clock seconds or a deterministic loop-iteration cap.
struct Budget {
    enum class Kind : std::uint8_t { Seconds, Iterations };
    Kind kind = Kind::Seconds;
    double seconds = 1.0;
    std::int64_t iterations = 0;

    static Budget in_seconds(double s) { return {Kind::Seconds, s, 0}; }
    static Budget in_iterations(std::int64_t n) { return {Kind::Iterations, 0.0, n}; }
    void validate() const;
};

struct Query {
    std::vector<double> start;
    std::vector<std::vector<double>> goals;
    Budget budget;
};

struct PlanResult {
    enum class Status : std::uint8_t { Solved, NoSolution };
    Status status = Status::NoSolution;
    std::vector<std::vector<double>> path;
    std::vector<StateId> path_ids;

    // Seconds in wall-clock mode, loop iterations in iteration mode.
    double t_init = kInfCost;
    double c_init = kInfCost;
    double c_final = kInfCost;
    Effort full_checks = 0;
    Effort sparse_checks = 0;
    std::int64_t batches_used = 0;
    std::int64_t batches_at_init = 0;
    std::size_t graph_size_at_init = 0;
    std::size_t keep_size = 0;  // keep buffer size when the query began
    std::size_t goal_count = 0;
    std::int64_t iterations = 0;
    std::vector<double> solution_costs;  // every improvement, in order
    std::string diagnostic;

    [[nodiscard]] bool solved() const noexcept { return status == Status::Solved; }
};

struct PlannerConfig {
    int samples_per_batch = 100;
    double knn_scale = 1.001;
    int sparse_factor = 100;
    Effort prune_threshold = 50'000;
    EffortHeuristic effort_to_come;  // empty: zero
    double w_after_solution = 1.0;
    bool eit_like = false;
    std::uint64_t seed = 0;
    // 0: unlimited. With a cap the graph is frozen once it is reached and
    // the query ends when a restart no longer changes anything.
    int max_batches = 0;
    bool initial_only = false;

    void validate() const;
};

/// "eirm" (default) or "eit_like".
[[nodiscard]] PlannerConfig configure(const std::string& mode = "eirm");

/// Common surface for the benchmark.
class QueryPlanner {
public:
    virtual ~QueryPlanner() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual PlanResult plan_query(const Query& q) = 0;
};

struct PlannerEvent {
    enum class Kind : std::uint8_t { SolutionFound, BatchAdded };
    Kind kind = Kind::SolutionFound;
    double cost = kInfCost;  // solution cost, or c_best for a batch
    double time = 0.0;       // budget units since the query began
    Effort full_checks = 0;
    Effort sparse_checks = 0;
    std::size_t batch_size = 0;
};
using EventObserver = std::function<void(const PlannerEvent&)>;

/// Hook for refine calls: (accepted states, c_best, current query's approximation).
using RefineObserver = std::function<void(const RefineResult&, double, const Approximation&)>;

class Session final : public QueryPlanner {
public:
    Session(Scenario scenario, PlannerConfig config);
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    [[nodiscard]] std::string name() const override { return config_.eit_like ? "eit_like" : "eirm"; }
    PlanResult plan_query(const Query& q) override;
    std::vector<PlanResult> solve_sequence(const std::vector<Query>& queries);

    [[nodiscard]] const Scenario& scenario() const noexcept { return *scenario_; }
    [[nodiscard]] const PlannerConfig& config() const noexcept { return config_; }
    [[nodiscard]] const Approximation& approximation() const noexcept { return approx_; }
    [[nodiscard]] const SearchState& search() const noexcept { return search_; }

    /// Path from the last query's forward tree to the given goal.
    [[nodiscard]] std::vector<std::vector<double>> extract_path(std::span<const double> goal) const;

    void set_refine_observer(RefineObserver f) { refine_observer_ = std::move(f); }
    void set_event_observer(EventObserver f) { event_observer_ = std::move(f); }
    void set_pop_observer(std::function<void(const QueueEntry&, KeyOrder)> f) { search_.set_pop_observer(std::move(f)); }

    [[nodiscard]] nlohmann::json snapshot() const { return approx_.snapshot(); }
    void restore(const nlohmann::json& j) { approx_.restore(j); }

private:
    void validate_query(const Query& q) const;

    std::unique_ptr<const Scenario> scenario_;
    PlannerConfig config_;
    Approximation approx_;
    SearchState search_;
    RefineObserver refine_observer_;
    EventObserver event_observer_;
    bool has_query_ = false;
};

[[nodiscard]] std::unique_ptr<Session> create_session(Scenario scenario, PlannerConfig config);

/// Tracks a Budget; `tick` is called once per loop iteration.
class BudgetClock {
public:
    explicit BudgetClock(const Budget& b) : budget_(b), start_(std::chrono::steady_clock::now()) {}

    [[nodiscard]] bool exhausted() const {
        if (budget_.kind == Budget::Kind::Iterations) return iterations_ >= budget_.iterations;
        return elapsed_seconds() >= budget_.seconds;
    }
    void tick() noexcept { ++iterations_; }
    [[nodiscard]] std::int64_t iterations() const noexcept { return iterations_; }
    [[nodiscard]] double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    /// Timestamp in the budget's own unit.
    [[nodiscard]] double stamp() const {
        return budget_.kind == Budget::Kind::Iterations ? static_cast<double>(iterations_) : elapsed_seconds();
    }

private:
    Budget budget_;
    std::chrono::steady_clock::time_point start_;
    std::int64_t iterations_ = 0;
};

}  // namespace eirm
