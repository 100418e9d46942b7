// Reference planners for the comparison: single-query RRT-Connect and a
// lazily validated PRM* whose roadmap grows across queries.

#pragma once

#include <random>

#include "eirm/approximation.hpp"
#include "eirm/planner.hpp"

namespace eirm {

struct BaselineConfig {
    double max_edge_length = 0.3;
    double goal_bias = 0.0;
    double knn_scale = 1.001;
    int samples_per_batch = 100;
    std::uint64_t seed = 0;
    bool initial_only = false;  // LazyPRM*: stop at the first solution

    void validate() const;
};

/// Steer limits used in the comparison: 0.3 in 2D, 0.5 in 4D, 1.25 in 8D.
[[nodiscard]] double default_max_edge_length(std::size_t dim);

// Both planners keep a reference to the scenario; it must outlive them.
class RrtConnect final : public QueryPlanner {
public:
    RrtConnect(const Scenario& scenario, BaselineConfig config);

    [[nodiscard]] std::string name() const override { return "rrtconnect"; }
    PlanResult plan_query(const Query& q) override;

private:
    struct Tree {
        std::vector<double> coords;  // flat
        std::vector<std::int64_t> parent;
        [[nodiscard]] std::size_t size() const { return parent.size(); }
    };
    enum class Extend : std::uint8_t { Trapped, Advanced, Reached };

    Extend extend(Tree& tree, std::span<const double> target, Effort& checks);
    [[nodiscard]] std::size_t nearest(const Tree& tree, std::span<const double> x) const;
    static void add(Tree& tree, std::span<const double> x, std::int64_t parent);

    const Scenario* scenario_;
    BaselineConfig config_;
    std::mt19937_64 rng_;
};

class LazyPrmStar final : public QueryPlanner {
public:
    LazyPrmStar(const Scenario& scenario, BaselineConfig config);

    [[nodiscard]] std::string name() const override { return "lazyprmstar"; }
    PlanResult plan_query(const Query& q) override;

    [[nodiscard]] std::size_t roadmap_size() const noexcept { return store_.size(); }

private:
    void add_batch(int m);
    void add_vertex(std::span<const double> x);
    // A* on the optimistic roadmap; empty when start and goals are disconnected.
    [[nodiscard]] std::vector<std::uint32_t> shortest_path(std::uint32_t start,
                                                           const std::vector<std::uint32_t>& goals) const;
    [[nodiscard]] double distance(std::uint32_t a, std::uint32_t b) const;

    const Scenario* scenario_;
    BaselineConfig config_;
    std::mt19937_64 rng_;
    StateStore store_;
    KnnGraph graph_;
    EdgeRegistry registry_;
};

}  // namespace eirm
