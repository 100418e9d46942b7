#include "eirm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace eirm {

void BaselineConfig::validate() const {
    if (!(max_edge_length > 0.0)) throw InputError("max_edge_length must be positive");
    if (!(goal_bias >= 0.0 && goal_bias < 1.0)) throw InputError("goal_bias must lie in [0, 1)");
    if (!(knn_scale > 0.0)) throw InputError("knn scale must be positive");
    if (samples_per_batch < 1) throw InputError("samples per batch must be >= 1");
}

double default_max_edge_length(std::size_t dim) {
    if (dim <= 2) return 0.3;
    if (dim <= 4) return 0.5;
    return 1.25;
}

namespace {

void validate_query(const Query& q, const Scenario& s) {
    q.budget.validate();
    if (q.goals.empty()) throw InputError("query needs at least one goal");
    if (!is_state_valid(q.start, s)) throw InputError("query start is out of bounds or in collision");
    for (const auto& g : q.goals) {
        if (!is_state_valid(g, s)) throw InputError("query goal is out of bounds or in collision");
    }
}

std::vector<double> sample_uniform(const Scenario& s, std::mt19937_64& rng) {
    std::vector<double> x(s.dim());
    for (std::size_t d = 0; d < x.size(); ++d) {
        std::uniform_real_distribution<double> dist(s.bounds()[d].lo, s.bounds()[d].hi);
        x[d] = dist(rng);
    }
    return x;
}

void finish(PlanResult& r, const std::vector<std::vector<double>>& path, double cost) {
    r.status = PlanResult::Status::Solved;
    r.path = path;
    r.c_final = cost;
}

}  // namespace

// ---------------------------------------------------------------------------
// RRT-Connect

RrtConnect::RrtConnect(const Scenario& scenario, BaselineConfig config)
    : scenario_(&scenario), config_(config), rng_(config.seed) {
    config_.validate();
}

void RrtConnect::add(Tree& tree, std::span<const double> x, std::int64_t parent) {
    tree.coords.insert(tree.coords.end(), x.begin(), x.end());
    tree.parent.push_back(parent);
}

std::size_t RrtConnect::nearest(const Tree& tree, std::span<const double> x) const {
    const std::size_t n = x.size();
    std::size_t best = 0;
    double best_d = kInfCost;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < n && d < best_d; ++k) {
            const double diff = tree.coords[i * n + k] - x[k];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

RrtConnect::Extend RrtConnect::extend(Tree& tree, std::span<const double> target, Effort& checks) {
    const std::size_t n = target.size();
    const std::size_t near = nearest(tree, target);
    std::span<const double> from(tree.coords.data() + near * n, n);
    const double dist = edge_cost(from, target);
    std::vector<double> to(target.begin(), target.end());
    bool reached = true;
    if (dist > config_.max_edge_length) {
        const double t = config_.max_edge_length / dist;
        for (std::size_t k = 0; k < n; ++k) to[k] = from[k] + t * (target[k] - from[k]);
        reached = false;
    }
    if (dist == 0.0) return Extend::Reached;
    const auto outcome = check_edge_full(from, to, *scenario_, ValidationStatus::unknown());
    checks += outcome.checks_performed;
    if (outcome.status.is_invalid()) return Extend::Trapped;
    add(tree, to, static_cast<std::int64_t>(near));
    return reached ? Extend::Reached : Extend::Advanced;
}

PlanResult RrtConnect::plan_query(const Query& q) {
    validate_query(q, *scenario_);
    PlanResult result;
    result.goal_count = q.goals.size();
    BudgetClock clock(q.budget);
    const std::size_t n = scenario_->dim();

    Tree a, b;
    add(a, q.start, -1);
    for (const auto& g : q.goals) add(b, g, -1);
    bool a_is_start = true;

    while (!clock.exhausted()) {
        clock.tick();
        std::vector<double> x;
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (config_.goal_bias > 0.0 && coin(rng_) < config_.goal_bias) {
            const auto& target = a_is_start ? q.goals.front() : q.start;
            x = target;
        } else {
            x = sample_uniform(*scenario_, rng_);
        }
        if (extend(a, x, result.full_checks) != Extend::Trapped) {
            std::span<const double> added(a.coords.data() + (a.size() - 1) * n, n);
            std::vector<double> target(added.begin(), added.end());
            Extend e = Extend::Advanced;
            while (e == Extend::Advanced) e = extend(b, target, result.full_checks);
            if (e == Extend::Reached) {
                // Stitch both trees at the shared state.
                auto chain = [&](const Tree& t, std::int64_t i) {
                    std::vector<std::vector<double>> out;
                    for (; i >= 0; i = t.parent[static_cast<std::size_t>(i)]) {
                        auto p = t.coords.begin() + i * static_cast<std::int64_t>(n);
                        out.emplace_back(p, p + static_cast<std::int64_t>(n));
                    }
                    return out;
                };
                auto from_a = chain(a, static_cast<std::int64_t>(a.size() - 1));
                auto from_b = chain(b, static_cast<std::int64_t>(nearest(b, target)));
                std::reverse(from_a.begin(), from_a.end());
                from_a.insert(from_a.end(), from_b.begin() + 1, from_b.end());
                if (!a_is_start) std::reverse(from_a.begin(), from_a.end());
                double cost = 0.0;
                for (std::size_t i = 1; i < from_a.size(); ++i) cost += edge_cost(from_a[i - 1], from_a[i]);
                result.t_init = clock.stamp();
                result.c_init = cost;
                result.solution_costs.push_back(cost);
                result.graph_size_at_init = a.size() + b.size();
                finish(result, from_a, cost);
                break;
            }
        }
        std::swap(a, b);
        a_is_start = !a_is_start;
    }
    result.iterations = clock.iterations();
    if (!result.solved()) {
        result.graph_size_at_init = a.size() + b.size();
        result.diagnostic = "no solution within budget";
    }
    return result;
}

// ---------------------------------------------------------------------------
// LazyPRM*

LazyPrmStar::LazyPrmStar(const Scenario& scenario, BaselineConfig config)
    : scenario_(&scenario), config_(config), rng_(config.seed), store_(scenario.dim()) {
    config_.validate();
    graph_.reset(scenario.dim(), config_.knn_scale);
}

double LazyPrmStar::distance(std::uint32_t a, std::uint32_t b) const { return edge_cost(store_[a], store_[b]); }

void LazyPrmStar::add_vertex(std::span<const double> x) {
    store_.add(x);
    graph_.insert(x);
}

void LazyPrmStar::add_batch(int m) {
    std::vector<double> flat;
    for (int i = 0; i < m; ++i) {
        std::vector<double> x;
        int attempts = 0;
        do {
            if (++attempts > kMaxSampleAttempts) throw SamplerStarvation("free space too thin for roadmap growth");
            x = sample_uniform(*scenario_, rng_);
        } while (scenario_->collides(x.data()));
        store_.add(x);
        flat.insert(flat.end(), x.begin(), x.end());
    }
    graph_.insert(flat);
}

std::vector<std::uint32_t> LazyPrmStar::shortest_path(std::uint32_t start,
                                                      const std::vector<std::uint32_t>& goals) const {
    const std::size_t n = store_.size();
    auto h = [&](std::uint32_t x) {
        double best = kInfCost;
        for (auto g : goals) best = std::min(best, distance(x, g));
        return best;
    };
    std::vector<double> g(n, kInfCost);
    std::vector<std::uint32_t> parent(n, 0xffffffffu);
    std::vector<char> closed(n, 0), is_goal(n, 0);
    for (auto gl : goals) is_goal[gl] = 1;
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g[start] = 0.0;
    open.emplace(h(start), start);
    while (!open.empty()) {
        const auto [f, x] = open.top();
        open.pop();
        if (closed[x]) continue;
        closed[x] = 1;
        if (is_goal[x]) {
            std::vector<std::uint32_t> path;
            for (std::uint32_t v = x; v != 0xffffffffu; v = parent[v]) path.push_back(v);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (std::uint32_t y : graph_.adjacent(x)) {
            if (closed[y] || registry_.status(x, y).is_invalid()) continue;
            const double cand = g[x] + distance(x, y);
            if (cand < g[y]) {
                g[y] = cand;
                parent[y] = x;
                open.emplace(cand + h(y), y);
            }
        }
    }
    return {};
}

PlanResult LazyPrmStar::plan_query(const Query& q) {
    validate_query(q, *scenario_);
    PlanResult result;
    result.goal_count = q.goals.size();
    BudgetClock clock(q.budget);

    // Start and goals join the roadmap permanently.
    const auto start = static_cast<std::uint32_t>(store_.size());
    add_vertex(q.start);
    std::vector<std::uint32_t> goals;
    for (const auto& g : q.goals) {
        goals.push_back(static_cast<std::uint32_t>(store_.size()));
        add_vertex(g);
    }

    double best = kInfCost;
    std::vector<std::uint32_t> best_path;
    try {
        while (!clock.exhausted()) {
            clock.tick();
            const auto path = shortest_path(start, goals);
            if (path.empty()) {
                add_batch(config_.samples_per_batch);
                ++result.batches_used;
                continue;
            }
            bool valid = true;
            double cost = 0.0;
            for (std::size_t i = 1; i < path.size() && valid; ++i) {
                const auto u = path[i - 1], v = path[i];
                const ValidationStatus status = registry_.status(u, v);
                if (!status.is_valid()) {
                    const auto outcome = check_edge_full(store_[u], store_[v], *scenario_, status);
                    result.full_checks += outcome.checks_performed;
                    registry_.record(u, v, outcome.status);
                    valid = outcome.status.is_valid();
                }
                cost += distance(u, v);
            }
            if (!valid) continue;
            if (cost < best) {
                best = cost;
                best_path = path;
                if (result.solution_costs.empty()) {
                    result.t_init = clock.stamp();
                    result.c_init = cost;
                    result.graph_size_at_init = store_.size();
                }
                result.solution_costs.push_back(cost);
            }
            if (config_.initial_only) break;
            // Anytime growth once the current roadmap is solved.
            add_batch(config_.samples_per_batch);
            ++result.batches_used;
        }
    } catch (const SamplerStarvation& e) {
        result.diagnostic = e.what();
    }
    result.iterations = clock.iterations();
    if (std::isfinite(best)) {
        std::vector<std::vector<double>> path;
        for (auto v : best_path) {
            auto c = store_[v];
            path.emplace_back(c.begin(), c.end());
        }
        finish(result, path, best);
    } else {
        result.graph_size_at_init = store_.size();
        if (result.diagnostic.empty()) result.diagnostic = "no solution within budget";
    }
    return result;
}

}  // namespace eirm
