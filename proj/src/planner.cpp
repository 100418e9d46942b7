#include "eirm/planner.hpp"

#include <algorithm>
#include <cmath>

namespace eirm {

void Budget::validate() const {
    if (kind == Kind::Seconds) {
        if (!(seconds > 0.0) || !std::isfinite(seconds)) throw InputError("budget seconds must be positive");
    } else if (iterations <= 0) {
        throw InputError("budget iterations must be positive");
    }
}

void PlannerConfig::validate() const {
    if (samples_per_batch < 1) throw InputError("samples per batch (m) must be >= 1");
    if (!(knn_scale > 0.0)) throw InputError("knn scale must be positive");
    if (sparse_factor < 1) throw InputError("sparse_factor must be >= 1");
    if (prune_threshold < 0) throw InputError("prune_threshold must be >= 0");
    if (!(w_after_solution >= 1.0)) throw InputError("w after the first solution must be >= 1");
    if (max_batches < 0) throw InputError("max_batches must be >= 0");
}

PlannerConfig configure(const std::string& mode) {
    PlannerConfig c;
    if (mode == "eit_like") {
        c.eit_like = true;
    } else if (mode != "eirm") {
        throw InputError("unknown planner mode: " + mode);
    }
    c.validate();
    return c;
}

namespace {

BatchConfig batch_config(const PlannerConfig& c) {
    c.validate();
    return {c.samples_per_batch, c.knn_scale, c.prune_threshold};
}

}  // namespace

Session::Session(Scenario scenario, PlannerConfig config)
    : scenario_(std::make_unique<const Scenario>(std::move(scenario))),
      config_(std::move(config)),
      approx_(*scenario_, batch_config(config_), config_.seed),
      search_(approx_, SearchConfig{config_.sparse_factor, config_.w_after_solution, config_.effort_to_come}) {}

std::unique_ptr<Session> create_session(Scenario scenario, PlannerConfig config) {
    return std::make_unique<Session>(std::move(scenario), std::move(config));
}

void Session::validate_query(const Query& q) const {
    q.budget.validate();
    if (q.goals.empty()) throw InputError("query needs at least one goal");
    if (!is_state_valid(q.start, *scenario_)) throw InputError("query start is out of bounds or in collision");
    for (const auto& g : q.goals) {
        if (!is_state_valid(g, *scenario_)) throw InputError("query goal is out of bounds or in collision");
    }
}

PlanResult Session::plan_query(const Query& q) {
    validate_query(q);
    if (config_.eit_like) approx_.reset_persistent();

    PlanResult result;
    BudgetClock clock(q.budget);
    result.keep_size = approx_.keep_buffer().size();

    const StateId start = approx_.intern(q.start);
    std::vector<StateId> goals;
    for (const auto& g : q.goals) {
        const StateId id = approx_.intern(g);
        if (std::find(goals.begin(), goals.end(), id) == goals.end()) goals.push_back(id);
    }
    result.goal_count = goals.size();

    try {
        approx_.rewind_for_query(start, goals);
    } catch (const SamplerStarvation& e) {
        result.diagnostic = e.what();
        return result;
    }
    has_query_ = true;
    std::int64_t batches = 1;
    search_.begin_query(start, goals);

    auto record_solution = [&] {
        const double c = search_.c_curr();
        if (result.solution_costs.empty()) {
            result.t_init = clock.stamp();
            result.c_init = c;
            result.graph_size_at_init = approx_.active_count();
            result.batches_at_init = batches;
        }
        result.solution_costs.push_back(c);
        if (event_observer_) {
            event_observer_({PlannerEvent::Kind::SolutionFound, c, clock.stamp(), search_.full_checks(),
                             search_.sparse_checks(), 0});
        }
    };
    if (std::isfinite(search_.c_curr())) record_solution();

    // Frozen graphs end once a restart has been processed without change.
    bool restarted_clean = false;

    while (!clock.exhausted()) {
        if (config_.initial_only && !result.solution_costs.empty()) break;
        clock.tick();
        if (search_.best_rev_edge_improves_sol()) {
            search_.reverse_iterate();
            continue;
        }
        // A zero-cost solution cannot improve.
        if (search_.c_curr() <= 0.0) break;
        if (search_.forward_gate()) {
            const ForwardStep step = search_.forward_iterate();
            if (step.kind == ForwardStep::Kind::Collision) {
                search_.restart();
            } else if (step.kind == ForwardStep::Kind::Improved) {
                restarted_clean = false;
                if (step.solution_improved) record_solution();
            }
            continue;
        }
        if (config_.max_batches > 0 && batches >= config_.max_batches) {
            if (restarted_clean) break;
            search_.restart();
            restarted_clean = true;
            continue;
        }
        RefineResult fresh;
        try {
            fresh = approx_.refine_approximation(search_.c_curr(), config_.samples_per_batch);
        } catch (const SamplerStarvation& e) {
            result.diagnostic = e.what();
            break;
        }
        if (refine_observer_) refine_observer_(fresh, search_.c_curr(), approx_);
        if (fresh.states.empty()) {
            // The informed set is exhausted for this query.
            if (fresh.saturated && std::isfinite(search_.c_curr())) break;
            continue;
        }
        approx_.add_vertices(fresh.states);
        ++batches;
        if (event_observer_) {
            event_observer_({PlannerEvent::Kind::BatchAdded, search_.c_curr(), clock.stamp(), search_.full_checks(),
                             search_.sparse_checks(), fresh.states.size()});
        }
        search_.restart();
    }

    result.iterations = clock.iterations();
    result.batches_used = batches;
    result.full_checks = search_.full_checks();
    result.sparse_checks = search_.sparse_checks();
    if (const auto goal = search_.best_goal()) {
        result.status = PlanResult::Status::Solved;
        result.c_final = search_.c_curr();
        result.path_ids = search_.extract_path(*goal);
        for (StateId id : result.path_ids) {
            auto c = approx_.coords(id);
            result.path.emplace_back(c.begin(), c.end());
        }
    } else {
        result.graph_size_at_init = approx_.active_count();
        result.batches_at_init = batches;
        if (result.diagnostic.empty()) result.diagnostic = "no solution within budget";
    }
    approx_.finish_query_prune(start, goals);
    return result;
}

std::vector<PlanResult> Session::solve_sequence(const std::vector<Query>& queries) {
    std::vector<PlanResult> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        try {
            out.push_back(plan_query(q));
        } catch (const std::exception& e) {
            PlanResult failed;
            failed.diagnostic = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

std::vector<std::vector<double>> Session::extract_path(std::span<const double> goal) const {
    if (!has_query_) throw ContractViolation("extract_path before any query");
    const auto& interned = approx_.states();
    // Goals are interned, so an exact coordinate match finds the id.
    for (std::size_t i = 0; i < approx_.active_count(); ++i) {
        const StateId id = approx_.id_of(static_cast<Approximation::Local>(i));
        auto c = interned[id];
        if (std::equal(c.begin(), c.end(), goal.begin(), goal.end())) {
            std::vector<std::vector<double>> path;
            for (StateId p : search_.extract_path(id)) {
                auto pc = approx_.coords(p);
                path.emplace_back(pc.begin(), pc.end());
            }
            return path;
        }
    }
    throw ContractViolation("extract_path: goal is not part of the last query");
}

}  // namespace eirm
