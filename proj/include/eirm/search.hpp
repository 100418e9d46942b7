// Effort/cost ordered reverse search (sparse checks, heuristic labels) and
// the focal-set forward search (full checks) over the active approximation.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "eirm/approximation.hpp"
#include "eirm/space.hpp"

namespace eirm {

/// Effort-to-come heuristic for a target state; the default is zero.
using EffortHeuristic = std::function<Effort(std::span<const double>)>;

struct SearchConfig {
    int sparse_factor = 100;
    double w_after_solution = 1.0;
    EffortHeuristic effort_to_come;  // empty == zero

    void validate() const;
};

enum class KeyOrder : std::uint8_t { Effort, Cost };

/// Both components of a queue key; `order` decides which one dominates.
struct KeyPair {
    Effort effort = kInfEffort;
    double cost = kInfCost;
};

/// Lexicographic strict-less under the given order.
[[nodiscard]] bool key_less(const KeyPair& a, const KeyPair& b, KeyOrder order) noexcept;

/// Edge queue entry. Ties beyond the key break on (source id, target id).
struct QueueEntry {
    KeyPair key;
    StateId source_id = 0;
    StateId target_id = 0;
    std::uint32_t source = 0;  // local index
    std::uint32_t target = 0;  // local index
    std::uint32_t version = 0;
};

[[nodiscard]] bool entry_less(const QueueEntry& a, const QueueEntry& b, KeyOrder order) noexcept;

/// w * s, with w = inf treated as unbounded.
[[nodiscard]] double inflate(double w, double s) noexcept;

struct ForwardStep {
    enum class Kind : std::uint8_t { Discarded, Expanded, Collision, Improved };
    Kind kind = Kind::Discarded;
    bool solution_improved = false;
};

struct ForwardEdge {
    std::uint32_t source = 0;
    std::uint32_t target = 0;
};

/// Search state for one query over an Approximation. Local vertex indices
/// refer to Approximation's active set, which only grows during a query.
class SearchState {
public:
    using Local = Approximation::Local;
    static constexpr Local kNone = Approximation::kNotActive;

    SearchState(Approximation& approx, SearchConfig config);

    /// Clears all labels and the forward tree, then seeds both queues.
    void begin_query(StateId start, const std::vector<StateId>& goals);
    /// Extends label storage to vertices appended to the approximation.
    void sync_vertices();
    /// Resets reverse labels and both queues; keeps the forward tree.
    void restart();

    [[nodiscard]] bool best_rev_edge_improves_sol();
    void reverse_iterate();

    /// min over the forward queue of g + c^ + h^ < c_curr.
    [[nodiscard]] bool forward_gate();
    ForwardStep forward_iterate();

    [[nodiscard]] double lower_bound_s_hat() const;
    [[nodiscard]] double estimate_s_bar() const;
    [[nodiscard]] ForwardEdge get_best_forward_edge() const;

    [[nodiscard]] KeyPair reverse_key(Local s, Local t) const;
    [[nodiscard]] KeyPair forward_key(Local s, Local t) const;
    [[nodiscard]] KeyOrder order() const noexcept { return is_unbounded(w_) ? KeyOrder::Effort : KeyOrder::Cost; }

    [[nodiscard]] std::vector<StateId> extract_path(StateId goal) const;
    [[nodiscard]] std::optional<StateId> best_goal() const;

    // Labels and bookkeeping, by local index.
    [[nodiscard]] double h_hat(Local x) const { return h_hat_[x]; }
    [[nodiscard]] double h_bar(Local x) const { return h_bar_[x]; }
    [[nodiscard]] Effort e_bar(Local x) const { return e_bar_[x]; }
    [[nodiscard]] double g_forward(Local x) const { return g_[x]; }
    [[nodiscard]] Local parent(Local x) const { return parent_[x]; }

    [[nodiscard]] double w() const noexcept { return w_; }
    [[nodiscard]] double c_curr() const noexcept { return c_curr_; }
    [[nodiscard]] Effort full_checks() const noexcept { return full_checks_; }
    [[nodiscard]] Effort sparse_checks() const noexcept { return sparse_checks_; }
    /// Bumped by begin_query and restart.
    [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }
    [[nodiscard]] std::size_t reverse_queue_size() const noexcept { return reverse_.size(); }
    [[nodiscard]] std::size_t forward_queue_size() const noexcept { return forward_.size(); }

    /// Popped reverse keys while ordered by effort (instrumentation).
    void set_pop_observer(std::function<void(const QueueEntry&, KeyOrder)> f) { pop_observer_ = std::move(f); }

    // Direct queue manipulation, used by unit tests of the selection rules.
    void set_labels(Local x, double h_hat, double h_bar, Effort e_bar);
    void set_forward_cost(Local x, double g, Local parent);
    void set_w(double w);
    void clear_queues();
    void push_forward(Local s, Local t);
    void push_reverse(Local s, Local t);

    static bool is_unbounded(double w) noexcept { return w == kInfCost; }

private:
    struct ForwardSlot {
        std::uint32_t source;
        std::uint32_t target;
    };

    [[nodiscard]] double edge_length(Local s, Local t) const;
    [[nodiscard]] Effort edge_effort(Local s, Local t) const;
    [[nodiscard]] double g_hat(Local t) const;
    [[nodiscard]] Effort d_bar(Local t) const;

    void expand_reverse(Local x);
    void expand_forward(Local x);
    void insert_forward(Local s, Local t);
    void erase_forward(std::size_t slot);
    void labels_decreased(Local t);
    void rescan_forward_minimum();
    void drop_stale_reverse_top();
    void reheap_reverse();
    void relax_forward(Local s, Local t, double g);

    [[nodiscard]] bool is_invalid(Local s, Local t) const;
    // Sources the reverse search has not labelled yet; their edges wait.
    [[nodiscard]] bool dormant(Local s) const { return h_hat_[s] == kInfCost; }
    void refresh_minimum(Local s, Local t);

    Approximation& approx_;
    SearchConfig config_;

    Local start_ = kNone;
    std::vector<char> is_goal_;
    std::vector<Local> goals_;

    std::vector<double> h_hat_;
    std::vector<double> h_bar_;
    std::vector<Effort> e_bar_;
    std::vector<std::uint32_t> version_;
    std::vector<double> g_;
    std::vector<Local> parent_;
    std::vector<std::vector<Local>> children_;
    std::vector<double> start_dist_;

    std::vector<QueueEntry> reverse_;  // binary heap under `order()`
    KeyOrder heap_order_ = KeyOrder::Effort;

    std::vector<ForwardSlot> forward_;
    std::unordered_map<std::uint64_t, std::size_t> forward_index_;
    std::vector<std::vector<Local>> forward_by_target_;
    std::vector<std::vector<Local>> forward_by_source_;
    mutable bool forward_min_dirty_ = true;
    KeyPair forward_min_cost_;    // minimal forward key, cost-dominant
    KeyPair forward_min_effort_;  // minimal forward key, effort-dominant

    double w_ = kInfCost;
    double c_curr_ = kInfCost;
    Effort full_checks_ = 0;
    Effort sparse_checks_ = 0;

    std::function<void(const QueueEntry&, KeyOrder)> pop_observer_;
    std::uint64_t epoch_ = 0;
};

}  // namespace eirm
