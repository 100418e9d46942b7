#include "eirm/search.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace eirm {

namespace {

std::uint64_t directed_key(std::uint32_t s, std::uint32_t t) {
    return (static_cast<std::uint64_t>(s) << 32) | t;
}

}  // namespace

void SearchConfig::validate() const {
    if (sparse_factor < 1) throw InputError("sparse_factor must be >= 1");
    if (!(w_after_solution >= 1.0)) throw InputError("w after the first solution must be >= 1");
}

bool key_less(const KeyPair& a, const KeyPair& b, KeyOrder order) noexcept {
    if (order == KeyOrder::Effort) {
        if (a.effort != b.effort) return a.effort < b.effort;
        return a.cost < b.cost;
    }
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.effort < b.effort;
}

bool entry_less(const QueueEntry& a, const QueueEntry& b, KeyOrder order) noexcept {
    if (key_less(a.key, b.key, order)) return true;
    if (key_less(b.key, a.key, order)) return false;
    return std::tie(a.source_id, a.target_id) < std::tie(b.source_id, b.target_id);
}

double inflate(double w, double s) noexcept {
    if (w == kInfCost || s == kInfCost) return kInfCost;
    return w * s;
}

SearchState::SearchState(Approximation& approx, SearchConfig config)
    : approx_(approx), config_(std::move(config)) {
    config_.validate();
}

// ---------------------------------------------------------------------------
// Bookkeeping

void SearchState::sync_vertices() {
    const std::size_t n = approx_.active_count();
    const std::size_t old = h_hat_.size();
    if (n == old) return;
    h_hat_.resize(n, kInfCost);
    h_bar_.resize(n, kInfCost);
    e_bar_.resize(n, kInfEffort);
    version_.resize(n, 0);
    g_.resize(n, kInfCost);
    parent_.resize(n, kNone);
    children_.resize(n);
    is_goal_.resize(n, 0);
    forward_by_target_.resize(n);
    forward_by_source_.resize(n);
    start_dist_.resize(n, 0.0);
    if (start_ != kNone) {
        const auto start = approx_.coords(approx_.id_of(start_));
        for (std::size_t i = old; i < n; ++i) {
            start_dist_[i] = edge_cost(start, approx_.coords(approx_.id_of(static_cast<Local>(i))));
        }
    }
}

void SearchState::begin_query(StateId start, const std::vector<StateId>& goals) {
    h_hat_.clear();
    h_bar_.clear();
    e_bar_.clear();
    version_.clear();
    g_.clear();
    parent_.clear();
    children_.clear();
    is_goal_.clear();
    forward_by_target_.clear();
    forward_by_source_.clear();
    start_dist_.clear();
    goals_.clear();

    start_ = approx_.local_of(start);
    if (start_ == kNone) throw ContractViolation("query start is not an active vertex");
    sync_vertices();
    for (StateId g : goals) {
        const Local lg = approx_.local_of(g);
        if (lg == kNone) throw ContractViolation("query goal is not an active vertex");
        if (!is_goal_[lg]) goals_.push_back(lg);
        is_goal_[lg] = 1;
    }
    g_[start_] = 0.0;
    w_ = kInfCost;
    c_curr_ = kInfCost;
    full_checks_ = 0;
    sparse_checks_ = 0;
    heap_order_ = KeyOrder::Effort;
    // A start that is itself a goal is solved by the empty path.
    if (is_goal_[start_]) {
        c_curr_ = 0.0;
        w_ = config_.w_after_solution;
    }
    restart();
}

void SearchState::restart() {
    ++epoch_;
    sync_vertices();
    for (Local x = 0; x < h_hat_.size(); ++x) {
        h_hat_[x] = h_bar_[x] = kInfCost;
        e_bar_[x] = kInfEffort;
        ++version_[x];
    }
    for (Local g : goals_) {
        h_hat_[g] = h_bar_[g] = 0.0;
        e_bar_[g] = 0;
    }
    clear_queues();
    for (Local g : goals_) expand_reverse(g);
    expand_forward(start_);
}

void SearchState::clear_queues() {
    reverse_.clear();
    heap_order_ = order();
    forward_.clear();
    forward_index_.clear();
    for (auto& v : forward_by_target_) v.clear();
    for (auto& v : forward_by_source_) v.clear();
    forward_min_dirty_ = true;
}

double SearchState::edge_length(Local s, Local t) const {
    return edge_cost(approx_.coords(approx_.id_of(s)), approx_.coords(approx_.id_of(t)));
}

Effort SearchState::edge_effort(Local s, Local t) const {
    const auto status = approx_.edge_status(approx_.id_of(s), approx_.id_of(t));
    // Invalid edges may linger in the forward queue until they are popped.
    if (status.is_invalid()) return kInfEffort;
    return edge_effort_estimate(edge_length(s, t), status, approx_.scenario().resolution());
}

bool SearchState::is_invalid(Local s, Local t) const {
    return approx_.edge_status(approx_.id_of(s), approx_.id_of(t)).is_invalid();
}

double SearchState::g_hat(Local t) const { return start_dist_[t]; }

Effort SearchState::d_bar(Local t) const {
    if (!config_.effort_to_come) return 0;
    return config_.effort_to_come(approx_.coords(approx_.id_of(t)));
}

// ---------------------------------------------------------------------------
// Keys

KeyPair SearchState::reverse_key(Local s, Local t) const {
    return {add_effort(add_effort(e_bar_[s], edge_effort(s, t)), d_bar(t)),
            h_hat_[s] + edge_length(s, t) + g_hat(t)};
}

KeyPair SearchState::forward_key(Local s, Local t) const {
    if (dormant(s)) return {};
    // The forward tree consists of validated edges, so effort-to-come is 0.
    return {add_effort(edge_effort(s, t), e_bar_[t]), g_[s] + edge_length(s, t) + h_hat_[t]};
}

// ---------------------------------------------------------------------------
// Reverse queue

void SearchState::push_reverse(Local s, Local t) {
    QueueEntry e;
    e.key = reverse_key(s, t);
    e.source = s;
    e.target = t;
    e.source_id = approx_.id_of(s);
    e.target_id = approx_.id_of(t);
    e.version = version_[s];
    reverse_.push_back(e);
    const KeyOrder ord = heap_order_;
    std::push_heap(reverse_.begin(), reverse_.end(),
                   [ord](const QueueEntry& a, const QueueEntry& b) { return entry_less(b, a, ord); });
}

void SearchState::expand_reverse(Local x) {
    for (Local y : approx_.expand_local(x)) {
        if (is_goal_[y]) continue;
        push_reverse(x, y);
    }
}

void SearchState::reheap_reverse() {
    heap_order_ = order();
    const KeyOrder ord = heap_order_;
    std::make_heap(reverse_.begin(), reverse_.end(),
                   [ord](const QueueEntry& a, const QueueEntry& b) { return entry_less(b, a, ord); });
}

void SearchState::drop_stale_reverse_top() {
    if (heap_order_ != order()) reheap_reverse();
    const KeyOrder ord = heap_order_;
    auto cmp = [ord](const QueueEntry& a, const QueueEntry& b) { return entry_less(b, a, ord); };
    while (!reverse_.empty()) {
        const QueueEntry& top = reverse_.front();
        if (top.version == version_[top.source] && !is_invalid(top.source, top.target)) return;
        std::pop_heap(reverse_.begin(), reverse_.end(), cmp);
        reverse_.pop_back();
    }
}

// ---------------------------------------------------------------------------
// Forward queue

void SearchState::insert_forward(Local s, Local t) {
    const auto key = directed_key(s, t);
    if (!forward_index_.contains(key)) {
        forward_index_.emplace(key, forward_.size());
        forward_.push_back({s, t});
        forward_by_target_[t].push_back(s);
        forward_by_source_[s].push_back(t);
    }
    refresh_minimum(s, t);
}

void SearchState::refresh_minimum(Local s, Local t) {
    if (forward_min_dirty_) return;
    const KeyPair k = forward_key(s, t);
    if (key_less(k, forward_min_cost_, KeyOrder::Cost)) forward_min_cost_ = k;
    if (key_less(k, forward_min_effort_, KeyOrder::Effort)) forward_min_effort_ = k;
}

void SearchState::push_forward(Local s, Local t) { insert_forward(s, t); }

void SearchState::expand_forward(Local x) {
    for (Local y : approx_.expand_local(x)) {
        if (y == start_) continue;
        insert_forward(x, y);
    }
}

void SearchState::erase_forward(std::size_t slot) {
    const ForwardSlot removed = forward_[slot];
    forward_index_.erase(directed_key(removed.source, removed.target));
    if (slot + 1 != forward_.size()) {
        forward_[slot] = forward_.back();
        forward_index_[directed_key(forward_[slot].source, forward_[slot].target)] = slot;
    }
    forward_.pop_back();
    forward_min_dirty_ = true;
}

void SearchState::labels_decreased(Local x) {
    if (forward_min_dirty_) return;
    // Edges into x change key; edges out of x may wake up.
    auto& sources = forward_by_target_[x];
    std::size_t live = 0;
    for (Local s : sources) {
        if (!forward_index_.contains(directed_key(s, x))) continue;
        sources[live++] = s;
        if (!is_invalid(s, x)) refresh_minimum(s, x);
    }
    sources.resize(live);
    auto& targets = forward_by_source_[x];
    live = 0;
    for (Local t : targets) {
        if (!forward_index_.contains(directed_key(x, t))) continue;
        targets[live++] = t;
        if (!is_invalid(x, t)) refresh_minimum(x, t);
    }
    targets.resize(live);
}

void SearchState::rescan_forward_minimum() {
    forward_min_cost_ = KeyPair{};
    forward_min_effort_ = KeyPair{};
    for (std::size_t i = 0; i < forward_.size();) {
        const auto [s, t] = forward_[i];
        if (is_invalid(s, t)) {
            erase_forward(i);
            continue;
        }
        const KeyPair k = forward_key(s, t);
        if (key_less(k, forward_min_cost_, KeyOrder::Cost)) forward_min_cost_ = k;
        if (key_less(k, forward_min_effort_, KeyOrder::Effort)) forward_min_effort_ = k;
        ++i;
    }
    forward_min_dirty_ = false;
}

double SearchState::lower_bound_s_hat() const {
    double best = kInfCost;
    for (const auto& [s, t] : forward_) {
        if (!dormant(s)) best = std::min(best, g_[s] + edge_length(s, t) + h_hat_[t]);
    }
    return best;
}

double SearchState::estimate_s_bar() const {
    double best = kInfCost;
    for (const auto& [s, t] : forward_) {
        if (!dormant(s)) best = std::min(best, g_[s] + edge_length(s, t) + h_bar_[t]);
    }
    return best;
}

ForwardEdge SearchState::get_best_forward_edge() const {
    if (forward_.empty()) throw ContractViolation("get_best_forward_edge on an empty queue");

    struct Scored {
        double admissible;
        double inadmissible;
        Effort effort;
        StateId sid;
        StateId tid;
        Local s;
        Local t;
    };
    std::vector<Scored> scored;
    scored.reserve(forward_.size());
    double s_hat = kInfCost;
    double s_bar = kInfCost;
    for (const auto& [s, t] : forward_) {
        if (dormant(s) || is_invalid(s, t)) continue;
        const double len = edge_length(s, t);
        Scored sc{g_[s] + len + h_hat_[t], g_[s] + len + h_bar_[t], add_effort(edge_effort(s, t), e_bar_[t]),
                  approx_.id_of(s), approx_.id_of(t), s, t};
        s_hat = std::min(s_hat, sc.admissible);
        s_bar = std::min(s_bar, sc.inadmissible);
        scored.push_back(sc);
    }
    if (scored.empty()) {
        const auto& [s, t] = forward_.front();
        return {s, t};
    }
    const double bound = inflate(w_, s_hat);
    auto ids = [](const Scored& a) { return std::tie(a.sid, a.tid); };

    // Minimum remaining effort within the focal set.
    const Scored* focal = nullptr;
    for (const auto& sc : scored) {
        if (!std::isfinite(sc.inadmissible) || sc.inadmissible > bound) continue;
        if (focal == nullptr || sc.effort < focal->effort ||
            (sc.effort == focal->effort &&
             (sc.admissible < focal->admissible || (sc.admissible == focal->admissible && ids(sc) < ids(*focal))))) {
            focal = &sc;
        }
    }
    if (focal != nullptr && focal->inadmissible <= bound) return {focal->s, focal->t};

    const bool by_inadmissible = s_bar <= bound;
    const Scored* best = &scored.front();
    for (const auto& sc : scored) {
        const double a = by_inadmissible ? sc.inadmissible : sc.admissible;
        const double b = by_inadmissible ? best->inadmissible : best->admissible;
        if (a < b || (a == b && ids(sc) < ids(*best))) best = &sc;
    }
    return {best->s, best->t};
}

// ---------------------------------------------------------------------------
// Iterations

bool SearchState::best_rev_edge_improves_sol() {
    drop_stale_reverse_top();
    if (reverse_.empty()) return false;
    if (forward_.empty()) return true;
    if (forward_min_dirty_) rescan_forward_minimum();
    if (forward_.empty()) return true;
    const KeyOrder ord = order();
    const KeyPair& fwd = ord == KeyOrder::Effort ? forward_min_effort_ : forward_min_cost_;
    return key_less(reverse_.front().key, fwd, ord);
}

void SearchState::reverse_iterate() {
    drop_stale_reverse_top();
    if (reverse_.empty()) return;
    const KeyOrder ord = heap_order_;
    std::pop_heap(reverse_.begin(), reverse_.end(),
                  [ord](const QueueEntry& a, const QueueEntry& b) { return entry_less(b, a, ord); });
    const QueueEntry entry = reverse_.back();
    reverse_.pop_back();
    if (pop_observer_) pop_observer_(entry, ord);

    const Local s = entry.source;
    const Local t = entry.target;
    const StateId sid = entry.source_id;
    const StateId tid = entry.target_id;
    const ValidationStatus status = approx_.edge_status(sid, tid);
    const double len = edge_length(s, t);
    const Effort effort = edge_effort_estimate(len, status, approx_.scenario().resolution());

    if (!status.is_valid()) {
        const auto outcome = check_edge_sparse(approx_.coords(sid), approx_.coords(tid), approx_.scenario(), status,
                                               config_.sparse_factor);
        sparse_checks_ += outcome.checks_performed;
        if (outcome.status.is_invalid()) {
            approx_.record_edge_status(sid, tid, ValidationStatus::invalid());
            return;
        }
        if (!(outcome.status == status)) approx_.record_edge_status(sid, tid, outcome.status);
    }

    h_bar_[t] = std::min(h_bar_[t], h_bar_[s] + len);
    const bool improves = is_unbounded(w_) ? add_effort(e_bar_[s], effort) < e_bar_[t]
                                           : h_hat_[s] + len < h_hat_[t];
    if (!improves) return;
    h_hat_[t] = std::min(h_hat_[t], h_hat_[s] + len);
    e_bar_[t] = std::min(e_bar_[t], add_effort(e_bar_[s], effort));
    ++version_[t];
    labels_decreased(t);
    if (t != start_) expand_reverse(t);
}

bool SearchState::forward_gate() {
    if (forward_.empty()) return false;
    if (forward_min_dirty_) rescan_forward_minimum();
    return !forward_.empty() && forward_min_cost_.cost < c_curr_;
}

ForwardStep SearchState::forward_iterate() {
    const ForwardEdge edge = get_best_forward_edge();
    erase_forward(forward_index_.at(directed_key(edge.source, edge.target)));
    const Local s = edge.source;
    const Local t = edge.target;
    const StateId sid = approx_.id_of(s);
    const StateId tid = approx_.id_of(t);
    const ValidationStatus status = approx_.edge_status(sid, tid);
    if (status.is_invalid()) return {};

    const double len = edge_length(s, t);
    if (parent_[t] == s) {
        // Tree edges are already validated; just continue through them.
        if (!is_goal_[t]) expand_forward(t);
        return {ForwardStep::Kind::Expanded, false};
    }
    if (!(g_[s] + len < g_[t])) return {};
    if (!(g_[s] + len + h_hat_[t] < c_curr_)) return {};

    const auto outcome = check_edge_full(approx_.coords(sid), approx_.coords(tid), approx_.scenario(), status);
    full_checks_ += outcome.checks_performed;
    if (outcome.status.is_invalid()) {
        approx_.record_edge_status(sid, tid, ValidationStatus::invalid());
        return {ForwardStep::Kind::Collision, false};
    }
    if (!status.is_valid()) approx_.record_edge_status(sid, tid, ValidationStatus::valid());

    const double before = c_curr_;
    relax_forward(s, t, g_[s] + len);
    return {ForwardStep::Kind::Improved, c_curr_ < before};
}

void SearchState::relax_forward(Local s, Local t, double g) {
    if (parent_[t] != kNone) {
        auto& siblings = children_[parent_[t]];
        siblings.erase(std::remove(siblings.begin(), siblings.end(), t), siblings.end());
    }
    parent_[t] = s;
    children_[s].push_back(t);
    g_[t] = g;
    if (!is_goal_[t]) expand_forward(t);

    // Descendants inherit the improvement.
    std::vector<Local> stack(children_[t].begin(), children_[t].end());
    while (!stack.empty()) {
        const Local d = stack.back();
        stack.pop_back();
        g_[d] = g_[parent_[d]] + edge_length(parent_[d], d);
        if (!is_goal_[d]) expand_forward(d);
        stack.insert(stack.end(), children_[d].begin(), children_[d].end());
    }
    forward_min_dirty_ = true;

    double best = kInfCost;
    for (Local goal : goals_) best = std::min(best, g_[goal]);
    if (best < c_curr_) {
        c_curr_ = best;
        w_ = config_.w_after_solution;
    }
}

// ---------------------------------------------------------------------------
// Results and test hooks

std::optional<StateId> SearchState::best_goal() const {
    std::optional<StateId> out;
    double best = kInfCost;
    for (Local goal : goals_) {
        if (g_[goal] < best) {
            best = g_[goal];
            out = approx_.id_of(goal);
        }
    }
    return out;
}

std::vector<StateId> SearchState::extract_path(StateId goal) const {
    const Local lg = approx_.local_of(goal);
    if (lg == kNone || !std::isfinite(g_[lg])) throw ContractViolation("extract_path: goal not reached");
    std::vector<StateId> path;
    Local x = lg;
    for (std::size_t guard = 0; guard <= g_.size(); ++guard) {
        path.push_back(approx_.id_of(x));
        if (x == start_) {
            std::reverse(path.begin(), path.end());
            return path;
        }
        x = parent_[x];
        if (x == kNone) break;
    }
    throw ConsistencyFault("extract_path: broken parent chain");
}

void SearchState::set_labels(Local x, double h_hat, double h_bar, Effort e_bar) {
    h_hat_[x] = h_hat;
    h_bar_[x] = h_bar;
    e_bar_[x] = e_bar;
    ++version_[x];
    forward_min_dirty_ = true;
}

void SearchState::set_forward_cost(Local x, double g, Local parent) {
    g_[x] = g;
    parent_[x] = parent;
    if (parent != kNone) children_[parent].push_back(x);
    forward_min_dirty_ = true;
}

void SearchState::set_w(double w) {
    w_ = w;
    forward_min_dirty_ = true;
}

}  // namespace eirm
