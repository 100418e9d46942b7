#include "eirm/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace eirm {

namespace {

constexpr std::size_t kListSlack = 8;

}  // namespace

void BatchConfig::validate() const {
    if (samples_per_batch < 1) throw InputError("batch size m must be >= 1");
    if (!(knn_scale >= 1.0)) throw InputError("knn scale eta must be >= 1");
    if (prune_threshold < 0) throw InputError("prune threshold must be >= 0");
}

std::size_t knn_count(std::size_t vertex_count, std::size_t dim, double eta) {
    if (vertex_count < 2) return 1;
    const double n = static_cast<double>(dim);
    const double k = std::ceil(eta * std::numbers::e * (1.0 + 1.0 / n) *
                               std::log(static_cast<double>(vertex_count)));
    return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

StateId StateStore::add(std::span<const double> coords) {
    if (coords.size() != dim_) throw InputError("state dimension does not match scenario");
    const auto id = static_cast<StateId>(size());
    coords_.insert(coords_.end(), coords.begin(), coords.end());
    return id;
}

// ---------------------------------------------------------------------------

ValidationStatus EdgeRegistry::status(StateId u, StateId v) const {
    auto it = status_.find(edge_key(u, v));
    return it == status_.end() ? ValidationStatus::unknown() : it->second;
}

void EdgeRegistry::record(StateId u, StateId v, ValidationStatus status) {
    using Kind = ValidationStatus::Kind;
    if (u == v) throw ContractViolation("self-loop edges have no status");
    if (status.kind == Kind::Unknown) throw ContractViolation("cannot record Unknown");
    auto [it, inserted] = status_.try_emplace(edge_key(u, v), status);
    ValidationStatus& current = it->second;
    if (!inserted) {
        if (current.kind == status.kind) {
            if (status.kind == Kind::SparseValid) current.certified = std::max(current.certified, status.certified);
            return;
        }
        if ((current.is_valid() && status.is_invalid()) || (current.is_invalid() && status.is_valid())) {
            throw ConsistencyFault("edge recorded as both valid and invalid");
        }
        // A sparse result never downgrades a terminal status.
        if (status.kind == Kind::SparseValid) return;
        current = status;
    }
    if (status.is_valid()) {
        ++valid_;
        valid_adjacency_[u].push_back(v);
        valid_adjacency_[v].push_back(u);
    } else if (status.is_invalid()) {
        ++invalid_;
    }
}

const std::vector<StateId>& EdgeRegistry::valid_partners(StateId x) const {
    static const std::vector<StateId> kNone;
    auto it = valid_adjacency_.find(x);
    return it == valid_adjacency_.end() ? kNone : it->second;
}

void EdgeRegistry::clear() {
    status_.clear();
    valid_adjacency_.clear();
    valid_ = invalid_ = 0;
}

// ---------------------------------------------------------------------------

void KnnGraph::reset(std::size_t dim, double eta) {
    dim_ = dim;
    eta_ = eta;
    k_ = 0;
    coords_.clear();
    lists_.clear();
    adjacency_.clear();
    adjacency_stale_ = true;
}

double KnnGraph::dist_sq(std::uint32_t i, std::uint32_t j) const {
    const double* a = point(i);
    const double* b = point(j);
    double sum = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
    }
    return sum;
}

void KnnGraph::recompute_all() {
    const auto n = static_cast<std::uint32_t>(lists_.size());
    const std::size_t cap = k_ + kListSlack;
    std::vector<Neighbor> scratch;
    for (std::uint32_t i = 0; i < n; ++i) {
        scratch.clear();
        for (std::uint32_t j = 0; j < n; ++j) {
            if (j != i) scratch.push_back({dist_sq(i, j), j});
        }
        const std::size_t keep = std::min(cap, scratch.size());
        std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep), scratch.end());
        lists_[i].assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep));
    }
}

void KnnGraph::insert(std::span<const double> flat_coords) {
    if (flat_coords.empty()) return;
    const auto old_n = static_cast<std::uint32_t>(lists_.size());
    coords_.insert(coords_.end(), flat_coords.begin(), flat_coords.end());
    const auto new_n = static_cast<std::uint32_t>(coords_.size() / dim_);
    lists_.resize(new_n);
    adjacency_stale_ = true;

    const std::size_t old_cap = old_n == 0 ? 0 : k_ + kListSlack;
    k_ = knn_count(new_n, dim_, eta_);
    if (old_n == 0 || k_ > old_cap) {
        recompute_all();
        return;
    }

    // The k nearest among old+new points lie within the old lists plus the
    // new points as long as k has not outgrown the stored list length.
    const std::size_t cap = old_cap;
    for (std::uint32_t i = 0; i < old_n; ++i) {
        auto& list = lists_[i];
        for (std::uint32_t j = old_n; j < new_n; ++j) {
            const Neighbor cand{dist_sq(i, j), j};
            if (list.size() < cap || cand < list.back()) {
                list.insert(std::upper_bound(list.begin(), list.end(), cand), cand);
                if (list.size() > cap) list.pop_back();
            }
        }
    }
    std::vector<Neighbor> scratch;
    for (std::uint32_t i = old_n; i < new_n; ++i) {
        scratch.clear();
        for (std::uint32_t j = 0; j < new_n; ++j) {
            if (j != i) scratch.push_back({dist_sq(i, j), j});
        }
        const std::size_t keep = std::min(cap, scratch.size());
        std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep), scratch.end());
        lists_[i].assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep));
    }
}

void KnnGraph::refresh_adjacency() const {
    const std::size_t n = lists_.size();
    adjacency_.assign(n, {});
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::size_t take = std::min(k_, lists_[i].size());
        for (std::size_t r = 0; r < take; ++r) {
            const std::uint32_t j = lists_[i][r].index;
            adjacency_[i].push_back(j);
            adjacency_[j].push_back(i);
        }
    }
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    adjacency_stale_ = false;
}

const std::vector<std::uint32_t>& KnnGraph::adjacent(std::uint32_t i) const {
    if (adjacency_stale_) refresh_adjacency();
    return adjacency_[i];
}

// ---------------------------------------------------------------------------

Approximation::Approximation(const Scenario& scenario, BatchConfig config, std::uint64_t seed)
    : scenario_(&scenario), config_(config), rng_(seed), store_(scenario.dim()) {
    config_.validate();
    knn_.reset(scenario.dim(), config_.knn_scale);
}

StateId Approximation::intern(std::span<const double> coords) {
    if (coords.size() != store_.dim()) throw InputError("query state dimension does not match scenario");
    std::vector<double> key(coords.begin(), coords.end());
    auto it = interned_.find(key);
    if (it != interned_.end()) return it->second;
    const StateId id = store_.add(coords);
    interned_.emplace(std::move(key), id);
    return id;
}

StateId Approximation::sample_valid_uniform() {
    const auto& bounds = scenario_->bounds();
    std::vector<double> x(bounds.size());
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        for (std::size_t d = 0; d < bounds.size(); ++d) {
            std::uniform_real_distribution<double> dist(bounds[d].lo, bounds[d].hi);
            x[d] = dist(rng_);
        }
        if (!scenario_->collides(x.data())) return store_.add(x);
    }
    throw SamplerStarvation("free space too thin: no valid sample within the attempt cap");
}

double Approximation::informed_cost(std::span<const double> x) const {
    if (query_start_.empty()) return 0.0;
    double to_goal = kInfCost;
    for (const auto& g : query_goals_) to_goal = std::min(to_goal, edge_cost(x, g));
    return edge_cost(query_start_, x) + to_goal;
}

const std::vector<StateId>& Approximation::rewind_for_query(StateId start, const std::vector<StateId>& goals) {
    if (goals.empty()) throw InputError("query needs at least one goal");
    if (!is_state_valid(store_[start], *scenario_)) throw InputError("query start is not a valid state");
    for (StateId g : goals) {
        if (!is_state_valid(store_[g], *scenario_)) throw InputError("query goal is not a valid state");
    }

    cursor_ = 0;
    query_start_.assign(store_[start].begin(), store_[start].end());
    query_goals_.clear();
    for (StateId g : goals) query_goals_.emplace_back(store_[g].begin(), store_[g].end());

    active_.clear();
    local_.clear();
    knn_.reset(store_.dim(), config_.knn_scale);

    std::vector<StateId> initial;
    initial.push_back(start);
    initial.insert(initial.end(), goals.begin(), goals.end());
    initial.insert(initial.end(), keep_.begin(), keep_.end());
    add_vertices(initial);
    add_vertices(refine_approximation(kInfCost, config_.samples_per_batch).states);
    return active_;
}

RefineResult Approximation::refine_approximation(double c_best, int m) {
    if (m < 1) throw ContractViolation("refine_approximation needs m >= 1");
    if (!(c_best > 0.0)) throw ContractViolation("refine_approximation needs c_best > 0");
    RefineResult out;
    const std::size_t cap = 100 * static_cast<std::size_t>(m);
    while (out.states.size() < static_cast<std::size_t>(m)) {
        if (out.inspected >= cap) {
            out.saturated = true;
            break;
        }
        if (cursor_ >= buffer_.size()) buffer_.push_back(sample_valid_uniform());
        const StateId x = buffer_[cursor_];
        if (informed_cost(store_[x]) < c_best) out.states.push_back(x);
        ++cursor_;
        ++out.inspected;
    }
    return out;
}

void Approximation::add_vertices(const std::vector<StateId>& ids) {
    std::vector<double> flat;
    for (StateId id : ids) {
        if (local_.contains(id)) continue;
        local_.emplace(id, static_cast<Local>(active_.size()));
        active_.push_back(id);
        auto c = store_[id];
        flat.insert(flat.end(), c.begin(), c.end());
    }
    knn_.insert(flat);
}

Approximation::Local Approximation::local_of(StateId id) const {
    auto it = local_.find(id);
    return it == local_.end() ? kNotActive : it->second;
}

std::vector<Approximation::Local> Approximation::expand_local(Local x) const {
    const StateId xid = active_[x];
    std::vector<Local> out;
    const auto& adjacent = knn_.adjacent(x);
    out.reserve(adjacent.size() + 4);
    for (Local y : adjacent) {
        if (!registry_.status(xid, active_[y]).is_invalid()) out.push_back(y);
    }
    for (StateId partner : registry_.valid_partners(xid)) {
        const Local y = local_of(partner);
        if (y == kNotActive || y == x) continue;
        if (!std::binary_search(adjacent.begin(), adjacent.end(), y)) out.push_back(y);
    }
    return out;
}

std::vector<StateId> Approximation::expand(StateId x) const {
    const Local lx = local_of(x);
    if (lx == kNotActive) throw ContractViolation("expand called on an inactive state");
    std::vector<StateId> out;
    for (Local y : expand_local(lx)) out.push_back(active_[y]);
    return out;
}

void Approximation::record_edge_status(StateId u, StateId v, ValidationStatus status) {
    registry_.record(u, v, status);
}

std::vector<StateId> Approximation::finish_query_prune(StateId start, const std::vector<StateId>& goals) {
    std::vector<StateId> candidates{start};
    candidates.insert(candidates.end(), goals.begin(), goals.end());
    std::vector<StateId> kept;
    for (StateId s : candidates) {
        double nearest = kInfCost;
        for (StateId other : active_) {
            if (other == s) continue;
            nearest = std::min(nearest, edge_cost(store_[s], store_[other]));
        }
        if (!std::isfinite(nearest)) continue;
        const Effort effort = grid_point_count(nearest, scenario_->resolution());
        if (effort > config_.prune_threshold) {
            keep_.insert(s);
            if (std::find(kept.begin(), kept.end(), s) == kept.end()) kept.push_back(s);
        }
    }
    return kept;
}

std::size_t Approximation::knn_count() const {
    return eirm::knn_count(active_.size(), store_.dim(), config_.knn_scale);
}

void Approximation::reset_persistent() {
    buffer_.clear();
    cursor_ = 0;
    keep_.clear();
    registry_.clear();
}

nlohmann::json Approximation::snapshot() const {
    using nlohmann::json;
    json states = json::array();
    for (std::size_t i = 0; i < store_.size(); ++i) {
        auto c = store_[static_cast<StateId>(i)];
        states.push_back(std::vector<double>(c.begin(), c.end()));
    }
    json buffer = json::array();
    for (StateId id : buffer_) {
        auto c = store_[id];
        buffer.push_back(std::vector<double>(c.begin(), c.end()));
    }
    json valid = json::array(), invalid = json::array(), sparse = json::array();
    std::vector<std::tuple<StateId, StateId, ValidationStatus>> edges;
    registry_.for_each([&](StateId a, StateId b, ValidationStatus s) { edges.emplace_back(a, b, s); });
    std::sort(edges.begin(), edges.end(),
              [](const auto& l, const auto& r) { return std::tie(std::get<0>(l), std::get<1>(l)) <
                                                        std::tie(std::get<0>(r), std::get<1>(r)); });
    for (const auto& [a, b, s] : edges) {
        if (s.is_valid()) valid.push_back({a, b});
        else if (s.is_invalid()) invalid.push_back({a, b});
        else sparse.push_back({a, b, s.certified});
    }
    json interned = json::array();
    for (const auto& [coords, id] : interned_) interned.push_back(id);
    std::ostringstream rng;
    rng << rng_;
    return {{"rng", rng.str()},
            {"buffer", buffer},
            {"buffer_ids", buffer_},
            {"states", states},
            {"interned", interned},
            {"valid", valid},
            {"invalid", invalid},
            {"sparse", sparse},
            {"keep", std::vector<StateId>(keep_.begin(), keep_.end())}};
}

void Approximation::restore(const nlohmann::json& j) {
    try {
        StateStore store(store_.dim());
        for (const auto& c : j.at("states")) store.add(c.get<std::vector<double>>());
        std::vector<StateId> buffer = j.at("buffer_ids").get<std::vector<StateId>>();
        for (StateId id : buffer) {
            if (id >= store.size()) throw InputError("snapshot: buffer id out of range");
        }
        EdgeRegistry registry;
        for (const auto& e : j.at("valid")) registry.record(e.at(0), e.at(1), ValidationStatus::valid());
        for (const auto& e : j.at("invalid")) registry.record(e.at(0), e.at(1), ValidationStatus::invalid());
        for (const auto& e : j.value("sparse", nlohmann::json::array())) {
            registry.record(e.at(0), e.at(1), ValidationStatus::sparse_valid(e.at(2).get<Effort>()));
        }
        std::map<std::vector<double>, StateId> interned;
        for (const auto& id : j.value("interned", nlohmann::json::array())) {
            const auto sid = id.get<StateId>();
            auto c = store[sid];
            interned.emplace(std::vector<double>(c.begin(), c.end()), sid);
        }
        auto keep = j.at("keep").get<std::vector<StateId>>();
        std::mt19937_64 rng = rng_;
        if (j.contains("rng")) {
            std::istringstream in(j.at("rng").get<std::string>());
            in >> rng;
            if (!in) throw InputError("snapshot: malformed rng state");
        }

        store_ = std::move(store);
        buffer_ = std::move(buffer);
        registry_ = std::move(registry);
        interned_ = std::move(interned);
        keep_ = std::set<StateId>(keep.begin(), keep.end());
        rng_ = rng;
        cursor_ = 0;
        active_.clear();
        local_.clear();
        knn_.reset(store_.dim(), config_.knn_scale);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("snapshot: malformed JSON: ") + e.what());
    }
}

}  // namespace eirm
