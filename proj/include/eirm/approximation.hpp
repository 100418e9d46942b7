// Replayable sample buffer, rewindable random geometric graph, and the
// edge-validity registries that persist across the queries of a session.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "eirm/space.hpp"

namespace eirm {

struct BatchConfig {
    int samples_per_batch = 100;
    double knn_scale = 1.001;
    Effort prune_threshold = 50'000;

    void validate() const;
};

/// Rejection sampling could not find a free state within the attempt cap.
class SamplerStarvation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxSampleAttempts = 10'000;

/// k = ceil(eta * e * (1 + 1/n) * ln |V|), at least 1.
[[nodiscard]] std::size_t knn_count(std::size_t vertex_count, std::size_t dim, double eta);

/// Append-only storage for every state a session has seen; ids index it.
class StateStore {
public:
    explicit StateStore(std::size_t dim) : dim_(dim) {}

    StateId add(std::span<const double> coords);
    [[nodiscard]] std::span<const double> operator[](StateId id) const {
        return {coords_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }
    [[nodiscard]] std::size_t size() const noexcept { return coords_.size() / dim_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
    std::vector<double> coords_;
};

/// Persistent knowledge about edges. Valid and Invalid are terminal and
/// mutually exclusive; SparseValid merges by maximum certified count.
class EdgeRegistry {
public:
    [[nodiscard]] ValidationStatus status(StateId u, StateId v) const;
    void record(StateId u, StateId v, ValidationStatus status);

    [[nodiscard]] const std::vector<StateId>& valid_partners(StateId x) const;

    [[nodiscard]] std::size_t valid_count() const noexcept { return valid_; }
    [[nodiscard]] std::size_t invalid_count() const noexcept { return invalid_; }

    template <typename F>
    void for_each(F&& f) const {
        for (const auto& [key, status] : status_) {
            f(static_cast<StateId>(key >> 32), static_cast<StateId>(key & 0xffffffffu), status);
        }
    }

    void clear();

private:
    std::unordered_map<std::uint64_t, ValidationStatus> status_;
    std::unordered_map<StateId, std::vector<StateId>> valid_adjacency_;
    std::size_t valid_ = 0;
    std::size_t invalid_ = 0;
};

/// Directed k-nearest lists over a point set addressed by dense local
/// indices. Supports incremental batch insertion while k is unchanged.
class KnnGraph {
public:
    struct Neighbor {
        double dist_sq;
        std::uint32_t index;
        friend bool operator<(const Neighbor& a, const Neighbor& b) {
            return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.index < b.index;
        }
    };

    void reset(std::size_t dim, double eta);
    /// Adds points (flat coordinates); recomputes lists as needed.
    void insert(std::span<const double> flat_coords);

    [[nodiscard]] std::size_t size() const noexcept { return lists_.size(); }
    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] const std::vector<Neighbor>& nearest(std::uint32_t i) const { return lists_[i]; }
    /// Symmetric closure: j is adjacent to i iff j in kNN(i) or i in kNN(j).
    [[nodiscard]] const std::vector<std::uint32_t>& adjacent(std::uint32_t i) const;
    [[nodiscard]] const double* point(std::uint32_t i) const { return coords_.data() + i * dim_; }

private:
    void recompute_all();
    void refresh_adjacency() const;
    [[nodiscard]] double dist_sq(std::uint32_t i, std::uint32_t j) const;

    std::size_t dim_ = 0;
    double eta_ = 1.0;
    std::size_t k_ = 0;
    std::vector<double> coords_;
    std::vector<std::vector<Neighbor>> lists_;
    mutable std::vector<std::vector<std::uint32_t>> adjacency_;
    mutable bool adjacency_stale_ = true;
};

struct RefineResult {
    std::vector<StateId> states;
    std::size_t inspected = 0;
    bool saturated = false;
};

/// The active approximation for one session. Ids are global (StateStore);
/// graph queries also accept dense local indices of active vertices.
class Approximation {
public:
    using Local = std::uint32_t;
    static constexpr Local kNotActive = 0xffffffffu;

    Approximation(const Scenario& scenario, BatchConfig config, std::uint64_t seed);

    [[nodiscard]] const Scenario& scenario() const noexcept { return *scenario_; }
    [[nodiscard]] const BatchConfig& config() const noexcept { return config_; }
    [[nodiscard]] const StateStore& states() const noexcept { return store_; }

    /// Returns the id of a query state; identical coordinates map to the
    /// same id for the whole session.
    StateId intern(std::span<const double> coords);

    /// Resets the cursor and the active set to start, goals, the keep
    /// buffer, and the first (replayed) batch. Registries are untouched.
    const std::vector<StateId>& rewind_for_query(StateId start, const std::vector<StateId>& goals);

    /// Walks the buffer from the cursor; accepts states with g^ + h^ < c_best.
    RefineResult refine_approximation(double c_best, int m);

    void add_vertices(const std::vector<StateId>& ids);

    /// Admissible solution-cost estimate through x for the current query.
    [[nodiscard]] double informed_cost(std::span<const double> x) const;

    [[nodiscard]] std::vector<StateId> expand(StateId x) const;
    [[nodiscard]] std::vector<Local> expand_local(Local x) const;

    void record_edge_status(StateId u, StateId v, ValidationStatus status);
    [[nodiscard]] ValidationStatus edge_status(StateId u, StateId v) const { return registry_.status(u, v); }
    [[nodiscard]] const EdgeRegistry& registry() const noexcept { return registry_; }

    std::vector<StateId> finish_query_prune(StateId start, const std::vector<StateId>& goals);

    [[nodiscard]] std::size_t knn_count() const;

    [[nodiscard]] std::size_t active_count() const noexcept { return active_.size(); }
    [[nodiscard]] const std::vector<StateId>& active() const noexcept { return active_; }
    [[nodiscard]] StateId id_of(Local i) const { return active_[i]; }
    [[nodiscard]] Local local_of(StateId id) const;
    [[nodiscard]] std::span<const double> coords(StateId id) const { return store_[id]; }

    [[nodiscard]] const std::vector<StateId>& buffer() const noexcept { return buffer_; }
    [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }
    [[nodiscard]] const std::set<StateId>& keep_buffer() const noexcept { return keep_; }

    /// Forgets buffer, registries, and keep buffer (single-query behaviour).
    void reset_persistent();

    [[nodiscard]] nlohmann::json snapshot() const;
    void restore(const nlohmann::json& j);

private:
    StateId sample_valid_uniform();

    const Scenario* scenario_;
    BatchConfig config_;
    std::mt19937_64 rng_;
    StateStore store_;
    std::map<std::vector<double>, StateId> interned_;

    std::vector<StateId> buffer_;
    std::size_t cursor_ = 0;
    std::set<StateId> keep_;
    EdgeRegistry registry_;

    std::vector<StateId> active_;
    std::unordered_map<StateId, Local> local_;
    KnnGraph knn_;

    std::vector<double> query_start_;
    std::vector<std::vector<double>> query_goals_;
};

}  // namespace eirm
