// Continuous state space, box-obstacle scenarios, costs, and collision
// checking with exact point-evaluation accounting.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace eirm {

using StateId = std::uint32_t;
using Effort = std::int64_t;

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();
inline constexpr Effort kInfEffort = std::numeric_limits<Effort>::max();

/// Saturating addition; kInfEffort absorbs.
[[nodiscard]] constexpr Effort add_effort(Effort a, Effort b) noexcept {
    if (a == kInfEffort || b == kInfEffort) return kInfEffort;
    if (a > kInfEffort - b) return kInfEffort;
    return a + b;
}

/// Bad user input: malformed scenario, wrong dimension, states in collision.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Internal bookkeeping contradicted itself. Runs must abort.
class ConsistencyFault : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

using Box = std::vector<Interval>;

struct State {
    StateId id = 0;
    std::vector<double> coords;
};

class Scenario {
public:
    Scenario(Box bounds, std::vector<Box> obstacles, double resolution);

    [[nodiscard]] std::size_t dim() const noexcept { return bounds_.size(); }
    [[nodiscard]] const Box& bounds() const noexcept { return bounds_; }
    [[nodiscard]] const std::vector<Box>& obstacles() const noexcept { return obstacles_; }
    [[nodiscard]] double resolution() const noexcept { return resolution_; }

    [[nodiscard]] bool in_bounds(std::span<const double> x) const noexcept;

    // Point test without dimension checks; the hot loop of edge validation.
    [[nodiscard]] bool collides(const double* x) const noexcept;

    [[nodiscard]] nlohmann::json to_json() const;
    static Scenario from_json(const nlohmann::json& j);

private:
    Box bounds_;
    std::vector<Box> obstacles_;
    double resolution_;
    // Obstacles flattened as [lo0, hi0, lo1, hi1, ...] per box.
    std::vector<double> flat_;
};

/// Canonical unordered edge between two states (a < b).
struct Edge {
    StateId a = 0;
    StateId b = 0;
    double length = 0.0;

    static Edge make(StateId u, StateId v, double length);
    [[nodiscard]] std::uint64_t key() const noexcept {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }
};

[[nodiscard]] inline std::uint64_t edge_key(StateId u, StateId v) noexcept {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

struct ValidationStatus {
    enum class Kind : std::uint8_t { Unknown, SparseValid, Valid, Invalid };

    Kind kind = Kind::Unknown;
    // Number of full-resolution grid points certified; only for SparseValid.
    Effort certified = 0;

    static ValidationStatus unknown() { return {}; }
    static ValidationStatus sparse_valid(Effort k) { return {Kind::SparseValid, k}; }
    static ValidationStatus valid() { return {Kind::Valid, 0}; }
    static ValidationStatus invalid() { return {Kind::Invalid, 0}; }

    [[nodiscard]] bool is_valid() const noexcept { return kind == Kind::Valid; }
    [[nodiscard]] bool is_invalid() const noexcept { return kind == Kind::Invalid; }

    friend bool operator==(const ValidationStatus&, const ValidationStatus&) = default;
};

struct CheckOutcome {
    ValidationStatus status;
    Effort checks_performed = 0;
};

[[nodiscard]] bool is_state_valid(std::span<const double> x, const Scenario& s);

[[nodiscard]] double edge_cost(std::span<const double> a, std::span<const double> b);

/// ceil(length / spacing) + 1: the number of evenly spaced check points,
/// endpoints included, needed so that no gap exceeds `spacing`.
[[nodiscard]] Effort grid_point_count(double length, double spacing);

/// Indices into a grid of `grid` points picked by an evenly spaced layout of
/// `count` points. Increasing and distinct for count <= grid.
[[nodiscard]] std::vector<Effort> layout_indices(Effort grid, Effort count);

[[nodiscard]] CheckOutcome check_edge_full(std::span<const double> a, std::span<const double> b,
                                           const Scenario& s, ValidationStatus already_checked);

[[nodiscard]] CheckOutcome check_edge_sparse(std::span<const double> a, std::span<const double> b,
                                             const Scenario& s, ValidationStatus status,
                                             int sparse_factor);

/// Remaining full-resolution check points for an edge of `length`.
/// Throws ContractViolation for Invalid edges.
[[nodiscard]] Effort edge_effort_estimate(double length, ValidationStatus status, double resolution);

}  // namespace eirm
