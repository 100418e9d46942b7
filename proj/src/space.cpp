#include "eirm/space.hpp"

#include <algorithm>
#include <cmath>

namespace eirm {

namespace {

void require_interval(const Interval& iv, const char* what) {
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi)) || !(iv.lo < iv.hi)) {
        throw InputError(std::string(what) + ": every interval needs finite lo < hi");
    }
}

// Walks grid indices [0, grid) in order, skipping those in `skip` (sorted),
// and stops at the first colliding point.
CheckOutcome evaluate_grid(std::span<const double> a, std::span<const double> b, const Scenario& s,
                           Effort grid, const std::vector<Effort>& skip,
                           const std::vector<Effort>* only) {
    const std::size_t n = a.size();
    std::vector<double> point(n);
    Effort performed = 0;
    auto test = [&](Effort i) {
        const double t = grid > 1 ? static_cast<double>(i) / static_cast<double>(grid - 1) : 0.0;
        for (std::size_t d = 0; d < n; ++d) point[d] = a[d] + t * (b[d] - a[d]);
        ++performed;
        return s.collides(point.data());
    };

    if (only != nullptr) {
        auto it = skip.begin();
        for (Effort i : *only) {
            while (it != skip.end() && *it < i) ++it;
            if (it != skip.end() && *it == i) continue;
            if (test(i)) return {ValidationStatus::invalid(), performed};
        }
        return {ValidationStatus::unknown(), performed};
    }

    auto it = skip.begin();
    for (Effort i = 0; i < grid; ++i) {
        if (it != skip.end() && *it == i) {
            ++it;
            continue;
        }
        if (test(i)) return {ValidationStatus::invalid(), performed};
    }
    return {ValidationStatus::valid(), performed};
}

}  // namespace

Scenario::Scenario(Box bounds, std::vector<Box> obstacles, double resolution)
    : bounds_(std::move(bounds)), obstacles_(std::move(obstacles)), resolution_(resolution) {
    if (bounds_.empty()) throw InputError("scenario: dimension must be positive");
    for (const auto& iv : bounds_) require_interval(iv, "scenario bounds");
    if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
        throw InputError("scenario: resolution must be a positive real");
    }
    for (const auto& box : obstacles_) {
        if (box.size() != bounds_.size()) throw InputError("scenario: obstacle dimension mismatch");
        for (std::size_t d = 0; d < box.size(); ++d) {
            require_interval(box[d], "scenario obstacle");
            if (!(std::max(box[d].lo, bounds_[d].lo) < std::min(box[d].hi, bounds_[d].hi))) {
                throw InputError("scenario: obstacle does not intersect the bounds");
            }
        }
        for (const auto& iv : box) {
            flat_.push_back(iv.lo);
            flat_.push_back(iv.hi);
        }
    }
}

bool Scenario::in_bounds(std::span<const double> x) const noexcept {
    if (x.size() != bounds_.size()) return false;
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (x[d] < bounds_[d].lo || x[d] > bounds_[d].hi) return false;
    }
    return true;
}

bool Scenario::collides(const double* x) const noexcept {
    const std::size_t n = bounds_.size();
    const std::size_t stride = 2 * n;
    for (std::size_t o = 0; o < flat_.size(); o += stride) {
        const double* box = flat_.data() + o;
        bool inside = true;
        for (std::size_t d = 0; d < n; ++d) {
            // Faces belong to free space.
            if (!(x[d] > box[2 * d] && x[d] < box[2 * d + 1])) {
                inside = false;
                break;
            }
        }
        if (inside) return true;
    }
    return false;
}

nlohmann::json Scenario::to_json() const {
    auto box_json = [](const Box& box) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& iv : box) out.push_back({iv.lo, iv.hi});
        return out;
    };
    nlohmann::json obstacles = nlohmann::json::array();
    for (const auto& box : obstacles_) obstacles.push_back(box_json(box));
    return {{"dim", dim()},
            {"bounds", box_json(bounds_)},
            {"obstacles", obstacles},
            {"resolution", resolution_}};
}

Scenario Scenario::from_json(const nlohmann::json& j) {
    try {
        auto read_box = [](const nlohmann::json& arr) {
            Box box;
            for (const auto& iv : arr) {
                if (!iv.is_array() || iv.size() != 2) throw InputError("scenario: interval must be [lo, hi]");
                box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
            }
            return box;
        };
        const auto dim = j.at("dim").get<std::size_t>();
        Box bounds = read_box(j.at("bounds"));
        if (bounds.size() != dim) throw InputError("scenario: bounds length differs from dim");
        std::vector<Box> obstacles;
        for (const auto& o : j.at("obstacles")) obstacles.push_back(read_box(o));
        return Scenario(std::move(bounds), std::move(obstacles), j.at("resolution").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario: malformed JSON: ") + e.what());
    }
}

Edge Edge::make(StateId u, StateId v, double length) {
    if (u == v) throw ContractViolation("edge endpoints must differ");
    if (u > v) std::swap(u, v);
    return {u, v, length};
}

bool is_state_valid(std::span<const double> x, const Scenario& s) {
    if (x.size() != s.dim()) throw InputError("state dimension does not match scenario");
    if (!s.in_bounds(x)) return false;
    return !s.collides(x.data());
}

double edge_cost(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("edge_cost: dimension mismatch");
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

Effort grid_point_count(double length, double spacing) {
    if (!(spacing > 0.0)) throw ContractViolation("grid spacing must be positive");
    const double q = length / spacing;
    // Absorb representation noise such as 1.0 / 0.01 == 100.00000000000001.
    const double segments = std::ceil(q * (1.0 - 1e-12));
    return static_cast<Effort>(segments) + 1;
}

std::vector<Effort> layout_indices(Effort grid, Effort count) {
    std::vector<Effort> out;
    count = std::min(count, grid);
    if (count <= 0) return out;
    out.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        out.push_back(0);
        return out;
    }
    const Effort span = grid - 1;
    const Effort steps = count - 1;
    for (Effort j = 0; j < count; ++j) out.push_back((j * span + steps / 2) / steps);
    return out;
}

CheckOutcome check_edge_full(std::span<const double> a, std::span<const double> b, const Scenario& s,
                             ValidationStatus already_checked) {
    if (already_checked.is_valid() || already_checked.is_invalid()) return {already_checked, 0};
    const Effort grid = grid_point_count(edge_cost(a, b), s.resolution());
    std::vector<Effort> skip;
    if (already_checked.kind == ValidationStatus::Kind::SparseValid) {
        skip = layout_indices(grid, already_checked.certified);
    }
    return evaluate_grid(a, b, s, grid, skip, nullptr);
}

CheckOutcome check_edge_sparse(std::span<const double> a, std::span<const double> b, const Scenario& s,
                               ValidationStatus status, int sparse_factor) {
    if (sparse_factor < 1) throw ContractViolation("sparse_factor must be >= 1");
    if (status.is_valid() || status.is_invalid()) return {status, 0};
    const double length = edge_cost(a, b);
    const Effort grid = grid_point_count(length, s.resolution());
    const Effort sparse = std::min(grid, grid_point_count(length, s.resolution() * sparse_factor));
    const Effort already = status.kind == ValidationStatus::Kind::SparseValid ? status.certified : 0;
    if (already >= sparse) return {status, 0};

    const std::vector<Effort> wanted = layout_indices(grid, sparse);
    const std::vector<Effort> skip = layout_indices(grid, already);
    CheckOutcome out = evaluate_grid(a, b, s, grid, skip, &wanted);
    if (out.status.is_invalid()) return out;
    out.status = sparse == grid ? ValidationStatus::valid() : ValidationStatus::sparse_valid(sparse);
    return out;
}

Effort edge_effort_estimate(double length, ValidationStatus status, double resolution) {
    if (!(resolution > 0.0)) throw ContractViolation("resolution must be positive");
    switch (status.kind) {
        case ValidationStatus::Kind::Valid:
            return 0;
        case ValidationStatus::Kind::Invalid:
            throw ContractViolation("effort queried for an invalid edge");
        case ValidationStatus::Kind::SparseValid:
            return std::max<Effort>(0, grid_point_count(length, resolution) - status.certified);
        case ValidationStatus::Kind::Unknown:
            break;
    }
    return grid_point_count(length, resolution);
}

}  // namespace eirm
