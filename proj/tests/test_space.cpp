#include <doctest.h>

#include <random>

#include "eirm/space.hpp"
#include "oracles.hpp"

using namespace eirm;

namespace {

Scenario unit_square_with(std::vector<Box> obstacles, double r = 0.01) {
    return Scenario({{-5, 5}, {-5, 5}}, std::move(obstacles), r);
}

std::vector<oracle::Rect> rects(const Scenario& s) {
    std::vector<oracle::Rect> out;
    for (const auto& box : s.obstacles()) {
        oracle::Rect r;
        for (const auto& iv : box) {
            r.lo.push_back(iv.lo);
            r.hi.push_back(iv.hi);
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("state validity uses the closure of free space") {
    const Scenario s = unit_square_with({{{1, 2}, {1, 2}}});
    CHECK(is_state_valid(std::vector<double>{0, 0}, s));
    CHECK_FALSE(is_state_valid(std::vector<double>{1.5, 1.5}, s));
    CHECK(is_state_valid(std::vector<double>{1, 1}, s));
    CHECK_FALSE(is_state_valid(std::vector<double>{6, 0}, s));
    CHECK_THROWS_AS((void)is_state_valid(std::vector<double>{0, 0, 0}, s), InputError);
}

TEST_CASE("scenario construction rejects malformed input") {
    CHECK_THROWS_AS(Scenario({}, {}, 0.1), InputError);
    CHECK_THROWS_AS(Scenario({{1, 0}}, {}, 0.1), InputError);
    CHECK_THROWS_AS(Scenario({{0, 1}}, {}, 0.0), InputError);
    CHECK_THROWS_AS(Scenario({{0, 1}}, {{{2, 3}}}, 0.1), InputError);
    CHECK_THROWS_AS(Scenario({{0, 1}}, {{{0.2, 0.3}, {0, 1}}}, 0.1), InputError);
}

TEST_CASE("scenario JSON round trip") {
    const Scenario s = unit_square_with({{{1, 2}, {1, 2}}, {{-3, -1}, {0, 4}}}, 0.05);
    const Scenario t = Scenario::from_json(s.to_json());
    CHECK(t.to_json() == s.to_json());
    CHECK_THROWS_AS(Scenario::from_json(nlohmann::json{{"dim", 2}}), InputError);
}

TEST_CASE("edge cost") {
    using V = std::vector<double>;
    CHECK(edge_cost(V{0, 0}, V{3, 4}) == doctest::Approx(5.0));
    CHECK(edge_cost(V{1, 1}, V{1, 1}) == 0.0);
    CHECK(edge_cost(V{0, 0, 0, 0}, V{1, 1, 1, 1}) == doctest::Approx(2.0));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
        V a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
        CHECK(edge_cost(a, c) <= edge_cost(a, b) + edge_cost(b, c) + 1e-15);
        CHECK(edge_cost(a, b) == edge_cost(b, a));
    }
}

TEST_CASE("edge canonical form") {
    const Edge e = Edge::make(7, 3, 1.0);
    CHECK(e.a == 3);
    CHECK(e.b == 7);
    CHECK(e.key() == edge_key(7, 3));
    CHECK_THROWS_AS((void)Edge::make(4, 4, 0.0), ContractViolation);
}

TEST_CASE("full check on a clear unit segment") {
    const Scenario s = unit_square_with({});
    const auto out = check_edge_full(std::vector<double>{0, 0}, std::vector<double>{1, 0}, s, ValidationStatus::unknown());
    CHECK(out.status.is_valid());
    CHECK(out.checks_performed == 101);
    const auto again = check_edge_full(std::vector<double>{0, 0}, std::vector<double>{1, 0}, s, ValidationStatus::valid());
    CHECK(again.status.is_valid());
    CHECK(again.checks_performed == 0);
}

TEST_CASE("full check stops at the first collision") {
    const Scenario s = unit_square_with({{{0.5, 0.6}, {-1, 1}}});
    const auto out = check_edge_full(std::vector<double>{0, 0}, std::vector<double>{1, 0}, s, ValidationStatus::unknown());
    CHECK(out.status.is_invalid());
    CHECK(out.checks_performed == 52);  // points 0..51, 0.51 is inside
}

TEST_CASE("sparse check") {
    const Scenario s = unit_square_with({});
    using V = std::vector<double>;
    const auto out = check_edge_sparse(V{0, 0}, V{1, 0}, s, ValidationStatus::unknown(), 100);
    CHECK(out.status == ValidationStatus::sparse_valid(2));
    CHECK(out.checks_performed == 2);

    const Scenario blocked = unit_square_with({{{0.45, 0.55}, {-1, 1}}});
    // sparse factor 50: ceil(1 / 0.5) + 1 = 3 points, the midpoint collides
    const auto hit = check_edge_sparse(V{0, 0}, V{1, 0}, blocked, ValidationStatus::unknown(), 50);
    CHECK(hit.status.is_invalid());
    CHECK(hit.checks_performed <= 3);

    const auto done = check_edge_sparse(V{0, 0}, V{1, 0}, s, ValidationStatus::valid(), 100);
    CHECK(done.status.is_valid());
    CHECK(done.checks_performed == 0);

    // sparse_factor 1 covers the full grid
    const auto full = check_edge_sparse(V{0, 0}, V{1, 0}, s, ValidationStatus::unknown(), 1);
    CHECK(full.status.is_valid());
    CHECK(full.checks_performed == 101);
    CHECK_THROWS_AS((void)check_edge_sparse(V{0, 0}, V{1, 0}, s, ValidationStatus::unknown(), 0), ContractViolation);
}

TEST_CASE("effort estimate") {
    CHECK(edge_effort_estimate(1.0, ValidationStatus::unknown(), 0.01) == 101);
    CHECK(edge_effort_estimate(1.0, ValidationStatus::valid(), 0.01) == 0);
    CHECK(edge_effort_estimate(1.0, ValidationStatus::sparse_valid(2), 0.01) == 99);
    CHECK_THROWS_AS((void)edge_effort_estimate(1.0, ValidationStatus::invalid(), 0.01), ContractViolation);

    // Brute-force enumeration: certified points are a subset of the grid.
    for (Effort k = 0; k <= 101; ++k) {
        const auto certified = layout_indices(101, k);
        std::vector<char> seen(101, 0);
        for (Effort i : certified) seen[static_cast<std::size_t>(i)] = 1;
        const Effort remaining = 101 - std::count(seen.begin(), seen.end(), 1);
        const auto status = k == 0 ? ValidationStatus::unknown() : ValidationStatus::sparse_valid(k);
        CHECK(edge_effort_estimate(1.0, status, 0.01) == remaining);
    }
    // non-increasing in certified count
    for (Effort k = 1; k < 101; ++k) {
        CHECK(edge_effort_estimate(1.0, ValidationStatus::sparse_valid(k + 1), 0.01) <=
              edge_effort_estimate(1.0, ValidationStatus::sparse_valid(k), 0.01));
    }
}

TEST_CASE("layout indices are distinct, sorted, and include both ends") {
    for (Effort n : {2, 3, 10, 101, 997}) {
        for (Effort k = 2; k <= std::min<Effort>(n, 60); ++k) {
            const auto idx = layout_indices(n, k);
            REQUIRE(static_cast<Effort>(idx.size()) == k);
            CHECK(idx.front() == 0);
            CHECK(idx.back() == n - 1);
            CHECK(std::adjacent_find(idx.begin(), idx.end(), [](Effort a, Effort b) { return a >= b; }) == idx.end());
        }
    }
}

TEST_CASE("grid count matches the independent oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> len(0.0, 3.0);
    for (int i = 0; i < 20000; ++i) {
        const double l = len(rng);
        const double r = std::pow(10.0, -1.0 - (i % 4));
        CHECK(grid_point_count(l, r) == oracle::grid_points(l, r));
    }
    CHECK(grid_point_count(1.0, 0.01) == 101);
    CHECK(grid_point_count(0.0, 0.01) == 1);
}

TEST_CASE("full, sparse, and incremental checks agree with brute force on random micro-scenarios") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int invalid_seen = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t dim = 2 + trial % 3;
        Box bounds(dim, Interval{0, 1});
        std::vector<Box> obstacles;
        for (int o = 0; o < 3; ++o) {
            Box b;
            for (std::size_t d = 0; d < dim; ++d) {
                const double c = u(rng), w = 0.05 + 0.2 * u(rng);
                b.push_back({std::max(0.0, c - w), std::min(1.0, c + w)});
            }
            obstacles.push_back(b);
        }
        const Scenario s(bounds, obstacles, 0.002);
        std::vector<double> a(dim), b(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            a[d] = u(rng);
            b[d] = u(rng);
        }
        const bool expected = oracle::segment_free_bruteforce(a, b, rects(s), 0.002);
        const Effort grid = oracle::grid_points(oracle::dist(a, b), 0.002);

        const auto full = check_edge_full(a, b, s, ValidationStatus::unknown());
        CHECK(full.status.is_valid() == expected);
        CHECK(full.checks_performed <= grid);

        // sparse then full: combined work never exceeds the grid
        const auto sparse = check_edge_sparse(a, b, s, ValidationStatus::unknown(), 7);
        if (sparse.status.is_invalid()) {
            CHECK_FALSE(expected);
            ++invalid_seen;
            continue;
        }
        const auto rest = check_edge_full(a, b, s, sparse.status);
        CHECK(rest.status.is_valid() == expected);
        CHECK(sparse.checks_performed + rest.checks_performed <= grid);
        if (expected) CHECK(sparse.checks_performed + rest.checks_performed == grid);
    }
    CHECK(invalid_seen > 0);
}
