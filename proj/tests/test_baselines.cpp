#include <doctest.h>

#include <cmath>

#include "eirm/baselines.hpp"
#include "oracles.hpp"

using namespace eirm;

namespace {

using V = std::vector<double>;

Scenario open_square() { return Scenario({{0, 1}, {0, 1}}, {}, 0.001); }

Scenario wall_with_gap() {
    return Scenario({{0, 1}, {0, 1}}, {{{0.45, 0.55}, {0, 0.45}}, {{0.45, 0.55}, {0.55, 1}}}, 0.001);
}

Scenario enclosure() {
    return Scenario({{0, 1}, {0, 1}},
                    {{{0.2, 0.3}, {0.2, 0.8}}, {{0.7, 0.8}, {0.2, 0.8}}, {{0.2, 0.8}, {0.2, 0.3}}, {{0.2, 0.8}, {0.7, 0.8}}},
                    0.002);
}

Query query(V s, V g, Budget b) { return {std::move(s), {std::move(g)}, b}; }

void audit_path(const PlanResult& res, const Query& q, const Scenario& s) {
    std::vector<oracle::Rect> rects;
    for (const auto& box : s.obstacles()) {
        oracle::Rect r;
        for (const auto& iv : box) {
            r.lo.push_back(iv.lo);
            r.hi.push_back(iv.hi);
        }
        rects.push_back(r);
    }
    REQUIRE(res.solved());
    REQUIRE(res.path.size() >= 2);
    CHECK(res.path.front() == q.start);
    CHECK(res.path.back() == q.goals.front());
    double cost = 0;
    for (std::size_t i = 0; i + 1 < res.path.size(); ++i) {
        CHECK(oracle::segment_free_bruteforce(res.path[i], res.path[i + 1], rects, s.resolution()));
        cost += oracle::dist(res.path[i], res.path[i + 1]);
    }
    CHECK(res.c_final == doctest::Approx(cost).epsilon(1e-12));
    CHECK(res.c_final >= oracle::dist(q.start, q.goals.front()) - 1e-12);
}

}  // namespace

TEST_CASE("default steer lengths") {
    CHECK(default_max_edge_length(2) == 0.3);
    CHECK(default_max_edge_length(4) == 0.5);
    CHECK(default_max_edge_length(8) == 1.25);
    BaselineConfig bad;
    bad.max_edge_length = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = {};
    bad.goal_bias = 1.5;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("rrt-connect solves open and walled scenarios") {
    for (const auto& s : {open_square(), wall_with_gap()}) {
        RrtConnect rrt(s, {});
        const auto q = query({0.1, 0.1}, {0.9, 0.9}, Budget::in_iterations(20000));
        const auto res = rrt.plan_query(q);
        audit_path(res, q, s);
        CHECK(res.c_init == res.c_final);
        CHECK(res.sparse_checks == 0);
        CHECK(res.full_checks > 0);
    }
}

TEST_CASE("rrt-connect is deterministic per seed") {
    const auto s = wall_with_gap();
    const auto q = query({0.1, 0.1}, {0.9, 0.9}, Budget::in_iterations(20000));
    BaselineConfig c;
    c.seed = 9;
    RrtConnect a(s, c), b(s, c);
    const auto ra = a.plan_query(q);
    const auto rb = b.plan_query(q);
    CHECK(ra.path == rb.path);
    CHECK(ra.full_checks == rb.full_checks);
}

TEST_CASE("baselines report enclosed starts as unsolved") {
    const auto s = enclosure();
    const auto q = query({0.5, 0.5}, {0.05, 0.05}, Budget::in_iterations(3000));
    RrtConnect rrt(s, {});
    const auto r1 = rrt.plan_query(q);
    CHECK_FALSE(r1.solved());
    CHECK(std::isinf(r1.c_final));
    LazyPrmStar prm(s, {});
    const auto r2 = prm.plan_query(query(q.start, q.goals.front(), Budget::in_iterations(40)));
    CHECK_FALSE(r2.solved());
    CHECK(std::isinf(r2.t_init));
}

TEST_CASE("baselines reject invalid queries") {
    const auto s = wall_with_gap();
    RrtConnect rrt(s, {});
    LazyPrmStar prm(s, {});
    const auto bad = query({0.5, 0.2}, {0.9, 0.9}, Budget::in_iterations(10));
    CHECK_THROWS_AS(rrt.plan_query(bad), InputError);
    CHECK_THROWS_AS(prm.plan_query(bad), InputError);
}

TEST_CASE("lazy prm* improves and keeps its roadmap") {
    const auto s = wall_with_gap();
    LazyPrmStar prm(s, {});
    std::size_t last = 0;
    const std::vector<Query> qs{query({0.1, 0.1}, {0.9, 0.9}, Budget::in_iterations(60)),
                                query({0.1, 0.9}, {0.9, 0.1}, Budget::in_iterations(60)),
                                query({0.3, 0.5}, {0.7, 0.5}, Budget::in_iterations(60))};
    for (const auto& q : qs) {
        const auto res = prm.plan_query(q);
        audit_path(res, q, s);
        CHECK(res.c_final <= res.c_init);
        for (std::size_t i = 1; i < res.solution_costs.size(); ++i) {
            CHECK(res.solution_costs[i] <= res.solution_costs[i - 1]);
        }
        CHECK(prm.roadmap_size() >= last);
        last = prm.roadmap_size();
    }
}

TEST_CASE("lazy prm* initial_only stops at first solution") {
    BaselineConfig c;
    c.initial_only = true;
    const auto s = open_square();
    LazyPrmStar prm(s, c);
    const auto res = prm.plan_query(query({0.1, 0.1}, {0.9, 0.9}, Budget::in_iterations(1000)));
    REQUIRE(res.solved());
    CHECK(res.c_final == res.c_init);
}
