#include <doctest.h>

#include <random>

#include "eirm/approximation.hpp"
#include "oracles.hpp"

using namespace eirm;

namespace {

Scenario empty_square(double r = 5e-6) { return Scenario({{-0.5, 0.5}, {-0.5, 0.5}}, {}, r); }

std::vector<double> pt(double x, double y) { return {x, y}; }

}  // namespace

TEST_CASE("knn count formula") {
    CHECK(knn_count(102, 2, 1.001) == 19);
    CHECK(knn_count(1000, 8, 1.001) == 22);
    CHECK(knn_count(2, 2, 1.001) >= 1);
    CHECK(knn_count(1, 2, 1.001) == 1);
    for (std::size_t v = 2; v < 5000; v += 37) {
        for (std::size_t n : {2u, 4u, 8u}) CHECK(knn_count(v, n, 1.001) == oracle::knn_k(v, n, 1.001));
    }
}

TEST_CASE("batch config validation") {
    BatchConfig c;
    c.samples_per_batch = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = {};
    c.prune_threshold = -1;
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("rewind builds start, goals, keep buffer, and the replayed first batch") {
    const Scenario s = empty_square();
    Approximation a(s, {}, 5);
    const StateId start = a.intern(pt(-0.4, 0));
    const StateId goal = a.intern(pt(0.4, 0));
    a.rewind_for_query(start, {goal});
    CHECK(a.active_count() == 102);
    CHECK(a.cursor() == 100);
    const std::vector<StateId> first(a.buffer().begin(), a.buffer().begin() + 100);
    std::vector<std::vector<double>> first_coords;
    for (StateId id : first) first_coords.emplace_back(a.coords(id).begin(), a.coords(id).end());

    // grow the buffer and come back: the same 100 states are replayed
    a.add_vertices(a.refine_approximation(kInfCost, 100).states);
    CHECK(a.buffer().size() == 200);
    const StateId s2 = a.intern(pt(-0.3, 0.1));
    const StateId g2 = a.intern(pt(0.3, 0.1));
    a.rewind_for_query(s2, {g2});
    CHECK(a.active_count() == 102);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto c = a.coords(a.id_of(static_cast<Approximation::Local>(i + 2)));
        CHECK(std::vector<double>(c.begin(), c.end()) == first_coords[i]);
    }

    // a second session with the same seed produces the same buffer
    Approximation b(s, {}, 5);
    b.rewind_for_query(b.intern(pt(0, 0.2)), {b.intern(pt(0, -0.2))});
    for (std::size_t i = 0; i < 100; ++i) {
        const auto c = b.coords(b.buffer()[i]);
        CHECK(std::vector<double>(c.begin(), c.end()) == first_coords[i]);
    }
}

TEST_CASE("rewind with keep buffer") {
    const Scenario s = empty_square();
    BatchConfig cfg;
    cfg.prune_threshold = 0;  // keep everything
    Approximation a(s, cfg, 9);
    for (int q = 0; q < 3; ++q) {
        const StateId st = a.intern(pt(-0.4, 0.1 * q));
        const StateId g = a.intern(pt(0.4, 0.1 * q));
        a.rewind_for_query(st, {g});
        a.finish_query_prune(st, {g});
    }
    CHECK(a.keep_buffer().size() == 6);
    const StateId st = a.intern(pt(-0.2, 0.3));
    const StateId g = a.intern(pt(0.2, 0.3));
    a.rewind_for_query(st, {g});
    CHECK(a.active_count() == 108);
}

TEST_CASE("rewind rejects states in collision") {
    const Scenario s({{0, 1}, {0, 1}}, {{{0.4, 0.6}, {0.4, 0.6}}}, 0.01);
    Approximation a(s, {}, 1);
    const StateId bad = a.intern(pt(0.5, 0.5));
    const StateId ok = a.intern(pt(0.1, 0.1));
    CHECK_THROWS_AS(a.rewind_for_query(bad, {ok}), InputError);
    CHECK_THROWS_AS(a.rewind_for_query(ok, {bad}), InputError);
    CHECK_THROWS_AS(a.rewind_for_query(ok, {}), InputError);
}

TEST_CASE("refine replays the buffer verbatim") {
    const Scenario s = empty_square();
    Approximation a(s, {}, 2);
    a.rewind_for_query(a.intern(pt(-0.4, 0)), {a.intern(pt(0.4, 0))});
    a.refine_approximation(kInfCost, 100);
    a.refine_approximation(kInfCost, 50);
    REQUIRE(a.buffer().size() == 250);
    const std::vector<StateId> buffer = a.buffer();
    a.rewind_for_query(a.intern(pt(-0.4, 0)), {a.intern(pt(0.4, 0))});
    const auto r = a.refine_approximation(kInfCost, 100);
    CHECK(a.buffer().size() == 250);
    CHECK(r.states == std::vector<StateId>(buffer.begin() + 100, buffer.begin() + 200));
    CHECK(a.cursor() == 200);
    CHECK_THROWS_AS(a.refine_approximation(kInfCost, 0), ContractViolation);
}

TEST_CASE("informed refinement stays inside the ellipse") {
    const Scenario s({{-10, 10}, {-10, 10}}, {}, 0.01);
    Approximation a(s, {}, 4);
    const std::vector<double> st = pt(-4.95, 0), g = pt(4.95, 0);
    a.rewind_for_query(a.intern(st), {a.intern(g)});
    const auto r = a.refine_approximation(10.0, 20);
    for (StateId id : r.states) {
        const auto c = a.coords(id);
        const std::vector<double> x(c.begin(), c.end());
        CHECK(oracle::dist(x, st) + oracle::dist(x, g) < 10.0);
    }
    // the ellipse is a small fraction of the square: the inspection cap trips
    // before many samples are found or every one is accepted
    CHECK(r.inspected >= r.states.size());
}

TEST_CASE("expand: k nearest, validated partners, invalid filter") {
    const Scenario s({{0, 10}, {0, 10}}, {}, 0.01);
    BatchConfig cfg;
    cfg.samples_per_batch = 200;
    Approximation a(s, cfg, 1);
    const StateId x = a.intern(pt(5, 5));
    const StateId far = a.intern(pt(9, 9));
    a.rewind_for_query(x, {far});
    REQUIRE(a.active_count() == 202);
    CHECK(a.knn_count() == oracle::knn_k(202, 2, 1.001));

    std::vector<oracle::Point> pts;
    for (StateId id : a.active()) pts.emplace_back(a.coords(id).begin(), a.coords(id).end());
    const auto g = oracle::knn_graph(pts, oracle::knn_k(202, 2, 1.001));
    std::vector<StateId> want;
    for (auto [j, w] : g.adj[0]) want.push_back(a.active()[j]);
    auto got = a.expand(x);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    CHECK(got == want);

    const StateId near = want.front();
    a.record_edge_status(x, near, ValidationStatus::invalid());
    const auto after = a.expand(x);
    CHECK(after.size() == want.size() - 1);
    CHECK(std::find(after.begin(), after.end(), near) == after.end());
    const auto from_near = a.expand(near);
    CHECK(std::find(from_near.begin(), from_near.end(), x) == from_near.end());
    CHECK_THROWS_AS((void)a.expand(a.intern(pt(1, 2))), ContractViolation);
}

TEST_CASE("validated partners are offered regardless of distance") {
    const Scenario s({{0, 100}, {0, 100}}, {}, 0.01);
    BatchConfig cfg;
    cfg.samples_per_batch = 200;
    Approximation a(s, cfg, 8);
    const StateId x = a.intern(pt(1, 1));
    const StateId y = a.intern(pt(99, 99));
    a.rewind_for_query(x, {y});
    auto plain = a.expand(x);
    REQUIRE(std::find(plain.begin(), plain.end(), y) == plain.end());
    a.record_edge_status(x, y, ValidationStatus::valid());
    auto with = a.expand(x);
    CHECK(std::find(with.begin(), with.end(), y) != with.end());
    CHECK(std::find(with.begin(), with.end(), x) == with.end());
    // inactive partners are not offered
    Approximation b(s, cfg, 8);
    b.record_edge_status(b.intern(pt(1, 1)), b.intern(pt(50, 50)), ValidationStatus::valid());
    b.rewind_for_query(b.intern(pt(1, 1)), {b.intern(pt(99, 99))});
    const auto only_active = b.expand(b.intern(pt(1, 1)));
    CHECK(std::find(only_active.begin(), only_active.end(), b.intern(pt(50, 50))) == only_active.end());
}

TEST_CASE("registry merges and consistency faults") {
    const Scenario s = empty_square();
    Approximation a(s, {}, 1);
    const StateId u = a.intern(pt(0, 0)), v = a.intern(pt(0.1, 0)), w = a.intern(pt(0.2, 0));
    a.record_edge_status(u, v, ValidationStatus::sparse_valid(2));
    a.record_edge_status(v, u, ValidationStatus::sparse_valid(5));
    CHECK(a.edge_status(u, v) == ValidationStatus::sparse_valid(5));
    a.record_edge_status(u, v, ValidationStatus::sparse_valid(3));
    CHECK(a.edge_status(u, v) == ValidationStatus::sparse_valid(5));
    a.record_edge_status(u, v, ValidationStatus::valid());
    CHECK(edge_effort_estimate(0.1, a.edge_status(v, u), s.resolution()) == 0);
    a.record_edge_status(u, v, ValidationStatus::sparse_valid(9));
    CHECK(a.edge_status(u, v).is_valid());
    CHECK_THROWS_AS(a.record_edge_status(u, v, ValidationStatus::invalid()), ConsistencyFault);
    a.record_edge_status(u, w, ValidationStatus::invalid());
    CHECK_THROWS_AS(a.record_edge_status(w, u, ValidationStatus::valid()), ConsistencyFault);
    CHECK(a.registry().valid_count() == 1);
    CHECK(a.registry().invalid_count() == 1);
}

TEST_CASE("prune arithmetic") {
    CHECK(grid_point_count(0.0001, 5e-6) == 21);
    CHECK(grid_point_count(0.5, 5e-6) == 100001);

    const Scenario s({{-2, 2}, {-2, 2}}, {}, 5e-6);
    BatchConfig cfg;
    cfg.samples_per_batch = 1;
    Approximation b(s, cfg, 3);
    const StateId g = b.intern(pt(1.5, 1.5));
    const StateId x = b.intern(pt(0, 0));
    b.rewind_for_query(x, {g});
    // the random first-batch sample sits somewhere in the box; a neighbour
    // 0.0001 from the start and one 0.5 from the goal pin the distances
    b.add_vertices({b.intern(pt(0.0001, 0)), b.intern(pt(1.5, 1.0))});
    const auto kept = b.finish_query_prune(x, {g});
    REQUIRE(kept.size() == 1);
    CHECK(kept.front() == g);  // effort 100001 > 50000
    // the same goal again is not duplicated
    b.rewind_for_query(x, {g});
    b.add_vertices({b.intern(pt(0.0001, 0)), b.intern(pt(1.5, 1.0))});
    b.finish_query_prune(x, {g});
    CHECK(b.keep_buffer().size() == 1);
}

TEST_CASE("snapshot round trip") {
    const Scenario s = empty_square();
    Approximation a(s, {}, 6);
    const StateId st = a.intern(pt(-0.4, 0)), g = a.intern(pt(0.4, 0));
    a.rewind_for_query(st, {g});
    a.record_edge_status(a.id_of(2), a.id_of(3), ValidationStatus::valid());
    a.record_edge_status(a.id_of(3), a.id_of(4), ValidationStatus::invalid());
    a.record_edge_status(a.id_of(4), a.id_of(5), ValidationStatus::sparse_valid(7));
    const auto snap = a.snapshot();
    CHECK(snap.contains("buffer"));
    CHECK(snap.contains("valid"));
    CHECK(snap.contains("invalid"));
    CHECK(snap.contains("keep"));

    Approximation b(s, {}, 99);
    b.restore(snap);
    CHECK(b.snapshot() == snap);
    CHECK(b.intern(pt(-0.4, 0)) == st);
    CHECK(b.edge_status(a.id_of(4), a.id_of(5)) == ValidationStatus::sparse_valid(7));
    CHECK_THROWS_AS(b.restore(nlohmann::json{{"buffer", 1}}), InputError);
}

TEST_CASE("symmetric knn graph matches brute force") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    KnnGraph g;
    g.reset(3, 1.001);
    std::vector<oracle::Point> pts;
    for (int batch = 0; batch < 6; ++batch) {
        std::vector<double> flat;
        for (int i = 0; i < 40; ++i) {
            oracle::Point p{u(rng), u(rng), u(rng)};
            flat.insert(flat.end(), p.begin(), p.end());
            pts.push_back(p);
        }
        g.insert(flat);
        const std::size_t k = oracle::knn_k(pts.size(), 3, 1.001);
        CHECK(g.k() == k);
        const auto expected = oracle::knn_graph(pts, k);
        for (std::uint32_t i = 0; i < pts.size(); ++i) {
            std::vector<std::uint32_t> want;
            for (auto [j, w] : expected.adj[i]) want.push_back(static_cast<std::uint32_t>(j));
            std::sort(want.begin(), want.end());
            CHECK(g.adjacent(i) == want);
        }
    }
}
