#include "eirm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "eirm/baselines.hpp"

#ifndef EIRM_VERSION
#define EIRM_VERSION "unknown"
#endif

namespace eirm::bench {

namespace {

// Extra axes are extruded past the bounds, so only faces inside the
// bounds are ever reachable.
constexpr double kOverhang = 0.1;

Box extrude(Interval x, Interval y, std::size_t dim, const Box& bounds) {
    Box box{x, y};
    for (std::size_t d = 2; d < dim; ++d) box.push_back({bounds[d].lo - 1.0, bounds[d].hi + 1.0});
    return box;
}

Box region(Interval x, Interval y, std::size_t dim, const Box& bounds) {
    Box box{x, y};
    for (std::size_t d = 2; d < dim; ++d) box.push_back(bounds[d]);
    return box;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<double> sample_box(const Box& box, std::mt19937_64& rng) {
    std::vector<double> x(box.size());
    for (std::size_t d = 0; d < box.size(); ++d) {
        std::uniform_real_distribution<double> dist(box[d].lo, box[d].hi);
        x[d] = dist(rng);
    }
    return x;
}

std::vector<double> sample_free(const Box& box, const Scenario& s, std::mt19937_64& rng) {
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        auto x = sample_box(box, rng);
        if (is_state_valid(x, s)) return x;
    }
    throw SamplerStarvation("query generation: no free state in the sampling region");
}

nlohmann::json box_json(const Box& box) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& iv : box) out.push_back({iv.lo, iv.hi});
    return out;
}

nlohmann::json number_json(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

unsigned thread_count(unsigned requested, std::size_t jobs) {
    unsigned n = requested;
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("BENCH_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) n = static_cast<unsigned>(v);
        }
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

}  // namespace

nlohmann::json ScenarioDef::to_json() const {
    nlohmann::json j = scenario.to_json();
    j["name"] = name;
    j["start_box"] = box_json(start_box);
    j["goal_box"] = box_json(goal_box);
    return j;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"wall_gap", "repeating_rectangles"};
    return names;
}

ScenarioDef build_scenario(const std::string& name, std::size_t dim) {
    if (dim != 2 && dim != 4 && dim != 8) throw UsageError("unsupported dimension: " + std::to_string(dim));
    const Box bounds(dim, Interval{-0.5, 0.5});
    std::vector<Box> obstacles;
    Box start_box, goal_box;
    if (name == "wall_gap") {
        // One wall across the middle with a gap of 0.04 on the second axis.
        obstacles.push_back(extrude({-0.1, 0.1}, {-0.5 - kOverhang, 0.08}, dim, bounds));
        obstacles.push_back(extrude({-0.1, 0.1}, {0.12, 0.5 + kOverhang}, dim, bounds));
        start_box = region({-0.45, -0.15}, {-0.4, 0.4}, dim, bounds);
        goal_box = region({0.15, 0.45}, {-0.4, 0.4}, dim, bounds);
    } else if (name == "repeating_rectangles") {
        for (Interval x : {Interval{-0.3, -0.05}, Interval{0.05, 0.3}}) {
            for (Interval y : {Interval{-0.4, -0.05}, Interval{0.05, 0.4}}) {
                obstacles.push_back(extrude(x, y, dim, bounds));
            }
        }
        start_box = region({-0.48, -0.35}, {-0.3, 0.3}, dim, bounds);
        goal_box = region({0.35, 0.48}, {-0.3, 0.3}, dim, bounds);
    } else {
        throw UsageError("unknown scenario: " + name);
    }
    ScenarioDef def{name, Scenario(bounds, std::move(obstacles), 5e-6), start_box, goal_box};
    if (!box_is_free(def.start_box, def.scenario) || !box_is_free(def.goal_box, def.scenario)) {
        throw ConsistencyFault("scenario " + name + ": query region overlaps an obstacle");
    }
    return def;
}

bool box_is_free(const Box& box, const Scenario& s) {
    for (const auto& obstacle : s.obstacles()) {
        bool overlap = true;
        for (std::size_t d = 0; d < box.size(); ++d) {
            if (!(box[d].lo < obstacle[d].hi && obstacle[d].lo < box[d].hi)) {
                overlap = false;
                break;
            }
        }
        if (overlap) return false;
    }
    return true;
}

QueryMode parse_mode(const std::string& s) {
    if (s == "subregion") return QueryMode::Subregion;
    if (s == "global") return QueryMode::Global;
    throw UsageError("unknown query mode: " + s);
}

std::string to_string(QueryMode m) { return m == QueryMode::Subregion ? "subregion" : "global"; }

std::vector<Query> generate_queries(const ScenarioDef& def, QueryMode mode, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw UsageError("need at least one query");
    std::mt19937_64 rng(splitmix64(seed ^ fnv1a("queries")));
    const Box& all = def.scenario.bounds();
    std::vector<Query> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Query q;
        if (mode == QueryMode::Subregion) {
            q.start = sample_free(def.start_box, def.scenario, rng);
            q.goals.push_back(sample_free(def.goal_box, def.scenario, rng));
        } else {
            q.start = sample_free(all, def.scenario, rng);
            q.goals.push_back(sample_free(all, def.scenario, rng));
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::string query_sequence_hash(const std::vector<Query>& queries) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& q : queries) {
        h = fnv1a(format_number(static_cast<double>(q.start.size())), h);
        for (double v : q.start) h = fnv1a(format_number(v) + ",", h);
        for (const auto& g : q.goals) {
            h = fnv1a(";", h);
            for (double v : g) h = fnv1a(format_number(v) + ",", h);
        }
        h = fnv1a("|", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double default_budget_seconds(std::size_t dim) { return dim <= 2 ? 0.5 : 2.0; }

void BenchmarkSpec::validate() const {
    if (std::find(scenario_names().begin(), scenario_names().end(), scenario) == scenario_names().end()) {
        throw UsageError("unknown scenario: " + scenario);
    }
    if (dim != 2 && dim != 4 && dim != 8) throw UsageError("dim must be 2, 4, or 8");
    if (n_queries < 1) throw UsageError("queries must be >= 1");
    if (n_runs < 1) throw UsageError("runs must be >= 1");
    try {
        budget.validate();
    } catch (const InputError& e) {
        throw UsageError(e.what());
    }
    if (planners.empty()) throw UsageError("at least one planner is required");
    for (const auto& p : planners) {
        if (std::find(planner_names().begin(), planner_names().end(), p) == planner_names().end()) {
            throw UsageError("unknown planner: " + p);
        }
    }
    std::vector<std::string> sorted = planners;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw UsageError("duplicate planner");
}

nlohmann::json BenchmarkSpec::to_json() const {
    nlohmann::json b;
    if (budget.kind == Budget::Kind::Seconds) {
        b = {{"kind", "seconds"}, {"value", budget.seconds}};
    } else {
        b = {{"kind", "iterations"}, {"value", budget.iterations}};
    }
    return {{"scenario", scenario}, {"dim", dim},
            {"mode", to_string(mode)}, {"queries", n_queries},
            {"runs", n_runs}, {"budget", b},
            {"planners", planners}, {"master_seed", master_seed},
            {"initial_only", initial_only}};
}

const std::vector<std::string>& planner_names() {
    static const std::vector<std::string> names{"eirm", "eit_like", "lazyprmstar", "rrtconnect"};
    return names;
}

std::unique_ptr<QueryPlanner> make_planner(const std::string& name, const Scenario& scenario, std::uint64_t seed,
                                           bool initial_only) {
    if (name == "eirm" || name == "eit_like") {
        PlannerConfig c = configure(name);
        c.seed = seed;
        c.initial_only = initial_only;
        return create_session(scenario, c);
    }
    BaselineConfig c;
    c.seed = seed;
    c.max_edge_length = default_max_edge_length(scenario.dim());
    c.initial_only = initial_only;
    if (name == "lazyprmstar") return std::make_unique<LazyPrmStar>(scenario, c);
    if (name == "rrtconnect") return std::make_unique<RrtConnect>(scenario, c);
    throw UsageError("unknown planner: " + name);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& planner, std::uint64_t run) noexcept {
    return splitmix64(splitmix64(master ^ fnv1a(planner)) + run);
}

ResultsTable run_benchmark(const BenchmarkSpec& spec, const ResultHook& hook) {
    spec.validate();
    const ScenarioDef def = build_scenario(spec.scenario, spec.dim);
    std::vector<Query> queries = generate_queries(def, spec.mode, spec.n_queries, spec.master_seed);
    for (auto& q : queries) q.budget = spec.budget;

    ResultsTable table;
    table.query_hash = query_sequence_hash(queries);
    const std::size_t jobs = spec.planners.size() * spec.n_runs;
    table.rows.resize(jobs * spec.n_queries);

    std::atomic<std::size_t> next{0};
    std::mutex hook_mutex;
    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::string& name = spec.planners[job / spec.n_runs];
            const std::size_t run = job % spec.n_runs;
            std::unique_ptr<QueryPlanner> planner;
            std::string setup_error;
            try {
                planner = make_planner(name, def.scenario, derive_seed(spec.master_seed, name, run), spec.initial_only);
            } catch (const std::exception& e) {
                setup_error = e.what();
            }
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                Row& row = table.rows[job * spec.n_queries + qi];
                row.planner = name;
                row.run = run;
                row.query = qi;
                PlanResult r;
                if (planner) {
                    try {
                        r = planner->plan_query(queries[qi]);
                    } catch (const std::exception& e) {
                        row.failed = true;
                        r.diagnostic = e.what();
                    }
                } else {
                    row.failed = true;
                    r.diagnostic = setup_error;
                }
                row.solved = r.solved();
                if (row.solved) {
                    row.t_init = r.t_init;
                    row.c_init = r.c_init;
                    row.c_final = r.c_final;
                }
                row.full_checks = r.full_checks;
                row.sparse_checks = r.sparse_checks;
                row.graph_size_at_init = r.graph_size_at_init;
                row.diagnostic = r.diagnostic;
                if (hook) {
                    std::lock_guard lock(hook_mutex);
                    hook(row, r);
                }
            }
        }
    };
    const unsigned n_threads = thread_count(spec.threads, jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return table;
}

double median(std::vector<double> values) {
    if (values.empty()) return kInfCost;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    const double a = values[n / 2 - 1];
    const double b = values[n / 2];
    if (!std::isfinite(a) || !std::isfinite(b)) return std::max(a, b);
    return 0.5 * (a + b);
}

std::size_t median_ci_rank(std::size_t n, double confidence) {
    // Largest l with P(Bin(n, 1/2) <= l - 1) <= (1 - confidence) / 2.
    const double tail = 0.5 * (1.0 - confidence);
    double cdf = 0.0;
    std::size_t l = 0;
    for (std::size_t j = 0; j < n; ++j) {
        cdf += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) - n * std::log(2.0));
        if (cdf > tail) break;
        l = j + 1;
    }
    return std::max<std::size_t>(1, l);
}

MedianCi median_with_ci(std::vector<double> values, double confidence) {
    MedianCi out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const std::size_t l = median_ci_rank(n, confidence);
    out.median = median(values);
    out.lo = values[l - 1];
    out.hi = values[n - l];
    return out;
}

const PlannerSummary& Summary::at(const std::string& planner) const {
    for (const auto& p : planners) {
        if (p.planner == planner) return p;
    }
    throw std::out_of_range("no summary for planner " + planner);
}

Summary aggregate(const ResultsTable& table, const BenchmarkSpec& spec) {
    Summary s;
    for (const auto& name : spec.planners) {
        PlannerSummary p;
        p.planner = name;
        for (std::size_t q = 0; q < spec.n_queries; ++q) {
            std::vector<double> t, ci, cf;
            for (const auto& row : table.rows) {
                if (row.planner != name || row.query != q) continue;
                t.push_back(row.t_init);
                ci.push_back(row.c_init);
                cf.push_back(row.c_final);
            }
            p.t_init.push_back(median_with_ci(t));
            p.c_init.push_back(median_with_ci(ci));
            p.c_final.push_back(median_with_ci(cf));
            p.cumulative_t_init += p.t_init.back().median;
            p.cumulative_c_init += p.c_init.back().median;
            p.cumulative_c_final += p.c_final.back().median;
        }
        for (const auto& row : table.rows) {
            if (row.planner != name) continue;
            p.failures += row.failed ? 1 : 0;
            p.unsolved += row.solved ? 0 : 1;
        }
        s.planners.push_back(std::move(p));
    }
    return s;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string results_csv(const ResultsTable& table) {
    std::ostringstream out;
    out << "planner,run,query,t_init,c_init,c_final,full_checks,sparse_checks,graph_size_at_init,solved\n";
    for (const auto& r : table.rows) {
        out << r.planner << ',' << r.run << ',' << r.query << ',' << format_number(r.t_init) << ','
            << format_number(r.c_init) << ',' << format_number(r.c_final) << ',' << r.full_checks << ','
            << r.sparse_checks << ',' << r.graph_size_at_init << ',' << (r.solved ? "true" : "false") << '\n';
    }
    return out.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << content;
        if (!f.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void emit_outputs(const std::filesystem::path& dir, const ResultsTable& table, const Summary& summary,
                  const BenchmarkSpec& spec) {
    std::filesystem::create_directories(dir / "plotdata");
    write_atomically(dir / "results.csv", results_csv(table));

    nlohmann::json planners = nlohmann::json::object();
    for (const auto& p : summary.planners) {
        auto series = [](const std::vector<MedianCi>& v) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& m : v) {
                out.push_back({{"median", number_json(m.median)}, {"lo", number_json(m.lo)}, {"hi", number_json(m.hi)}});
            }
            return out;
        };
        planners[p.planner] = {{"cumulative_median_t_init", number_json(p.cumulative_t_init)},
                               {"cumulative_median_c_init", number_json(p.cumulative_c_init)},
                               {"cumulative_median_c_final", number_json(p.cumulative_c_final)},
                               {"failures", p.failures},
                               {"unsolved", p.unsolved},
                               {"t_init", series(p.t_init)},
                               {"c_init", series(p.c_init)},
                               {"c_final", series(p.c_final)}};

        std::ostringstream csv;
        csv << "query,t_init_median,t_init_lo,t_init_hi,c_init_median,c_init_lo,c_init_hi,"
               "c_final_median,c_final_lo,c_final_hi\n";
        for (std::size_t q = 0; q < p.t_init.size(); ++q) {
            csv << q;
            for (const auto* m : {&p.t_init[q], &p.c_init[q], &p.c_final[q]}) {
                csv << ',' << format_number(m->median) << ',' << format_number(m->lo) << ','
                    << format_number(m->hi);
            }
            csv << '\n';
        }
        write_atomically(dir / "plotdata" / (p.planner + ".csv"), csv.str());
    }
    const nlohmann::json j = {{"spec", spec.to_json()},
                              {"code_version", EIRM_VERSION},
                              {"query_sequence_hash", table.query_hash},
                              {"ci_confidence", 0.99},
                              {"t_init_unit", spec.budget.kind == Budget::Kind::Seconds ? "seconds" : "iterations"},
                              {"planners", planners}};
    write_atomically(dir / "summary.json", j.dump(2) + "\n");
}

void export_scenarios(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& name : scenario_names()) {
        for (std::size_t dim : {2u, 4u, 8u}) {
            const ScenarioDef def = build_scenario(name, dim);
            write_atomically(dir / (name + "_" + std::to_string(dim) + "d.json"), def.to_json().dump(2) + "\n");
        }
    }
}

}  // namespace eirm::bench
