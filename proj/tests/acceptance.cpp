// Release gate: one self-contained check per shipping criterion. Each prints
// a single [PASS]/[FAIL] line; the process exits nonzero if any check fails.
// Expected values come from independent oracles implemented here (Prim,
// brute-force proximity graphs, per-node BFS, closed-form statistics) or from
// hand-computed fixtures, never from the library under test.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "toposom/toposom.hpp"

using namespace toposom;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets
// ---------------------------------------------------------------------------

constexpr double kGramTolerance = 1e-4;        // tiled vs direct squared distances
constexpr double kGraphOracleBudgetS = 30.0;   // criterion 1 wall-clock cap
constexpr double kWorkerEquivBudgetS = 120.0;  // criterion 4 wall-clock cap
constexpr double kTuneBudgetS = 1800.0;        // criterion 7 wall-clock cap
constexpr double kSamplingSpeedRatio = 0.6;    // criterion 9: random / full budget
constexpr double kPValueTolerance = 1e-3;      // criterion 11
constexpr double kConvergenceMargin = 0.05;    // criterion 12
constexpr double kMcFrequencyMargin = 0.02;    // criterion 6 Monte-Carlo band

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

struct TempDir {
    fs::path path;
    TempDir() {
        static std::size_t counter = 0;
        path = fs::temp_directory_path() /
               ("toposom_acceptance_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

DataMatrix random_weights(std::size_t p, std::size_t d, Rng& rng) {
    DataMatrix w(p, d);
    for (auto& v : w.values) v = static_cast<float>(rng.real(-1.0, 1.0));
    return w;
}

// ---------------------------------------------------------------------------
// Independent graph oracles
// ---------------------------------------------------------------------------

// O(P^2) Prim. With distinct pairwise distances the minimum spanning tree is
// unique, so edge-set equality against the library's Kruskal is exact.
std::vector<Edge> prim_mst(const std::vector<double>& sq, std::size_t p) {
    std::vector<bool> in_tree(p, false);
    std::vector<double> best(p, std::numeric_limits<double>::infinity());
    std::vector<std::uint32_t> parent(p, 0);
    std::vector<Edge> edges;
    in_tree[0] = true;
    for (std::size_t j = 1; j < p; ++j) best[j] = sq[j];  // row 0
    for (std::size_t step = 1; step < p; ++step) {
        std::size_t next = p;
        for (std::size_t j = 0; j < p; ++j)
            if (!in_tree[j] && (next == p || best[j] < best[next])) next = j;
        in_tree[next] = true;
        const auto a = static_cast<std::uint32_t>(std::min<std::size_t>(parent[next], next));
        const auto b = static_cast<std::uint32_t>(std::max<std::size_t>(parent[next], next));
        edges.emplace_back(a, b);
        for (std::size_t j = 0; j < p; ++j)
            if (!in_tree[j] && sq[next * p + j] < best[j]) {
                best[j] = sq[next * p + j];
                parent[j] = static_cast<std::uint32_t>(next);
            }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

// Direct O(P^3) definition: (a, b) is an edge unless some witness r is
// strictly closer to both endpoints than they are to each other.
std::vector<Edge> brute_rng(const std::vector<double>& sq, std::size_t p) {
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
            bool blocked = false;
            for (std::size_t r = 0; r < p && !blocked; ++r) {
                if (r == a || r == b) continue;
                blocked = std::max(sq[a * p + r], sq[b * p + r]) < sq[a * p + b];
            }
            if (!blocked)
                edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
        }
    return edges;
}

std::vector<std::uint16_t> bfs_hops(const std::vector<Edge>& edges, std::size_t p) {
    std::vector<std::vector<std::uint32_t>> adj(p);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::uint16_t> hops(p * p, kHopInf);
    for (std::size_t s = 0; s < p; ++s) {
        std::queue<std::uint32_t> queue;
        hops[s * p + s] = 0;
        queue.push(static_cast<std::uint32_t>(s));
        while (!queue.empty()) {
            const std::uint32_t u = queue.front();
            queue.pop();
            for (const std::uint32_t v : adj[u])
                if (hops[s * p + v] == kHopInf) {
                    hops[s * p + v] = static_cast<std::uint16_t>(hops[s * p + u] + 1);
                    queue.push(v);
                }
        }
    }
    return hops;
}

std::vector<double> naive_sq_dists(const DataMatrix& w) {
    const std::size_t p = w.rows, d = w.cols;
    std::vector<double> out(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff =
                    static_cast<double>(w.row(i)[k]) - static_cast<double>(w.row(j)[k]);
                s += diff * diff;
            }
            out[i * p + j] = s;
        }
    return out;
}

// ---------------------------------------------------------------------------
// 1. Graph builders vs oracles
// ---------------------------------------------------------------------------

bool check_graph_oracles(std::string& detail) {
    Stopwatch watch;
    Rng rng(20260816);
    const std::size_t instances = 100;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::size_t p = 5 + rng.index(46);  // [5, 50]
        const std::size_t d = 2 + rng.index(9);   // [2, 10]
        const DataMatrix w = random_weights(p, d, rng);
        const auto sq = pairwise_sq_dists(w, p);

        const auto mst = build_mst(sq, p);
        if (mst != prim_mst(sq, p)) {
            detail = "minimum spanning tree mismatch at instance " + std::to_string(inst);
            return false;
        }
        const auto rng_edges = build_rng_graph(sq, p, 17);
        if (rng_edges != brute_rng(sq, p)) {
            detail = "proximity graph mismatch at instance " + std::to_string(inst);
            return false;
        }
        if (hop_distances(mst, p, 13) != bfs_hops(mst, p) ||
            hop_distances(rng_edges, p, 13) != bfs_hops(rng_edges, p)) {
            detail = "hop distance mismatch at instance " + std::to_string(inst);
            return false;
        }
    }
    const double elapsed = watch.seconds();
    if (elapsed >= kGraphOracleBudgetS) {
        detail = "took " + fmt(elapsed) + " s, budget " + fmt(kGraphOracleBudgetS) + " s";
        return false;
    }
    detail = std::to_string(instances) + " instances in " + fmt(elapsed) + " s";
    return true;
}

// ---------------------------------------------------------------------------
// 2. Tree-in-graph inclusion
// ---------------------------------------------------------------------------

bool check_mst_subset(std::string& detail) {
    Rng rng(20260816);  // the same seeded instances as criterion 1
    for (std::size_t inst = 0; inst < 100; ++inst) {
        const std::size_t p = 5 + rng.index(46);
        const std::size_t d = 2 + rng.index(9);
        const DataMatrix w = random_weights(p, d, rng);
        const auto sq = pairwise_sq_dists(w, p);
        const auto mst = build_mst(sq, p);
        const auto rng_edges = build_rng_graph(sq, p, 29);
        for (const Edge& e : mst)
            if (!std::binary_search(rng_edges.begin(), rng_edges.end(), e)) {
                detail = "tree edge missing from the proximity graph at instance " +
                         std::to_string(inst);
                return false;
            }
    }
    detail = "100 instances";
    return true;
}

// ---------------------------------------------------------------------------
// 3. Tiled distance identity vs direct loop
// ---------------------------------------------------------------------------

bool check_gram_identity(std::string& detail) {
    Rng rng(333);
    double worst = 0.0;
    for (std::size_t inst = 0; inst < 100; ++inst) {
        const std::size_t p = 2 + rng.index(49);
        const std::size_t d = 1 + rng.index(8);
        const DataMatrix w = random_weights(p, d, rng);
        const auto naive = naive_sq_dists(w);
        for (const std::size_t chunk : {std::size_t{1}, std::size_t{7}, p}) {
            const auto tiled = pairwise_sq_dists(w, chunk);
            for (std::size_t i = 0; i < naive.size(); ++i)
                worst = std::max(worst, std::fabs(tiled[i] - naive[i]));
        }
    }
    detail = "max |difference| " + fmt(worst);
    return worst < kGramTolerance;
}

// ---------------------------------------------------------------------------
// 4. Worker-count equivalence
// ---------------------------------------------------------------------------

bool check_worker_equivalence(std::string& detail) {
    Stopwatch watch;
    const DataMatrix data = synth_uniform(10000, 8, 1001);
    const std::size_t iters = 5;
    const std::vector<std::pair<const char*, TopologySpec>> topologies{
        {"hex", TopologySpec::lattice(TopologyKind::hexagonal, 4, 4)},
        {"mst", TopologySpec::graph(TopologyKind::mst, 16)},
        {"rng", TopologySpec::graph(TopologyKind::rng_graph, 16)},
    };
    for (const auto& [name, spec] : topologies) {
        SomConfig config;
        config.topology = spec;
        config.n_iters = iters;
        config.seed = 77;

        Sampler serial_sampler(SamplingKind::full, SamplingBudget{}, data.rows, config.seed);
        const auto [serial_model, serial_log] = train(config, data, serial_sampler);
        if (serial_log.reduce_count != iters) {
            detail = std::string(name) + ": serial reduce count " +
                     std::to_string(serial_log.reduce_count);
            return false;
        }
        for (const std::size_t g : {std::size_t{2}, std::size_t{4}}) {
            Sampler sampler(SamplingKind::full, SamplingBudget{}, data.rows, config.seed);
            const auto [model, log] = train_parallel(config, data, sampler, g);
            if (model.weights.values != serial_model.weights.values) {
                detail = std::string(name) + ": weights differ at G=" + std::to_string(g);
                return false;
            }
            if (log.reduce_count != iters) {
                detail = std::string(name) + ": G=" + std::to_string(g) + " reduce count " +
                         std::to_string(log.reduce_count);
                return false;
            }
        }
    }
    const double elapsed = watch.seconds();
    if (elapsed >= kWorkerEquivBudgetS) {
        detail = "took " + fmt(elapsed) + " s, budget " + fmt(kWorkerEquivBudgetS) + " s";
        return false;
    }
    detail = "3 topologies x G in {1,2,4}, bit-identical, in " + fmt(elapsed) + " s";
    return true;
}

// ---------------------------------------------------------------------------
// 5. Disk-streamed vs in-memory equivalence
// ---------------------------------------------------------------------------

bool check_streaming_equivalence(std::string& detail) {
    const DataMatrix data = synth_uniform(1000, 4, 2002);
    SomConfig config;
    config.topology = TopologySpec::graph(TopologyKind::mst, 16);
    config.n_iters = 6;
    config.seed = 5;

    Sampler ram_sampler(SamplingKind::full, SamplingBudget{}, data.rows, config.seed);
    const auto [ram_model, ram_log] = train(config, data, ram_sampler);

    TempDir dir;
    write_shards(data, dir.path / "shards", 2, 257);
    const ShardSet shards = open_shards(dir.path / "shards", 257);
    Sampler disk_sampler(SamplingKind::full, SamplingBudget{},
                         static_cast<std::size_t>(shards.total_rows()), config.seed);
    const auto [disk_model, disk_log] = train(config, shards, disk_sampler);

    if (disk_model.weights.values != ram_model.weights.values) {
        detail = "weights differ between disk and memory paths";
        return false;
    }
    detail = "2 shards, 257-row chunks, bit-identical";
    return true;
}

// ---------------------------------------------------------------------------
// 6. Sampling formulas and Monte-Carlo uniformity
// ---------------------------------------------------------------------------

bool check_sampling_formulas(std::string& detail) {
    SamplingBudget proportional;
    proportional.mode = BudgetMode::proportional;
    proportional.rho = 0.3;
    if (resolve_budget(proportional, 150) != 45) {
        detail = "proportional budget: expected 45";
        return false;
    }
    proportional.rho = 0.1;
    if (resolve_budget(proportional, 3) != 1) {
        detail = "guard case: expected max(1, floor(0.3)) = 1";
        return false;
    }
    SamplingBudget fixed;
    fixed.mode = BudgetMode::fixed;
    fixed.m0 = 500;
    if (resolve_budget(fixed, 7) != 500 || resolve_budget(fixed, 1000000) != 500) {
        detail = "fixed budget must ignore N";
        return false;
    }

    Rng rng(606);
    if (select_random(4, 4, rng) != std::vector<std::uint32_t>{0, 1, 2, 3}) {
        detail = "m >= N must return the full index set";
        return false;
    }

    // Marginal uniformity: N=20, m=5, 10^4 draws; each index's empirical
    // frequency must sit within 0.25 +/- 0.02.
    std::vector<std::size_t> counts(20, 0);
    const std::size_t draws = 10000;
    for (std::size_t t = 0; t < draws; ++t)
        for (const auto idx : select_random(20, 5, rng)) ++counts[idx];
    double lo = 1.0, hi = 0.0;
    for (const auto c : counts) {
        const double freq = static_cast<double>(c) / static_cast<double>(draws);
        lo = std::min(lo, freq);
        hi = std::max(hi, freq);
    }
    if (lo < 0.25 - kMcFrequencyMargin || hi > 0.25 + kMcFrequencyMargin) {
        detail = "marginal frequency range [" + fmt(lo) + ", " + fmt(hi) + "]";
        return false;
    }
    detail = "budget table exact; marginals in [" + fmt(lo) + ", " + fmt(hi) + "]";
    return true;
}

// ---------------------------------------------------------------------------
// 7 & 8 share one tuning campaign on the rings dataset.
// ---------------------------------------------------------------------------

struct QualityStudies {
    DataMatrix train_split;
    DataMatrix holdout_split;
    std::vector<TrialRecord> hex_best;
    double hex_median = 0.0;
    double rng_median = 0.0;
    double elapsed_s = 0.0;
};

const QualityStudies& quality_studies() {
    static const QualityStudies studies = [] {
        Stopwatch watch;
        QualityStudies out;
        const DataMatrix rings = synth_rings(30000, 0.05, 424242);
        auto [train_part, holdout_part] = split_train_holdout(rings, SplitSpec{0.7, 424242});
        out.train_split = std::move(train_part);
        out.holdout_split = std::move(holdout_part);

        auto run_one = [&](const TopologySpec& spec) {
            StudySpec study;
            study.base_config.topology = spec;
            study.n_trials = 20;
            study.seeds = {1, 2, 3};
            const auto records =
                run_study(SearchSpace{}, study, out.train_split, out.holdout_split);
            return best_per_seed(records);
        };
        auto median_qe = [](const std::vector<TrialRecord>& best) {
            std::vector<double> qes;
            for (const auto& rec : best) qes.push_back(rec.qe_balanced());
            return median_of(std::move(qes));
        };

        out.hex_best = run_one(TopologySpec::lattice(TopologyKind::hexagonal, 8, 8));
        out.hex_median = median_qe(out.hex_best);
        out.rng_median = median_qe(run_one(TopologySpec::graph(TopologyKind::rng_graph, 64)));
        out.elapsed_s = watch.seconds();
        return out;
    }();
    return studies;
}

bool check_quality_direction(std::string& detail) {
    const QualityStudies& qs = quality_studies();
    detail = "median balanced qe: rng " + fmt(qs.rng_median) + " vs hex " + fmt(qs.hex_median) +
             " (" + fmt(qs.elapsed_s) + " s)";
    if (qs.elapsed_s >= kTuneBudgetS) {
        detail += ", over budget";
        return false;
    }
    return qs.rng_median <= qs.hex_median;
}

bool check_tuning_benefit(std::string& detail) {
    const QualityStudies& qs = quality_studies();
    const SomConfig tuned = distill_defaults(qs.hex_best);
    RunConfig defaults_carrier;
    defaults_carrier.set_topology_kind(TopologyKind::hexagonal);
    const SomConfig untuned = defaults_carrier.som;

    auto balanced_qe = [&](SomConfig config, std::uint64_t seed) {
        config.seed = seed;
        Sampler sampler(SamplingKind::full, SamplingBudget{}, qs.train_split.rows, seed);
        auto [model, log] = train(config, qs.train_split, sampler);
        return (quantization_error(model, qs.train_split) +
                quantization_error(model, qs.holdout_split)) /
               2.0;
    };
    std::vector<double> tuned_qe, untuned_qe;
    for (const std::uint64_t seed : {21, 22, 23, 24, 25}) {
        tuned_qe.push_back(balanced_qe(tuned, seed));
        untuned_qe.push_back(balanced_qe(untuned, seed));
    }
    const double tuned_median = median_of(tuned_qe);
    const double untuned_median = median_of(untuned_qe);
    detail = "tuned median " + fmt(tuned_median) + " vs untuned " + fmt(untuned_median);
    return tuned_median < untuned_median;
}

// ---------------------------------------------------------------------------
// 9. Random sampling speedup
// ---------------------------------------------------------------------------

bool check_sampling_speed(std::string& detail) {
    const DataMatrix data = synth_uniform(1000000, 10, 31);
    SomConfig config;
    config.topology = TopologySpec::lattice(TopologyKind::hexagonal, 4, 4);
    config.n_iters = 3;
    config.seed = 8;

    Stopwatch full_watch;
    {
        Sampler sampler(SamplingKind::full, SamplingBudget{}, data.rows, config.seed);
        train(config, data, sampler);
    }
    const double t_full = full_watch.seconds();

    SamplingBudget budget;
    budget.mode = BudgetMode::proportional;
    budget.rho = 0.1;
    Stopwatch random_watch;
    {
        Sampler sampler(SamplingKind::random_subset, budget, data.rows, config.seed);
        train(config, data, sampler);
    }
    const double t_random = random_watch.seconds();

    detail = "random " + fmt(t_random) + " s vs full " + fmt(t_full) + " s (ratio " +
             fmt(t_random / t_full) + ")";
    return t_random <= kSamplingSpeedRatio * t_full;
}

// ---------------------------------------------------------------------------
// 10. Topology cost ordering at a large grid
// ---------------------------------------------------------------------------

bool check_cost_ordering(std::string& detail) {
    // Topology maintenance is what separates the families, so the runs keep
    // the graph refresh active on every iteration and the wall times are
    // medians over three interleaved rounds to cancel machine drift.
    const DataMatrix data = synth_uniform(100000, 2, 55);
    auto timed_train = [&](const TopologySpec& spec) {
        SomConfig config;
        config.topology = spec;
        config.n_iters = 4;
        config.refresh.warmup_iters = 4;
        config.seed = 9;
        Sampler sampler(SamplingKind::full, SamplingBudget{}, data.rows, config.seed);
        Stopwatch watch;
        train(config, data, sampler);
        return watch.seconds();
    };
    std::vector<double> hex_times, mst_times, rng_times;
    for (int round = 0; round < 3; ++round) {
        hex_times.push_back(timed_train(TopologySpec::lattice(TopologyKind::hexagonal, 32, 32)));
        mst_times.push_back(timed_train(TopologySpec::graph(TopologyKind::mst, 1024)));
        rng_times.push_back(timed_train(TopologySpec::graph(TopologyKind::rng_graph, 1024)));
    }
    const double t_hex = median_of(hex_times);
    const double t_mst = median_of(mst_times);
    const double t_rng = median_of(rng_times);
    detail = "median hex " + fmt(t_hex) + " s, mst " + fmt(t_mst) + " s, rng " + fmt(t_rng) + " s";
    return t_hex < t_mst && t_mst < t_rng;
}

// ---------------------------------------------------------------------------
// 11. Statistics fixtures
// ---------------------------------------------------------------------------

bool check_statistics_fixtures(std::string& detail) {
    const PairedCi ci = paired_ci({1.2, 0.8, 1.0, 1.4, 0.6});
    // mean 1.0, sample sd sqrt(0.1): t = sqrt(50) exactly.
    if (std::fabs(ci.t_stat - std::sqrt(50.0)) > 1e-9) {
        detail = "t statistic " + fmt(ci.t_stat);
        return false;
    }
    if (std::fabs(ci.p_value - 0.0021) > kPValueTolerance) {
        detail = "p value " + fmt(ci.p_value);
        return false;
    }
    if (std::fabs(ci.ci_half_width - 0.393) > 1e-3) {
        detail = "interval half-width " + fmt(ci.ci_half_width);
        return false;
    }

    if (relative_difference(1.0, 3.0) != 2.0 / 3.0 || relative_difference(0.0, 0.0) != 0.0) {
        detail = "relative difference cases";
        return false;
    }

    const std::vector<UnitObservation> a{{"u1", 5.0}, {"u1", 3.0}, {"u1", 9.0},
                                         {"u1", 1.0}, {"u1", 7.0}, {"u2", 2.0}};
    const std::vector<UnitObservation> b{{"u1", 2.0}, {"u1", 4.0}, {"u1", 6.0}, {"u2", 3.0}};
    const PairedSummary summary = paired_topk_summary(a, b, 3);
    const bool topk_ok = summary.effects.size() == 2 && summary.effects[0].unit == "u1" &&
                         summary.effects[0].median_a == 3.0 && summary.effects[0].median_b == 4.0 &&
                         summary.effects[0].effect == -1.0 && summary.effects[1].effect == -1.0 &&
                         summary.dropped_units.empty();
    if (!topk_ok) {
        detail = "top-k summary fixture";
        return false;
    }
    detail = "t = sqrt(50), p within " + fmt(kPValueTolerance) + ", fixtures exact";
    return true;
}

// ---------------------------------------------------------------------------
// 12. Convergence sanity
// ---------------------------------------------------------------------------

bool check_convergence(std::string& detail) {
    const DataMatrix two(2, 1, {0.0f, 1.0f});
    SomConfig config;
    config.topology = TopologySpec::lattice(TopologyKind::rectangular, 2, 1);
    config.n_iters = 60;
    config.eta0 = 0.8;
    config.sigma_min = 0.05;
    config.init_method = InitMethod::uniform_box;
    config.seed = 12;
    Sampler sampler(SamplingKind::full, SamplingBudget{}, two.rows, config.seed);
    const auto [model, log] = train(config, two, sampler);
    const float lo = std::min(model.weights.values[0], model.weights.values[1]);
    const float hi = std::max(model.weights.values[0], model.weights.values[1]);
    detail = "weights {" + fmt(lo) + ", " + fmt(hi) + "}";
    if (std::fabs(lo - 0.0) > kConvergenceMargin || std::fabs(hi - 1.0) > kConvergenceMargin)
        return false;

    SomModel exact;
    exact.weights = DataMatrix(2, 1, {0.0f, 1.0f});
    exact.topology_state.spec = TopologySpec::lattice(TopologyKind::rectangular, 2, 1);
    exact.prev_update = DataMatrix(2, 1);
    if (quantization_error(exact, two) != 0.0) {
        detail += "; coincident-node error nonzero";
        return false;
    }
    detail += "; coincident-node error 0";
    return true;
}

// ---------------------------------------------------------------------------
// 13. File-format round trips and fixed layout
// ---------------------------------------------------------------------------

void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xFF));
}
void put_u64(std::vector<unsigned char>& v, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xFF));
}
void put_f32(std::vector<unsigned char>& v, float x) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(v, bits);
}
std::uint32_t get_u32(const std::vector<unsigned char>& v, std::size_t off) {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(v[off + i]) << (8 * i);
    return x;
}
std::uint64_t get_u64(const std::vector<unsigned char>& v, std::size_t off) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(v[off + i]) << (8 * i);
    return x;
}

bool check_file_formats(std::string& detail) {
    TempDir dir;

    // Shards: write -> read -> rewrite must be byte-identical, and the header
    // fields must sit at their documented offsets.
    const DataMatrix data = synth_uniform(103, 4, 3003);
    write_shards(data, dir.path / "a", 3, 64);
    const ShardSet set_a = open_shards(dir.path / "a", 64);
    DataMatrix reassembled(0, 4);
    for (std::size_t s = 0; s < set_a.shard_paths.size(); ++s) {
        const DataMatrix part = read_shard(set_a, s);
        reassembled.values.insert(reassembled.values.end(), part.values.begin(),
                                  part.values.end());
        reassembled.rows += part.rows;
    }
    if (reassembled.values != data.values) {
        detail = "shard read-back differs from the written data";
        return false;
    }
    write_shards(reassembled, dir.path / "b", 3, 64);
    const ShardSet set_b = open_shards(dir.path / "b", 64);
    for (std::size_t s = 0; s < set_a.shard_paths.size(); ++s)
        if (file_bytes(set_a.shard_paths[s]) != file_bytes(set_b.shard_paths[s])) {
            detail = "rewritten shard " + std::to_string(s) + " is not byte-identical";
            return false;
        }

    const auto first_shard = file_bytes(set_a.shard_paths[0]);
    const std::uint64_t first_rows = set_a.rows_per_shard[0];
    const bool shard_layout_ok =
        first_shard.size() == 24 + first_rows * 4 * sizeof(float) &&
        std::memcmp(first_shard.data(), "FSOMSHRD", 8) == 0 && get_u32(first_shard, 8) == 1 &&
        get_u64(first_shard, 12) == first_rows && get_u32(first_shard, 20) == 4;
    if (!shard_layout_ok) {
        detail = "shard header layout mismatch";
        return false;
    }

    // Hand-written shard fixture loads with exact values.
    {
        std::vector<unsigned char> bytes;
        for (char c : {'F', 'S', 'O', 'M', 'S', 'H', 'R', 'D'}) bytes.push_back(c);
        put_u32(bytes, 1);
        put_u64(bytes, 3);
        put_u32(bytes, 2);
        for (float v : {1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.25f}) put_f32(bytes, v);
        fs::create_directories(dir.path / "fixture");
        std::ofstream out(dir.path / "fixture" / "part-00000.shard", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        const ShardSet fixture = open_shards(dir.path / "fixture", 16);
        const DataMatrix loaded = read_shard(fixture, 0);
        if (loaded.rows != 3 || loaded.cols != 2 ||
            loaded.values != std::vector<float>{1.0f, 2.0f, 3.0f, 0.5f, -1.0f, 0.25f}) {
            detail = "hand-written shard fixture mismatch";
            return false;
        }
    }

    // Models: save -> load -> save must be byte-identical.
    SomConfig config;
    config.topology = TopologySpec::graph(TopologyKind::mst, 9);
    config.n_iters = 4;
    config.seed = 3;
    const DataMatrix rings = synth_rings(120, 0.05, 9);
    Sampler sampler(SamplingKind::full, SamplingBudget{}, rings.rows, config.seed);
    const auto [model, log] = train(config, rings, sampler);
    save_model(model, dir.path / "m1.fsom");
    const SomModel loaded = load_model(dir.path / "m1.fsom");
    save_model(loaded, dir.path / "m2.fsom");
    if (file_bytes(dir.path / "m1.fsom") != file_bytes(dir.path / "m2.fsom")) {
        detail = "model save/load/save is not byte-identical";
        return false;
    }

    // Hand-written model fixture: rect 2x1, d=2, weights {1, 2, 3, 0.5}.
    {
        std::vector<unsigned char> bytes;
        for (char c : {'F', 'S', 'O', 'M', 'M', 'O', 'D', 'L'}) bytes.push_back(c);
        put_u32(bytes, 1);
        put_u32(bytes, 2);
        put_u32(bytes, 2);
        bytes.push_back(0);  // rectangular
        put_u32(bytes, 2);
        put_u32(bytes, 1);
        for (float v : {1.0f, 2.0f, 3.0f, 0.5f}) put_f32(bytes, v);
        put_u32(bytes, 0);
        std::ofstream out(dir.path / "fixture.fsom", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        const SomModel fixture = load_model(dir.path / "fixture.fsom");
        if (fixture.weights.values != std::vector<float>{1.0f, 2.0f, 3.0f, 0.5f} ||
            fixture.topology_state.spec.kind != TopologyKind::rectangular ||
            fixture.topology_state.spec.grid_w != 2 || fixture.topology_state.spec.grid_h != 1) {
            detail = "hand-written model fixture mismatch";
            return false;
        }
    }
    detail = "shards and models byte-stable; hand fixtures exact";
    return true;
}

// ---------------------------------------------------------------------------

struct Criterion {
    const char* name;
    bool (*run)(std::string&);
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"graph builders match independent oracles", check_graph_oracles},
        {"spanning tree is contained in the proximity graph", check_mst_subset},
        {"tiled squared distances match the direct loop", check_gram_identity},
        {"worker counts 1/2/4 give bit-identical weights, one reduce per iteration",
         check_worker_equivalence},
        {"disk-streamed training matches in-memory training", check_streaming_equivalence},
        {"sampling budgets and selectors follow their formulas", check_sampling_formulas},
        {"tuned proximity graph matches or beats the hexagonal lattice on balanced qe",
         check_quality_direction},
        {"tuned defaults beat the built-in defaults", check_tuning_benefit},
        {"random sampling at rho=0.1 runs in at most 0.6x full-sampling time",
         check_sampling_speed},
        {"runtime orders hexagonal < mst < rng at a 32-side grid", check_cost_ordering},
        {"statistics fixtures reproduce their oracle values", check_statistics_fixtures},
        {"two-point fixture converges; coincident nodes give zero error", check_convergence},
        {"file formats round-trip byte-identically with a fixed layout", check_file_formats},
    };

    bool all_ok = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        all_ok = all_ok && ok;
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << (i + 1) << "/13 " << criteria[i].name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n" << std::flush;
    }
    return all_ok ? 0 : 1;
}
