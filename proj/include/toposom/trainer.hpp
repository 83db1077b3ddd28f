#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toposom/accum.hpp"
#include "toposom/dataset.hpp"
#include "toposom/matrix.hpp"
#include "toposom/rng.hpp"
#include "toposom/sampling.hpp"
#include "toposom/topology.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class DecayKind { linear, exponential };

inline DecayKind parse_decay_kind(const std::string& s) {
    if (s == "linear") return DecayKind::linear;
    if (s == "exponential" || s == "exp") return DecayKind::exponential;
    throw std::invalid_argument("unknown decay kind: '" + s + "'");
}

inline const char* decay_kind_name(DecayKind k) {
    return k == DecayKind::linear ? "linear" : "exponential";
}

enum class InitMethod { sample_draw, uniform_box, pca_plane };

inline InitMethod parse_init_method(const std::string& s) {
    if (s == "sample_draw") return InitMethod::sample_draw;
    if (s == "uniform_box") return InitMethod::uniform_box;
    if (s == "pca_plane") return InitMethod::pca_plane;
    throw std::invalid_argument("unknown init method: '" + s + "'");
}

inline const char* init_method_name(InitMethod m) {
    switch (m) {
        case InitMethod::sample_draw: return "sample_draw";
        case InitMethod::uniform_box: return "uniform_box";
        case InitMethod::pca_plane: return "pca_plane";
    }
    return "?";
}

inline constexpr double kEtaFloor = 1e-4;

struct SomConfig {
    TopologySpec topology;
    std::size_t n_iters = 10;
    double eta0 = 0.5;
    DecayKind lr_decay = DecayKind::linear;
    double sigma0 = 0.0;  // 0 = auto: half the larger lattice side, or 3 hops for graphs
    DecayKind radius_decay = DecayKind::linear;
    double sigma_min = 0.3;
    InitMethod init_method = InitMethod::sample_draw;
    bool use_momentum = false;
    double momentum = 0.5;
    RefreshPolicy refresh;  // warmup_iters 0 = auto: 10% of n_iters
    std::size_t n_chunks = 1;
    std::uint64_t seed = 0;

    std::size_t nodes() const { return topology.nodes; }

    double resolved_sigma0() const {
        if (sigma0 > 0.0) return sigma0;
        if (is_lattice(topology.kind))
            return std::max(1.0, static_cast<double>(std::max(topology.grid_w, topology.grid_h)) / 2.0);
        return 3.0;
    }
    RefreshPolicy resolved_refresh() const {
        RefreshPolicy p = refresh;
        if (p.warmup_iters == 0) p.warmup_iters = n_iters / 10;
        return p;
    }

    void validate() const {
        if (topology.nodes < 1) throw std::invalid_argument("config: node count must be >= 1");
        if (is_lattice(topology.kind) && topology.grid_w * topology.grid_h != topology.nodes)
            throw std::invalid_argument("config: lattice dimensions do not match node count");
        if (!(eta0 > 0.0)) throw std::invalid_argument("config: eta0 must be > 0");
        if (!(resolved_sigma0() > 0.0)) throw std::invalid_argument("config: sigma0 must be > 0");
        if (!(sigma_min > 0.0)) throw std::invalid_argument("config: sigma_min must be > 0");
        if (use_momentum && !(momentum >= 0.0 && momentum < 1.0))
            throw std::invalid_argument("config: momentum must be in [0, 1)");
        if (n_chunks < 1) throw std::invalid_argument("config: n_chunks must be >= 1");
        if (!(refresh.growth > 1.0)) throw std::invalid_argument("config: refresh growth must be > 1");
    }
};

// ---------------------------------------------------------------------------
// Model and run log
// ---------------------------------------------------------------------------

struct SomModel {
    DataMatrix weights;            // P x d, float32
    TopologyState topology_state;
    DataMatrix prev_update;        // momentum memory; all-zero when momentum is off
    std::size_t iter = 0;
};

struct IterationLogEntry {
    std::size_t iter = 0;
    double eta = 0.0;
    double sigma = 0.0;
    bool refreshed = false;
    std::optional<double> qe_train;
};

struct RunLog {
    std::vector<IterationLogEntry> iterations;
    std::size_t reduce_count = 0;    // exactly one per iteration
    double barrier_wait_s = 0.0;     // total time blocked on worker collection
};

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Decay schedule: linear v0*(1 - t/T) or exponential v0*exp(-3t/T), both
/// clamped below at floor_v.
inline double schedule_value(double v0, DecayKind kind, std::size_t t, std::size_t total,
                             double floor_v) {
    if (total < 1) throw std::invalid_argument("schedule_value: T must be >= 1");
    if (t >= total) throw std::invalid_argument("schedule_value: t must be < T");
    const double frac = static_cast<double>(t) / static_cast<double>(total);
    const double v = kind == DecayKind::linear ? v0 * (1.0 - frac) : v0 * std::exp(-3.0 * frac);
    return std::max(floor_v, v);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace detail {

/// Top principal component of a covariance matrix by power iteration, with
/// the start vector drawn from rng so the result is deterministic per seed.
inline std::vector<double> power_iteration(const std::vector<double>& cov, std::size_t d,
                                           Rng& rng, double& eigenvalue) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.gaussian();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(std::max(norm, 1e-300));
    for (auto& x : v) x /= norm;
    std::vector<double> next(d);
    for (int it = 0; it < 200; ++it) {
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += cov[i * d + k] * v[k];
            next[i] = s;
        }
        norm = 0.0;
        for (double x : next) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) break;  // zero matrix: keep the start direction
        for (std::size_t i = 0; i < d; ++i) v[i] = next[i] / norm;
    }
    eigenvalue = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += cov[i * d + k] * v[k];
        eigenvalue += v[i] * s;
    }
    eigenvalue = std::max(eigenvalue, 0.0);
    return v;
}

}  // namespace detail

/// Starting node weights. sample_draw picks P data rows (without replacement
/// unless P > N); uniform_box draws i.i.d. within the per-feature [min, max];
/// pca_plane lays the nodes on a regular grid spanning +/- 2 standard
/// deviations along the top two principal axes, other coordinates at the
/// data mean. All three are deterministic per seed.
inline DataMatrix init_weights(const SomConfig& config, const DataSourceRef& data) {
    const std::size_t n = data.rows(), d = data.cols(), p = config.nodes();
    if (n < 1) throw std::invalid_argument("init_weights: empty training data");
    Rng rng(config.seed, SeedStream::init);

    if (config.init_method == InitMethod::sample_draw) {
        std::vector<std::uint32_t> picks;
        picks.reserve(p);
        if (p <= n) {
            // Floyd's method: p distinct indices, deterministic per seed.
            std::vector<std::uint32_t> chosen;
            for (std::size_t j = n - p; j < n; ++j) {
                const auto t = static_cast<std::uint32_t>(rng.index(j + 1));
                if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
                    chosen.push_back(t);
                else
                    chosen.push_back(static_cast<std::uint32_t>(j));
            }
            picks = std::move(chosen);
        } else {
            for (std::size_t i = 0; i < p; ++i)
                picks.push_back(static_cast<std::uint32_t>(rng.index(n)));
        }
        return data.fetch_rows(picks);
    }

    if (config.init_method == InitMethod::uniform_box) {
        std::vector<double> lo(d, std::numeric_limits<double>::infinity());
        std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
        data.for_each_row([&](std::size_t, const float* row) {
            for (std::size_t k = 0; k < d; ++k) {
                lo[k] = std::min(lo[k], static_cast<double>(row[k]));
                hi[k] = std::max(hi[k], static_cast<double>(row[k]));
            }
        });
        DataMatrix w(p, d);
        for (std::size_t j = 0; j < p; ++j) {
            float* row = w.row(j);
            for (std::size_t k = 0; k < d; ++k)
                row[k] = static_cast<float>(lo[k] + rng.real01() * (hi[k] - lo[k]));
        }
        return w;
    }

    // pca_plane
    std::vector<double> mean(d, 0.0);
    data.for_each_row([&](std::size_t, const float* row) {
        for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
    });
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    data.for_each_row([&](std::size_t, const float* row) {
        for (std::size_t a = 0; a < d; ++a) {
            const double da = row[a] - mean[a];
            for (std::size_t b = a; b < d; ++b) cov[a * d + b] += da * (row[b] - mean[b]);
        }
    });
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov[a * d + b] /= static_cast<double>(n);
            cov[b * d + a] = cov[a * d + b];
        }
    double lambda1 = 0.0, lambda2 = 0.0;
    const auto v1 = detail::power_iteration(cov, d, rng, lambda1);
    // Deflate and repeat for the second axis.
    std::vector<double> cov2 = cov;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) cov2[a * d + b] -= lambda1 * v1[a] * v1[b];
    const auto v2 = detail::power_iteration(cov2, d, rng, lambda2);
    const double s1 = 2.0 * std::sqrt(lambda1), s2 = 2.0 * std::sqrt(lambda2);

    // Grid over the plane: lattice dims when available, else a near square.
    std::size_t gw = config.topology.grid_w, gh = config.topology.grid_h;
    if (gw == 0 || gh == 0) {
        gw = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
        gh = (p + gw - 1) / gw;
    }
    DataMatrix w(p, d);
    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t r = j / gw, c = j % gw;
        const double a1 = gw > 1 ? -s1 + 2.0 * s1 * static_cast<double>(c) / (gw - 1) : 0.0;
        const double a2 = gh > 1 ? -s2 + 2.0 * s2 * static_cast<double>(r) / (gh - 1) : 0.0;
        float* row = w.row(j);
        for (std::size_t k = 0; k < d; ++k)
            row[k] = static_cast<float>(mean[k] + a1 * v1[k] + a2 * v2[k]);
    }
    return w;
}

// ---------------------------------------------------------------------------
// BMU assignment
// ---------------------------------------------------------------------------

/// Best-matching units for each row of the chunk; ties go to the lowest node
/// index. Distances are Euclidean (clamped at 0 before the square root).
inline void find_bmus(const DataMatrix& chunk, const DataMatrix& weights,
                      std::vector<std::uint32_t>& bmus, std::vector<double>& distances) {
    if (chunk.cols != weights.cols)
        throw std::invalid_argument("find_bmus: dimension mismatch");
    const std::size_t p = weights.rows, d = weights.cols;
    bmus.resize(chunk.rows);
    distances.resize(chunk.rows);
    for (std::size_t i = 0; i < chunk.rows; ++i) {
        const float* x = chunk.row(i);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < p; ++j) {
            const float* w = weights.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = static_cast<double>(x[k]) - w[k];
                acc += diff * diff;
            }
            if (acc < best) {
                best = acc;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        bmus[i] = best_j;
        distances[i] = std::sqrt(std::max(0.0, best));
    }
}

// ---------------------------------------------------------------------------
// Accumulation and update
// ---------------------------------------------------------------------------

/// Fold one chunk into the iteration accumulators:
///   U_j += eta * h[j][bmu] * (x - w_j)    H_j += h[j][bmu]
/// for every sample and every node, in ascending sample order. The influence
/// matrix is symmetric, so h[j][b] is read from row b.
inline void accumulate(const DataMatrix& chunk, const std::vector<std::uint32_t>& bmus,
                       const DataMatrix& weights, const std::vector<double>& influence,
                       double eta, IterationAccumulators& acc) {
    const std::size_t p = weights.rows, d = weights.cols;
    if (acc.nodes != p || acc.dims != d)
        throw std::invalid_argument("accumulate: accumulator shape mismatch");
    for (std::size_t i = 0; i < chunk.rows; ++i) {
        const float* x = chunk.row(i);
        const double* h_row = influence.data() + static_cast<std::size_t>(bmus[i]) * p;
        for (std::size_t j = 0; j < p; ++j) {
            const double h = h_row[j];
            const float* w = weights.row(j);
            acc.add_h(j, h);
            const double eh = eta * h;
            for (std::size_t k = 0; k < d; ++k)
                acc.add_u(j, k, eh * (static_cast<double>(x[k]) - w[k]));
        }
    }
}

/// Normalized weight step. Nodes with H below the safeguard threshold do not
/// move at all this iteration (their momentum memory is also zeroed); all
/// other nodes step by U/H plus the optional momentum carry-over.
inline void apply_update(SomModel& model, const IterationAccumulators& acc,
                         const SomConfig& config) {
    const std::size_t p = model.weights.rows, d = model.weights.cols;
    constexpr double kHFloor = 1e-12;
    for (std::size_t j = 0; j < p; ++j) {
        const double h = acc.h_value(j);
        float* w = model.weights.row(j);
        float* prev = model.prev_update.row(j);
        if (h < kHFloor) {
            if (config.use_momentum)
                for (std::size_t k = 0; k < d; ++k) prev[k] = 0.0f;
            continue;
        }
        for (std::size_t k = 0; k < d; ++k) {
            double delta = acc.u_value(j, k) / h;
            if (config.use_momentum) delta += config.momentum * static_cast<double>(prev[k]);
            if (!std::isfinite(delta))
                throw std::runtime_error("numerical fault: non-finite weight update at node " +
                                         std::to_string(j));
            const double updated = static_cast<double>(w[k]) + delta;
            if (!std::isfinite(updated))
                throw std::runtime_error("numerical fault: non-finite weight at node " +
                                         std::to_string(j));
            w[k] = static_cast<float>(updated);
            if (config.use_momentum) prev[k] = static_cast<float>(delta);
        }
    }
    ++model.iter;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Mean Euclidean BMU distance over a full pass, streamed chunk-by-chunk.
/// (Kept here because the trainer logs it; the metrics module re-exports it.)
inline double mean_bmu_distance(const DataSourceRef& data, const DataMatrix& weights) {
    const std::size_t p = weights.rows, d = weights.cols;
    if (data.cols() != d) throw std::invalid_argument("mean_bmu_distance: dimension mismatch");
    double total = 0.0;
    std::size_t count = 0;
    data.for_each_row([&](std::size_t, const float* x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < p; ++j) {
            const float* w = weights.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = static_cast<double>(x[k]) - w[k];
                acc += diff * diff;
            }
            best = std::min(best, acc);
        }
        total += std::sqrt(std::max(0.0, best));
        ++count;
    });
    if (count == 0) throw std::invalid_argument("mean_bmu_distance: empty data");
    return total / static_cast<double>(count);
}

/// Raised when a run exceeds its cooperative deadline; callers that budget
/// runs (the bench harness) catch this and flag the record instead of dying.
struct TrainTimeoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainOptions {
    bool log_qe = false;    // compute QE over the training source after every update
    double timeout_s = 0.0; // > 0: abort with TrainTimeoutError past this wall time
};

/// BMU-assign and accumulate a list of selected rows in n_chunks sequential
/// chunks. Appends one BMU distance per selected row (selection order) to
/// `distances`. Shared by the serial path and by each parallel worker.
inline IterationAccumulators accumulate_selection(const DataSourceRef& data,
                                                  const std::vector<std::uint32_t>& selected,
                                                  const DataMatrix& weights,
                                                  const std::vector<double>& influence,
                                                  double eta, std::size_t n_chunks,
                                                  std::vector<double>& distances) {
    IterationAccumulators acc(weights.rows, weights.cols);
    distances.reserve(distances.size() + selected.size());
    const std::size_t chunk_rows = std::max<std::size_t>(
        1, (selected.size() + n_chunks - 1) / std::max<std::size_t>(1, n_chunks));
    std::vector<std::uint32_t> bmus;
    std::vector<double> chunk_dists;
    for (std::size_t c0 = 0; c0 < selected.size(); c0 += chunk_rows) {
        const std::size_t c1 = std::min(selected.size(), c0 + chunk_rows);
        const std::vector<std::uint32_t> part(selected.begin() + c0, selected.begin() + c1);
        const DataMatrix chunk = data.fetch_rows(part);
        find_bmus(chunk, weights, bmus, chunk_dists);
        accumulate(chunk, bmus, weights, influence, eta, acc);
        distances.insert(distances.end(), chunk_dists.begin(), chunk_dists.end());
    }
    return acc;
}

/// Single-process executor: accumulates the whole selection in n_chunks
/// sequential chunks. The parallel module supplies a multi-worker drop-in
/// with the same call shape.
class SerialExecutor {
public:
    explicit SerialExecutor(const DataSourceRef& data) : data_(data) {}

    /// One iteration's accumulation pass. Fills `distances` with per-selected-
    /// sample BMU distances (for the adaptive sampler) in selection order.
    IterationAccumulators run_iteration(const std::vector<std::uint32_t>& selected,
                                        const DataMatrix& weights,
                                        const std::vector<double>& influence, double eta,
                                        std::size_t n_chunks, std::vector<double>& distances) {
        distances.clear();
        return accumulate_selection(data_, selected, weights, influence, eta, n_chunks,
                                    distances);
    }

    std::size_t workers() const { return 1; }
    double barrier_wait_s() const { return 0.0; }

private:
    DataSourceRef data_;
};

/// Core batch training loop, shared by the serial and parallel paths.
/// Per iteration: sample -> refresh topology -> schedules + cached influence
/// -> chunked accumulation (executor) -> exactly one reduce -> normalized
/// update. Deterministic per (config, seed, data).
template <typename Executor>
std::pair<SomModel, RunLog> train_with_executor(const SomConfig& config,
                                                const DataSourceRef& data, Sampler& sampler,
                                                Executor& executor,
                                                const TrainOptions& options = {}) {
    config.validate();
    if (data.rows() < 1) throw std::invalid_argument("train: empty training data");

    SomModel model;
    model.weights = init_weights(config, data);
    model.prev_update = DataMatrix(config.nodes(), data.cols());
    model.topology_state = build_topology(config.topology);

    RunLog log;
    const RefreshPolicy refresh_policy = config.resolved_refresh();
    const double sigma0 = config.resolved_sigma0();
    const std::size_t total = config.n_iters;

    const auto run_start = std::chrono::steady_clock::now();
    std::vector<double> distances;
    for (std::size_t t = 0; t < total; ++t) {
        if (options.timeout_s > 0.0) {
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - run_start;
            if (elapsed.count() > options.timeout_s)
                throw TrainTimeoutError("training run exceeded timeout of " +
                                        std::to_string(options.timeout_s) + " s at iteration " +
                                        std::to_string(t));
        }
        const auto selected = sampler.select();

        const std::size_t before = model.topology_state.refresh_count;
        refresh_topology(model.topology_state, model.weights, refresh_policy, t);
        const bool refreshed = model.topology_state.refresh_count != before;

        const double eta = schedule_value(config.eta0, config.lr_decay, t, total, kEtaFloor);
        const double sigma =
            schedule_value(sigma0, config.radius_decay, t, total, config.sigma_min);
        const auto influence = cached_influence(model.topology_state, sigma);

        IterationAccumulators acc = executor.run_iteration(selected, model.weights, *influence,
                                                           eta, config.n_chunks, distances);
        ++log.reduce_count;

        apply_update(model, acc, config);
        sampler.observe(selected, distances);

        IterationLogEntry entry;
        entry.iter = t;
        entry.eta = eta;
        entry.sigma = sigma;
        entry.refreshed = refreshed;
        if (options.log_qe) entry.qe_train = mean_bmu_distance(data, model.weights);
        log.iterations.push_back(entry);
    }
    log.barrier_wait_s = executor.barrier_wait_s();
    return {std::move(model), std::move(log)};
}

/// Single-process training entry point.
inline std::pair<SomModel, RunLog> train(const SomConfig& config, const DataSourceRef& data,
                                         Sampler& sampler, const TrainOptions& options = {}) {
    SerialExecutor executor(data);
    return train_with_executor(config, data, sampler, executor, options);
}

/// Project samples onto a trained model: per-row (BMU index, Euclidean
/// distance). Read-only.
inline std::pair<std::vector<std::uint32_t>, std::vector<double>> map_samples(
    const SomModel& model, const DataMatrix& data) {
    if (data.rows == 0) return {{}, {}};
    std::vector<std::uint32_t> bmus;
    std::vector<double> distances;
    find_bmus(data, model.weights, bmus, distances);
    return {std::move(bmus), std::move(distances)};
}

}  // namespace toposom
