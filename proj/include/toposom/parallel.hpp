#pragma once

#include <chrono>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "toposom/accum.hpp"
#include "toposom/trainer.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Shared-nothing data-parallel execution. G workers each accumulate over a
// contiguous slice of the iteration's selection; one synchronous ordered
// reduce per iteration merges the per-worker (U, H) into the global pair.
// Because accumulators are exact fixed-point sums, the reduced values are
// bit-identical for every worker count.
// ---------------------------------------------------------------------------

inline constexpr double kDefaultBarrierTimeoutS = 60.0;

/// Contiguous near-equal partition of n items over G workers; the first
/// n mod G slices get one extra item. A slice may be empty when G > n.
inline std::vector<std::pair<std::size_t, std::size_t>> assign_shards(std::size_t n,
                                                                      std::size_t workers) {
    if (workers < 1) throw std::invalid_argument("assign_shards: G must be >= 1");
    std::vector<std::pair<std::size_t, std::size_t>> slices;
    slices.reserve(workers);
    const std::size_t base = n / workers, extra = n % workers;
    std::size_t begin = 0;
    for (std::size_t g = 0; g < workers; ++g) {
        const std::size_t count = base + (g < extra ? 1 : 0);
        slices.emplace_back(begin, begin + count);
        begin += count;
    }
    return slices;
}

/// One worker's accumulation result: its local (U, H) plus the BMU distance
/// of every row in its slice, in slice order.
struct WorkerResult {
    IterationAccumulators acc;
    std::vector<double> distances;
};

/// Per-worker pass: chunked accumulation over the worker's slice of the
/// selection. Read-only on weights and data; the slice is owned by value so
/// no worker can observe another's shard.
inline WorkerResult worker_step(const DataSourceRef& data, std::vector<std::uint32_t> slice,
                                const DataMatrix& weights, const std::vector<double>& influence,
                                double eta, std::size_t n_chunks) {
    WorkerResult result;
    result.acc = accumulate_selection(data, slice, weights, influence, eta, n_chunks,
                                      result.distances);
    return result;
}

/// Barrier collection: wait for every worker's future in ascending worker-id
/// order, bounded by a shared deadline. A worker that misses the deadline is
/// named in the error instead of hanging the run; a worker that threw has its
/// exception rethrown here.
template <typename T>
std::vector<T> collect_with_barrier(std::vector<std::future<T>>& futures, double timeout_s,
                                    double* waited_s = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(timeout_s));
    std::vector<T> results;
    results.reserve(futures.size());
    for (std::size_t g = 0; g < futures.size(); ++g) {
        if (futures[g].wait_until(deadline) != std::future_status::ready)
            throw std::runtime_error("reduce barrier timed out after " +
                                     std::to_string(timeout_s) + " s waiting for worker " +
                                     std::to_string(g));
        results.push_back(futures[g].get());
    }
    if (waited_s) {
        const std::chrono::duration<double> waited = std::chrono::steady_clock::now() - start;
        *waited_s += waited.count();
    }
    return results;
}

/// Ordered synchronous reduce: element-wise sum of per-worker accumulators in
/// ascending worker-id order.
inline IterationAccumulators reduce(const std::vector<IterationAccumulators>& buffers) {
    if (buffers.empty()) throw std::invalid_argument("reduce: no worker contributions");
    IterationAccumulators total = buffers.front();
    for (std::size_t g = 1; g < buffers.size(); ++g) total.merge(buffers[g]);
    return total;
}

/// Multi-worker executor: slices the selection, runs worker_step on G
/// threads, barriers, and reduces — exactly once per iteration.
class ThreadedExecutor {
public:
    ThreadedExecutor(const DataSourceRef& data, std::size_t workers,
                     double barrier_timeout_s = kDefaultBarrierTimeoutS)
        : data_(data), workers_(workers), timeout_s_(barrier_timeout_s) {
        if (workers < 1) throw std::invalid_argument("ThreadedExecutor: G must be >= 1");
    }

    IterationAccumulators run_iteration(const std::vector<std::uint32_t>& selected,
                                        const DataMatrix& weights,
                                        const std::vector<double>& influence, double eta,
                                        std::size_t n_chunks, std::vector<double>& distances) {
        const auto slices = assign_shards(selected.size(), workers_);
        std::vector<std::future<WorkerResult>> futures;
        futures.reserve(workers_);
        for (std::size_t g = 0; g < workers_; ++g) {
            std::vector<std::uint32_t> slice(selected.begin() + slices[g].first,
                                             selected.begin() + slices[g].second);
            futures.push_back(std::async(std::launch::async, worker_step, data_,
                                         std::move(slice), std::cref(weights),
                                         std::cref(influence), eta, n_chunks));
        }
        auto results = collect_with_barrier(futures, timeout_s_, &barrier_wait_s_);
        std::vector<IterationAccumulators> buffers;
        buffers.reserve(results.size());
        distances.clear();
        for (auto& r : results) {
            buffers.push_back(std::move(r.acc));
            distances.insert(distances.end(), r.distances.begin(), r.distances.end());
        }
        return reduce(buffers);
    }

    std::size_t workers() const { return workers_; }
    double barrier_wait_s() const { return barrier_wait_s_; }

private:
    DataSourceRef data_;
    std::size_t workers_;
    double timeout_s_;
    double barrier_wait_s_ = 0.0;
};

/// Data-parallel training entry point. G = 1 reproduces the serial trainer
/// bit-exactly; any G produces bit-identical final weights for a fixed
/// (config, seed, data).
inline std::pair<SomModel, RunLog> train_parallel(const SomConfig& config,
                                                  const DataSourceRef& data, Sampler& sampler,
                                                  std::size_t workers,
                                                  const TrainOptions& options = {},
                                                  double barrier_timeout_s = kDefaultBarrierTimeoutS) {
    ThreadedExecutor executor(data, workers, barrier_timeout_s);
    return train_with_executor(config, data, sampler, executor, options);
}

}  // namespace toposom
