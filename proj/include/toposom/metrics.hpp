#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "toposom/dataset.hpp"
#include "toposom/trainer.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Quantization error
// ---------------------------------------------------------------------------

struct QeReport {
    double qe_train = 0.0;
    double qe_holdout = 0.0;
    double qe_balanced = 0.0;  // (qe_train + qe_holdout) / 2
};

/// Mean Euclidean distance from each sample to its best-matching unit
/// (classical non-squared definition). Works over in-memory or shard-backed
/// data; read-only.
inline double quantization_error(const SomModel& model, const DataSourceRef& data) {
    return mean_bmu_distance(data, model.weights);
}

inline QeReport qe_report(const SomModel& model, const DataSourceRef& train,
                          const DataSourceRef& holdout) {
    QeReport r;
    r.qe_train = quantization_error(model, train);
    r.qe_holdout = quantization_error(model, holdout);
    r.qe_balanced = (r.qe_train + r.qe_holdout) / 2.0;
    return r;
}

// ---------------------------------------------------------------------------
// Runtime measurement
// ---------------------------------------------------------------------------

/// Wall-clock the runnable `repeats` times; returns (mean seconds, sample
/// standard deviation). One repetition reports a standard deviation of 0.
inline std::pair<double, double> time_run(const std::function<void()>& runnable,
                                          std::size_t repeats = 3) {
    if (repeats < 1) throw std::invalid_argument("time_run: repeats must be >= 1");
    std::vector<double> seconds;
    seconds.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        runnable();
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        seconds.push_back(elapsed.count());
    }
    double mean = 0.0;
    for (double s : seconds) mean += s;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    if (repeats > 1) {
        for (double s : seconds) var += (s - mean) * (s - mean);
        var /= static_cast<double>(repeats - 1);
    }
    return {mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Scaling efficiency
// ---------------------------------------------------------------------------

struct ScalingPoint {
    std::size_t workers = 1;
    double runtime_s = 0.0;
    double efficiency_pct = 0.0;
    bool baseline_extrapolated = false;
};

/// E_G = (T_1 / T_G) / G * 100. 100 = ideal linear; super-linear values are
/// representable.
inline double scaling_efficiency(double t1, double tg, std::size_t workers) {
    if (!(t1 > 0.0) || !(tg > 0.0) || workers < 1)
        throw std::invalid_argument("scaling_efficiency: inputs must be positive");
    return (t1 / tg) / static_cast<double>(workers) * 100.0;
}

/// Proportional baseline extrapolation: when the 1-worker runtime at the
/// target axis value was never measured, scale the last measured 1-worker
/// point linearly in the axis variable.
inline double extrapolate_baseline(double last_axis_value, double last_runtime_s,
                                   double target_axis_value) {
    if (!(last_axis_value > 0.0) || !(last_runtime_s > 0.0) || !(target_axis_value > 0.0))
        throw std::invalid_argument("extrapolate_baseline: inputs must be positive");
    return last_runtime_s * (target_axis_value / last_axis_value);
}

}  // namespace toposom
