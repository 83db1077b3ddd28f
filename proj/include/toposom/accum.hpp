#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace toposom {

// ---------------------------------------------------------------------------
// Wide-precision iteration accumulators.
//
// Every term eta * h * (x - w) is quantized once to a 2^-40 fixed-point grid
// (signed 64-bit) and summed into 128-bit integers. Integer addition is
// exactly associative, so any regrouping of the same terms — across chunks,
// shards, or worker counts — produces bit-identical sums. That is what makes
// the chunk-count and worker-count equivalence guarantees exact rather than
// approximate.
//
// Resolution 2^-40 ~ 9.1e-13 sits below every tolerance and safeguard
// threshold in the trainer (H floor 1e-12). Magnitude guard: |term| must stay
// below 2^22, else quantization could overflow 63 bits; standardized data
// keeps real terms many orders of magnitude under that.
// ---------------------------------------------------------------------------

inline constexpr int kAccumFracBits = 40;
inline constexpr double kAccumScale = 1099511627776.0;        // 2^40
inline constexpr double kAccumMaxTerm = 4194304.0;            // 2^22

using AccumInt = __int128;

/// Quantize one accumulation term to the fixed-point grid.
inline std::int64_t quantize_term(double term) {
    if (!(std::fabs(term) < kAccumMaxTerm))
        throw std::runtime_error("numerical fault: accumulation term out of range (|term| >= 2^22)");
    return std::llrint(term * kAccumScale);
}

inline double dequantize(AccumInt v) {
    return static_cast<double>(v) / kAccumScale;
}

/// Per-iteration numerator/denominator pair: U is P x d, H is length P.
struct IterationAccumulators {
    std::size_t nodes = 0;
    std::size_t dims = 0;
    std::vector<AccumInt> u;  // P * d
    std::vector<AccumInt> h;  // P

    IterationAccumulators() = default;
    IterationAccumulators(std::size_t p, std::size_t d)
        : nodes(p), dims(d), u(p * d, 0), h(p, 0) {}

    void reset() {
        std::fill(u.begin(), u.end(), AccumInt{0});
        std::fill(h.begin(), h.end(), AccumInt{0});
    }

    void add_u(std::size_t node, std::size_t k, double term) {
        u[node * dims + k] += quantize_term(term);
    }
    void add_h(std::size_t node, double term) { h[node] += quantize_term(term); }

    double u_value(std::size_t node, std::size_t k) const {
        return dequantize(u[node * dims + k]);
    }
    double h_value(std::size_t node) const { return dequantize(h[node]); }

    /// Element-wise merge (worker reduce). Exact regardless of order.
    void merge(const IterationAccumulators& other) {
        if (other.nodes != nodes || other.dims != dims)
            throw std::invalid_argument("accumulator merge: shape mismatch");
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += other.u[i];
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += other.h[i];
    }

    bool operator==(const IterationAccumulators& other) const {
        return nodes == other.nodes && dims == other.dims && u == other.u && h == other.h;
    }
};

}  // namespace toposom
