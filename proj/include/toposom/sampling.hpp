#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "toposom/rng.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Per-iteration budget
// ---------------------------------------------------------------------------

enum class BudgetMode { fixed, proportional };

struct SamplingBudget {
    BudgetMode mode = BudgetMode::proportional;
    std::size_t m0 = 0;   // fixed mode
    double rho = 1.0;     // proportional mode, in (0, 1]
};

/// Resolved per-iteration sample count: m0 when fixed, else max(1, floor(N*rho)).
inline std::size_t resolve_budget(const SamplingBudget& budget, std::size_t n) {
    if (n < 1) throw std::invalid_argument("resolve_budget: N must be >= 1");
    if (budget.mode == BudgetMode::fixed) {
        if (budget.m0 == 0) throw std::invalid_argument("resolve_budget: fixed budget m0 must be >= 1");
        return budget.m0;
    }
    if (!(budget.rho > 0.0 && budget.rho <= 1.0))
        throw std::invalid_argument("resolve_budget: rho must be in (0, 1]");
    const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(n) * budget.rho));
    return std::max<std::size_t>(1, m);
}

// ---------------------------------------------------------------------------
// Selectors. Each returns a sorted list of distinct row indices.
// ---------------------------------------------------------------------------

inline std::vector<std::uint32_t> select_full(std::size_t n) {
    if (n < 1) throw std::invalid_argument("select_full: N must be >= 1");
    std::vector<std::uint32_t> out(n);
    std::iota(out.begin(), out.end(), 0u);
    return out;
}

/// Uniform size-m subset without replacement (Floyd's algorithm, hash-set
/// membership so the draw stays O(m) for large budgets); with m >= N the full
/// index set is returned. A fresh draw advances rng on every call.
inline std::vector<std::uint32_t> select_random(std::size_t n, std::size_t m, Rng& rng) {
    if (n < 1) throw std::invalid_argument("select_random: N must be >= 1");
    if (m < 1) throw std::invalid_argument("select_random: m must be >= 1");
    if (m >= n) return select_full(n);
    std::unordered_set<std::uint32_t> taken;
    taken.reserve(m * 2);
    std::vector<std::uint32_t> out;
    out.reserve(m);
    // Floyd: for j = n-m .. n-1, draw t in [0, j]; insert t unless taken, else j.
    for (std::size_t j = n - m; j < n; ++j) {
        const auto t = static_cast<std::uint32_t>(rng.index(j + 1));
        const auto pick = taken.insert(t).second ? t : static_cast<std::uint32_t>(j);
        if (pick != t) taken.insert(pick);
        out.push_back(pick);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive (error/staleness weighted) selector
// ---------------------------------------------------------------------------

/// last_error sentinel for samples that have never been visited; makes the
/// first epochs prioritise coverage.
inline constexpr double kUnseenError = 1e30;

struct AdaptiveSamplerState {
    std::vector<double> last_error;  // last observed quantization distance
    std::vector<std::uint32_t> age;  // iterations since last selection
    double alpha = 1.0;              // difficulty weight exponent
    double beta = 1.0;               // staleness weight exponent

    AdaptiveSamplerState() = default;
    AdaptiveSamplerState(std::size_t n, double alpha_ = 1.0, double beta_ = 1.0)
        : last_error(n, kUnseenError), age(n, 0), alpha(alpha_), beta(beta_) {}
};

/// Weighted sampling without replacement via exponential keys: each index
/// gets key = -ln(u)/w_i and the m smallest keys win. Weights combine
/// normalized error and age, w_i = (err_i/max_err)^alpha + (age_i/max_age)^beta,
/// with both maxima floored at 1e-12. Never-seen samples (sentinel error) rank
/// strictly ahead of seen ones regardless of weight, so the first epochs cover
/// the whole dataset before difficulty takes over; ties within each class are
/// still broken by the keys, which keeps the draw uniform among the unseen.
inline std::vector<std::uint32_t> select_adaptive(const AdaptiveSamplerState& state,
                                                  std::size_t m, Rng& rng) {
    const std::size_t n = state.last_error.size();
    if (n < 1) throw std::invalid_argument("select_adaptive: state must cover N >= 1 samples");
    if (m < 1) throw std::invalid_argument("select_adaptive: m must be >= 1");
    m = std::min(m, n);

    double max_err = 0.0, max_age = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_err = std::max(max_err, state.last_error[i]);
        max_age = std::max(max_age, static_cast<double>(state.age[i]));
    }
    max_err = std::max(max_err, 1e-12);
    max_age = std::max(max_age, 1e-12);

    struct Ranked {
        bool seen;
        double key;
        std::uint32_t index;
        bool operator<(const Ranked& o) const {
            return seen != o.seen ? !seen : key < o.key;
        }
    };
    std::vector<Ranked> keys;
    keys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::pow(state.last_error[i] / max_err, state.alpha) +
                         std::pow(static_cast<double>(state.age[i]) / max_age, state.beta);
        // real01() is in [0, 1); flip to (0, 1] so the log is finite.
        const double u = 1.0 - rng.real01();
        const double key = w > 0.0 ? -std::log(u) / w : std::numeric_limits<double>::infinity();
        keys.push_back({state.last_error[i] != kUnseenError, key, static_cast<std::uint32_t>(i)});
    }
    std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m - 1), keys.end());
    std::vector<std::uint32_t> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = keys[i].index;
    std::sort(out.begin(), out.end());
    return out;
}

/// Record observed distances for the selected rows and advance ages: selected
/// rows reset to age 0, everything else ages by one iteration.
inline void update_adaptive(AdaptiveSamplerState& state,
                            const std::vector<std::uint32_t>& selected,
                            const std::vector<double>& distances) {
    if (selected.size() != distances.size())
        throw std::invalid_argument("update_adaptive: need one distance per selected index");
    for (auto& a : state.age) ++a;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const std::uint32_t idx = selected[i];
        if (idx >= state.last_error.size())
            throw std::out_of_range("update_adaptive: index " + std::to_string(idx) +
                                    " out of range");
        state.last_error[idx] = distances[i];
        state.age[idx] = 0;
    }
}

// ---------------------------------------------------------------------------
// Unified per-run sampler
// ---------------------------------------------------------------------------

enum class SamplingKind { full, random_subset, adaptive };

inline SamplingKind parse_sampling_kind(const std::string& s) {
    if (s == "full") return SamplingKind::full;
    if (s == "random") return SamplingKind::random_subset;
    if (s == "adaptive") return SamplingKind::adaptive;
    throw std::invalid_argument("unknown sampling kind: '" + s + "'");
}

inline const char* sampling_kind_name(SamplingKind k) {
    switch (k) {
        case SamplingKind::full: return "full";
        case SamplingKind::random_subset: return "random";
        case SamplingKind::adaptive: return "adaptive";
    }
    return "?";
}

/// Owns selector state for one training run and hands out one index set per
/// iteration. Single-owner: calls are serialized by the training loop.
class Sampler {
public:
    Sampler(SamplingKind kind, SamplingBudget budget, std::size_t n, std::uint64_t seed,
            double alpha = 1.0, double beta = 1.0)
        : kind_(kind),
          budget_(budget),
          n_(n),
          rng_(seed, SeedStream::sampler),
          adaptive_(kind == SamplingKind::adaptive ? AdaptiveSamplerState(n, alpha, beta)
                                                   : AdaptiveSamplerState()) {}

    SamplingKind kind() const { return kind_; }
    std::size_t budget() const { return resolve_budget(budget_, n_); }

    std::vector<std::uint32_t> select() {
        switch (kind_) {
            case SamplingKind::full: return select_full(n_);
            case SamplingKind::random_subset: return select_random(n_, budget(), rng_);
            case SamplingKind::adaptive: return select_adaptive(adaptive_, budget(), rng_);
        }
        throw std::logic_error("unreachable sampling kind");
    }

    /// Feed back per-sample quantization distances for the adaptive policy;
    /// a no-op for full/random.
    void observe(const std::vector<std::uint32_t>& selected,
                 const std::vector<double>& distances) {
        if (kind_ == SamplingKind::adaptive) update_adaptive(adaptive_, selected, distances);
    }

    const AdaptiveSamplerState& adaptive_state() const { return adaptive_; }

private:
    SamplingKind kind_;
    SamplingBudget budget_;
    std::size_t n_;
    Rng rng_;
    AdaptiveSamplerState adaptive_;
};

}  // namespace toposom
