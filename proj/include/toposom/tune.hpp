#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "toposom/metrics.hpp"
#include "toposom/rng.hpp"
#include "toposom/sampling.hpp"
#include "toposom/stats.hpp"
#include "toposom/trainer.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Search space
// ---------------------------------------------------------------------------

struct NumericRange {
    double lo = 0.0;
    double hi = 1.0;
    bool log_scale = false;
};

/// Bounded random-search space. The four headline knobs (initial radius,
/// init method, radius decay, momentum use) anchor it; the remaining bounds
/// are conventional desk-scale choices and can be overridden per study.
/// Categorical declared orders (tie-break for the mode): decay linear before
/// exponential; init sample_draw, uniform_box, pca_plane; momentum off
/// before on.
struct SearchSpace {
    NumericRange eta0{0.05, 1.0, true};
    NumericRange sigma0{0.5, 8.0, true};
    NumericRange momentum{0.0, 0.9, false};
    NumericRange n_iters{10.0, 40.0, false};       // rounded to integer
    NumericRange warmup_frac{0.05, 0.30, false};   // of n_iters, rounded
    NumericRange growth{1.2, 3.0, false};
    std::vector<DecayKind> lr_decays{DecayKind::linear, DecayKind::exponential};
    std::vector<DecayKind> radius_decays{DecayKind::linear, DecayKind::exponential};
    std::vector<InitMethod> init_methods{InitMethod::sample_draw, InitMethod::uniform_box,
                                         InitMethod::pca_plane};
    std::vector<bool> momentum_use{false, true};

    void validate() const {
        for (const auto* r : {&eta0, &sigma0, &momentum, &n_iters, &warmup_frac, &growth})
            if (!(r->lo < r->hi))
                throw std::invalid_argument("search space: range lo must be < hi");
        if (lr_decays.empty() || radius_decays.empty() || init_methods.empty() ||
            momentum_use.empty())
            throw std::invalid_argument("search space: categorical sets must be nonempty");
    }
};

namespace detail {

inline double draw_numeric(const NumericRange& r, Rng& rng) {
    return r.log_scale ? rng.log_real(r.lo, r.hi) : rng.real(r.lo, r.hi);
}

template <typename T>
T draw_categorical(const std::vector<T>& set, Rng& rng) {
    return set[rng.index(set.size())];
}

}  // namespace detail

/// One random draw from the space, layered over a base config that supplies
/// everything not searched (topology, chunking, floors). The draw order is
/// fixed, so a given rng state always yields the same config.
inline SomConfig sample_trial(const SearchSpace& space, const SomConfig& base, Rng& rng) {
    space.validate();
    SomConfig config = base;
    config.eta0 = detail::draw_numeric(space.eta0, rng);
    config.sigma0 = detail::draw_numeric(space.sigma0, rng);
    config.momentum = detail::draw_numeric(space.momentum, rng);
    config.n_iters = static_cast<std::size_t>(std::llround(detail::draw_numeric(space.n_iters, rng)));
    const double warmup_frac = detail::draw_numeric(space.warmup_frac, rng);
    config.refresh.warmup_iters = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(warmup_frac * static_cast<double>(config.n_iters))));
    config.refresh.growth = detail::draw_numeric(space.growth, rng);
    config.lr_decay = detail::draw_categorical(space.lr_decays, rng);
    config.radius_decay = detail::draw_categorical(space.radius_decays, rng);
    config.init_method = detail::draw_categorical(space.init_methods, rng);
    config.use_momentum = detail::draw_categorical(space.momentum_use, rng);
    return config;
}

// ---------------------------------------------------------------------------
// Study execution
// ---------------------------------------------------------------------------

struct TrialRecord {
    SomConfig config;
    double qe_train = std::numeric_limits<double>::infinity();
    double qe_holdout = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    std::size_t trial_index = 0;
    bool failed = false;
    std::string failure;  // diagnostic for failed trials

    double qe_balanced() const { return (qe_train + qe_holdout) / 2.0; }
};

struct StudySpec {
    SomConfig base_config;
    SamplingKind sampling = SamplingKind::full;
    SamplingBudget budget;
    double sampler_alpha = 1.0;
    double sampler_beta = 1.0;
    std::size_t n_trials = 20;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Random search: n_trials configs per seed, each trained on the train split
/// and scored on both splits. A failing trial records the +infinity sentinel
/// and the study continues. `on_record` (optional) sees every record as soon
/// as it exists, so callers can flush partial results.
inline std::vector<TrialRecord> run_study(
    const SearchSpace& space, const StudySpec& spec, const DataSourceRef& train_data,
    const DataSourceRef& holdout_data,
    const std::function<void(const TrialRecord&)>& on_record = nullptr) {
    if (spec.n_trials < 1) throw std::invalid_argument("run_study: n_trials must be >= 1");
    if (spec.seeds.empty()) throw std::invalid_argument("run_study: need at least one seed");
    space.validate();
    std::vector<TrialRecord> records;
    records.reserve(spec.n_trials * spec.seeds.size());
    for (const std::uint64_t seed : spec.seeds) {
        for (std::size_t trial = 0; trial < spec.n_trials; ++trial) {
            Rng trial_rng(mix_seed(seed, trial), SeedStream::trial);
            TrialRecord rec;
            rec.seed = seed;
            rec.trial_index = trial;
            rec.config = sample_trial(space, spec.base_config, trial_rng);
            rec.config.seed = seed;
            try {
                Sampler sampler(spec.sampling, spec.budget, train_data.rows(), seed,
                                spec.sampler_alpha, spec.sampler_beta);
                auto [model, log] = train(rec.config, train_data, sampler);
                rec.qe_train = quantization_error(model, train_data);
                rec.qe_holdout = quantization_error(model, holdout_data);
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.failure = e.what();
                rec.qe_train = std::numeric_limits<double>::infinity();
                rec.qe_holdout = std::numeric_limits<double>::infinity();
            }
            if (on_record) on_record(rec);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Pareto front
// ---------------------------------------------------------------------------

/// Non-dominated records in (QE_T, QE_H): a record is dropped iff some other
/// record is <= in both objectives and < in at least one. Exact duplicates do
/// not dominate each other. Output preserves input order.
inline std::vector<TrialRecord> pareto_front(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("pareto_front: empty record set");
    const std::size_t n = records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].qe_train != records[b].qe_train)
            return records[a].qe_train < records[b].qe_train;
        if (records[a].qe_holdout != records[b].qe_holdout)
            return records[a].qe_holdout < records[b].qe_holdout;
        return a < b;
    });
    // Sweep in ascending qe_train: a point is dominated iff an already-seen
    // point has strictly lower qe_holdout, or equal qe_holdout with strictly
    // lower qe_train.
    std::vector<bool> keep(n, false);
    double min_qh = std::numeric_limits<double>::infinity();
    double min_qh_qt = std::numeric_limits<double>::infinity();
    for (const std::size_t idx : order) {
        const double qt = records[idx].qe_train, qh = records[idx].qe_holdout;
        if (qh < min_qh) {
            keep[idx] = true;
            min_qh = qh;
            min_qh_qt = qt;
        } else if (qh == min_qh && qt == min_qh_qt) {
            keep[idx] = true;  // exact duplicate of a front point
        }
    }
    std::vector<TrialRecord> front;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) front.push_back(records[i]);
    return front;
}

// ---------------------------------------------------------------------------
// Distillation and stability
// ---------------------------------------------------------------------------

/// Lowest-QE_B record per seed (failed trials ignored; ties go to the lower
/// trial index). Seeds whose every trial failed are dropped.
inline std::vector<TrialRecord> best_per_seed(const std::vector<TrialRecord>& records) {
    std::map<std::uint64_t, const TrialRecord*> best;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        auto [it, inserted] = best.try_emplace(rec.seed, &rec);
        if (!inserted && rec.qe_balanced() < it->second->qe_balanced()) it->second = &rec;
    }
    if (best.empty())
        throw std::runtime_error("best_per_seed: no finite-objective trials in the study");
    std::vector<TrialRecord> out;
    out.reserve(best.size());
    for (const auto& [seed, rec] : best) out.push_back(*rec);
    return out;
}

namespace detail {

template <typename T>
T mode_with_declared_order(const std::vector<T>& values, const std::vector<T>& declared) {
    T best = declared.front();
    std::size_t best_count = 0;
    for (const T& candidate : declared) {
        const auto count = static_cast<std::size_t>(
            std::count(values.begin(), values.end(), candidate));
        if (count > best_count) {  // strict: ties keep the earlier declared value
            best = candidate;
            best_count = count;
        }
    }
    return best;
}

}  // namespace detail

/// Collapse per-seed best configs into one deployable default: arithmetic
/// mean for numeric fields (integers rounded to nearest), mode for
/// categorical fields with ties resolved by declared order.
inline SomConfig distill_defaults(const std::vector<TrialRecord>& best_records) {
    if (best_records.empty()) throw std::invalid_argument("distill_defaults: empty input");
    const double n = static_cast<double>(best_records.size());
    SomConfig out = best_records.front().config;
    double eta0 = 0, sigma0 = 0, momentum = 0, iters = 0, warmup = 0, growth = 0;
    std::vector<DecayKind> lr, rd;
    std::vector<InitMethod> init;
    std::vector<bool> mom_use;
    for (const auto& rec : best_records) {
        const SomConfig& c = rec.config;
        eta0 += c.eta0;
        sigma0 += c.resolved_sigma0();
        momentum += c.momentum;
        iters += static_cast<double>(c.n_iters);
        warmup += static_cast<double>(c.resolved_refresh().warmup_iters);
        growth += c.refresh.growth;
        lr.push_back(c.lr_decay);
        rd.push_back(c.radius_decay);
        init.push_back(c.init_method);
        mom_use.push_back(c.use_momentum);
    }
    out.eta0 = eta0 / n;
    out.sigma0 = sigma0 / n;
    out.momentum = momentum / n;
    out.n_iters = static_cast<std::size_t>(std::llround(iters / n));
    out.refresh.warmup_iters = static_cast<std::size_t>(std::llround(warmup / n));
    out.refresh.growth = growth / n;
    out.lr_decay = detail::mode_with_declared_order(
        lr, {DecayKind::linear, DecayKind::exponential});
    out.radius_decay = detail::mode_with_declared_order(
        rd, {DecayKind::linear, DecayKind::exponential});
    out.init_method = detail::mode_with_declared_order(
        init, {InitMethod::sample_draw, InitMethod::uniform_box, InitMethod::pca_plane});
    out.use_momentum = detail::mode_with_declared_order(mom_use, {false, true});
    return out;
}

/// |a - b| / max(|a|, |b|, 1e-12) — the pairwise relative difference used by
/// the stability score.
inline double relative_difference(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-12});
}

struct StabilityReport {
    std::vector<std::pair<std::string, double>> numeric;      // per-parameter mean rel diff
    std::vector<std::pair<std::string, double>> categorical;  // per-parameter mismatch rate
    double categorical_mismatch_rate = 0.0;                   // mean over categorical params
    double overall = 0.0;                                     // equal-weight mean, all params
};

/// How consistently the per-seed winners agree: mean pairwise relative
/// difference per numeric parameter, mismatch rate per categorical parameter,
/// and an equal-weight overall mean. 0 = perfectly stable.
inline StabilityReport stability_score(const std::vector<TrialRecord>& best_records) {
    if (best_records.size() < 2)
        throw std::invalid_argument("stability_score: need best records from >= 2 seeds");
    const std::size_t n = best_records.size();

    const std::vector<std::pair<std::string, std::function<double(const SomConfig&)>>> numerics = {
        {"eta0", [](const SomConfig& c) { return c.eta0; }},
        {"sigma0", [](const SomConfig& c) { return c.resolved_sigma0(); }},
        {"momentum", [](const SomConfig& c) { return c.momentum; }},
        {"n_iters", [](const SomConfig& c) { return static_cast<double>(c.n_iters); }},
        {"refresh_warmup",
         [](const SomConfig& c) { return static_cast<double>(c.resolved_refresh().warmup_iters); }},
        {"refresh_growth", [](const SomConfig& c) { return c.refresh.growth; }},
    };
    const std::vector<std::pair<std::string, std::function<int(const SomConfig&)>>> categoricals = {
        {"lr_decay", [](const SomConfig& c) { return static_cast<int>(c.lr_decay); }},
        {"radius_decay", [](const SomConfig& c) { return static_cast<int>(c.radius_decay); }},
        {"init_method", [](const SomConfig& c) { return static_cast<int>(c.init_method); }},
        {"use_momentum", [](const SomConfig& c) { return c.use_momentum ? 1 : 0; }},
    };

    StabilityReport report;
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    double overall_sum = 0.0;
    for (const auto& [name, get] : numerics) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                sum += relative_difference(get(best_records[i].config),
                                           get(best_records[j].config));
        const double score = sum / pairs;
        report.numeric.emplace_back(name, score);
        overall_sum += score;
    }
    double cat_sum = 0.0;
    for (const auto& [name, get] : categoricals) {
        double mismatches = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (get(best_records[i].config) != get(best_records[j].config)) mismatches += 1.0;
        const double rate = mismatches / pairs;
        report.categorical.emplace_back(name, rate);
        cat_sum += rate;
        overall_sum += rate;
    }
    report.categorical_mismatch_rate = cat_sum / static_cast<double>(categoricals.size());
    report.overall = overall_sum / static_cast<double>(numerics.size() + categoricals.size());
    return report;
}

// ---------------------------------------------------------------------------
// Paired top-k condition comparison
// ---------------------------------------------------------------------------

/// One scored observation inside a matched unit (same dataset/seed/split).
struct UnitObservation {
    std::string unit;
    double metric = 0.0;  // lower is better
};

struct PairedEffect {
    std::string unit;
    double median_a = 0.0;
    double median_b = 0.0;
    double effect = 0.0;  // median_a - median_b; negative favors A
};

struct PairedSummary {
    std::vector<PairedEffect> effects;       // sorted by unit key
    std::vector<std::string> dropped_units;  // present in only one condition
};

namespace detail {

inline double median_of_sorted(const std::vector<double>& v) {
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double topk_median(std::vector<double> values, std::size_t k) {
    std::sort(values.begin(), values.end());
    if (values.size() > k) values.resize(k);
    return median_of_sorted(values);
}

}  // namespace detail

/// Per matched unit: rank each condition's trials ascending, keep the top k
/// (best) of each, summarize by the median, and report the A-minus-B
/// difference. Units present in only one condition are dropped and listed.
inline PairedSummary paired_topk_summary(const std::vector<UnitObservation>& condition_a,
                                         const std::vector<UnitObservation>& condition_b,
                                         std::size_t k = 5) {
    if (k < 1) throw std::invalid_argument("paired_topk_summary: k must be >= 1");
    std::map<std::string, std::vector<double>> by_unit_a, by_unit_b;
    for (const auto& obs : condition_a) by_unit_a[obs.unit].push_back(obs.metric);
    for (const auto& obs : condition_b) by_unit_b[obs.unit].push_back(obs.metric);

    PairedSummary summary;
    for (const auto& [unit, values_a] : by_unit_a) {
        const auto it = by_unit_b.find(unit);
        if (it == by_unit_b.end()) {
            summary.dropped_units.push_back(unit);
            continue;
        }
        PairedEffect e;
        e.unit = unit;
        e.median_a = detail::topk_median(values_a, k);
        e.median_b = detail::topk_median(it->second, k);
        e.effect = e.median_a - e.median_b;
        summary.effects.push_back(std::move(e));
    }
    for (const auto& [unit, values_b] : by_unit_b)
        if (by_unit_a.find(unit) == by_unit_a.end()) summary.dropped_units.push_back(unit);
    std::sort(summary.dropped_units.begin(), summary.dropped_units.end());
    return summary;
}

}  // namespace toposom
