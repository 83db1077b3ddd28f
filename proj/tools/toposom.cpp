// toposom command-line tool: shard, train, eval, bench, and tune subcommands
// over the header-only engine. Every failure names its pipeline stage on
// standard error and exits nonzero; output files are written atomically.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toposom/toposom.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Stage-tagged error handling
// ---------------------------------------------------------------------------

struct StageFailure : std::runtime_error {
    std::string stage;
    StageFailure(std::string stage_name, const std::string& message)
        : std::runtime_error(message), stage(std::move(stage_name)) {}
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(name, e.what());
    }
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Dataset plumbing
// ---------------------------------------------------------------------------

toposom::DataMatrix load_dataset(const toposom::DatasetSpec& spec, std::uint64_t seed) {
    switch (spec.source) {
        case toposom::DatasetSpec::Source::csv:
            return toposom::load_csv(spec.csv_path, spec.has_header);
        case toposom::DatasetSpec::Source::shards: {
            const auto shards = toposom::open_shards(spec.shard_dir, spec.chunk_rows);
            toposom::DataMatrix all(0, shards.n_cols);
            for (std::size_t s = 0; s < shards.shard_paths.size(); ++s) {
                const auto part = toposom::read_shard(shards, s);
                all.values.insert(all.values.end(), part.values.begin(), part.values.end());
                all.rows += part.rows;
            }
            return all;
        }
        case toposom::DatasetSpec::Source::synth:
            return toposom::make_synth(spec.synth, seed);
    }
    throw std::logic_error("unreachable dataset source");
}

ordered_json standardizer_json(const toposom::StandardizerParams& params) {
    return ordered_json{{"means", params.means}, {"std_devs", params.std_devs}};
}

toposom::StandardizerParams load_standardizer(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open standardizer file: " + path.string());
    const auto j = nlohmann::json::parse(in);
    toposom::StandardizerParams params;
    params.means = j.at("means").get<std::vector<double>>();
    params.std_devs = j.at("std_devs").get<std::vector<double>>();
    return params;
}

// ---------------------------------------------------------------------------
// Shared flag overrides (--seed, --workers, --topology, ...)
// ---------------------------------------------------------------------------

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> topology;
    std::optional<std::string> sampling;
    std::optional<std::size_t> budget;
    std::optional<double> rho;
    std::optional<std::string> out;
    std::optional<double> timeout_s;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--seed", ov.seed, "Override the run seed");
    cmd->add_option("--workers", ov.workers, "Override the worker count G");
    cmd->add_option("--topology", ov.topology, "Override topology kind: rect|hex|mst|rng");
    cmd->add_option("--sampling", ov.sampling, "Override sampling: full|random|adaptive");
    cmd->add_option("--budget", ov.budget, "Fixed per-iteration sample budget m0");
    cmd->add_option("--rho", ov.rho, "Proportional per-iteration sample fraction");
    cmd->add_option("--out", ov.out, "Override the output directory");
    cmd->add_option("--timeout-s", ov.timeout_s, "Per-run wall-clock timeout in seconds");
}

void apply_overrides(toposom::RunConfig& cfg, const Overrides& ov) {
    if (ov.seed) cfg.som.seed = *ov.seed;
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.topology) cfg.set_topology_kind(toposom::parse_topology_kind(*ov.topology));
    if (ov.sampling) cfg.sampling = toposom::parse_sampling_kind(*ov.sampling);
    if (ov.budget && ov.rho)
        throw std::runtime_error("--budget and --rho are mutually exclusive");
    if (ov.budget) {
        cfg.budget.mode = toposom::BudgetMode::fixed;
        cfg.budget.m0 = *ov.budget;
    }
    if (ov.rho) {
        cfg.budget.mode = toposom::BudgetMode::proportional;
        cfg.budget.rho = *ov.rho;
    }
    if (ov.out) cfg.out_dir = *ov.out;
    if (ov.timeout_s) cfg.timeout_s = *ov.timeout_s;
}

// ---------------------------------------------------------------------------
// shard
// ---------------------------------------------------------------------------

struct ShardArgs {
    std::string csv;
    bool header = false;
    std::string synth;
    std::string out_dir;
    std::size_t n_shards = 4;
    std::size_t chunk_rows = 4096;
    std::uint64_t seed = 0;
};

int cmd_shard(const ShardArgs& args) {
    const toposom::DataMatrix data = stage("dataset", [&] {
        if (args.csv.empty() == args.synth.empty())
            throw std::runtime_error("exactly one of --csv or --synth is required");
        if (!args.csv.empty()) return toposom::load_csv(args.csv, args.header);
        return toposom::make_synth(args.synth, args.seed);
    });
    const auto set = stage("output", [&] {
        return toposom::write_shards(data, args.out_dir, args.n_shards, args.chunk_rows);
    });
    ordered_json summary{{"shards", set.shard_paths.size()},
                         {"rows", set.total_rows()},
                         {"cols", set.n_cols},
                         {"dir", args.out_dir}};
    std::cout << summary.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

ordered_json log_entry_json(const toposom::IterationLogEntry& entry) {
    ordered_json j{{"iter", entry.iter},
                   {"eta", entry.eta},
                   {"sigma", entry.sigma},
                   {"refreshed", entry.refreshed}};
    if (entry.qe_train) j["qe_train"] = *entry.qe_train;
    return j;
}

int cmd_train(toposom::RunConfig cfg) {
    const toposom::DataMatrix raw =
        stage("dataset", [&] { return load_dataset(cfg.dataset, cfg.som.seed); });

    toposom::StandardizerParams std_params;
    toposom::DataMatrix train_data, holdout_data;
    stage("split", [&] {
        toposom::DataMatrix prepared;
        if (cfg.standardize) {
            std_params = toposom::fit_standardizer(raw);
            prepared = toposom::apply_standardizer(raw, std_params);
        } else {
            std_params.means.assign(raw.cols, 0.0);
            std_params.std_devs.assign(raw.cols, 1.0);
            prepared = raw;
        }
        auto [train_part, holdout_part] = toposom::split_train_holdout(
            prepared, toposom::SplitSpec{cfg.split_fraction, cfg.som.seed});
        train_data = std::move(train_part);
        holdout_data = std::move(holdout_part);
    });

    std::optional<toposom::ShardSet> train_shards, holdout_shards;
    if (cfg.emit_splits || cfg.disk_mode) {
        stage("split", [&] {
            const std::size_t n_shards = std::max<std::size_t>(1, cfg.workers);
            train_shards = toposom::write_shards(train_data, cfg.out_dir / "splits" / "train",
                                                 n_shards, cfg.dataset.chunk_rows);
            holdout_shards = toposom::write_shards(
                holdout_data, cfg.out_dir / "splits" / "holdout", n_shards,
                cfg.dataset.chunk_rows);
        });
    }

    const toposom::DataSourceRef train_src = cfg.disk_mode
                                                 ? toposom::DataSourceRef(*train_shards)
                                                 : toposom::DataSourceRef(train_data);
    const toposom::DataSourceRef holdout_src = cfg.disk_mode
                                                   ? toposom::DataSourceRef(*holdout_shards)
                                                   : toposom::DataSourceRef(holdout_data);

    toposom::SomModel model;
    toposom::RunLog run_log;
    stage("train", [&] {
        toposom::Sampler sampler(cfg.sampling, cfg.budget, train_src.rows(), cfg.som.seed,
                                 cfg.sampler_alpha, cfg.sampler_beta);
        toposom::TrainOptions options;
        options.log_qe = cfg.log_qe;
        options.timeout_s = cfg.timeout_s;
        auto [trained, log] =
            cfg.workers > 1
                ? toposom::train_parallel(cfg.som, train_src, sampler, cfg.workers, options)
                : toposom::train(cfg.som, train_src, sampler, options);
        model = std::move(trained);
        run_log = std::move(log);
    });

    const toposom::QeReport report =
        stage("eval", [&] { return toposom::qe_report(model, train_src, holdout_src); });

    stage("output", [&] {
        fs::create_directories(cfg.out_dir);
        toposom::save_model(model, cfg.out_dir / "model.fsom");
        std::ostringstream log_lines;
        for (const auto& entry : run_log.iterations) log_lines << log_entry_json(entry).dump() << "\n";
        write_text_atomic(cfg.out_dir / "run_log.jsonl", log_lines.str());
        const ordered_json report_json{{"qe_train", report.qe_train},
                                       {"qe_holdout", report.qe_holdout},
                                       {"qe_balanced", report.qe_balanced},
                                       {"reduce_count", run_log.reduce_count},
                                       {"barrier_wait_s", run_log.barrier_wait_s}};
        write_text_atomic(cfg.out_dir / "qe_report.json", report_json.dump(2) + "\n");
        write_text_atomic(cfg.out_dir / "standardizer.json",
                          standardizer_json(std_params).dump(2) + "\n");
        std::cout << report_json.dump() << "\n";
    });
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model_path;
    std::string csv;
    bool header = false;
    std::string shards;
    std::string synth;
    std::string standardizer;
    std::size_t chunk_rows = 4096;
    std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& args) {
    const toposom::SomModel model =
        stage("model", [&] { return toposom::load_model(args.model_path); });

    const int sources = (!args.csv.empty()) + (!args.shards.empty()) + (!args.synth.empty());
    if (sources != 1)
        throw StageFailure("dataset", "exactly one of --csv, --shards, --synth is required");

    // Shard input without restandardization streams from disk; everything
    // else is materialized.
    std::optional<toposom::ShardSet> shard_set;
    std::optional<toposom::DataMatrix> matrix;
    stage("dataset", [&] {
        if (!args.shards.empty() && args.standardizer.empty()) {
            shard_set = toposom::open_shards(args.shards, args.chunk_rows);
        } else {
            toposom::DatasetSpec spec;
            if (!args.csv.empty()) {
                spec.source = toposom::DatasetSpec::Source::csv;
                spec.csv_path = args.csv;
                spec.has_header = args.header;
            } else if (!args.shards.empty()) {
                spec.source = toposom::DatasetSpec::Source::shards;
                spec.shard_dir = args.shards;
            } else {
                spec.source = toposom::DatasetSpec::Source::synth;
                spec.synth = args.synth;
            }
            spec.chunk_rows = args.chunk_rows;
            matrix = load_dataset(spec, args.seed);
            if (!args.standardizer.empty())
                matrix = toposom::apply_standardizer(*matrix, load_standardizer(args.standardizer));
        }
        const std::size_t cols = shard_set ? shard_set->n_cols : matrix->cols;
        if (cols != model.weights.cols)
            throw std::runtime_error("dimension mismatch: model expects d=" +
                                     std::to_string(model.weights.cols) + ", data has d=" +
                                     std::to_string(cols));
    });

    const double qe = stage("eval", [&] {
        const toposom::DataSourceRef src = shard_set ? toposom::DataSourceRef(*shard_set)
                                                     : toposom::DataSourceRef(*matrix);
        return toposom::quantization_error(model, src);
    });
    const std::size_t rows = shard_set ? static_cast<std::size_t>(shard_set->total_rows())
                                       : matrix->rows;
    ordered_json out{{"qe", qe}, {"rows", rows}, {"dims", model.weights.cols}};
    std::cout << out.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string axis = "samples";
    std::vector<double> values;
    std::vector<std::size_t> workers{1, 2};
    std::vector<std::string> topologies{"hex"};
    std::string sampling = "full";
    double rho = 1.0;
    std::size_t repeats = 3;
    double timeout_s = 300.0;
    std::uint64_t seed = 0;
    std::string out_file;
    // Workload defaults with one axis overridden per record.
    std::size_t base_samples = 20000;
    std::size_t base_dims = 10;
    std::size_t base_grid = 16;
    std::size_t iters = 5;
};

int cmd_bench(const BenchArgs& args) {
    std::vector<double> values = args.values;
    if (values.empty()) {
        if (args.axis == "samples")
            values = {10000.0, 100000.0};
        else if (args.axis == "dims")
            values = {5.0, 50.0};
        else
            values = {8.0, 16.0};
    }
    if (args.axis != "samples" && args.axis != "dims" && args.axis != "grid")
        throw StageFailure("bench", "axis must be one of samples|dims|grid");

    std::ostringstream records;
    // Baselines for efficiency: (topology, axis value) -> 1-worker runtime.
    std::map<std::pair<std::string, double>, double> baselines;
    std::vector<std::size_t> worker_counts = args.workers;
    std::sort(worker_counts.begin(), worker_counts.end());

    stage("bench", [&] {
        const auto sampling_kind = toposom::parse_sampling_kind(args.sampling);
        for (const double value : values) {
            const auto samples = args.axis == "samples" ? static_cast<std::size_t>(value)
                                                        : args.base_samples;
            const auto dims = args.axis == "dims" ? static_cast<std::size_t>(value)
                                                  : args.base_dims;
            const auto side = args.axis == "grid" ? static_cast<std::size_t>(value)
                                                  : args.base_grid;
            const toposom::DataMatrix data = toposom::synth_uniform(samples, dims, args.seed);

            for (const std::string& topo_name : args.topologies) {
                const auto kind = toposom::parse_topology_kind(topo_name);
                toposom::SomConfig config;
                config.topology = toposom::is_lattice(kind)
                                      ? toposom::TopologySpec::lattice(kind, side, side)
                                      : toposom::TopologySpec::graph(kind, side * side);
                config.n_iters = args.iters;
                config.seed = args.seed;

                for (const std::size_t workers : worker_counts) {
                    ordered_json record{{"axis", args.axis},
                                        {"value", value},
                                        {"G", workers},
                                        {"topology", topo_name},
                                        {"sampling", args.sampling}};
                    toposom::SamplingBudget budget;
                    if (sampling_kind != toposom::SamplingKind::full) budget.rho = args.rho;
                    try {
                        const auto [mean_s, std_s] = toposom::time_run(
                            [&] {
                                toposom::Sampler sampler(sampling_kind, budget, data.rows,
                                                         args.seed);
                                toposom::TrainOptions options;
                                options.timeout_s = args.timeout_s;
                                if (workers > 1)
                                    toposom::train_parallel(config, data, sampler, workers,
                                                            options);
                                else
                                    toposom::train(config, data, sampler, options);
                            },
                            args.repeats);
                        record["runtime_mean_s"] = mean_s;
                        record["runtime_std_s"] = std_s;
                        if (workers == 1) {
                            baselines[{topo_name, value}] = mean_s;
                            record["efficiency_pct"] = 100.0;
                            record["extrapolated"] = false;
                        } else {
                            const auto exact = baselines.find({topo_name, value});
                            if (exact != baselines.end()) {
                                record["efficiency_pct"] =
                                    toposom::scaling_efficiency(exact->second, mean_s, workers);
                                record["extrapolated"] = false;
                            } else {
                                // Last measured 1-worker point for this topology
                                // at the largest smaller axis value, if any.
                                const std::pair<std::string, double>* best = nullptr;
                                double best_runtime = 0.0;
                                for (const auto& [key, runtime] : baselines)
                                    if (key.first == topo_name && key.second < value &&
                                        (!best || key.second > best->second)) {
                                        best = &key;
                                        best_runtime = runtime;
                                    }
                                if (best) {
                                    const double t1 = toposom::extrapolate_baseline(
                                        best->second, best_runtime, value);
                                    record["efficiency_pct"] =
                                        toposom::scaling_efficiency(t1, mean_s, workers);
                                } else {
                                    record["efficiency_pct"] = nullptr;
                                }
                                record["extrapolated"] = true;
                            }
                        }
                    } catch (const toposom::TrainTimeoutError&) {
                        record["runtime_mean_s"] = nullptr;
                        record["runtime_std_s"] = nullptr;
                        record["efficiency_pct"] = nullptr;
                        record["extrapolated"] = false;
                        record["timeout"] = true;
                    }
                    records << record.dump() << "\n";
                }
            }
        }
    });

    if (args.out_file.empty())
        std::cout << records.str();
    else
        stage("output", [&] { write_text_atomic(args.out_file, records.str()); });
    return 0;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

toposom::SearchSpace load_search_space(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open space file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    toposom::detail::KvReader kv(toposom::detail::parse_kv_text(buffer.str()));
    toposom::SearchSpace space;
    auto range = [&](const char* name, toposom::NumericRange& r) {
        r.lo = kv.num(std::string(name) + ".lo", r.lo);
        r.hi = kv.num(std::string(name) + ".hi", r.hi);
        const std::string scale = kv.str(std::string(name) + ".scale",
                                         r.log_scale ? "log" : "linear");
        if (scale != "log" && scale != "linear")
            throw std::runtime_error(std::string("space key '") + name +
                                     ".scale': expected log|linear");
        r.log_scale = scale == "log";
    };
    range("eta0", space.eta0);
    range("sigma0", space.sigma0);
    range("momentum", space.momentum);
    range("iters", space.n_iters);
    range("warmup_frac", space.warmup_frac);
    range("growth", space.growth);
    kv.check_all_consumed();
    space.validate();
    return space;
}

ordered_json trial_json(const toposom::TrialRecord& rec) {
    ordered_json params{{"eta0", rec.config.eta0},
                        {"sigma0", rec.config.sigma0},
                        {"momentum", rec.config.momentum},
                        {"use_momentum", rec.config.use_momentum},
                        {"iters", rec.config.n_iters},
                        {"refresh_warmup", rec.config.refresh.warmup_iters},
                        {"refresh_growth", rec.config.refresh.growth},
                        {"lr_decay", toposom::decay_kind_name(rec.config.lr_decay)},
                        {"radius_decay", toposom::decay_kind_name(rec.config.radius_decay)},
                        {"init", toposom::init_method_name(rec.config.init_method)}};
    ordered_json j{{"seed", rec.seed}, {"trial", rec.trial_index}, {"failed", rec.failed}};
    if (rec.failed) {
        j["qe_train"] = nullptr;
        j["qe_holdout"] = nullptr;
        j["qe_balanced"] = nullptr;
        j["error"] = rec.failure;
    } else {
        j["qe_train"] = rec.qe_train;
        j["qe_holdout"] = rec.qe_holdout;
        j["qe_balanced"] = rec.qe_balanced();
    }
    j["params"] = params;
    return j;
}

struct TuneArgs {
    std::string space_file;
    std::size_t trials = 20;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

int cmd_tune(toposom::RunConfig cfg, const TuneArgs& args) {
    const toposom::DataMatrix raw =
        stage("dataset", [&] { return load_dataset(cfg.dataset, cfg.som.seed); });

    toposom::DataMatrix train_data, holdout_data;
    stage("split", [&] {
        toposom::DataMatrix prepared = cfg.standardize
                                           ? toposom::apply_standardizer(
                                                 raw, toposom::fit_standardizer(raw))
                                           : raw;
        auto [train_part, holdout_part] = toposom::split_train_holdout(
            prepared, toposom::SplitSpec{cfg.split_fraction, cfg.som.seed});
        train_data = std::move(train_part);
        holdout_data = std::move(holdout_part);
    });

    const toposom::SearchSpace space = stage("space", [&] {
        return args.space_file.empty() ? toposom::SearchSpace{}
                                       : load_search_space(args.space_file);
    });

    const auto records = stage("tune", [&] {
        fs::create_directories(cfg.out_dir);
        std::ofstream trials_out(cfg.out_dir / "trials.jsonl", std::ios::trunc);
        if (!trials_out)
            throw std::runtime_error("cannot write " + (cfg.out_dir / "trials.jsonl").string());
        toposom::StudySpec study;
        study.base_config = cfg.som;
        study.sampling = cfg.sampling;
        study.budget = cfg.budget;
        study.sampler_alpha = cfg.sampler_alpha;
        study.sampler_beta = cfg.sampler_beta;
        study.n_trials = args.trials;
        study.seeds = args.seeds;
        // Stream each record to disk the moment it exists, so a late failure
        // cannot lose completed trials.
        return toposom::run_study(space, study, train_data, holdout_data,
                                  [&](const toposom::TrialRecord& rec) {
                                      trials_out << trial_json(rec).dump() << "\n";
                                      trials_out.flush();
                                  });
    });

    stage("distill", [&] {
        const auto best = toposom::best_per_seed(records);
        toposom::RunConfig defaults = cfg;
        defaults.som = toposom::distill_defaults(best);
        write_text_atomic(cfg.out_dir / "defaults.conf", toposom::serialize_run_config(defaults));
    });

    stage("stability", [&] {
        const auto best = toposom::best_per_seed(records);
        const auto report = toposom::stability_score(best);
        ordered_json numeric, categorical;
        for (const auto& [name, score] : report.numeric) numeric[name] = score;
        for (const auto& [name, rate] : report.categorical) categorical[name] = rate;
        const ordered_json j{{"numeric", numeric},
                             {"categorical", categorical},
                             {"categorical_mismatch_rate", report.categorical_mismatch_rate},
                             {"overall", report.overall}};
        write_text_atomic(cfg.out_dir / "stability.json", j.dump(2) + "\n");
    });

    std::size_t failed = 0;
    for (const auto& rec : records)
        if (rec.failed) ++failed;
    ordered_json summary{{"records", records.size()},
                         {"failed", failed},
                         {"out", cfg.out_dir.string()}};
    std::cout << summary.dump() << "\n";
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"toposom: topology-flexible self-organizing map engine"};
    app.require_subcommand(1);

    // shard
    ShardArgs shard_args;
    auto* shard_cmd = app.add_subcommand("shard", "Write a dataset as binary shards");
    shard_cmd->add_option("--csv", shard_args.csv, "Input CSV file");
    shard_cmd->add_flag("--header", shard_args.header, "CSV has a header row");
    shard_cmd->add_option("--synth", shard_args.synth,
                          "Synthetic spec: uniform:ROWSxCOLS | rings:ROWS:NOISE");
    shard_cmd->add_option("--out", shard_args.out_dir, "Output shard directory")->required();
    shard_cmd->add_option("--shards", shard_args.n_shards, "Number of shard files");
    shard_cmd->add_option("--chunk-rows", shard_args.chunk_rows, "Rows per streamed chunk");
    shard_cmd->add_option("--seed", shard_args.seed, "Seed for synthetic data");

    // train
    std::string train_config_path;
    Overrides train_ov;
    bool train_emit_splits = false, train_disk_mode = false, train_log_qe = false;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
    train_cmd->add_option("--config", train_config_path, "Run config file")->required();
    add_override_flags(train_cmd, train_ov);
    train_cmd->add_flag("--emit-splits", train_emit_splits,
                        "Write the standardized train/holdout splits as shards");
    train_cmd->add_flag("--disk-mode", train_disk_mode,
                        "Stream training data from the split shards on disk");
    train_cmd->add_flag("--log-qe", train_log_qe, "Log training QE every iteration");

    // eval
    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Quantization error of a model on a dataset");
    eval_cmd->add_option("--model", eval_args.model_path, "Model file")->required();
    eval_cmd->add_option("--csv", eval_args.csv, "CSV dataset");
    eval_cmd->add_flag("--header", eval_args.header, "CSV has a header row");
    eval_cmd->add_option("--shards", eval_args.shards, "Shard directory dataset");
    eval_cmd->add_option("--synth", eval_args.synth, "Synthetic dataset spec");
    eval_cmd->add_option("--standardizer", eval_args.standardizer,
                         "Standardizer JSON to apply before evaluation");
    eval_cmd->add_option("--chunk-rows", eval_args.chunk_rows, "Rows per streamed chunk");
    eval_cmd->add_option("--seed", eval_args.seed, "Seed for synthetic data");

    // bench
    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Scaling benchmark harness");
    bench_cmd->add_option("--axis", bench_args.axis, "Workload axis: samples|dims|grid");
    bench_cmd->add_option("--values", bench_args.values, "Axis values")->delimiter(',');
    bench_cmd->add_option("--workers-list", bench_args.workers, "Worker counts")->delimiter(',');
    bench_cmd->add_option("--topology-list", bench_args.topologies, "Topology kinds")
        ->delimiter(',');
    bench_cmd->add_option("--sampling", bench_args.sampling, "Sampling policy");
    bench_cmd->add_option("--rho", bench_args.rho, "Sample fraction for random/adaptive");
    bench_cmd->add_option("--repeats", bench_args.repeats, "Timed repetitions per point");
    bench_cmd->add_option("--timeout-s", bench_args.timeout_s, "Per-run timeout in seconds");
    bench_cmd->add_option("--seed", bench_args.seed, "Workload seed");
    bench_cmd->add_option("--out", bench_args.out_file, "Output JSON-lines file (default stdout)");
    bench_cmd->add_option("--samples", bench_args.base_samples, "Base sample count");
    bench_cmd->add_option("--dims", bench_args.base_dims, "Base feature dimension");
    bench_cmd->add_option("--grid", bench_args.base_grid, "Base grid side length");
    bench_cmd->add_option("--iters", bench_args.iters, "Training iterations per run");

    // tune
    std::string tune_config_path;
    Overrides tune_ov;
    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune", "Random-search hyperparameter study");
    tune_cmd->add_option("--config", tune_config_path, "Base run config file")->required();
    add_override_flags(tune_cmd, tune_ov);
    tune_cmd->add_option("--space", tune_args.space_file, "Search-space file");
    tune_cmd->add_option("--trials", tune_args.trials, "Trials per seed");
    tune_cmd->add_option("--seeds", tune_args.seeds, "Study seeds")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (shard_cmd->parsed()) return cmd_shard(shard_args);
        if (train_cmd->parsed()) {
            toposom::RunConfig cfg =
                stage("config", [&] { return toposom::load_run_config(train_config_path); });
            stage("config", [&] { apply_overrides(cfg, train_ov); });
            if (train_emit_splits) cfg.emit_splits = true;
            if (train_disk_mode) cfg.disk_mode = true;
            if (train_log_qe) cfg.log_qe = true;
            return cmd_train(std::move(cfg));
        }
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (bench_cmd->parsed()) return cmd_bench(bench_args);
        if (tune_cmd->parsed()) {
            toposom::RunConfig cfg =
                stage("config", [&] { return toposom::load_run_config(tune_config_path); });
            stage("config", [&] { apply_overrides(cfg, tune_ov); });
            return cmd_tune(std::move(cfg), tune_args);
        }
    } catch (const StageFailure& e) {
        std::cerr << "error [" << e.stage << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
