#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toposom/sampling.hpp"
#include "toposom/trainer.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Run configuration: everything a training run needs, loadable from a flat
// key-value file ('#' comments) or a flat JSON object with the same keys.
// ---------------------------------------------------------------------------

struct DatasetSpec {
    enum class Source { csv, shards, synth };
    Source source = Source::synth;
    std::filesystem::path csv_path;
    bool has_header = false;
    std::filesystem::path shard_dir;
    std::string synth = "rings:2000:0.05";  // "uniform:ROWSxCOLS" | "rings:ROWS:NOISE"
    std::size_t chunk_rows = 4096;
};

struct RunConfig {
    DatasetSpec dataset;
    bool standardize = true;
    double split_fraction = 0.7;
    SomConfig som;
    // Raw shape values retained so a --topology override can rebuild the
    // TopologySpec from them.
    std::size_t grid_w = 8;
    std::size_t grid_h = 8;
    std::size_t graph_nodes = 64;
    SamplingKind sampling = SamplingKind::full;
    SamplingBudget budget;  // proportional rho = 1.0 unless set
    double sampler_alpha = 1.0;
    double sampler_beta = 1.0;
    std::size_t workers = 1;
    std::filesystem::path out_dir = "out";
    double timeout_s = 300.0;  // desk-scale default; large studies may raise it
    bool log_qe = false;
    bool emit_splits = false;   // write standardized split shards under out/splits/
    bool disk_mode = false;     // train by streaming the split shards from disk

    /// Rebuild som.topology from the stored shape values for a (new) kind.
    void set_topology_kind(TopologyKind kind) {
        const std::size_t chunk = som.topology.chunk_size;
        som.topology = is_lattice(kind) ? TopologySpec::lattice(kind, grid_w, grid_h, chunk)
                                        : TopologySpec::graph(kind, graph_nodes, chunk);
    }
};

namespace detail {

using KvMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

/// Flat "key = value" lines; '#' starts a comment anywhere on a line.
inline KvMap parse_kv_text(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw std::runtime_error("config: duplicate key '" + key + "'");
    }
    return kv;
}

/// JSON alternative: one flat object, same keys, scalar values.
inline KvMap parse_kv_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::runtime_error("config json: expected a flat object");
    KvMap kv;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string())
            kv[key] = value.get<std::string>();
        else if (value.is_boolean())
            kv[key] = value.get<bool>() ? "true" : "false";
        else if (value.is_number())
            kv[key] = value.dump();
        else
            throw std::runtime_error("config json: key '" + key + "' must be a scalar");
    }
    return kv;
}

class KvReader {
public:
    explicit KvReader(KvMap kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) {
        return kv_.count(key) != 0;
    }
    std::string str(const std::string& key, const std::string& fallback) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        return it->second;
    }
    double num(const std::string& key, double fallback) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        double v = 0.0;
        const char* first = it->second.data();
        const char* last = first + it->second.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw std::runtime_error("config key '" + key + "': '" + it->second +
                                     "' is not a number");
        return v;
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        const double v = num(key, static_cast<double>(fallback));
        if (v < 0 || v != std::floor(v))
            throw std::runtime_error("config key '" + key + "': expected a non-negative integer");
        return static_cast<std::size_t>(v);
    }
    bool flag(const std::string& key, bool fallback) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw std::runtime_error("config key '" + key + "': expected true/false, got '" +
                                 it->second + "'");
    }
    /// Every present key must have been consumed; catches typos.
    void check_all_consumed() const {
        for (const auto& [key, value] : kv_)
            if (seen_.find(key) == seen_.end())
                throw std::runtime_error("config: unknown key '" + key + "'");
    }

private:
    KvMap kv_;
    std::set<std::string> seen_;
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parse a config from text (auto-detects JSON by a leading '{' or '[';
/// arrays are routed to the JSON parser so they fail with a JSON-shaped
/// diagnostic rather than a key-value syntax error).
inline RunConfig parse_run_config(const std::string& text) {
    std::size_t first = 0;
    while (first < text.size() &&
           (text[first] == ' ' || text[first] == '\t' || text[first] == '\n' ||
            text[first] == '\r'))
        ++first;
    detail::KvReader kv((first < text.size() && (text[first] == '{' || text[first] == '['))
                            ? detail::parse_kv_json(text)
                            : detail::parse_kv_text(text));

    RunConfig cfg;
    // --- dataset source: exactly one of data.csv / data.shards / data.synth
    const std::string csv = kv.str("data.csv", "");
    const std::string shards = kv.str("data.shards", "");
    const std::string synth = kv.str("data.synth", "");
    const int sources = (!csv.empty()) + (!shards.empty()) + (!synth.empty());
    if (sources != 1)
        throw std::runtime_error("config: exactly one of data.csv, data.shards, data.synth "
                                 "must be set");
    if (!csv.empty()) {
        cfg.dataset.source = DatasetSpec::Source::csv;
        cfg.dataset.csv_path = csv;
    } else if (!shards.empty()) {
        cfg.dataset.source = DatasetSpec::Source::shards;
        cfg.dataset.shard_dir = shards;
    } else {
        cfg.dataset.source = DatasetSpec::Source::synth;
        cfg.dataset.synth = synth;
    }
    cfg.dataset.has_header = kv.flag("data.header", false);
    cfg.dataset.chunk_rows = kv.count("data.chunk_rows", cfg.dataset.chunk_rows);
    cfg.standardize = kv.flag("standardize", cfg.standardize);
    cfg.split_fraction = kv.num("split.fraction", cfg.split_fraction);

    // --- topology
    const auto kind = parse_topology_kind(kv.str("topology", "hex"));
    cfg.grid_w = kv.count("grid.width", cfg.grid_w);
    cfg.grid_h = kv.count("grid.height", cfg.grid_h);
    cfg.graph_nodes = kv.count("nodes", cfg.graph_nodes);
    cfg.som.topology.chunk_size = kv.count("topology.chunk", 256);
    cfg.set_topology_kind(kind);

    // --- training
    cfg.som.n_iters = kv.count("iters", cfg.som.n_iters);
    cfg.som.eta0 = kv.num("eta0", cfg.som.eta0);
    cfg.som.lr_decay = parse_decay_kind(kv.str("lr_decay", decay_kind_name(cfg.som.lr_decay)));
    cfg.som.sigma0 = kv.num("sigma0", cfg.som.sigma0);
    cfg.som.radius_decay =
        parse_decay_kind(kv.str("radius_decay", decay_kind_name(cfg.som.radius_decay)));
    cfg.som.sigma_min = kv.num("sigma_min", cfg.som.sigma_min);
    cfg.som.init_method =
        parse_init_method(kv.str("init", init_method_name(cfg.som.init_method)));
    cfg.som.use_momentum = kv.flag("use_momentum", cfg.som.use_momentum);
    cfg.som.momentum = kv.num("momentum", cfg.som.momentum);
    cfg.som.n_chunks = kv.count("chunks", cfg.som.n_chunks);
    cfg.som.refresh.warmup_iters = kv.count("refresh.warmup", cfg.som.refresh.warmup_iters);
    cfg.som.refresh.growth = kv.num("refresh.growth", cfg.som.refresh.growth);
    cfg.som.refresh.max_interval = kv.count("refresh.max_interval", cfg.som.refresh.max_interval);
    cfg.som.seed = static_cast<std::uint64_t>(kv.count("seed", 0));

    // --- sampling
    cfg.sampling = parse_sampling_kind(kv.str("sampling", sampling_kind_name(cfg.sampling)));
    if (kv.has("budget") && kv.has("rho"))
        throw std::runtime_error("config: budget and rho are mutually exclusive");
    if (kv.has("budget")) {
        cfg.budget.mode = BudgetMode::fixed;
        cfg.budget.m0 = kv.count("budget", 0);
    } else {
        cfg.budget.mode = BudgetMode::proportional;
        cfg.budget.rho = kv.num("rho", cfg.budget.rho);
    }
    cfg.sampler_alpha = kv.num("adaptive.alpha", cfg.sampler_alpha);
    cfg.sampler_beta = kv.num("adaptive.beta", cfg.sampler_beta);

    // --- run
    cfg.workers = kv.count("workers", cfg.workers);
    cfg.out_dir = kv.str("out", cfg.out_dir.string());
    cfg.timeout_s = kv.num("timeout_s", cfg.timeout_s);
    cfg.log_qe = kv.flag("log_qe", cfg.log_qe);
    cfg.emit_splits = kv.flag("emit_splits", cfg.emit_splits);
    cfg.disk_mode = kv.flag("disk_mode", cfg.disk_mode);

    kv.check_all_consumed();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

/// Emit a config in the flat key-value grammar; parse_run_config round-trips
/// it. Used verbatim for distilled-defaults files.
inline std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "# toposom run configuration\n";
    switch (cfg.dataset.source) {
        case DatasetSpec::Source::csv:
            out << "data.csv = " << cfg.dataset.csv_path.string() << "\n";
            out << "data.header = " << (cfg.dataset.has_header ? "true" : "false") << "\n";
            break;
        case DatasetSpec::Source::shards:
            out << "data.shards = " << cfg.dataset.shard_dir.string() << "\n";
            break;
        case DatasetSpec::Source::synth:
            out << "data.synth = " << cfg.dataset.synth << "\n";
            break;
    }
    out << "data.chunk_rows = " << cfg.dataset.chunk_rows << "\n";
    out << "standardize = " << (cfg.standardize ? "true" : "false") << "\n";
    out << "split.fraction = " << detail::format_double(cfg.split_fraction) << "\n";
    out << "topology = " << topology_kind_name(cfg.som.topology.kind) << "\n";
    out << "grid.width = " << cfg.grid_w << "\n";
    out << "grid.height = " << cfg.grid_h << "\n";
    out << "nodes = " << cfg.graph_nodes << "\n";
    out << "topology.chunk = " << cfg.som.topology.chunk_size << "\n";
    out << "iters = " << cfg.som.n_iters << "\n";
    out << "eta0 = " << detail::format_double(cfg.som.eta0) << "\n";
    out << "lr_decay = " << decay_kind_name(cfg.som.lr_decay) << "\n";
    out << "sigma0 = " << detail::format_double(cfg.som.sigma0) << "\n";
    out << "radius_decay = " << decay_kind_name(cfg.som.radius_decay) << "\n";
    out << "sigma_min = " << detail::format_double(cfg.som.sigma_min) << "\n";
    out << "init = " << init_method_name(cfg.som.init_method) << "\n";
    out << "use_momentum = " << (cfg.som.use_momentum ? "true" : "false") << "\n";
    out << "momentum = " << detail::format_double(cfg.som.momentum) << "\n";
    out << "chunks = " << cfg.som.n_chunks << "\n";
    out << "refresh.warmup = " << cfg.som.refresh.warmup_iters << "\n";
    out << "refresh.growth = " << detail::format_double(cfg.som.refresh.growth) << "\n";
    out << "refresh.max_interval = " << cfg.som.refresh.max_interval << "\n";
    out << "seed = " << cfg.som.seed << "\n";
    out << "sampling = " << sampling_kind_name(cfg.sampling) << "\n";
    if (cfg.budget.mode == BudgetMode::fixed)
        out << "budget = " << cfg.budget.m0 << "\n";
    else
        out << "rho = " << detail::format_double(cfg.budget.rho) << "\n";
    out << "adaptive.alpha = " << detail::format_double(cfg.sampler_alpha) << "\n";
    out << "adaptive.beta = " << detail::format_double(cfg.sampler_beta) << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "out = " << cfg.out_dir.string() << "\n";
    out << "timeout_s = " << detail::format_double(cfg.timeout_s) << "\n";
    out << "log_qe = " << (cfg.log_qe ? "true" : "false") << "\n";
    out << "emit_splits = " << (cfg.emit_splits ? "true" : "false") << "\n";
    out << "disk_mode = " << (cfg.disk_mode ? "true" : "false") << "\n";
    return out.str();
}

/// Parse a synth spec: "uniform:ROWSxCOLS" or "rings:ROWS:NOISE".
inline DataMatrix make_synth(const std::string& spec, std::uint64_t seed) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::runtime_error("synth spec '" + spec +
                                 "': expected uniform:ROWSxCOLS or rings:ROWS:NOISE");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    auto parse_count = [&](const std::string& s) -> std::size_t {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw std::runtime_error("synth spec '" + spec + "': bad count '" + s + "'");
        return v;
    };
    if (kind == "uniform") {
        const auto x = rest.find('x');
        if (x == std::string::npos)
            throw std::runtime_error("synth spec '" + spec + "': expected uniform:ROWSxCOLS");
        return synth_uniform(parse_count(rest.substr(0, x)), parse_count(rest.substr(x + 1)),
                             seed);
    }
    if (kind == "rings") {
        const auto colon2 = rest.find(':');
        if (colon2 == std::string::npos)
            throw std::runtime_error("synth spec '" + spec + "': expected rings:ROWS:NOISE");
        const std::string noise_str = rest.substr(colon2 + 1);
        double noise = 0.0;
        auto [ptr, ec] =
            std::from_chars(noise_str.data(), noise_str.data() + noise_str.size(), noise);
        if (ec != std::errc() || ptr != noise_str.data() + noise_str.size())
            throw std::runtime_error("synth spec '" + spec + "': bad noise '" + noise_str + "'");
        return synth_rings(parse_count(rest.substr(0, colon2)), noise, seed);
    }
    throw std::runtime_error("synth spec '" + spec + "': unknown generator '" + kind + "'");
}

}  // namespace toposom
