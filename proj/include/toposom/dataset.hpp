#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "toposom/matrix.hpp"
#include "toposom/rng.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

inline constexpr double kStdDevFloor = 1e-12;

struct StandardizerParams {
    std::vector<double> means;
    std::vector<double> std_devs;  // population std, floored at kStdDevFloor
};

/// Column means and population standard deviations.
inline StandardizerParams fit_standardizer(const DataMatrix& data) {
    if (data.rows < 1) throw std::invalid_argument("fit_standardizer: empty data");
    const std::size_t d = data.cols;
    StandardizerParams p;
    p.means.assign(d, 0.0);
    p.std_devs.assign(d, 0.0);
    for (std::size_t i = 0; i < data.rows; ++i) {
        const float* r = data.row(i);
        for (std::size_t k = 0; k < d; ++k) p.means[k] += r[k];
    }
    for (std::size_t k = 0; k < d; ++k) p.means[k] /= static_cast<double>(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) {
        const float* r = data.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = r[k] - p.means[k];
            p.std_devs[k] += diff * diff;
        }
    }
    for (std::size_t k = 0; k < d; ++k)
        p.std_devs[k] = std::max(kStdDevFloor,
                                 std::sqrt(p.std_devs[k] / static_cast<double>(data.rows)));
    return p;
}

inline DataMatrix apply_standardizer(const DataMatrix& data, const StandardizerParams& p) {
    if (p.means.size() != data.cols || p.std_devs.size() != data.cols)
        throw std::invalid_argument("apply_standardizer: column count mismatch");
    DataMatrix out(data.rows, data.cols);
    for (std::size_t i = 0; i < data.rows; ++i) {
        const float* src = data.row(i);
        float* dst = out.row(i);
        for (std::size_t k = 0; k < data.cols; ++k)
            dst[k] = static_cast<float>((src[k] - p.means[k]) / p.std_devs[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline float parse_cell(const std::string& cell, std::size_t line_no, std::size_t col_no) {
    float v = 0.0f;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' || *(last - 1) == '\r')) --last;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw std::runtime_error("csv parse error at row " + std::to_string(line_no) +
                                 ", column " + std::to_string(col_no) + ": '" +
                                 std::string(first, last) + "' is not a finite number");
    return v;
}

}  // namespace detail

/// Comma-separated values, '.' decimal point, optional single header row.
/// Row/column numbers in error messages are 1-based over data rows.
inline DataMatrix load_csv(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path.string());
    std::string line;
    std::vector<float> values;
    std::size_t cols = 0, rows = 0, line_no = 0;
    bool skipped_header = !has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        ++rows;
        std::size_t col = 0, start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell =
                line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            ++col;
            values.push_back(detail::parse_cell(cell, rows, col));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols == 0) {
            cols = col;
        } else if (col != cols) {
            throw std::runtime_error("csv ragged row " + std::to_string(rows) + ": expected " +
                                     std::to_string(cols) + " columns, got " + std::to_string(col));
        }
    }
    if (rows == 0) throw std::runtime_error("csv file has no data rows: " + path.string());
    return DataMatrix(rows, cols, std::move(values));
}

// ---------------------------------------------------------------------------
// Deterministic train/holdout split
// ---------------------------------------------------------------------------

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
};

/// Seeded Fisher-Yates permutation (mt19937_64), then a contiguous cut:
/// first floor(train_fraction * n) permuted rows form the train partition.
inline std::pair<DataMatrix, DataMatrix> split_train_holdout(const DataMatrix& data,
                                                             const SplitSpec& spec) {
    if (data.rows < 2) throw std::invalid_argument("split: need at least 2 rows");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    const std::size_t n = data.rows;
    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw std::invalid_argument("split: a partition would be empty");

    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng(spec.seed, SeedStream::split);
    rng.shuffle(perm);

    DataMatrix train(n_train, data.cols);
    DataMatrix holdout(n - n_train, data.cols);
    for (std::size_t i = 0; i < n_train; ++i)
        std::memcpy(train.row(i), data.row(perm[i]), data.cols * sizeof(float));
    for (std::size_t i = n_train; i < n; ++i)
        std::memcpy(holdout.row(i - n_train), data.row(perm[i]), data.cols * sizeof(float));
    return {std::move(train), std::move(holdout)};
}

// ---------------------------------------------------------------------------
// Binary shard format
//
// Fixed little-endian layout:
//   magic "FSOMSHRD" (8 bytes)
//   version   u32 = 1
//   n_rows    u64
//   n_cols    u32
//   n_rows * n_cols float32, row-major
// ---------------------------------------------------------------------------

inline constexpr char kShardMagic[8] = {'F', 'S', 'O', 'M', 'S', 'H', 'R', 'D'};
inline constexpr std::uint32_t kShardVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "shard and model formats assume a little-endian host");

struct ShardSet {
    std::vector<std::filesystem::path> shard_paths;
    std::vector<std::uint64_t> rows_per_shard;
    std::uint32_t n_cols = 0;
    std::size_t chunk_rows = 4096;

    std::uint64_t total_rows() const {
        return std::accumulate(rows_per_shard.begin(), rows_per_shard.end(),
                               std::uint64_t{0});
    }
    /// Global row index of the first row of shard `s`.
    std::uint64_t row_offset(std::size_t s) const {
        return std::accumulate(rows_per_shard.begin(), rows_per_shard.begin() + s,
                               std::uint64_t{0});
    }
};

namespace detail {

template <typename T>
void write_le(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

struct ShardHeader {
    std::uint64_t n_rows;
    std::uint32_t n_cols;
};

inline ShardHeader read_shard_header(std::istream& in, const std::filesystem::path& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kShardMagic, 8) != 0)
        throw std::runtime_error("not a shard file (bad magic): " + path.string());
    const auto version = read_le<std::uint32_t>(in);
    if (version != kShardVersion)
        throw std::runtime_error("unsupported shard version " + std::to_string(version) +
                                 " in " + path.string());
    ShardHeader h{read_le<std::uint64_t>(in), read_le<std::uint32_t>(in)};
    if (!in) throw std::runtime_error("truncated shard header: " + path.string());
    return h;
}

inline void write_one_shard(const std::filesystem::path& path, const float* rows,
                            std::uint64_t n_rows, std::uint32_t n_cols) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write shard file: " + path.string());
    out.write(kShardMagic, 8);
    write_le(out, kShardVersion);
    write_le(out, n_rows);
    write_le(out, n_cols);
    out.write(reinterpret_cast<const char*>(rows),
              static_cast<std::streamsize>(n_rows * n_cols * sizeof(float)));
    if (!out) throw std::runtime_error("shard write failed: " + path.string());
}

}  // namespace detail

/// Partition rows into contiguous near-equal blocks (sizes differ by at most
/// one row) and write one shard file per block.
inline ShardSet write_shards(const DataMatrix& data, const std::filesystem::path& out_dir,
                             std::size_t n_shards, std::size_t chunk_rows) {
    if (n_shards < 1) throw std::invalid_argument("write_shards: n_shards must be >= 1");
    if (chunk_rows < 1) throw std::invalid_argument("write_shards: chunk_rows must be >= 1");
    std::filesystem::create_directories(out_dir);
    ShardSet set;
    set.n_cols = static_cast<std::uint32_t>(data.cols);
    set.chunk_rows = chunk_rows;
    const std::size_t base = data.rows / n_shards;
    const std::size_t extra = data.rows % n_shards;
    std::size_t row = 0;
    for (std::size_t s = 0; s < n_shards; ++s) {
        const std::size_t count = base + (s < extra ? 1 : 0);
        char name[32];
        std::snprintf(name, sizeof(name), "part-%05zu.shard", s);
        const auto path = out_dir / name;
        detail::write_one_shard(path, data.row(row), count, set.n_cols);
        set.shard_paths.push_back(path);
        set.rows_per_shard.push_back(count);
        row += count;
    }
    return set;
}

/// Open an existing shard directory (files named part-*.shard, ordered by name).
inline ShardSet open_shards(const std::filesystem::path& dir, std::size_t chunk_rows) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("shard directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".shard")
            paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .shard files in " + dir.string());
    ShardSet set;
    set.chunk_rows = chunk_rows;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open shard: " + p.string());
        const auto h = detail::read_shard_header(in, p);
        if (set.shard_paths.empty()) {
            set.n_cols = h.n_cols;
        } else if (h.n_cols != set.n_cols) {
            throw std::runtime_error("shard column count mismatch in " + p.string());
        }
        set.shard_paths.push_back(p);
        set.rows_per_shard.push_back(h.n_rows);
    }
    return set;
}

/// Sequential single-consumer reader over one shard; yields chunks of at most
/// chunk_rows rows, holding one chunk in memory at a time.
class ChunkReader {
public:
    ChunkReader(const ShardSet& set, std::size_t shard_index)
        : path_(set.shard_paths.at(shard_index)),
          cols_(set.n_cols),
          chunk_rows_(set.chunk_rows),
          in_(path_, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open shard: " + path_.string());
        const auto h = detail::read_shard_header(in_, path_);
        rows_left_ = h.n_rows;
        if (h.n_rows != set.rows_per_shard.at(shard_index))
            throw std::runtime_error("shard header row count mismatch: " + path_.string());
        const auto expect = static_cast<std::uintmax_t>(24) +
                            static_cast<std::uintmax_t>(h.n_rows) * h.n_cols * sizeof(float);
        if (std::filesystem::file_size(path_) != expect)
            throw std::runtime_error("truncated or corrupt shard: " + path_.string());
    }

    /// Read the next chunk. Returns false at end of shard.
    bool next(DataMatrix& chunk) {
        if (rows_left_ == 0) return false;
        const std::size_t n = static_cast<std::size_t>(
            std::min<std::uint64_t>(rows_left_, chunk_rows_));
        chunk.rows = n;
        chunk.cols = cols_;
        chunk.values.resize(n * cols_);
        in_.read(reinterpret_cast<char*>(chunk.values.data()),
                 static_cast<std::streamsize>(n * cols_ * sizeof(float)));
        if (!in_) throw std::runtime_error("shard read failed: " + path_.string());
        rows_left_ -= n;
        return true;
    }

private:
    std::filesystem::path path_;
    std::uint32_t cols_;
    std::size_t chunk_rows_;
    std::ifstream in_;
    std::uint64_t rows_left_ = 0;
};

/// Convenience: load an entire shard into memory.
inline DataMatrix read_shard(const ShardSet& set, std::size_t shard_index) {
    ChunkReader reader(set, shard_index);
    DataMatrix out(0, set.n_cols);
    DataMatrix chunk;
    while (reader.next(chunk)) {
        out.values.insert(out.values.end(), chunk.values.begin(), chunk.values.end());
        out.rows += chunk.rows;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data source view: in-memory matrix or shard set behind one interface
// ---------------------------------------------------------------------------

class DataSourceRef {
public:
    DataSourceRef(const DataMatrix& m) : matrix_(&m) {}       // NOLINT(google-explicit-constructor)
    DataSourceRef(const ShardSet& s) : shards_(&s) {}         // NOLINT(google-explicit-constructor)

    bool in_memory() const { return matrix_ != nullptr; }
    const DataMatrix* matrix() const { return matrix_; }
    const ShardSet* shards() const { return shards_; }

    std::size_t rows() const {
        return matrix_ ? matrix_->rows : static_cast<std::size_t>(shards_->total_rows());
    }
    std::size_t cols() const { return matrix_ ? matrix_->cols : shards_->n_cols; }

    /// Visit every row in global order. fn(global_index, row_ptr).
    template <typename Fn>
    void for_each_row(Fn&& fn) const {
        if (matrix_) {
            for (std::size_t i = 0; i < matrix_->rows; ++i) fn(i, matrix_->row(i));
            return;
        }
        std::size_t global = 0;
        for (std::size_t s = 0; s < shards_->shard_paths.size(); ++s) {
            ChunkReader reader(*shards_, s);
            DataMatrix chunk;
            while (reader.next(chunk))
                for (std::size_t i = 0; i < chunk.rows; ++i) fn(global++, chunk.row(i));
        }
    }

    /// Gather specific rows (ascending or not) into a dense matrix.
    DataMatrix fetch_rows(const std::vector<std::uint32_t>& indices) const {
        DataMatrix out(indices.size(), cols());
        if (matrix_) {
            for (std::size_t i = 0; i < indices.size(); ++i)
                std::memcpy(out.row(i), matrix_->row(indices[i]), cols() * sizeof(float));
            return out;
        }
        // Single pass over the shards, filling every requested position.
        std::vector<std::size_t> order(indices.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return indices[a] < indices[b];
        });
        std::size_t cursor = 0;
        for_each_row([&](std::size_t global, const float* row) {
            while (cursor < order.size() && indices[order[cursor]] == global) {
                std::memcpy(out.row(order[cursor]), row, cols() * sizeof(float));
                ++cursor;
            }
        });
        if (cursor != order.size())
            throw std::out_of_range("fetch_rows: row index beyond data size");
        return out;
    }

private:
    const DataMatrix* matrix_ = nullptr;
    const ShardSet* shards_ = nullptr;
};

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

/// Seeded i.i.d. uniform values in [0, 1).
inline DataMatrix synth_uniform(std::size_t n_rows, std::size_t n_cols, std::uint64_t seed) {
    if (n_rows < 1 || n_cols < 1)
        throw std::invalid_argument("synth_uniform: need n_rows, n_cols >= 1");
    DataMatrix out(n_rows, n_cols);
    Rng rng(seed, SeedStream::synth);
    for (auto& v : out.values) v = static_cast<float>(rng.real01());
    return out;
}

/// Two concentric 2-D circles (radii 1.0 and 0.5, equal point counts) with
/// Gaussian positional noise of the given scale.
inline DataMatrix synth_rings(std::size_t n_rows, double noise, std::uint64_t seed) {
    if (n_rows < 2) throw std::invalid_argument("synth_rings: need n_rows >= 2");
    DataMatrix out(n_rows, 2);
    Rng rng(seed, SeedStream::synth);
    const std::size_t n_outer = n_rows / 2 + (n_rows % 2);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const double radius = i < n_outer ? 1.0 : 0.5;
        const double theta = rng.real01() * 2.0 * 3.14159265358979323846;
        const double x = radius * std::cos(theta) + noise * rng.gaussian();
        const double y = radius * std::sin(theta) + noise * rng.gaussian();
        out.row(i)[0] = static_cast<float>(x);
        out.row(i)[1] = static_cast<float>(y);
    }
    return out;
}

}  // namespace toposom
