#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "toposom/matrix.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Kinds and specs
// ---------------------------------------------------------------------------

enum class TopologyKind : std::uint8_t { rectangular = 0, hexagonal = 1, mst = 2, rng_graph = 3 };

inline bool is_lattice(TopologyKind k) {
    return k == TopologyKind::rectangular || k == TopologyKind::hexagonal;
}

inline TopologyKind parse_topology_kind(const std::string& s) {
    if (s == "rect" || s == "rectangular") return TopologyKind::rectangular;
    if (s == "hex" || s == "hexagonal") return TopologyKind::hexagonal;
    if (s == "mst") return TopologyKind::mst;
    if (s == "rng") return TopologyKind::rng_graph;
    throw std::invalid_argument("unknown topology kind: '" + s + "'");
}

inline const char* topology_kind_name(TopologyKind k) {
    switch (k) {
        case TopologyKind::rectangular: return "rect";
        case TopologyKind::hexagonal: return "hex";
        case TopologyKind::mst: return "mst";
        case TopologyKind::rng_graph: return "rng";
    }
    return "?";
}

struct TopologySpec {
    TopologyKind kind = TopologyKind::hexagonal;
    std::size_t grid_w = 0;   // lattices only
    std::size_t grid_h = 0;   // lattices only
    std::size_t nodes = 0;    // P; equals grid_w * grid_h for lattices
    std::size_t chunk_size = 256;  // tile edge for bounded-memory passes

    static TopologySpec lattice(TopologyKind kind, std::size_t w, std::size_t h,
                                std::size_t chunk = 256) {
        if (!is_lattice(kind)) throw std::invalid_argument("lattice(): needs a lattice kind");
        if (w < 1 || h < 1) throw std::invalid_argument("lattice(): width, height must be >= 1");
        return TopologySpec{kind, w, h, w * h, chunk};
    }
    static TopologySpec graph(TopologyKind kind, std::size_t nodes, std::size_t chunk = 256) {
        if (is_lattice(kind)) throw std::invalid_argument("graph(): needs mst or rng kind");
        if (nodes < 1) throw std::invalid_argument("graph(): nodes must be >= 1");
        return TopologySpec{kind, 0, 0, nodes, chunk};
    }
};

/// When to rebuild a dynamic graph topology: every iteration during warmup,
/// then at geometrically growing intervals ceil(growth^k), capped.
struct RefreshPolicy {
    std::size_t warmup_iters = 0;  // T_w; trainer defaults this to 10% of T
    double growth = 1.5;
    std::size_t max_interval = 25;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Squared pairwise distances via the Gram identity
/// D2[i][j] = |w_i|^2 + |w_j|^2 - 2 w_i.w_j, clamped at 0, computed in
/// row tiles of at most chunk_size rows so memory per tile stays bounded.
inline std::vector<double> pairwise_sq_dists(const DataMatrix& weights, std::size_t chunk_size) {
    const std::size_t p = weights.rows, d = weights.cols;
    if (p < 1) throw std::invalid_argument("pairwise_sq_dists: P must be >= 1");
    if (chunk_size < 1) chunk_size = 1;
    std::vector<double> norms(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        const float* w = weights.row(i);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(w[k]) * w[k];
        norms[i] = s;
    }
    std::vector<double> out(p * p, 0.0);
    for (std::size_t i0 = 0; i0 < p; i0 += chunk_size) {
        const std::size_t i1 = std::min(p, i0 + chunk_size);
        for (std::size_t i = i0; i < i1; ++i) {
            const float* wi = weights.row(i);
            for (std::size_t j = 0; j < p; ++j) {
                if (j == i) continue;  // diagonal stays exactly 0
                const float* wj = weights.row(j);
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k)
                    dot += static_cast<double>(wi[k]) * wj[k];
                out[i * p + j] = std::max(0.0, norms[i] + norms[j] - 2.0 * dot);
            }
        }
    }
    return out;
}

/// Node coordinates for lattice kinds, row-major node order.
/// Rectangular: (row, col). Hexagonal: offset coordinates with odd rows
/// shifted by 0.5 and rows scaled by sqrt(3)/2 so every neighbor sits at
/// Euclidean distance 1.
inline std::vector<double> lattice_coords(TopologyKind kind, std::size_t width,
                                          std::size_t height) {
    if (!is_lattice(kind)) throw std::invalid_argument("lattice_coords: needs a lattice kind");
    if (width < 1 || height < 1)
        throw std::invalid_argument("lattice_coords: width, height must be >= 1");
    std::vector<double> coords(width * height * 2);
    constexpr double kHexRow = 0.86602540378443864676;  // sqrt(3)/2
    std::size_t p = 0;
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c, ++p) {
            if (kind == TopologyKind::rectangular) {
                coords[2 * p] = static_cast<double>(r);
                coords[2 * p + 1] = static_cast<double>(c);
            } else {
                coords[2 * p] = static_cast<double>(c) + (r % 2 == 1 ? 0.5 : 0.0);
                coords[2 * p + 1] = static_cast<double>(r) * kHexRow;
            }
        }
    }
    return coords;
}

/// Euclidean distance matrix over lattice coordinates.
inline std::vector<double> lattice_dist(const std::vector<double>& coords) {
    const std::size_t p = coords.size() / 2;
    std::vector<double> out(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double dx = coords[2 * i] - coords[2 * j];
            const double dy = coords[2 * i + 1] - coords[2 * j + 1];
            const double dist = std::sqrt(dx * dx + dy * dy);
            out[i * p + j] = dist;
            out[j * p + i] = dist;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Dynamic graphs
// ---------------------------------------------------------------------------

using Edge = std::pair<std::uint32_t, std::uint32_t>;  // i < j

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }
    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];  // path compression
            x = parent_[x];
        }
        return x;
    }
    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> rank_;
};

}  // namespace detail

/// Minimum spanning tree over the complete graph (Kruskal, union-find with
/// path compression and union by rank). Equal-weight edges are taken in
/// ascending (i, j) order so the result is deterministic. Returns P-1 edges
/// sorted lexicographically.
inline std::vector<Edge> build_mst(const std::vector<double>& sq_dists, std::size_t p) {
    if (p < 1) throw std::invalid_argument("build_mst: P must be >= 1");
    if (p == 1) return {};
    struct WeightedEdge {
        double w;
        std::uint32_t i, j;
    };
    std::vector<WeightedEdge> all;
    all.reserve(p * (p - 1) / 2);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = i + 1; j < p; ++j)
            all.push_back({sq_dists[static_cast<std::size_t>(i) * p + j], i, j});
    std::sort(all.begin(), all.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
        if (a.w != b.w) return a.w < b.w;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    detail::UnionFind uf(p);
    std::vector<Edge> edges;
    edges.reserve(p - 1);
    for (const auto& e : all) {
        if (uf.unite(e.i, e.j)) {
            edges.emplace_back(e.i, e.j);
            if (edges.size() == p - 1) break;
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

/// Relative neighborhood graph: edge (p,q) survives iff no third node r has
/// max(d(p,r), d(q,r)) strictly below d(p,q). The strict inequality keeps
/// equilateral configurations connected. Both the candidate edges and the
/// blocker witnesses are evaluated in tiles of chunk_size — within a witness
/// tile every candidate-witness pair is tested unconditionally (the layout a
/// data-parallel device would execute), and elimination short-circuits only
/// at tile boundaries. Returns edges sorted lexicographically.
inline std::vector<Edge> build_rng_graph(const std::vector<double>& sq_dists, std::size_t p,
                                         std::size_t chunk_size) {
    if (p < 2) throw std::invalid_argument("build_rng_graph: P must be >= 2");
    if (chunk_size < 1) chunk_size = 1;
    std::vector<Edge> candidates;
    candidates.reserve(p * (p - 1) / 2);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = i + 1; j < p; ++j) candidates.emplace_back(i, j);

    std::vector<Edge> edges;
    for (std::size_t c0 = 0; c0 < candidates.size(); c0 += chunk_size) {
        const std::size_t c1 = std::min(candidates.size(), c0 + chunk_size);
        for (std::size_t c = c0; c < c1; ++c) {
            const auto [a, b] = candidates[c];
            const double dab = sq_dists[static_cast<std::size_t>(a) * p + b];
            bool blocked = false;
            for (std::size_t r0 = 0; r0 < p && !blocked; r0 += chunk_size) {
                const std::size_t r1 = std::min(p, r0 + chunk_size);
                for (std::size_t r = r0; r < r1; ++r) {
                    if (r == a || r == b) continue;
                    const double dar = sq_dists[static_cast<std::size_t>(a) * p + r];
                    const double dbr = sq_dists[static_cast<std::size_t>(b) * p + r];
                    blocked = blocked || std::max(dar, dbr) < dab;
                }
            }
            if (!blocked) edges.emplace_back(a, b);
        }
    }
    return edges;
}

// ---------------------------------------------------------------------------
// Hop distances
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kHopInf = 0xFFFF;

namespace detail {

/// One Floyd-Warshall tile pass: relax dist[i][j] through intermediates in
/// block kb, for (i, j) in blocks (ib, jb). Arithmetic widened to 32 bits so
/// INF + INF cannot wrap.
inline void fw_tile(std::vector<std::uint16_t>& dist, std::size_t p, std::size_t tile,
                    std::size_t ib, std::size_t jb, std::size_t kb) {
    const std::size_t i1 = std::min(p, ib + tile), j1 = std::min(p, jb + tile),
                      k1 = std::min(p, kb + tile);
    for (std::size_t k = kb; k < k1; ++k)
        for (std::size_t i = ib; i < i1; ++i) {
            const std::uint32_t dik = dist[i * p + k];
            if (dik == kHopInf) continue;
            for (std::size_t j = jb; j < j1; ++j) {
                const std::uint32_t through = dik + dist[k * p + j];
                if (through < dist[i * p + j])
                    dist[i * p + j] = static_cast<std::uint16_t>(through);
            }
        }
}

}  // namespace detail

/// All-pairs shortest hop counts via blocked Floyd-Warshall (tile edge =
/// chunk_size). Stored as 16-bit unsigned; throws if the graph turns out
/// disconnected.
inline std::vector<std::uint16_t> hop_distances(const std::vector<Edge>& edges, std::size_t p,
                                                std::size_t chunk_size) {
    if (p < 1) throw std::invalid_argument("hop_distances: P must be >= 1");
    const std::size_t tile = std::clamp<std::size_t>(chunk_size, 1, p);
    std::vector<std::uint16_t> dist(p * p, kHopInf);
    for (std::size_t i = 0; i < p; ++i) dist[i * p + i] = 0;
    for (const auto& [a, b] : edges) {
        if (a >= p || b >= p) throw std::out_of_range("hop_distances: edge index out of range");
        dist[static_cast<std::size_t>(a) * p + b] = 1;
        dist[static_cast<std::size_t>(b) * p + a] = 1;
    }
    const std::size_t nb = (p + tile - 1) / tile;
    for (std::size_t kb = 0; kb < nb; ++kb) {
        const std::size_t k0 = kb * tile;
        detail::fw_tile(dist, p, tile, k0, k0, k0);
        for (std::size_t ob = 0; ob < nb; ++ob) {
            if (ob == kb) continue;
            const std::size_t o0 = ob * tile;
            detail::fw_tile(dist, p, tile, k0, o0, k0);  // k-row of tiles
            detail::fw_tile(dist, p, tile, o0, k0, k0);  // k-column of tiles
        }
        for (std::size_t ib = 0; ib < nb; ++ib) {
            if (ib == kb) continue;
            for (std::size_t jb = 0; jb < nb; ++jb) {
                if (jb == kb) continue;
                detail::fw_tile(dist, p, tile, ib * tile, jb * tile, k0);
            }
        }
    }
    for (std::size_t i = 0; i < p * p; ++i)
        if (dist[i] == kHopInf)
            throw std::runtime_error("hop_distances: graph is disconnected");
    return dist;
}

// ---------------------------------------------------------------------------
// Influence
// ---------------------------------------------------------------------------

/// Influences below exp(-kInfluenceExpCut) ~ 1e-25 are emitted as exact zero.
/// The fixed-point accumulators quantize any update term below 2^-41 to zero
/// and the term guard bounds |eta*(x-w)| far beneath 2^58, so an influence
/// this small can never contribute a nonzero quantum — but left as a raw
/// exp() result it lands in (or near) the subnormal range, and subnormal
/// operands in the per-sample update loop cost a microcode assist on every
/// multiply. Clamping is bit-invisible in trained weights and keeps the hot
/// loop on the fast path.
inline constexpr double kInfluenceExpCut = 57.6;  // -ln(1e-25)

/// Gaussian neighborhood influence h[j][b] = exp(-dist^2 / (2 sigma^2)).
inline std::vector<double> influence_matrix(const std::vector<double>& dist, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("influence_matrix: sigma must be > 0");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> out(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double z = (dist[i] * dist[i]) * inv;
        out[i] = z > kInfluenceExpCut ? 0.0 : std::exp(-z);
    }
    return out;
}

inline std::vector<double> influence_matrix(const std::vector<std::uint16_t>& hop_dist,
                                            double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("influence_matrix: sigma must be > 0");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> out(hop_dist.size());
    for (std::size_t i = 0; i < hop_dist.size(); ++i) {
        const double d = static_cast<double>(hop_dist[i]);
        const double z = (d * d) * inv;
        out[i] = z > kInfluenceExpCut ? 0.0 : std::exp(-z);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Topology state and refresh orchestration
// ---------------------------------------------------------------------------

/// Immutable-once-committed neighborhood state. Refresh builds the
/// replacement in place between iterations; the training loop is the single
/// writer.
struct TopologyState {
    TopologySpec spec;
    std::vector<Edge> edges;                   // empty for lattices
    std::vector<std::uint16_t> hop_dist;       // graphs: P x P hop counts
    std::vector<double> lattice_distances;     // lattices: P x P Euclidean
    std::map<std::int64_t, std::shared_ptr<const std::vector<double>>> influence_cache;
    std::int64_t last_refresh_iter = -1;
    std::size_t refresh_count = 0;
    std::size_t post_warmup_refreshes = 0;
};

/// Initial state. Lattices are fully built here and never refreshed again;
/// graph kinds start empty and are built by the first refresh_topology call
/// (which always fires at iteration 0).
inline TopologyState build_topology(const TopologySpec& spec) {
    TopologyState state;
    state.spec = spec;
    if (is_lattice(spec.kind)) {
        const auto coords = lattice_coords(spec.kind, spec.grid_w, spec.grid_h);
        state.lattice_distances = lattice_dist(coords);
    }
    return state;
}

/// Cache keys quantize the radius to 1e-6 so schedule jitter below that
/// resolution reuses the same influence matrix.
inline std::int64_t influence_cache_key(double sigma) {
    return std::llround(sigma * 1e6);
}

/// Influence matrix for the given radius, memoized per topology state. The
/// cache is cleared whenever the topology refreshes (the hop matrix changed,
/// so stale entries would be wrong).
inline std::shared_ptr<const std::vector<double>> cached_influence(TopologyState& state,
                                                                   double sigma) {
    const std::int64_t key = influence_cache_key(sigma);
    if (auto it = state.influence_cache.find(key); it != state.influence_cache.end())
        return it->second;
    auto mat = is_lattice(state.spec.kind)
                   ? std::make_shared<const std::vector<double>>(
                         influence_matrix(state.lattice_distances, sigma))
                   : std::make_shared<const std::vector<double>>(
                         influence_matrix(state.hop_dist, sigma));
    state.influence_cache.emplace(key, mat);
    return mat;
}

/// Refresh decision: lattices never refresh; graphs refresh every iteration
/// during warmup, then whenever the gap since the last refresh reaches
/// min(max_interval, ceil(growth^post_warmup_refreshes)).
inline bool should_refresh(const RefreshPolicy& policy, std::size_t iter,
                           const TopologyState& state) {
    if (is_lattice(state.spec.kind)) return false;
    if (iter < policy.warmup_iters) return true;
    const double raw = std::ceil(std::pow(policy.growth,
                                          static_cast<double>(state.post_warmup_refreshes)));
    const auto interval = std::min<std::uint64_t>(
        policy.max_interval, raw >= static_cast<double>(policy.max_interval)
                                 ? policy.max_interval
                                 : static_cast<std::uint64_t>(raw));
    const auto gap = static_cast<std::int64_t>(iter) - state.last_refresh_iter;
    return gap >= static_cast<std::int64_t>(interval);
}

/// Rebuild edges, hop distances, and (cleared) influence cache from the
/// current node weights when the policy says so; otherwise return unchanged.
inline void refresh_topology(TopologyState& state, const DataMatrix& weights,
                             const RefreshPolicy& policy, std::size_t iter) {
    if (!should_refresh(policy, iter, state)) return;
    const auto sq = pairwise_sq_dists(weights, state.spec.chunk_size);
    state.edges = state.spec.kind == TopologyKind::mst
                      ? build_mst(sq, weights.rows)
                      : build_rng_graph(sq, weights.rows, state.spec.chunk_size);
    state.hop_dist = hop_distances(state.edges, weights.rows, state.spec.chunk_size);
    state.influence_cache.clear();
    state.last_refresh_iter = static_cast<std::int64_t>(iter);
    ++state.refresh_count;
    if (iter >= policy.warmup_iters) ++state.post_warmup_refreshes;
}

}  // namespace toposom
