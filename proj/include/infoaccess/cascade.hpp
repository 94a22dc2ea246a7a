#pragma once

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infoaccess/graph.hpp"
#include "infoaccess/parallel.hpp"
#include "infoaccess/random.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess {

struct CascadeParams {
  double alpha = 0.5;
  std::uint64_t trials = 10'000;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (trials == 0) throw std::invalid_argument("trials must be positive");
  }
};

// n x n matrix with entries in [0, 1] and unit diagonal. Holds either one
// sampled co-membership matrix (0/1 entries) or its expectation.
struct CooccurrenceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  CooccurrenceMatrix() = default;
  explicit CooccurrenceMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }

  bool is_symmetric() const {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((*this)(i, j) != (*this)(j, i)) return false;
      }
    }
    return true;
  }
};

// Randomness keying. A cascade trial is identified by (master seed, seed set,
// trial index); each edge's transmission coin within a trial is a hash of the
// trial key and the edge index. One coin per undirected edge makes the cascade
// coincide with bond percolation; keyed coins make it independent of
// traversal order and monotone in alpha.
inline std::uint64_t seed_set_key(std::span<const NodeIndex> seeds) {
  std::vector<NodeIndex> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::uint64_t h = 0x5eed5e75ULL;
  for (auto v : sorted) h = combine_keys(h, v);
  return h;
}

inline std::uint64_t trial_key(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t trial) {
  return combine_keys(combine_keys(master_seed, stream), trial);
}

inline std::uint64_t edge_bits(std::uint64_t trial_key, EdgeIndex e) noexcept {
  return mix64(trial_key + (static_cast<std::uint64_t>(e) + 1) * 0xd1b54a32d192ed03ULL);
}

inline constexpr std::uint64_t kPercolationStream = 0x70657263ULL;

namespace detail {

// Per-worker scratch for repeated cascades; visit marks are epoch stamps so
// nothing is cleared between trials.
struct CascadeWorkspace {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  std::vector<NodeIndex> active;

  explicit CascadeWorkspace(std::size_t n) : stamp(n, 0) { active.reserve(n); }

  void next_epoch() {
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
    active.clear();
  }
  bool visited(NodeIndex v) const { return stamp[v] == epoch; }
  void visit(NodeIndex v) {
    stamp[v] = epoch;
    active.push_back(v);
  }
};

// One cascade; afterwards ws.active holds every activated node.
inline void run_cascade(const Graph& g, std::span<const NodeIndex> seeds, std::uint64_t key, double alpha,
                        CascadeWorkspace& ws) {
  ws.next_epoch();
  for (auto s : seeds) {
    if (!ws.visited(s)) ws.visit(s);
  }
  // coin(bits, alpha) compared as integers: (bits >> 11) < ceil(alpha * 2^53).
  // Branch-free, since the coin outcome is unpredictable.
  const auto threshold = static_cast<std::uint64_t>(std::ceil(std::ldexp(alpha, 53)));
  auto& active = ws.active;
  auto& stamp = ws.stamp;
  const auto epoch = ws.epoch;
  std::size_t size = active.size();
  active.resize(g.node_count() + 1);
  for (std::size_t head = 0; head < size; ++head) {
    const auto u = active[head];
    const auto adj = g.neighbors(u);
    const auto ids = g.incident_edges(u);
    for (std::size_t i = 0; i < adj.size(); ++i) {
      const auto w = adj[i];
      const bool take = (stamp[w] != epoch) & ((edge_bits(key, ids[i]) >> 11) < threshold);
      active[size] = w;
      size += take;
      stamp[w] = take ? epoch : stamp[w];
    }
  }
  active.resize(size);
}

inline void check_seeds(const Graph& g, std::span<const NodeIndex> seeds) {
  if (seeds.empty()) throw std::invalid_argument("seed set must be nonempty");
  for (auto s : seeds) {
    if (s >= g.node_count()) throw std::out_of_range("seed node index out of range");
  }
}

}  // namespace detail

// Nodes activated by one independent-cascade run from `seeds`, sorted.
inline std::vector<NodeIndex> simulate_cascade(const Graph& g, std::span<const NodeIndex> seeds,
                                               const CascadeParams& params, std::uint64_t trial_index) {
  params.validate();
  detail::check_seeds(g, seeds);
  if (trial_index >= params.trials) throw std::out_of_range("trial_index must be below params.trials");
  detail::CascadeWorkspace ws(g.node_count());
  detail::run_cascade(g, seeds, trial_key(params.master_seed, seed_set_key(seeds), trial_index), params.alpha,
                      ws);
  std::vector<NodeIndex> out = ws.active;
  std::sort(out.begin(), out.end());
  return out;
}

// Number of trials (out of params.trials) in which each node was activated
// from `source`. Trials are split into fixed blocks; block counts are summed
// as integers, so the result is independent of `workers`.
inline std::vector<std::uint32_t> receipt_counts(const Graph& g, NodeIndex source, const CascadeParams& params,
                                                 std::size_t workers = 1) {
  params.validate();
  if (source >= g.node_count()) throw std::out_of_range("source node index out of range");
  if (params.trials > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("too many trials");
  const NodeIndex seeds[] = {source};
  const auto stream = seed_set_key(seeds);
  const auto n = g.node_count();
  constexpr std::uint64_t kBlock = 2048;
  const auto blocks = static_cast<std::size_t>((params.trials + kBlock - 1) / kBlock);

  auto run_block = [&](std::size_t b, std::vector<std::uint32_t>& counts, detail::CascadeWorkspace& ws) {
    const auto first = b * kBlock;
    const auto last = std::min<std::uint64_t>(params.trials, first + kBlock);
    for (auto t = first; t < last; ++t) {
      detail::run_cascade(g, seeds, trial_key(params.master_seed, stream, t), params.alpha, ws);
      for (auto v : ws.active) ++counts[v];
    }
  };

  std::vector<std::uint32_t> total(n, 0);
  if (workers <= 1 || blocks == 1) {
    detail::CascadeWorkspace ws(n);
    for (std::size_t b = 0; b < blocks; ++b) run_block(b, total, ws);
    return total;
  }
  std::vector<std::vector<std::uint32_t>> partial(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    partial[b].assign(n, 0);
    detail::CascadeWorkspace ws(n);
    run_block(b, partial[b], ws);
  });
  for (const auto& p : partial) {
    for (std::size_t v = 0; v < n; ++v) total[v] += p[v];
  }
  return total;
}

// Fraction of trials in which each node received information seeded at
// `source`; the source entry is exactly 1.
inline std::vector<double> estimate_receipt_probabilities(const Graph& g, NodeIndex source,
                                                          const CascadeParams& params, std::size_t workers = 1) {
  const auto counts = receipt_counts(g, source, params, workers);
  std::vector<double> p(counts.size());
  const auto trials = static_cast<double>(params.trials);
  for (std::size_t v = 0; v < counts.size(); ++v) p[v] = static_cast<double>(counts[v]) / trials;
  return p;
}

namespace detail {

struct DisjointSets {
  std::vector<NodeIndex> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), NodeIndex{0}); }
  NodeIndex find(NodeIndex v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  void unite(NodeIndex a, NodeIndex b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Adds `weight` to out(i,j) for every pair (i,j) where j is reachable from i
// in the subgraph keeping the edges flagged in `kept`.
template <typename KeptFn>
void accumulate_live_reachability(const Graph& g, KeptFn&& kept, double weight, CooccurrenceMatrix& out) {
  const auto n = g.node_count();
  if (!g.directed()) {
    DisjointSets sets(n);
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
      if (kept(e)) sets.unite(g.edges()[e].first, g.edges()[e].second);
    }
    std::vector<NodeIndex> root(n);
    for (NodeIndex v = 0; v < n; ++v) root[v] = sets.find(v);
    for (NodeIndex i = 0; i < n; ++i) {
      for (NodeIndex j = 0; j < n; ++j) {
        if (root[i] == root[j]) out(i, j) += weight;
      }
    }
    return;
  }
  std::vector<char> seen(n);
  std::vector<NodeIndex> queue;
  for (NodeIndex i = 0; i < n; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    queue.assign(1, i);
    seen[i] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto u = queue[head];
      const auto adj = g.neighbors(u);
      const auto ids = g.incident_edges(u);
      for (std::size_t k = 0; k < adj.size(); ++k) {
        if (!seen[adj[k]] && kept(ids[k])) {
          seen[adj[k]] = 1;
          queue.push_back(adj[k]);
        }
      }
    }
    for (auto j : queue) out(i, j) += weight;
  }
}

}  // namespace detail

// One draw of the bond-percolation view: keep each edge independently with
// probability alpha and return the binary co-membership matrix of the
// resulting components (for directed graphs, entry (i,j) = j reachable from
// i over kept edges).
inline CooccurrenceMatrix percolation_cooccurrence_sample(const Graph& g, const CascadeParams& params,
                                                          std::uint64_t trial_index) {
  params.validate();
  const auto key = trial_key(params.master_seed, kPercolationStream, trial_index);
  CooccurrenceMatrix out(g.node_count());
  detail::accumulate_live_reachability(
      g, [&](EdgeIndex e) { return coin(edge_bits(key, e), params.alpha); }, 1.0, out);
  return out;
}

inline constexpr std::size_t kExactEdgeLimit = 24;

// Exact expectation of the co-membership (reachability) matrix over all
// 2^|E| edge subsets. Limited to |E| <= 24.
inline CooccurrenceMatrix exact_probabilities(const Graph& g, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  const auto m = g.edge_count();
  if (m > kExactEdgeLimit) {
    throw std::invalid_argument("exact_probabilities: " + std::to_string(m) + " edges exceeds the limit of " +
                                std::to_string(kExactEdgeLimit) +
                                "; use the Monte Carlo estimators (estimate_receipt_probabilities or "
                                "percolation_cooccurrence_sample) instead");
  }
  std::vector<double> weight_by_kept(m + 1);
  for (std::size_t kept = 0; kept <= m; ++kept) {
    weight_by_kept[kept] =
        std::pow(alpha, static_cast<double>(kept)) * std::pow(1.0 - alpha, static_cast<double>(m - kept));
  }
  CooccurrenceMatrix out(g.node_count());
  const std::uint64_t subsets = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    const double w = weight_by_kept[static_cast<std::size_t>(std::popcount(mask))];
    if (w == 0.0) continue;
    detail::accumulate_live_reachability(
        g, [&](EdgeIndex e) { return ((mask >> e) & 1U) != 0; }, w, out);
  }
  for (std::size_t i = 0; i < out.n; ++i) out(i, i) = 1.0;
  return out;
}

// Debug dump: "node_id,probability" rows.
inline void write_probability_csv(std::ostream& os, const Graph& g, std::span<const double> probabilities) {
  os << "node_id,probability\n";
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    os << csv_escape(g.node_id(v)) << ',' << format_number(probabilities[v]) << '\n';
  }
}

}  // namespace infoaccess
