#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infoaccess/cascade.hpp"
#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/parallel.hpp"
#include "infoaccess/random.hpp"

namespace infoaccess {

enum class SeedStrategy { random, pagerank, betweenness, degree, all };

inline std::string to_string(SeedStrategy s) {
  switch (s) {
    case SeedStrategy::random: return "random";
    case SeedStrategy::pagerank: return "pagerank";
    case SeedStrategy::betweenness: return "betweenness";
    case SeedStrategy::degree: return "degree";
    case SeedStrategy::all: return "all";
  }
  return "unknown";
}

inline SeedStrategy parse_seed_strategy(std::string_view name) {
  const auto lower = to_lower(name);
  for (auto s : {SeedStrategy::random, SeedStrategy::pagerank, SeedStrategy::betweenness, SeedStrategy::degree,
                 SeedStrategy::all}) {
    if (lower == to_string(s)) return s;
  }
  throw ConfigError("unknown seed strategy '" + std::string(name) +
                    "' (expected random, pagerank, betweenness, degree or all)");
}

// Ordered list of signature sources. Column c of a representation belongs to
// seeds[c].
struct SeedSet {
  std::vector<NodeIndex> seeds;
  SeedStrategy strategy = SeedStrategy::all;

  std::size_t size() const noexcept { return seeds.size(); }

  void validate(const Graph& g) const {
    if (seeds.empty()) throw std::invalid_argument("seed set is empty");
    if (seeds.size() > g.node_count()) throw std::invalid_argument("seed set larger than the graph");
    std::vector<NodeIndex> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("seed set contains duplicates");
    }
    if (sorted.back() >= g.node_count()) throw std::out_of_range("seed index out of range");
    if ((strategy == SeedStrategy::all) != (seeds.size() == g.node_count())) {
      throw std::invalid_argument("strategy 'all' must cover exactly every node");
    }
  }
};

// ceil(sqrt(n)), computed exactly in integers.
inline std::size_t default_sample_size(std::size_t n) {
  if (n == 0) throw std::invalid_argument("default_sample_size: n must be positive");
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n ? r : r + 1;
}

namespace detail {

// Indices of the m largest scores, ties (after rounding away floating noise
// at 1e-12 relative to the maximum) broken by smaller index.
inline std::vector<NodeIndex> top_by_score(const std::vector<double>& score, std::size_t m) {
  const double scale = std::max(1e-300, *std::max_element(score.begin(), score.end()));
  std::vector<std::int64_t> key(score.size());
  for (std::size_t v = 0; v < score.size(); ++v) key[v] = std::llround(score[v] / scale * 1e12);
  std::vector<NodeIndex> order(score.size());
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) { return key[a] > key[b]; });
  order.resize(m);
  return order;
}

}  // namespace detail

// Picks m signature sources. `random` draws uniformly without replacement as
// a function of master_seed; ranked strategies take the top-m nodes by the
// named centrality; `all` requires m = n and lists every node in index order.
inline SeedSet select_seeds(const Graph& g, SeedStrategy strategy, std::size_t m, std::uint64_t master_seed,
                            std::size_t workers = 1) {
  const auto n = g.node_count();
  if (m == 0) throw std::invalid_argument("select_seeds: m must be positive");
  if (m > n) {
    throw std::invalid_argument("select_seeds: m = " + std::to_string(m) + " exceeds node count " +
                                std::to_string(n));
  }
  SeedSet out;
  out.strategy = strategy;
  switch (strategy) {
    case SeedStrategy::all:
      if (m != n) throw std::invalid_argument("select_seeds: strategy 'all' requires m = n");
      out.seeds.resize(n);
      std::iota(out.seeds.begin(), out.seeds.end(), NodeIndex{0});
      break;
    case SeedStrategy::random: {
      std::vector<NodeIndex> pool(n);
      std::iota(pool.begin(), pool.end(), NodeIndex{0});
      SplitMix64 rng(combine_keys(master_seed, 0x72616e646f6dULL));
      for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
      }
      pool.resize(m);
      out.seeds = std::move(pool);
      break;
    }
    case SeedStrategy::pagerank: out.seeds = detail::top_by_score(pagerank(g), m); break;
    case SeedStrategy::betweenness: out.seeds = detail::top_by_score(betweenness(g, workers), m); break;
    case SeedStrategy::degree: out.seeds = detail::top_by_score(degree_centrality(g), m); break;
  }
  return out;
}

// Row-per-node probability matrix: entry (v, c) is the probability that node
// v receives information seeded at seed_set.seeds[c]. Stored row-major in
// 32-bit floats.
struct Representation {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  SeedSet seed_set;
  double alpha = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;

  float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  float& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  // Columns for the given seed nodes, in that order. Every requested seed must
  // be a column of this representation.
  Representation restrict_to(const SeedSet& subset) const {
    std::vector<std::size_t> column_of;
    column_of.reserve(subset.size());
    for (auto s : subset.seeds) {
      auto it = std::find(seed_set.seeds.begin(), seed_set.seeds.end(), s);
      if (it == seed_set.seeds.end()) throw std::invalid_argument("restrict_to: seed is not a column");
      column_of.push_back(static_cast<std::size_t>(it - seed_set.seeds.begin()));
    }
    Representation out{rows, subset.size(), std::vector<float>(rows * subset.size()), subset, alpha, trials,
                       master_seed};
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < column_of.size(); ++c) out(r, c) = (*this)(r, column_of[c]);
    }
    return out;
  }
};

inline std::vector<float> column_from_counts(std::span<const std::uint32_t> counts, std::uint64_t trials) {
  std::vector<float> column(counts.size());
  const auto t = static_cast<double>(trials);
  for (std::size_t v = 0; v < counts.size(); ++v) {
    column[v] = static_cast<float>(static_cast<double>(counts[v]) / t);
  }
  return column;
}

// Optional checkpoint hooks. `restore(c)` may return a previously computed
// column (skipping its simulation); `completed(c, column)` is called once per
// freshly computed column, possibly from several threads at once.
struct ColumnHooks {
  std::function<std::optional<std::vector<float>>(std::size_t)> restore;
  std::function<void(std::size_t, std::span<const float>)> completed;
};

// One simulation batch per seed fills one column. Columns are independent
// (each keyed by its own seed node), so the result does not depend on
// `workers` or on which columns were restored from a checkpoint.
inline Representation build_representation(const Graph& g, const SeedSet& seed_set, const CascadeParams& params,
                                           std::size_t workers = 1, const ColumnHooks* hooks = nullptr) {
  params.validate();
  seed_set.validate(g);
  const auto n = g.node_count();
  const auto m = seed_set.size();
  Representation rep{n, m, std::vector<float>(n * m), seed_set, params.alpha, params.trials, params.master_seed};

  auto fill = [&](std::size_t c, std::span<const float> column) {
    for (std::size_t v = 0; v < n; ++v) rep(v, c) = column[v];
  };
  auto compute = [&](std::size_t c, std::size_t inner_workers) {
    if (hooks && hooks->restore) {
      if (auto restored = hooks->restore(c)) {
        if (restored->size() != n) throw DataError("restored column has wrong length");
        fill(c, *restored);
        return;
      }
    }
    const auto counts = receipt_counts(g, seed_set.seeds[c], params, inner_workers);
    const auto column = column_from_counts(counts, params.trials);
    fill(c, column);
    if (hooks && hooks->completed) hooks->completed(c, column);
  };

  if (m >= workers) {
    parallel_for(m, workers, [&](std::size_t c) { compute(c, 1); });
  } else {
    for (std::size_t c = 0; c < m; ++c) compute(c, workers);
  }
  return rep;
}

struct PHistogram {
  std::vector<double> bin_edges;  // num_bins + 1 ascending edges over [0, 1]
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
};

// Uniform bins over [0, 1]; the last bin is closed on the right.
inline PHistogram p_histogram(const Representation& rep, std::size_t num_bins) {
  if (num_bins == 0) throw std::invalid_argument("p_histogram: num_bins must be positive");
  PHistogram h;
  h.bin_edges.resize(num_bins + 1);
  for (std::size_t b = 0; b <= num_bins; ++b) h.bin_edges[b] = static_cast<double>(b) / num_bins;
  h.counts.assign(num_bins, 0);
  for (float p : rep.values) {
    auto b = static_cast<std::size_t>(static_cast<double>(p) * static_cast<double>(num_bins));
    h.counts[std::min(b, num_bins - 1)] += 1;
  }
  return h;
}

}  // namespace infoaccess
