#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "infoaccess/error.hpp"
#include "infoaccess/parallel.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

// Immutable simple graph in compressed adjacency form. Nodes are dense indices
// [0, n) with a side table of external identifiers. Undirected edges are stored
// in both adjacency lists and share one edge index; directed edges each get
// their own. Adjacency lists are sorted by neighbor index.
class Graph {
 public:
  Graph() = default;

  // Builds a graph from index pairs. Self-loops are dropped, duplicates are
  // collapsed (for undirected input, (u,v) and (v,u) are the same edge).
  static Graph from_edges(std::vector<std::string> node_ids, bool directed,
                          std::span<const Edge> edges) {
    Graph g;
    g.directed_ = directed;
    g.node_ids_ = std::move(node_ids);
    const auto n = g.node_ids_.size();
    g.index_.reserve(n);
    for (NodeIndex v = 0; v < n; ++v) {
      if (!g.index_.emplace(g.node_ids_[v], v).second) {
        throw DataError("duplicate node identifier '" + g.node_ids_[v] + "'");
      }
    }

    std::vector<Edge> unique;
    unique.reserve(edges.size());
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
      if (u == v) continue;
      if (!directed && u > v) std::swap(u, v);
      unique.emplace_back(u, v);
    }
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    g.edges_ = std::move(unique);

    std::vector<std::size_t> degree(n, 0);
    for (auto [u, v] : g.edges_) {
      ++degree[u];
      if (!directed) ++degree[v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
    g.targets_.resize(g.offsets_[n]);
    g.edge_ids_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (EdgeIndex e = 0; e < g.edges_.size(); ++e) {
      auto [u, v] = g.edges_[e];
      g.targets_[cursor[u]] = v;
      g.edge_ids_[cursor[u]++] = e;
      if (!directed) {
        g.targets_[cursor[v]] = u;
        g.edge_ids_[cursor[v]++] = e;
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      const auto begin = g.offsets_[v];
      const auto end = g.offsets_[v + 1];
      std::vector<std::pair<NodeIndex, EdgeIndex>> entries;
      entries.reserve(end - begin);
      for (auto i = begin; i < end; ++i) entries.emplace_back(g.targets_[i], g.edge_ids_[i]);
      std::sort(entries.begin(), entries.end());
      for (auto i = begin; i < end; ++i) {
        g.targets_[i] = entries[i - begin].first;
        g.edge_ids_[i] = entries[i - begin].second;
      }
    }
    return g;
  }

  std::size_t node_count() const noexcept { return node_ids_.size(); }
  // Number of distinct edges; an undirected edge counts once.
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool directed() const noexcept { return directed_; }
  bool empty() const noexcept { return node_ids_.empty(); }

  std::span<const NodeIndex> neighbors(NodeIndex v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  // Edge indices parallel to neighbors(v).
  std::span<const EdgeIndex> incident_edges(NodeIndex v) const noexcept {
    return {edge_ids_.data() + offsets_[v], edge_ids_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeIndex v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

  // For undirected graphs endpoints are ordered (smaller, larger).
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  const std::string& node_id(NodeIndex v) const { return node_ids_.at(v); }
  const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }

  std::optional<NodeIndex> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool has_edge(NodeIndex u, NodeIndex v) const noexcept {
    auto adj = neighbors(u);
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  // Subgraph induced by `nodes`, reindexed densely in the given order.
  Graph induced_subgraph(std::span<const NodeIndex> nodes) const {
    std::vector<NodeIndex> remap(node_count(), kAbsent);
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      remap[nodes[i]] = static_cast<NodeIndex>(i);
      ids.push_back(node_ids_[nodes[i]]);
    }
    std::vector<Edge> kept;
    for (auto [u, v] : edges_) {
      if (remap[u] != kAbsent && remap[v] != kAbsent) kept.emplace_back(remap[u], remap[v]);
    }
    return from_edges(std::move(ids), directed_, kept);
  }

  // Same nodes, every directed edge made bidirectional.
  Graph symmetrized() const {
    if (!directed_) return *this;
    return from_edges(node_ids_, false, edges_);
  }

 private:
  static constexpr NodeIndex kAbsent = static_cast<NodeIndex>(-1);

  bool directed_ = false;
  std::vector<std::string> node_ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeIndex> targets_;
  std::vector<EdgeIndex> edge_ids_;
};

namespace detail {

inline bool is_header_name(const std::string& token) {
  static const std::vector<std::string_view> known = {
      "source", "target", "src",    "dst",    "from", "to",       "u",     "v",
      "node1",  "node2",  "node_1", "node_2", "id1",  "id2",      "head",  "tail",
      "node",   "neighbor", "start", "end",   "source_id", "target_id"};
  const auto lower = to_lower(token);
  return std::find(known.begin(), known.end(), lower) != known.end();
}

}  // namespace detail

// Reads an edge list: one edge per line, two identifiers separated by
// whitespace and/or a comma. Lines starting with '#' and blank lines are
// skipped. The first line is a header when its two tokens never reappear as
// identifiers and either both are common column names (source,target,from,to,
// ...) or both are non-numeric while every later identifier is numeric.
// Node indices follow first appearance.
inline Graph read_edge_list(std::istream& in, bool directed, std::string_view source = "<stream>") {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto tokens = split_edge_tokens(trimmed);
    if (tokens.size() != 2) {
      throw ParseError(std::string(source), line_no,
                       "expected exactly two node identifiers, found " + std::to_string(tokens.size()));
    }
    rows.emplace_back(line_no, std::move(tokens));
  }
  if (rows.empty()) throw DataError(std::string(source) + ": edge list contains no edges");

  std::size_t first = 0;
  const auto& head = rows.front().second;
  bool header = false;
  if (rows.size() > 1 && head[0] != head[1]) {
    const bool reused = std::any_of(rows.begin() + 1, rows.end(), [&](const auto& row) {
      return std::find(head.begin(), head.end(), row.second[0]) != head.end() ||
             std::find(head.begin(), head.end(), row.second[1]) != head.end();
    });
    if (!reused) {
      const bool named = detail::is_header_name(head[0]) && detail::is_header_name(head[1]);
      const bool text_over_numbers =
          !is_number(head[0]) && !is_number(head[1]) &&
          std::all_of(rows.begin() + 1, rows.end(), [](const auto& row) {
            return is_number(row.second[0]) && is_number(row.second[1]);
          });
      header = named || text_over_numbers;
    }
  }
  if (header) first = 1;
  if (first == rows.size()) throw DataError(std::string(source) + ": edge list contains no edges");

  std::vector<std::string> ids;
  std::unordered_map<std::string, NodeIndex> index;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<NodeIndex>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };
  std::vector<Edge> edges;
  edges.reserve(rows.size() - first);
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto u = intern(rows[r].second[0]);
    const auto v = intern(rows[r].second[1]);
    edges.emplace_back(u, v);
  }
  return Graph::from_edges(std::move(ids), directed, edges);
}

inline Graph load_edge_list(const std::string& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list '" + path + "'");
  return read_edge_list(in, directed, path);
}

// Component label per node: connected components for undirected graphs,
// strongly connected components for directed ones. Labels are assigned in
// order of each component's smallest node index.
inline std::vector<std::size_t> component_labels(const Graph& g) {
  const auto n = g.node_count();
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(n, kUnset);
  if (!g.directed()) {
    std::vector<NodeIndex> stack;
    std::size_t next = 0;
    for (NodeIndex s = 0; s < n; ++s) {
      if (label[s] != kUnset) continue;
      label[s] = next;
      stack.push_back(s);
      while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (auto w : g.neighbors(u)) {
          if (label[w] == kUnset) {
            label[w] = next;
            stack.push_back(w);
          }
        }
      }
      ++next;
    }
    return label;
  }

  // Iterative Tarjan.
  std::vector<std::size_t> order(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeIndex> scc_stack;
  std::vector<std::pair<NodeIndex, std::size_t>> call;
  std::size_t counter = 0;
  std::vector<std::vector<NodeIndex>> components;
  for (NodeIndex root = 0; root < n; ++root) {
    if (order[root] != kUnset) continue;
    call.emplace_back(root, 0);
    order[root] = low[root] = counter++;
    scc_stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [u, pos] = call.back();
      auto adj = g.neighbors(u);
      if (pos < adj.size()) {
        const auto w = adj[pos++];
        if (order[w] == kUnset) {
          order[w] = low[w] = counter++;
          scc_stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[u] = std::min(low[u], order[w]);
        }
        continue;
      }
      const auto done = u;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == order[done]) {
        std::vector<NodeIndex> members;
        NodeIndex w;
        do {
          w = scc_stack.back();
          scc_stack.pop_back();
          on_stack[w] = false;
          members.push_back(w);
        } while (w != done);
        components.push_back(std::move(members));
      }
    }
  }
  std::sort(components.begin(), components.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
  });
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (auto v : components[c]) label[v] = c;
  }
  return label;
}

// Induced subgraph on the largest (strongly, when directed) connected
// component, nodes kept in their original relative order. Ties go to the
// component containing the smallest node index.
inline Graph largest_connected_component(const Graph& g) {
  if (g.empty()) throw std::invalid_argument("largest_connected_component: empty graph");
  const auto label = component_labels(g);
  const auto count = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<std::size_t> size(count, 0);
  for (auto c : label) ++size[c];
  // Labels are ordered by smallest member, so the first maximum wins ties.
  const auto best = static_cast<std::size_t>(std::max_element(size.begin(), size.end()) - size.begin());
  std::vector<NodeIndex> keep;
  keep.reserve(size[best]);
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (label[v] == best) keep.push_back(v);
  }
  return g.induced_subgraph(keep);
}

// Power-iteration PageRank over out-edges; dangling mass is spread uniformly.
inline std::vector<double> pagerank(const Graph& g, double damping = 0.85, double tol = 1e-10,
                                    std::size_t max_iter = 200) {
  if (g.empty()) throw std::invalid_argument("pagerank: empty graph");
  if (!(damping >= 0.0 && damping <= 1.0)) throw std::invalid_argument("pagerank: damping outside [0,1]");
  if (!(tol > 0.0)) throw std::invalid_argument("pagerank: tol must be positive");
  const auto n = g.node_count();
  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, uniform), next(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (NodeIndex u = 0; u < n; ++u) {
      if (g.degree(u) == 0) dangling += rank[u];
    }
    std::fill(next.begin(), next.end(), (1.0 - damping) * uniform + damping * dangling * uniform);
    for (NodeIndex u = 0; u < n; ++u) {
      const auto deg = g.degree(u);
      if (deg == 0) continue;
      const double share = damping * rank[u] / static_cast<double>(deg);
      for (auto w : g.neighbors(u)) next[w] += share;
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (change < tol) break;
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  for (auto& r : rank) r /= total;
  return rank;
}

// Unnormalized shortest-path betweenness (Brandes). Undirected graphs count
// each unordered pair once. Sources are processed in fixed blocks whose partial
// sums are reduced in block order, so the result does not depend on `workers`.
inline std::vector<double> betweenness(const Graph& g, std::size_t workers = 1) {
  if (g.empty()) throw std::invalid_argument("betweenness: empty graph");
  const auto n = g.node_count();
  const std::size_t blocks = std::min<std::size_t>(n, 64);
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(n, 0.0));

  parallel_for(blocks, workers, [&](std::size_t b) {
    auto& acc = partial[b];
    std::vector<std::vector<NodeIndex>> preds(n);
    std::vector<double> sigma(n), delta(n);
    std::vector<std::int64_t> dist(n);
    std::vector<NodeIndex> order, queue;
    order.reserve(n);
    queue.reserve(n);
    const auto first = b * n / blocks;
    const auto last = (b + 1) * n / blocks;
    for (auto s = static_cast<NodeIndex>(first); s < last; ++s) {
      for (std::size_t v = 0; v < n; ++v) preds[v].clear();
      std::fill(sigma.begin(), sigma.end(), 0.0);
      std::fill(delta.begin(), delta.end(), 0.0);
      std::fill(dist.begin(), dist.end(), -1);
      order.clear();
      queue.clear();
      sigma[s] = 1.0;
      dist[s] = 0;
      queue.push_back(s);
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto u = queue[head];
        order.push_back(u);
        for (auto w : g.neighbors(u)) {
          if (dist[w] < 0) {
            dist[w] = dist[u] + 1;
            queue.push_back(w);
          }
          if (dist[w] == dist[u] + 1) {
            sigma[w] += sigma[u];
            preds[w].push_back(u);
          }
        }
      }
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto w = *it;
        for (auto u : preds[w]) delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
        if (w != s) acc[w] += delta[w];
      }
    }
  });

  std::vector<double> score(n, 0.0);
  for (const auto& p : partial) {
    for (std::size_t v = 0; v < n; ++v) score[v] += p[v];
  }
  if (!g.directed()) {
    for (auto& s : score) s /= 2.0;
  }
  return score;
}

// Out-degree (directed) or degree (undirected).
inline std::vector<double> degree_centrality(const Graph& g) {
  if (g.empty()) throw std::invalid_argument("degree_centrality: empty graph");
  std::vector<double> score(g.node_count());
  for (NodeIndex v = 0; v < g.node_count(); ++v) score[v] = static_cast<double>(g.degree(v));
  return score;
}

}  // namespace infoaccess
