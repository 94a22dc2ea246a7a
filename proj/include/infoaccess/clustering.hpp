#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/parallel.hpp"
#include "infoaccess/random.hpp"
#include "infoaccess/signature.hpp"

namespace infoaccess {

// Read-only row-major view of an n x d point matrix.
template <typename T>
struct MatrixView {
  const T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatrixView() = default;
  MatrixView(const T* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
  MatrixView(std::span<const T> values, std::size_t r, std::size_t c) : data(values.data()), rows(r), cols(c) {
    if (values.size() != r * c) throw std::invalid_argument("MatrixView: size mismatch");
  }

  std::span<const T> row(std::size_t i) const { return {data + i * cols, cols}; }
};

inline MatrixView<float> view(const Representation& rep) { return {rep.values.data(), rep.rows, rep.cols}; }

enum class ClusterMethod { info_access, spectral };

inline std::string to_string(ClusterMethod m) { return m == ClusterMethod::spectral ? "spectral" : "info_access"; }

struct Clustering {
  std::vector<std::uint32_t> labels;
  std::size_t k = 1;
  double inertia = 0.0;  // k-means objective; for spectral, measured in embedding space
  ClusterMethod method = ClusterMethod::info_access;
  std::optional<double> alpha;
  std::uint64_t master_seed = 0;

  std::size_t size() const noexcept { return labels.size(); }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    return sizes;
  }
};

namespace detail {

// Squared l2 distance accumulated in double whatever the storage type.
template <typename X, typename Y>
double squared_distance(std::span<X> x, std::span<Y> y) {
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = static_cast<double>(x[j]) - static_cast<double>(y[j]);
    sum += diff * diff;
  }
  return sum;
}

template <typename T>
void check_finite(MatrixView<T> points) {
  for (std::size_t i = 0; i < points.rows * points.cols; ++i) {
    if (!std::isfinite(static_cast<double>(points.data[i]))) throw NumericError("point matrix has non-finite entries");
  }
}

}  // namespace detail

// Result of a single Lloyd run. inertia_history holds the objective after
// every assignment step.
struct KMeansRun {
  std::vector<std::uint32_t> labels;
  std::vector<double> centroids;  // k x d row-major
  double inertia = 0.0;
  std::vector<double> inertia_history;
};

// One k-means run: k-means++ seeding, then Lloyd iterations until the
// assignment is stable or max_iter is reached. A cluster left empty by an
// update is reseeded at the point farthest from its current centroid.
template <typename T>
KMeansRun lloyd_run(MatrixView<T> points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300) {
  const auto n = points.rows;
  const auto d = points.cols;
  if (k == 0 || k > n) throw std::invalid_argument("kmeans: k must lie in [1, n]");
  if (d == 0) throw std::invalid_argument("kmeans: points need at least one dimension");
  SplitMix64 rng(seed);
  KMeansRun run;
  run.centroids.assign(k * d, 0.0);
  auto centroid = [&](std::size_t c) { return std::span<double>(run.centroids.data() + c * d, d); };
  auto set_centroid = [&](std::size_t c, std::size_t i) {
    auto x = points.row(i);
    auto dst = centroid(c);
    for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<double>(x[j]);
  };

  // k-means++ seeding.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  set_centroid(0, static_cast<std::size_t>(rng.below(n)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], detail::squared_distance(points.row(i), centroid(c - 1)));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] == 0.0) continue;
        pick = i;
        cumulative += nearest[i];
        if (cumulative > target) break;
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    set_centroid(c, pick);
  }

  run.labels.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dc = detail::squared_distance(points.row(i), centroid(c));
        if (dc < best_d) {
          best_d = dc;
          best = static_cast<std::uint32_t>(c);
        }
      }
      changed |= (iter == 0 || run.labels[i] != best);
      run.labels[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    run.inertia = inertia;
    run.inertia_history.push_back(inertia);
    if (!changed || iter + 1 == max_iter) break;

    std::fill(run.centroids.begin(), run.centroids.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = centroid(run.labels[i]);
      auto x = points.row(i);
      for (std::size_t j = 0; j < d; ++j) c[j] += static_cast<double>(x[j]);
      ++counts[run.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (auto& v : centroid(c)) v /= static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      set_centroid(c, far);
      dist[far] = -1.0;
      counts[c] = 1;
    }
  }
  return run;
}

// Best of `restarts` independent runs by inertia (ties: lower restart index).
// Restarts run concurrently with seeds derived from master_seed.
template <typename T>
Clustering kmeans(MatrixView<T> points, std::size_t k, std::size_t restarts = 10, std::size_t max_iter = 300,
                  std::uint64_t master_seed = 0, std::size_t workers = 1) {
  if (k == 0 || k > points.rows) {
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " must lie in [1, " +
                                std::to_string(points.rows) + "]");
  }
  if (restarts == 0) throw std::invalid_argument("kmeans: restarts must be positive");
  detail::check_finite(points);
  std::vector<KMeansRun> runs(restarts);
  parallel_for(restarts, workers, [&](std::size_t r) {
    runs[r] = lloyd_run(points, k, combine_keys(master_seed, r), max_iter);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  Clustering out;
  out.labels = std::move(runs[best].labels);
  out.k = k;
  out.inertia = runs[best].inertia;
  out.master_seed = master_seed;
  return out;
}

struct SpectralEmbedding {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coords;       // rows x cols, eigenvector c in column c
  std::vector<double> eigenvalues;  // ascending

  MatrixView<double> points() const { return {coords.data(), rows, cols}; }
};

struct SpectralOptions {
  std::size_t dense_limit = 3000;  // above this node count use Lanczos
  bool normalize_rows = true;
  std::size_t max_lanczos_steps = 600;
  double lanczos_tol = 1e-9;
};

namespace detail {

inline std::vector<double> inverse_sqrt_degrees(const Graph& g) {
  std::vector<double> inv(g.node_count());
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (g.degree(v) == 0) {
      throw DataError("spectral clustering: node '" + g.node_id(v) +
                      "' is isolated; extract the largest connected component first");
    }
    inv[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v)));
  }
  return inv;
}

// Smallest eigenpairs of the normalized Laplacian via Lanczos on
// M = 2I - L_sym (= I + D^-1/2 A D^-1/2), one eigenpair per run, each run
// deflated against the vectors already locked so repeated eigenvalues are
// recovered.
inline void lanczos_smallest(const Graph& g, const std::vector<double>& inv_sqrt, std::size_t k,
                             const SpectralOptions& opt, Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y = x;
    for (NodeIndex u = 0; u < g.node_count(); ++u) {
      double acc = 0.0;
      for (auto w : g.neighbors(u)) acc += inv_sqrt[w] * x[w];
      y[u] += inv_sqrt[u] * acc;
    }
  };
  std::vector<Eigen::VectorXd> locked;
  std::vector<double> locked_theta;
  SplitMix64 rng(0x6c616e637a6f73ULL);
  auto deflate = [&](Eigen::VectorXd& x) {
    for (const auto& q : locked) x -= q.dot(x) * q;
  };

  for (std::size_t found = 0; found < k; ++found) {
    const auto max_steps =
        static_cast<Eigen::Index>(std::min<std::size_t>(opt.max_lanczos_steps, g.node_count() - found));
    Eigen::MatrixXd basis(n, max_steps);
    std::vector<double> diag, off;
    Eigen::VectorXd q(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = rng.uniform() - 0.5;
    deflate(q);
    q.normalize();
    double theta = 0.0;
    Eigen::VectorXd ritz;
    for (Eigen::Index s = 0; s < max_steps; ++s) {
      basis.col(s) = q;
      apply(q, w);
      deflate(w);
      diag.push_back(q.dot(w));
      w -= diag.back() * q;
      if (s > 0) w -= off.back() * basis.col(s - 1);
      for (int pass = 0; pass < 2; ++pass) {
        w -= basis.leftCols(s + 1) * (basis.leftCols(s + 1).transpose() * w);
        deflate(w);
      }
      const double beta = w.norm();
      const bool last = (s + 1 == max_steps) || beta < 1e-12;
      if (last || s % 5 == 4) {
        const auto m = s + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
          t(i, i) = diag[static_cast<std::size_t>(i)];
          if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = off[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        theta = es.eigenvalues()[m - 1];
        Eigen::VectorXd y = es.eigenvectors().col(m - 1);
        const double residual = beta * std::abs(y[m - 1]);
        if (last || residual < opt.lanczos_tol) {
          if (residual > 1e-6) throw NumericError("Lanczos eigensolver did not converge");
          ritz = basis.leftCols(m) * y;
          break;
        }
      }
      off.push_back(beta);
      q = w / beta;
    }
    deflate(ritz);
    ritz.normalize();
    locked.push_back(ritz);
    locked_theta.push_back(theta);
  }
  vectors.resize(n, static_cast<Eigen::Index>(k));
  values.resize(static_cast<Eigen::Index>(k));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return locked_theta[a] > locked_theta[b]; });
  for (std::size_t c = 0; c < k; ++c) {
    vectors.col(static_cast<Eigen::Index>(c)) = locked[order[c]];
    values[static_cast<Eigen::Index>(c)] = std::max(0.0, 2.0 - locked_theta[order[c]]);
  }
}

}  // namespace detail

// The k eigenvectors of smallest eigenvalue of L_sym = I - D^-1/2 A D^-1/2
// (directed graphs are symmetrized by edge union first), optionally
// row-normalized. Dense tridiagonalization up to options.dense_limit nodes,
// Lanczos beyond.
inline SpectralEmbedding spectral_embedding(const Graph& graph, std::size_t k, const SpectralOptions& options = {}) {
  const Graph g = graph.symmetrized();
  const auto n = g.node_count();
  if (k == 0 || k > n) throw std::invalid_argument("spectral_embedding: k must lie in [1, n]");
  const auto inv_sqrt = detail::inverse_sqrt_degrees(g);

  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  if (n <= options.dense_limit) {
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(size, size);
    for (auto [u, v] : g.edges()) {
      const double w = inv_sqrt[u] * inv_sqrt[v];
      lap(u, v) -= w;
      lap(v, u) -= w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw NumericError("dense eigensolver failed");
    vectors = es.eigenvectors().leftCols(static_cast<Eigen::Index>(k));
    values = es.eigenvalues().head(static_cast<Eigen::Index>(k)).cwiseMax(0.0);
  } else {
    detail::lanczos_smallest(g, inv_sqrt, k, options, vectors, values);
  }

  SpectralEmbedding emb;
  emb.rows = n;
  emb.cols = k;
  emb.coords.resize(n * k);
  emb.eigenvalues.assign(values.data(), values.data() + values.size());
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double x = vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      emb.coords[i * k + c] = x;
      norm += x * x;
    }
    if (options.normalize_rows && norm > 0.0) {
      norm = std::sqrt(norm);
      for (std::size_t c = 0; c < k; ++c) emb.coords[i * k + c] /= norm;
    }
  }
  return emb;
}

// Spectral baseline: k-means on the row-normalized k-dimensional embedding.
inline Clustering spectral_clustering(const Graph& g, std::size_t k, std::uint64_t master_seed,
                                      std::size_t restarts = 10, std::size_t workers = 1,
                                      const SpectralOptions& options = {}) {
  if (k == 0 || k > g.node_count()) throw std::invalid_argument("spectral_clustering: k must lie in [1, n]");
  const auto emb = spectral_embedding(g, k, options);
  auto c = kmeans(emb.points(), k, restarts, 300, master_seed, workers);
  c.method = ClusterMethod::spectral;
  return c;
}

// Adjusted Rand index from the pair-counting contingency table. Returns 1
// when both partitions are trivial in the same way (denominator zero).
inline double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("adjusted_rand_index: labelings have different lengths (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  const auto n = a.size();
  if (n < 2) return 1.0;
  std::unordered_map<std::uint64_t, std::uint64_t> joint;
  std::unordered_map<std::uint32_t, std::uint64_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[(static_cast<std::uint64_t>(a[i]) << 32) | b[i]];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto pairs = [](std::uint64_t x) { return static_cast<double>(x) * static_cast<double>(x - (x > 0)) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : joint) index += pairs(count);
  for (const auto& [key, count] : rows) sum_a += pairs(count);
  for (const auto& [key, count] : cols) sum_b += pairs(count);
  const double expected = sum_a * sum_b / pairs(n);
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

inline double adjusted_rand_index(const Clustering& a, const Clustering& b) {
  return adjusted_rand_index(std::span<const std::uint32_t>(a.labels), std::span<const std::uint32_t>(b.labels));
}

// Mean silhouette value. Labels must cover [0, k) with 2 <= k <= n-1 and no
// empty cluster; points in singleton clusters score 0. Throws NumericError when
// every point coincides.
template <typename T>
double silhouette(MatrixView<T> points, std::span<const std::uint32_t> labels, std::size_t workers = 1) {
  const auto n = points.rows;
  if (labels.size() != n) throw std::invalid_argument("silhouette: label count differs from point count");
  if (n == 0) throw std::invalid_argument("silhouette: no points");
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2 || k + 1 > n) {
    throw std::invalid_argument("silhouette: number of clusters " + std::to_string(k) + " outside [2, n-1]");
  }
  std::vector<std::size_t> size(k, 0);
  for (auto l : labels) ++size[l];
  if (std::find(size.begin(), size.end(), 0) != size.end()) throw std::invalid_argument("silhouette: empty cluster");
  detail::check_finite(points);
  bool all_identical = true;
  for (std::size_t i = 1; i < n && all_identical; ++i) {
    all_identical = std::equal(points.row(i).begin(), points.row(i).end(), points.row(0).begin());
  }
  if (all_identical) throw NumericError("silhouette: degenerate geometry, all points coincide");

  std::vector<double> score(n, 0.0);
  parallel_for(n, workers, [&](std::size_t i) {
    if (size[labels[i]] == 1) return;
    std::vector<double> sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[labels[j]] += std::sqrt(detail::squared_distance(points.row(i), points.row(j)));
    }
    const double a = sum[labels[i]] / static_cast<double>(size[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != labels[i]) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    }
    const double denom = std::max(a, b);
    score[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  });
  return std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(n);
}

struct ElbowPoint {
  std::size_t k = 0;
  double inertia = 0.0;
};

template <typename T>
std::vector<ElbowPoint> elbow_curve(MatrixView<T> points, std::span<const std::size_t> k_values,
                                    std::size_t restarts = 10, std::uint64_t master_seed = 0,
                                    std::size_t workers = 1) {
  std::vector<ElbowPoint> curve;
  for (auto k : k_values) curve.push_back({k, kmeans(points, k, restarts, 300, master_seed, workers).inertia});
  return curve;
}

// Assignment maximizing total weight over a square matrix (Hungarian method,
// O(k^3)). Returns column assigned to each row.
inline std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  const auto k = weight.size();
  double top = 0.0;
  for (const auto& row : weight) {
    if (row.size() != k) throw std::invalid_argument("max_weight_assignment: matrix must be square");
    for (double w : row) top = std::max(top, w);
  }
  // Minimize cost = top - weight; 1-based potentials formulation.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<std::size_t> match(k + 1, 0), way(k + 1, 0);
  for (std::size_t i = 1; i <= k; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(k + 1, inf);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const auto i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = (top - weight[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const auto j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(k);
  for (std::size_t j = 1; j <= k; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

// Relabels `target` so that its clusters match `reference`'s by maximum
// shared-node weight. Membership is unchanged; only label values move.
inline Clustering align_cluster_labels(const Clustering& reference, const Clustering& target) {
  if (reference.size() != target.size()) throw std::invalid_argument("align_cluster_labels: node sets differ");
  if (reference.k != target.k) {
    throw std::invalid_argument("align_cluster_labels: k mismatch (" + std::to_string(reference.k) + " vs " +
                                std::to_string(target.k) + ")");
  }
  const auto k = target.k;
  std::vector<std::vector<double>> shared(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < target.size(); ++i) shared[target.labels[i]][reference.labels[i]] += 1.0;
  const auto mapping = max_weight_assignment(shared);
  Clustering out = target;
  for (auto& l : out.labels) l = static_cast<std::uint32_t>(mapping[l]);
  return out;
}

}  // namespace infoaccess
