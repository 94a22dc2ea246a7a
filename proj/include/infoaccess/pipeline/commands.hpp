#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoaccess/attributes.hpp"
#include "infoaccess/cascade.hpp"
#include "infoaccess/clustering.hpp"
#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/pipeline/artifacts.hpp"
#include "infoaccess/pipeline/config.hpp"
#include "infoaccess/pipeline/svg.hpp"
#include "infoaccess/representation_io.hpp"
#include "infoaccess/signature.hpp"
#include "infoaccess/stats.hpp"

namespace infoaccess::pipeline {

// Loaded experiment: validated config plus the graph it analyses.
struct Experiment {
  ExperimentConfig config;
  Graph input;  // as read from the edge list
  Graph graph;  // analysis graph (largest component unless disabled)
  std::string graph_hash;
  fs::path out;
  std::ostream* log = &std::cerr;

  std::ostream& note() const { return *log; }
};

inline std::string alpha_tag(double alpha) { return format_number(alpha); }

namespace paths {
inline fs::path signature(const Experiment& e, double a, const char* ext) {
  return e.out / "signatures" / ("alpha_" + alpha_tag(a) + ext);
}
inline fs::path histogram(const Experiment& e, double a) {
  return e.out / "signatures" / ("alpha_" + alpha_tag(a) + "_histogram.csv");
}
inline fs::path clustering(const Experiment& e, double a, std::size_t k, const char* ext) {
  return e.out / "clusters" / ("alpha_" + alpha_tag(a) + "_k" + std::to_string(k) + ext);
}
inline fs::path selected(const Experiment& e, double a, const char* ext) {
  return e.out / "clusters" / ("alpha_" + alpha_tag(a) + ext);
}
inline fs::path spectral(const Experiment& e, std::size_t k, const char* ext) {
  return e.out / "spectral" / ("k" + std::to_string(k) + ext);
}
}  // namespace paths

inline Experiment open_experiment(const ExperimentConfig& config, std::ostream& log = std::cerr) {
  config.validate();
  Experiment e;
  e.config = config;
  e.log = &log;
  e.out = config.out;
  e.input = load_edge_list(config.graph, config.directed);
  e.graph = config.largest_component ? largest_connected_component(e.input) : e.input;
  e.graph_hash = graph_hash(e.graph);
  const auto n = e.graph.node_count();
  config.resolved_num_seeds(n);
  if (config.max_k() >= n) {
    throw ConfigError("config: k = " + std::to_string(config.max_k()) + " must be below the node count " +
                      std::to_string(n));
  }
  for (auto m : config.seed_eval.m_values) {
    if (m > n) throw ConfigError("config: seed_eval m = " + std::to_string(m) + " exceeds the node count");
  }
  return e;
}

inline json graph_summary(const Experiment& e) {
  json j;
  j["graph"] = fs::path(e.config.graph).filename().string();
  j["directed"] = e.graph.directed();
  j["input_nodes"] = e.input.node_count();
  j["input_edges"] = e.input.edge_count();
  j["largest_component"] = e.config.largest_component;
  j["nodes"] = e.graph.node_count();
  j["edges"] = e.graph.edge_count();
  j["graph_hash"] = e.graph_hash;
  return j;
}

inline void write_run_info(const Experiment& e) {
  write_json(e.out / "graph.json", graph_summary(e));
  write_json(e.out / "config.json", config_to_json(e.config));
}

inline void finish(const Experiment& e) { write_manifest(e.out); }

// ---------------------------------------------------------------- seeds

inline json sample_size_note() {
  return {{"sample_size_rule", "ceil_sqrt"},
          {"sample_size_note", "default m = ceil(sqrt(n)); n = 391642 gives 626 (not 632)"}};
}

// The signature seed set, selected once and shared by every alpha.
inline SeedSet experiment_seeds(const Experiment& e) {
  const auto m = e.config.resolved_num_seeds(e.graph.node_count());
  auto seeds = select_seeds(e.graph, e.config.strategy, m, e.config.master_seed, e.config.workers);
  json j;
  j["strategy"] = to_string(seeds.strategy);
  j["num_seeds"] = seeds.size();
  j["num_nodes"] = e.graph.node_count();
  j["master_seed"] = e.config.master_seed;
  j["graph_hash"] = e.graph_hash;
  j.update(sample_size_note());
  j["num_seeds_source"] = e.config.num_seeds ? "explicit" : "default";
  auto& ids = j["seed_ids"] = json::array();
  for (auto s : seeds.seeds) ids.push_back(e.graph.node_id(s));
  write_json(e.out / "seeds.json", j);
  return seeds;
}

// ---------------------------------------------------------------- signatures

inline json signature_metadata(const Experiment& e, const Representation& rep) {
  auto j = representation_metadata(rep, e.graph, e.graph_hash);
  j.update(sample_size_note());
  j["histogram_bins"] = e.config.histogram_bins;
  j["files"] = {{"csv", paths::signature(e, rep.alpha, ".csv").filename().string()},
                {"binary", paths::signature(e, rep.alpha, ".bin").filename().string()},
                {"histogram", paths::histogram(e, rep.alpha).filename().string()}};
  return j;
}

inline std::uint64_t run_key(const Experiment& e, const SeedSet& seeds, double alpha) {
  std::uint64_t k = hash_string(e.graph_hash);
  k = combine_keys(k, std::bit_cast<std::uint64_t>(alpha));
  k = combine_keys(k, e.config.trials);
  k = combine_keys(k, e.config.master_seed);
  for (auto s : seeds.seeds) k = combine_keys(k, s);
  return k;
}

inline std::optional<Representation> load_cached_representation(const Experiment& e, const SeedSet& seeds,
                                                                 double alpha) {
  const auto meta_path = paths::signature(e, alpha, ".json");
  const auto bin_path = paths::signature(e, alpha, ".bin");
  if (!fs::exists(meta_path) || !fs::exists(bin_path)) return std::nullopt;
  Representation rep{e.graph.node_count(), seeds.size(), {}, seeds, alpha, e.config.trials, e.config.master_seed};
  json stored;
  try {
    stored = read_json(meta_path);
  } catch (const DataError&) {
    return std::nullopt;
  }
  if (stored != signature_metadata(e, rep)) return std::nullopt;
  std::ifstream in(bin_path, std::ios::binary);
  auto m = read_representation_binary(in);
  if (m.rows != rep.rows || m.cols != rep.cols) return std::nullopt;
  rep.values = std::move(m.values);
  return rep;
}

inline void write_histogram_csv(const fs::path& path, const PHistogram& h) {
  std::ostringstream os;
  os << "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << format_number(h.bin_edges[b]) << ',' << format_number(h.bin_edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
  write_file_atomic(path, os.str());
}

inline PHistogram read_histogram_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  PHistogram h;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = parse_csv_line(line);
    if (f.size() != 3) throw ParseError(path.string(), line_no, "expected bin_low,bin_high,count");
    auto lo = parse_double(f[0]), hi = parse_double(f[1]), c = parse_double(f[2]);
    if (!lo || !hi || !c) throw ParseError(path.string(), line_no, "non-numeric histogram field");
    if (h.bin_edges.empty()) h.bin_edges.push_back(*lo);
    h.bin_edges.push_back(*hi);
    h.counts.push_back(static_cast<std::uint64_t>(*c));
  }
  return h;
}

// Returns the representation for `alpha`, from cache when the stored
// metadata matches, otherwise by simulation with per-column checkpointing.
inline Representation ensure_representation(const Experiment& e, const SeedSet& seeds, double alpha) {
  if (auto cached = load_cached_representation(e, seeds, alpha)) {
    e.note() << "signatures: alpha " << alpha_tag(alpha) << " up to date\n";
    return *cached;
  }
  const auto ckpt_path = paths::signature(e, alpha, ".ckpt");
  ColumnCheckpoint ckpt(ckpt_path, run_key(e, seeds, alpha));
  if (ckpt.restored_count() > 0) {
    e.note() << "signatures: alpha " << alpha_tag(alpha) << " resuming with " << ckpt.restored_count() << " of "
             << seeds.size() << " columns\n";
  }
  ColumnHooks hooks;
  hooks.restore = [&](std::size_t c) { return ckpt.find(c); };
  hooks.completed = [&](std::size_t c, std::span<const float> col) { ckpt.append(c, col); };
  e.note() << "signatures: alpha " << alpha_tag(alpha) << ", " << seeds.size() << " columns x " << e.config.trials
           << " trials\n";
  auto rep = build_representation(e.graph, seeds, {alpha, e.config.trials, e.config.master_seed}, e.config.workers,
                                  &hooks);
  {
    std::ostringstream csv;
    write_representation_csv(csv, rep, e.graph);
    write_file_atomic(paths::signature(e, alpha, ".csv"), csv.str());
    std::ostringstream bin;
    write_representation_binary(bin, rep);
    write_file_atomic(paths::signature(e, alpha, ".bin"), bin.str());
  }
  write_histogram_csv(paths::histogram(e, alpha), p_histogram(rep, e.config.histogram_bins));
  write_json(paths::signature(e, alpha, ".json"), signature_metadata(e, rep));
  ckpt.remove();
  return rep;
}

inline std::vector<Representation> cmd_signatures(const Experiment& e) {
  fs::create_directories(e.out);
  write_run_info(e);
  const auto seeds = experiment_seeds(e);
  std::vector<Representation> reps;
  for (double a : e.config.alpha) reps.push_back(ensure_representation(e, seeds, a));
  finish(e);
  return reps;
}

// ---------------------------------------------------------------- clustering io

inline void write_clustering(const fs::path& csv_path, const Clustering& c, const Graph& g, json meta) {
  std::ostringstream os;
  os << "node_id,label\n";
  for (NodeIndex v = 0; v < g.node_count(); ++v) os << csv_escape(g.node_id(v)) << ',' << c.labels[v] << '\n';
  write_file_atomic(csv_path, os.str());
  json j;
  j["method"] = to_string(c.method);
  j["k"] = c.k;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["inertia"] = c.inertia;
  j["master_seed"] = c.master_seed;
  j["cluster_sizes"] = c.cluster_sizes();
  for (auto& [key, value] : meta.items()) j[key] = value;
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  write_json(json_path, j);
}

inline Clustering read_clustering(const fs::path& csv_path, const Graph& g) {
  std::istringstream in(read_text(csv_path));
  std::string line;
  if (!std::getline(in, line) || parse_csv_line(line) != std::vector<std::string>{"node_id", "label"}) {
    throw ParseError(csv_path.string(), 1, "expected header node_id,label");
  }
  Clustering c;
  c.labels.assign(g.node_count(), 0);
  std::vector<char> seen(g.node_count(), 0);
  std::size_t line_no = 1, max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = parse_csv_line(line);
    if (f.size() != 2) throw ParseError(csv_path.string(), line_no, "expected node_id,label");
    auto v = g.index_of(f[0]);
    auto label = parse_double(f[1]);
    if (!v) throw ParseError(csv_path.string(), line_no, "unknown node '" + f[0] + "'");
    if (!label || *label < 0) throw ParseError(csv_path.string(), line_no, "invalid label");
    c.labels[*v] = static_cast<std::uint32_t>(*label);
    seen[*v] = 1;
    max_label = std::max<std::size_t>(max_label, c.labels[*v]);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw DataError(csv_path.string() + ": clustering does not cover every node");
  }
  auto meta_path = csv_path;
  meta_path.replace_extension(".json");
  const auto meta = read_json(meta_path);
  c.k = meta.value("k", max_label + 1);
  c.inertia = meta.value("inertia", 0.0);
  c.master_seed = meta.value("master_seed", std::uint64_t{0});
  c.method = meta.value("method", std::string("info_access")) == "spectral" ? ClusterMethod::spectral
                                                                             : ClusterMethod::info_access;
  if (meta.contains("alpha") && meta["alpha"].is_number()) c.alpha = meta["alpha"].get<double>();
  return c;
}

inline void require(const fs::path& p, const std::string& command) {
  if (!fs::exists(p)) {
    throw DataError("missing " + p.string() + "; run `infoaccess " + command + "` with this config first");
  }
}

// ---------------------------------------------------------------- cluster

struct AlphaClusters {
  double alpha = 0.0;
  std::vector<Clustering> by_k;
  std::vector<std::optional<double>> silhouette;
  std::vector<std::string> silhouette_error;
  std::size_t selected_index = 0;
  bool selected_by_silhouette = false;
  Clustering selected;  // aligned
};

inline std::vector<AlphaClusters> cmd_cluster(const Experiment& e) {
  fs::create_directories(e.out);
  write_run_info(e);
  const auto seeds = experiment_seeds(e);
  const auto& cfg = e.config;
  std::vector<AlphaClusters> results;
  std::ostringstream sil_csv, elbow_csv;
  sil_csv << "alpha,k,silhouette,error\n";
  elbow_csv << "alpha,k,inertia\n";
  json selection;
  selection["criterion"] = "max_silhouette";
  auto& per_alpha = selection["alpha"] = json::array();

  const Clustering* previous = nullptr;
  for (double a : cfg.alpha) {
    const auto rep = ensure_representation(e, seeds, a);
    AlphaClusters ac;
    ac.alpha = a;
    for (auto k : cfg.k_values) {
      auto c = kmeans(view(rep), k, cfg.restarts, 300, cfg.master_seed, cfg.workers);
      c.alpha = a;
      std::optional<double> sil;
      std::string err;
      try {
        sil = silhouette(view(rep), std::span<const std::uint32_t>(c.labels), cfg.workers);
      } catch (const NumericError& ex) {
        err = ex.what();
      } catch (const std::invalid_argument& ex) {
        err = ex.what();
      }
      sil_csv << alpha_tag(a) << ',' << k << ',' << (sil ? format_number(*sil) : "") << ',' << csv_escape(err)
              << '\n';
      elbow_csv << alpha_tag(a) << ',' << k << ',' << format_number(c.inertia) << '\n';
      write_clustering(paths::clustering(e, a, k, ".csv"), c, e.graph,
                       {{"silhouette", sil ? json(*sil) : json(nullptr)}});
      ac.by_k.push_back(std::move(c));
      ac.silhouette.push_back(sil);
      ac.silhouette_error.push_back(err);
    }
    for (std::size_t i = 0; i < ac.by_k.size(); ++i) {
      if (!ac.silhouette[i]) continue;
      if (!ac.selected_by_silhouette || *ac.silhouette[i] > *ac.silhouette[ac.selected_index]) {
        ac.selected_index = i;
        ac.selected_by_silhouette = true;
      }
    }
    if (!ac.selected_by_silhouette) {
      e.note() << "cluster: alpha " << alpha_tag(a) << ": silhouette unavailable (" << ac.silhouette_error.front()
               << "); keeping k = " << ac.by_k.front().k << "\n";
    }
    ac.selected = ac.by_k[ac.selected_index];
    std::optional<double> aligned_to;
    if (previous && previous->k == ac.selected.k) {
      ac.selected = align_cluster_labels(*previous, ac.selected);
      aligned_to = previous->alpha;
    }
    json meta{{"selected_by", ac.selected_by_silhouette ? "max_silhouette" : "fallback_first_k"},
              {"silhouette", ac.silhouette[ac.selected_index] ? json(*ac.silhouette[ac.selected_index])
                                                              : json(nullptr)},
              {"aligned_to_alpha", aligned_to ? json(*aligned_to) : json(nullptr)}};
    write_clustering(paths::selected(e, a, ".csv"), ac.selected, e.graph, meta);
    json entry{{"alpha", a}, {"k", ac.selected.k}};
    entry.update(meta);
    if (!ac.selected_by_silhouette) entry["silhouette_error"] = ac.silhouette_error.front();
    per_alpha.push_back(entry);
    results.push_back(std::move(ac));
    previous = &results.back().selected;
  }
  write_file_atomic(e.out / "clusters" / "silhouette.csv", sil_csv.str());
  write_file_atomic(e.out / "clusters" / "elbow.csv", elbow_csv.str());
  write_json(e.out / "clusters" / "selection.json", selection);
  finish(e);
  return results;
}

inline std::vector<Clustering> load_selected_clusterings(const Experiment& e) {
  std::vector<Clustering> out;
  for (double a : e.config.alpha) {
    const auto p = paths::selected(e, a, ".csv");
    require(p, "cluster");
    out.push_back(read_clustering(p, e.graph));
  }
  return out;
}

// ---------------------------------------------------------------- compare-spectral

struct SpectralComparison {
  double alpha = 0.0;
  std::size_t k = 0;
  double ari_vs_spectral = 0.0;
  double ari_self = 0.0;
};

inline std::vector<SpectralComparison> cmd_compare_spectral(const Experiment& e) {
  fs::create_directories(e.out);
  write_run_info(e);
  const auto info = load_selected_clusterings(e);
  std::map<std::size_t, Clustering> spectral;
  for (const auto& c : info) {
    if (spectral.count(c.k)) continue;
    e.note() << "compare-spectral: spectral clustering with k = " << c.k << "\n";
    auto s = spectral_clustering(e.graph, c.k, e.config.master_seed, e.config.restarts, e.config.workers);
    write_clustering(paths::spectral(e, c.k, ".csv"), s, e.graph,
                     {{"laplacian", "symmetric normalized"},
                      {"embedding", "k smallest eigenvectors, rows normalized"},
                      {"directed_input_symmetrized", e.graph.directed()}});
    spectral.emplace(c.k, std::move(s));
  }
  std::vector<SpectralComparison> rows;
  std::ostringstream os;
  os << "alpha,k,ari_vs_spectral,ari_self\n";
  for (std::size_t i = 0; i < info.size(); ++i) {
    SpectralComparison r{e.config.alpha[i], info[i].k, adjusted_rand_index(info[i], spectral.at(info[i].k)),
                         adjusted_rand_index(info[i], info[i])};
    os << alpha_tag(r.alpha) << ',' << r.k << ',' << format_number(r.ari_vs_spectral) << ','
       << format_number(r.ari_self) << '\n';
    rows.push_back(r);
  }
  write_file_atomic(e.out / "compare_spectral.csv", os.str());
  finish(e);
  return rows;
}

// ---------------------------------------------------------------- consistency

inline std::vector<std::vector<double>> cmd_consistency(const Experiment& e) {
  if (e.config.alpha.size() < 2) throw ConfigError("consistency needs at least two alpha values");
  fs::create_directories(e.out);
  write_run_info(e);
  const auto info = load_selected_clusterings(e);
  const auto n = info.size();
  std::vector<std::vector<double>> ari(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) ari[i][j] = ari[j][i] = adjusted_rand_index(info[i], info[j]);
  std::ostringstream os;
  os << "alpha";
  for (double a : e.config.alpha) os << ',' << alpha_tag(a);
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << alpha_tag(e.config.alpha[i]);
    for (double v : ari[i]) os << ',' << format_number(v);
    os << '\n';
  }
  write_file_atomic(e.out / "consistency.csv", os.str());
  finish(e);
  return ari;
}

// ---------------------------------------------------------------- attribute tests

inline AttributeTable load_experiment_attributes(const Experiment& e) {
  AttributeTable merged;
  for (const auto& src : e.config.attributes) {
    auto table = load_attributes(src.path, e.input, src.types).reindexed(e.input, e.graph);
    for (auto& col : table.columns) {
      if (merged.find(col.name)) throw ConfigError("attribute '" + col.name + "' appears in more than one file");
      merged.columns.push_back(std::move(col));
    }
  }
  return merged;
}

struct AttributeTestRecord {
  std::string method;
  std::optional<double> alpha;
  std::size_t k = 0;
  std::string attribute;
  std::string kind;
  std::string purpose;  // "association" or "missingness"
  std::optional<stats::TestResult> result;
  std::string skipped;  // reason when no result
};

namespace detail {

inline std::vector<AttributeTestRecord> test_attribute(const AttributeColumn& col, const Clustering& c,
                                                      const ExperimentConfig& cfg, std::uint64_t correction) {
  std::vector<AttributeTestRecord> out;
  AttributeTestRecord base;
  base.method = to_string(c.method);
  base.alpha = c.alpha;
  base.k = c.k;
  base.attribute = col.name;
  base.kind = to_string(col.kind);
  const auto n = col.size();
  const auto missing = col.missing_count();

  AttributeTestRecord assoc = base;
  assoc.purpose = "association";
  try {
    if (col.kind == AttributeKind::numeric) {
      std::vector<std::vector<double>> groups(c.k);
      for (std::size_t v = 0; v < n; ++v)
        if (col.numeric[v]) groups[c.labels[v]].push_back(*col.numeric[v]);
      std::erase_if(groups, [](const auto& g) { return g.empty(); });
      std::size_t used = 0;
      for (const auto& g : groups) used += g.size();
      if (groups.size() < 2) assoc.skipped = "fewer than two clusters with observed values";
      else if (used < 3) assoc.skipped = "fewer than three observed values";
      else assoc.result = stats::kruskal_wallis(groups);
    } else {
      std::vector<std::string> cats;
      for (const auto& v : col.categorical)
        if (v) cats.push_back(*v);
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
      stats::ContingencyTable t(c.k, cats.size());
      for (std::size_t v = 0; v < n; ++v) {
        if (!col.categorical[v]) continue;
        const auto j = static_cast<std::size_t>(std::lower_bound(cats.begin(), cats.end(), *col.categorical[v]) -
                                                cats.begin());
        ++t(c.labels[v], j);
      }
      t.col_labels = cats;
      t = t.without_empty_margins();
      if (t.rows < 2) assoc.skipped = "fewer than two clusters with observed values";
      else if (t.cols < 2) assoc.skipped = "fewer than two observed categories";
      else assoc.result = stats::fisher_exact_rxc(t, cfg.mc_trials, cfg.master_seed);
    }
  } catch (const NumericError& ex) {
    assoc.skipped = std::string("numeric failure: ") + ex.what();
  }
  if (assoc.result) {
    assoc.result->n_used = n - missing;
    assoc.result->n_missing = missing;
    stats::apply_correction(*assoc.result, correction);
  }
  out.push_back(std::move(assoc));

  if (missing > 0) {
    AttributeTestRecord miss = base;
    miss.purpose = "missingness";
    stats::ContingencyTable t(c.k, 2);
    t.col_labels = {"observed", "missing"};
    for (std::size_t v = 0; v < n; ++v) ++t(c.labels[v], col.has_value(v) ? 0 : 1);
    t = t.without_empty_margins();
    if (t.cols < 2) {
      miss.skipped = "every value missing";
    } else if (t.rows < 2) {
      miss.skipped = "single cluster";
    } else {
      try {
        miss.result = stats::chi_squared_independence(t);
        miss.result->n_used = n;
        miss.result->n_missing = missing;
        stats::apply_correction(*miss.result, correction);
      } catch (const NumericError& ex) {
        miss.skipped = std::string("numeric failure: ") + ex.what();
      }
    }
    out.push_back(std::move(miss));
  }
  return out;
}

inline json record_json(const AttributeTestRecord& r) {
  json j;
  j["method"] = r.method;
  j["alpha"] = r.alpha ? json(*r.alpha) : json(nullptr);
  j["k"] = r.k;
  j["attribute"] = r.attribute;
  j["kind"] = r.kind;
  j["purpose"] = r.purpose;
  if (r.result) {
    j.update(stats::to_json(*r.result));
    j["corrected_p_display"] = stats::render_p(r.result->corrected_p);
  } else {
    j["skipped"] = r.skipped;
  }
  return j;
}

}  // namespace detail

inline std::vector<AttributeTestRecord> cmd_attribute_tests(const Experiment& e) {
  if (e.config.attributes.empty()) throw ConfigError("attribute-tests: no attribute files configured");
  fs::create_directories(e.out);
  write_run_info(e);
  const auto attrs = load_experiment_attributes(e);
  for (const auto& col : attrs.columns) {
    if (col.missing_count() == col.size()) {
      throw DataError("attribute '" + col.name + "' has no values on the analysed nodes");
    }
  }
  const auto info = load_selected_clusterings(e);
  std::vector<Clustering> spectral;
  std::set<std::size_t> ks;
  for (const auto& c : info) ks.insert(c.k);
  for (auto k : ks) {
    const auto p = paths::spectral(e, k, ".csv");
    if (fs::exists(p)) spectral.push_back(read_clustering(p, e.graph));
  }

  std::vector<AttributeTestRecord> records;
  for (const auto& col : attrs.columns) {
    for (const auto& c : info) {
      for (auto& r : detail::test_attribute(col, c, e.config, e.config.correction)) records.push_back(std::move(r));
    }
    // Spectral clustering is a single run rather than a sweep; reported
    // uncorrected.
    for (const auto& c : spectral) {
      for (auto& r : detail::test_attribute(col, c, e.config, 1)) records.push_back(std::move(r));
    }
  }

  json j;
  j["correction"] = e.config.correction;
  j["correction_note"] = "Bonferroni factor applied to information access results; spectral results uncorrected";
  auto& list = j["results"] = json::array();
  for (const auto& r : records) list.push_back(detail::record_json(r));

  // Minimum corrected p over the alpha sweep per (attribute, purpose).
  auto& minima = j["minima"] = json::array();
  std::ostringstream summary;
  summary << "attribute,kind,test,purpose,min_p,min_corrected_p,display,alpha_at_min,alphas_tested\n";
  for (const auto& col : attrs.columns) {
    for (const std::string purpose : {"association", "missingness"}) {
      const AttributeTestRecord* best = nullptr;
      std::size_t tested = 0;
      for (const auto& r : records) {
        if (r.attribute != col.name || r.purpose != purpose || r.method != "info_access" || !r.result) continue;
        ++tested;
        if (!best || r.result->p_value < best->result->p_value) best = &r;
      }
      if (!best) continue;
      json m{{"attribute", col.name},
             {"kind", best->kind},
             {"test", best->result->test_name},
             {"purpose", purpose},
             {"min_p", best->result->p_value},
             {"min_corrected_p", best->result->corrected_p},
             {"display", stats::render_p(best->result->corrected_p)},
             {"alpha_at_min", *best->alpha},
             {"alphas_tested", tested}};
      summary << csv_escape(col.name) << ',' << best->kind << ',' << best->result->test_name << ',' << purpose << ','
              << format_number(best->result->p_value) << ',' << format_number(best->result->corrected_p) << ','
              << stats::render_p(best->result->corrected_p) << ',' << alpha_tag(*best->alpha) << ',' << tested
              << '\n';
      minima.push_back(m);
    }
  }
  write_json(e.out / "attribute_tests.json", j);
  write_file_atomic(e.out / "attribute_tests.csv", summary.str());
  finish(e);
  return records;
}

// ---------------------------------------------------------------- seed-eval

struct SeedEvalRow {
  double alpha = 0.0;
  SeedStrategy strategy = SeedStrategy::random;
  std::size_t m = 0;
  std::size_t k = 0;
  double ari = 0.0;
};

inline std::vector<SeedEvalRow> cmd_seed_eval(const Experiment& e) {
  fs::create_directories(e.out);
  write_run_info(e);
  const auto& cfg = e.config;
  const auto n = e.graph.node_count();
  const auto full_seeds = select_seeds(e.graph, SeedStrategy::all, n, cfg.master_seed);
  auto m_values = cfg.seed_eval.m_values;
  if (m_values.empty()) m_values.push_back(default_sample_size(n));

  std::map<double, std::size_t> selected_k;
  if (fs::exists(e.out / "clusters" / "selection.json")) {
    const auto selection = read_json(e.out / "clusters" / "selection.json");
    for (const auto& entry : selection.at("alpha")) {
      selected_k[entry.at("alpha").get<double>()] = entry.at("k").get<std::size_t>();
    }
  }

  std::vector<SeedEvalRow> rows;
  std::ostringstream os;
  os << "alpha,strategy,m,k,ari\n";
  for (double a : cfg.alpha) {
    Representation full;
    if (cfg.strategy == SeedStrategy::all) {
      full = ensure_representation(e, experiment_seeds(e), a);
    } else {
      e.note() << "seed-eval: building full representation for alpha " << alpha_tag(a) << "\n";
      full = build_representation(e.graph, full_seeds, {a, cfg.trials, cfg.master_seed}, cfg.workers);
    }
    const auto k = selected_k.count(a) ? selected_k[a] : cfg.k_values.front();
    const auto reference = kmeans(view(full), k, cfg.restarts, 300, cfg.master_seed, cfg.workers);
    for (auto strategy : cfg.seed_eval.strategies) {
      for (auto m : m_values) {
        const auto seeds = select_seeds(e.graph, strategy, m, cfg.master_seed, cfg.workers);
        const auto sampled = full.restrict_to(seeds);
        const auto c = kmeans(view(sampled), k, cfg.restarts, 300, cfg.master_seed, cfg.workers);
        SeedEvalRow r{a, strategy, m, k, adjusted_rand_index(reference, c)};
        os << alpha_tag(a) << ',' << to_string(strategy) << ',' << m << ',' << k << ',' << format_number(r.ari)
           << '\n';
        rows.push_back(r);
      }
    }
  }
  write_file_atomic(e.out / "seed_eval.csv", os.str());
  finish(e);
  return rows;
}

// ---------------------------------------------------------------- report

inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

inline json cmd_report(const Experiment& e) {
  const auto dir = e.out / "report";
  fs::create_directories(dir);
  json index;
  index["graph"] = graph_summary(e);
  auto& notes = index["notes"] = json::array();

  auto& hists = index["histograms"] = json::array();
  for (double a : e.config.alpha) {
    const auto p = paths::histogram(e, a);
    require(p, "signatures");
    const auto h = read_histogram_csv(p);
    const auto name = "histogram_alpha_" + alpha_tag(a) + ".svg";
    write_file_atomic(dir / name, svg::histogram("p_ij histogram, alpha = " + alpha_tag(a), h.bin_edges, h.counts,
                                                 "probability of information access"));
    hists.push_back({{"alpha", a}, {"svg", name}, {"data", fs::relative(p, e.out).generic_string()},
                     {"bin_edges", h.bin_edges}, {"counts", h.counts}});
  }

  auto& tables = index["ari_tables"] = json::array();
  if (fs::exists(e.out / "compare_spectral.csv")) {
    tables.push_back({{"name", "info_access_vs_spectral"},
                      {"data", "compare_spectral.csv"},
                      {"rows", read_csv_rows(e.out / "compare_spectral.csv")}});
  }
  if (fs::exists(e.out / "seed_eval.csv")) {
    tables.push_back({{"name", "seed_sampling"}, {"data", "seed_eval.csv"}, {"rows", read_csv_rows(e.out / "seed_eval.csv")}});
  }
  if (fs::exists(e.out / "clusters" / "silhouette.csv")) {
    index["silhouette"] = {{"data", "clusters/silhouette.csv"}, {"elbow", "clusters/elbow.csv"},
                           {"selection", read_json(e.out / "clusters" / "selection.json")}};
  }

  if (fs::exists(e.out / "consistency.csv")) {
    const auto rows = read_csv_rows(e.out / "consistency.csv");
    std::vector<std::string> labels(rows.front().begin() + 1, rows.front().end());
    std::vector<std::vector<double>> values;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::vector<double> r;
      for (std::size_t j = 1; j < rows[i].size(); ++j) r.push_back(parse_double(rows[i][j]).value_or(NAN));
      values.push_back(std::move(r));
    }
    write_file_atomic(dir / "consistency_heatmap.svg",
                      svg::heatmap("ARI between alpha values (negative shown as 0)", labels, values));
    index["consistency"] = {{"svg", "consistency_heatmap.svg"}, {"data", "consistency.csv"},
                            {"rendering", "negative ARI drawn as 0; raw values in data file"}};
  }

  if (!e.config.attributes.empty()) {
    require(e.out / "attribute_tests.json", "attribute-tests");
    const auto attrs = load_experiment_attributes(e);
    const auto info = load_selected_clusterings(e);
    json section;
    section["tests"] = "attribute_tests.json";
    section["summary"] = read_json(e.out / "attribute_tests.json").at("minima");
    auto& figures = section["figures"] = json::array();
    for (const auto& col : attrs.columns) {
      for (std::size_t i = 0; i < info.size(); ++i) {
        const auto& c = info[i];
        const auto tag = alpha_tag(e.config.alpha[i]);
        const auto base = "attr_" + col.name + "_alpha_" + tag;
        if (col.kind == AttributeKind::numeric) {
          std::vector<svg::DensitySeries> series(c.k);
          for (std::size_t k = 0; k < c.k; ++k) series[k].label = "cluster " + std::to_string(k);
          for (std::size_t v = 0; v < col.size(); ++v)
            if (col.numeric[v]) series[c.labels[v]].values.push_back(*col.numeric[v]);
          std::vector<std::string> density_notes;
          const auto name = base + "_density.svg";
          write_file_atomic(dir / name, svg::density_plot(col.name + " by cluster, alpha = " + tag, series, col.name,
                                                          &density_notes));
          json counts = json::array();
          for (const auto& s : series) counts.push_back(s.values.size());
          figures.push_back({{"attribute", col.name}, {"alpha", e.config.alpha[i]}, {"svg", name},
                             {"kind", "density"}, {"bandwidth", "silverman"}, {"counts", counts},
                             {"notes", density_notes}});
          for (const auto& nt : density_notes) notes.push_back(col.name + ", alpha " + tag + ": " + nt);
        } else {
          std::vector<std::string> cats;
          for (const auto& v : col.categorical)
            if (v) cats.push_back(*v);
          std::sort(cats.begin(), cats.end());
          cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
          std::vector<std::vector<std::uint64_t>> counts(c.k, std::vector<std::uint64_t>(cats.size(), 0));
          for (std::size_t v = 0; v < col.size(); ++v) {
            if (!col.categorical[v]) continue;
            const auto j = std::lower_bound(cats.begin(), cats.end(), *col.categorical[v]) - cats.begin();
            ++counts[c.labels[v]][static_cast<std::size_t>(j)];
          }
          std::vector<std::string> rows;
          for (std::size_t k = 0; k < c.k; ++k) rows.push_back("cluster " + std::to_string(k));
          const auto name = base + "_composition.svg";
          write_file_atomic(dir / name,
                            svg::composition_bars(col.name + " composition, alpha = " + tag, rows, cats, counts));
          figures.push_back({{"attribute", col.name}, {"alpha", e.config.alpha[i]}, {"svg", name},
                             {"kind", "composition"}, {"categories", cats}, {"counts", counts}});
        }
      }
    }
    index["attributes"] = section;
  }
  write_json(dir / "index.json", index);
  finish(e);
  return index;
}

// ---------------------------------------------------------------- validate

inline json cmd_validate(const Experiment& e) {
  json j = graph_summary(e);
  j["alpha"] = e.config.alpha;
  j["k"] = e.config.k_values;
  j["strategy"] = to_string(e.config.strategy);
  j["num_seeds"] = e.config.resolved_num_seeds(e.graph.node_count());
  j.update(sample_size_note());
  if (!e.config.attributes.empty()) {
    const auto attrs = load_experiment_attributes(e);
    auto& cols = j["attributes"] = json::array();
    for (const auto& c : attrs.columns) {
      cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"missing", c.missing_count()}});
    }
  }
  return j;
}

}  // namespace infoaccess::pipeline
