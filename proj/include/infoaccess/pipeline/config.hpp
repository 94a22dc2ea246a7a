#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoaccess/attributes.hpp"
#include "infoaccess/error.hpp"
#include "infoaccess/parallel.hpp"
#include "infoaccess/signature.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct AttributeSource {
  std::string path;
  std::map<std::string, AttributeKind> types;
};

struct SeedEvalConfig {
  std::vector<SeedStrategy> strategies{SeedStrategy::random, SeedStrategy::pagerank, SeedStrategy::betweenness,
                                       SeedStrategy::degree};
  std::vector<std::size_t> m_values;  // empty: ceil(sqrt(n))
};

struct ExperimentConfig {
  std::string graph;
  bool directed = false;
  bool largest_component = true;
  std::vector<double> alpha{0.5};
  std::uint64_t trials = 10'000;
  std::vector<std::size_t> k_values{2};
  SeedStrategy strategy = SeedStrategy::all;
  std::optional<std::size_t> num_seeds;  // unset: n for 'all', ceil(sqrt(n)) otherwise
  std::uint64_t master_seed = 0;
  std::vector<AttributeSource> attributes;
  std::uint64_t correction = 10;
  std::string out = "out";
  std::size_t workers = default_workers();
  std::size_t restarts = 10;
  std::uint64_t mc_trials = 10'000;
  std::size_t histogram_bins = 20;
  SeedEvalConfig seed_eval;

  // Checks every field-level invariant; graph-dependent checks (m <= n,
  // k <= n) happen once the graph is loaded.
  void validate(bool check_paths = true) const {
    if (graph.empty()) throw ConfigError("config: 'graph' is required");
    if (check_paths && !fs::is_regular_file(graph)) throw ConfigError("config: graph file not found: " + graph);
    if (alpha.empty()) throw ConfigError("config: 'alpha' must list at least one value");
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0)) {
        throw ConfigError("config: alpha value " + format_number(alpha[i]) + " outside [0, 1]");
      }
      if (i > 0 && !(alpha[i] > alpha[i - 1])) {
        throw ConfigError("config: alpha values must be sorted ascending and distinct");
      }
    }
    if (trials == 0) throw ConfigError("config: 'trials' must be positive");
    if (trials > 0xFFFFFFFFULL) throw ConfigError("config: 'trials' must fit in 32 bits");
    if (k_values.empty()) throw ConfigError("config: 'k' must name at least one value");
    for (auto k : k_values) {
      if (k < 2) throw ConfigError("config: k must be at least 2, got " + std::to_string(k));
    }
    if (num_seeds && *num_seeds == 0) throw ConfigError("config: 'num_seeds' must be positive");
    if (correction == 0) throw ConfigError("config: 'correction' must be positive");
    if (workers == 0) throw ConfigError("config: 'workers' must be positive");
    if (restarts == 0) throw ConfigError("config: 'restarts' must be positive");
    if (mc_trials == 0) throw ConfigError("config: 'mc_trials' must be positive");
    if (histogram_bins == 0) throw ConfigError("config: 'histogram_bins' must be positive");
    if (out.empty()) throw ConfigError("config: 'out' must be a directory path");
    for (const auto& a : attributes) {
      if (check_paths && !fs::is_regular_file(a.path)) throw ConfigError("config: attribute file not found: " + a.path);
    }
    for (auto m : seed_eval.m_values) {
      if (m == 0) throw ConfigError("config: seed_eval m values must be positive");
    }
    for (auto s : seed_eval.strategies) {
      if (s == SeedStrategy::all) throw ConfigError("config: seed_eval strategies cannot include 'all'");
    }
  }

  // Number of signature columns for a graph with n nodes.
  std::size_t resolved_num_seeds(std::size_t n) const {
    const std::size_t m = num_seeds.value_or(strategy == SeedStrategy::all ? n : default_sample_size(n));
    if (m > n) {
      throw ConfigError("config: num_seeds = " + std::to_string(m) + " exceeds the node count " + std::to_string(n));
    }
    if (strategy == SeedStrategy::all && m != n) {
      throw ConfigError("config: strategy 'all' needs num_seeds = n (" + std::to_string(n) + ")");
    }
    return m;
  }

  std::size_t max_k() const { return *std::max_element(k_values.begin(), k_values.end()); }
};

// Accepts "5", "2-10", "2..10", "2:10" or "2,3,5".
inline std::vector<std::size_t> parse_k_spec(std::string_view spec) {
  auto parse_one = [&](std::string_view s) {
    auto v = parse_double(s);
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
      throw ConfigError("invalid k specification '" + std::string(spec) + "'");
    }
    return static_cast<std::size_t>(*v);
  };
  const auto text = std::string(trim(spec));
  for (std::string sep : {"..", "-", ":"}) {
    if (auto pos = text.find(sep); pos != std::string::npos && pos > 0) {
      const auto lo = parse_one(std::string_view(text).substr(0, pos));
      const auto hi = parse_one(std::string_view(text).substr(pos + sep.size()));
      if (lo > hi) throw ConfigError("invalid k range '" + text + "'");
      std::vector<std::size_t> out;
      for (auto k = lo; k <= hi; ++k) out.push_back(k);
      return out;
    }
  }
  std::vector<std::size_t> out;
  for (const auto& tok : split_edge_tokens(text)) out.push_back(parse_one(tok));
  if (out.empty()) throw ConfigError("empty k specification");
  return out;
}

inline std::vector<double> parse_alpha_list(std::string_view spec) {
  std::vector<double> out;
  for (const auto& tok : split_edge_tokens(spec)) {
    auto v = parse_double(tok);
    if (!v) throw ConfigError("invalid alpha value '" + tok + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("empty alpha list");
  return out;
}

inline std::optional<std::size_t> parse_num_seeds(std::string_view spec) {
  const auto lower = to_lower(trim(spec));
  if (lower == "sqrt") return std::nullopt;
  auto v = parse_double(lower);
  if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
    throw ConfigError("num_seeds must be a positive integer or 'sqrt', got '" + std::string(spec) + "'");
  }
  return static_cast<std::size_t>(*v);
}

namespace detail {

inline std::string resolve_path(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

inline std::uint64_t get_count(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(std::string("config: field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace detail

// Parses a JSON config document. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  static const std::set<std::string> known{"graph",       "directed",   "largest_component", "alpha",
                                           "trials",      "k",          "strategy",          "num_seeds",
                                           "master_seed", "attributes", "correction",        "out",
                                           "workers",     "restarts",   "mc_trials",         "histogram_bins",
                                           "seed_eval"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  ExperimentConfig c;
  if (j.contains("graph")) c.graph = detail::resolve_path(base_dir, detail::get_field<std::string>(j, "graph"));
  if (j.contains("directed")) c.directed = detail::get_field<bool>(j, "directed");
  if (j.contains("largest_component")) c.largest_component = detail::get_field<bool>(j, "largest_component");
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    if (a.is_number()) {
      c.alpha = {a.get<double>()};
    } else if (a.is_array()) {
      c.alpha.clear();
      for (const auto& v : a) {
        if (!v.is_number()) throw ConfigError("config: 'alpha' entries must be numbers");
        c.alpha.push_back(v.get<double>());
      }
    } else if (a.is_string()) {
      c.alpha = parse_alpha_list(a.get<std::string>());
    } else {
      throw ConfigError("config: 'alpha' must be a number or list of numbers");
    }
  }
  if (j.contains("trials")) c.trials = detail::get_count(j, "trials");
  if (j.contains("k")) {
    const auto& k = j.at("k");
    if (k.is_number_integer()) {
      c.k_values = {detail::get_count(j, "k")};
    } else if (k.is_string()) {
      c.k_values = parse_k_spec(k.get<std::string>());
    } else if (k.is_array()) {
      c.k_values.clear();
      for (const auto& v : k) {
        if (!v.is_number_integer()) throw ConfigError("config: 'k' entries must be integers");
        c.k_values.push_back(v.get<std::size_t>());
      }
    } else if (k.is_object()) {
      const auto lo = detail::get_count(k, "min"), hi = detail::get_count(k, "max");
      if (lo > hi) throw ConfigError("config: k.min exceeds k.max");
      c.k_values.clear();
      for (auto v = lo; v <= hi; ++v) c.k_values.push_back(v);
    } else {
      throw ConfigError("config: 'k' must be an integer, range string, list or {min, max}");
    }
  }
  if (j.contains("strategy")) c.strategy = parse_seed_strategy(detail::get_field<std::string>(j, "strategy"));
  if (j.contains("num_seeds")) {
    const auto& m = j.at("num_seeds");
    if (m.is_string()) c.num_seeds = parse_num_seeds(m.get<std::string>());
    else if (m.is_number_integer()) c.num_seeds = detail::get_count(j, "num_seeds");
    else throw ConfigError("config: 'num_seeds' must be an integer or \"sqrt\"");
  }
  if (j.contains("master_seed")) c.master_seed = detail::get_count(j, "master_seed");
  if (j.contains("attributes")) {
    const auto& attrs = j.at("attributes");
    if (!attrs.is_array()) throw ConfigError("config: 'attributes' must be a list");
    for (const auto& a : attrs) {
      AttributeSource src;
      if (a.is_string()) {
        src.path = detail::resolve_path(base_dir, a.get<std::string>());
      } else if (a.is_object() && a.contains("path")) {
        src.path = detail::resolve_path(base_dir, detail::get_field<std::string>(a, "path"));
        if (a.contains("types")) {
          if (!a.at("types").is_object()) throw ConfigError("config: attribute 'types' must be an object");
          for (const auto& [name, kind] : a.at("types").items()) {
            if (!kind.is_string()) throw ConfigError("config: attribute type for '" + name + "' must be a string");
            src.types[name] = parse_attribute_kind(kind.get<std::string>());
          }
        }
      } else {
        throw ConfigError("config: each attribute entry needs a 'path'");
      }
      c.attributes.push_back(std::move(src));
    }
  }
  if (j.contains("correction")) c.correction = detail::get_count(j, "correction");
  if (j.contains("out")) c.out = detail::resolve_path(base_dir, detail::get_field<std::string>(j, "out"));
  if (j.contains("workers")) c.workers = detail::get_count(j, "workers");
  if (j.contains("restarts")) c.restarts = detail::get_count(j, "restarts");
  if (j.contains("mc_trials")) c.mc_trials = detail::get_count(j, "mc_trials");
  if (j.contains("histogram_bins")) c.histogram_bins = detail::get_count(j, "histogram_bins");
  if (j.contains("seed_eval")) {
    const auto& se = j.at("seed_eval");
    if (!se.is_object()) throw ConfigError("config: 'seed_eval' must be an object");
    for (const auto& [key, value] : se.items()) {
      if (key != "strategies" && key != "m_values") throw ConfigError("config: unknown seed_eval field '" + key + "'");
    }
    if (se.contains("strategies")) {
      c.seed_eval.strategies.clear();
      for (const auto& s : se.at("strategies")) {
        if (!s.is_string()) throw ConfigError("config: seed_eval strategies must be strings");
        c.seed_eval.strategies.push_back(parse_seed_strategy(s.get<std::string>()));
      }
    }
    if (se.contains("m_values")) {
      for (const auto& m : se.at("m_values")) {
        if (!m.is_number_integer()) throw ConfigError("config: seed_eval m_values must be integers");
        c.seed_eval.m_values.push_back(m.get<std::size_t>());
      }
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path());
}

// Canonical JSON form of the fields that affect artifacts (paths excluded).
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["graph"] = c.graph;
  j["directed"] = c.directed;
  j["largest_component"] = c.largest_component;
  j["alpha"] = c.alpha;
  j["trials"] = c.trials;
  j["k"] = c.k_values;
  j["strategy"] = to_string(c.strategy);
  j["num_seeds"] = c.num_seeds ? json(*c.num_seeds) : json("sqrt");
  j["master_seed"] = c.master_seed;
  j["correction"] = c.correction;
  j["restarts"] = c.restarts;
  j["mc_trials"] = c.mc_trials;
  j["histogram_bins"] = c.histogram_bins;
  auto& attrs = j["attributes"] = json::array();
  for (const auto& a : c.attributes) {
    json entry{{"path", a.path}};
    for (const auto& [name, kind] : a.types) entry["types"][name] = to_string(kind);
    attrs.push_back(entry);
  }
  json se;
  se["strategies"] = json::array();
  for (auto s : c.seed_eval.strategies) se["strategies"].push_back(to_string(s));
  se["m_values"] = c.seed_eval.m_values;
  j["seed_eval"] = se;
  return j;
}

}  // namespace infoaccess::pipeline
