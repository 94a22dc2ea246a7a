#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infoaccess/pipeline/commands.hpp"

namespace ia = infoaccess;
namespace pl = infoaccess::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::string graph;
  std::string alpha;
  std::optional<std::uint64_t> trials;
  std::string k;
  std::string strategy;
  std::string num_seeds;
  std::optional<std::uint64_t> master_seed;
  bool directed = false;
  std::optional<std::size_t> workers;
  std::string out;
  std::optional<std::uint64_t> correction;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--graph", o.graph, "edge list path");
  cmd->add_option("--alpha", o.alpha, "comma-separated alpha values, ascending");
  cmd->add_option("--trials", o.trials, "cascade simulations per seed");
  cmd->add_option("--k", o.k, "cluster count: N, A-B range or comma list");
  cmd->add_option("--strategy", o.strategy, "seed strategy: random, pagerank, betweenness, degree, all");
  cmd->add_option("--num-seeds", o.num_seeds, "number of seeds m, or 'sqrt'");
  cmd->add_option("--master-seed", o.master_seed, "master random seed");
  cmd->add_flag("--directed", o.directed, "treat the edge list as directed");
  cmd->add_option("--workers", o.workers, "worker threads (default: hardware threads)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--correction", o.correction, "Bonferroni correction factor");
}

pl::ExperimentConfig resolve_config(const Overrides& o) {
  auto c = o.config.empty() ? pl::ExperimentConfig{} : pl::load_config(o.config);
  if (!o.graph.empty()) c.graph = o.graph;
  if (!o.alpha.empty()) c.alpha = pl::parse_alpha_list(o.alpha);
  if (o.trials) c.trials = *o.trials;
  if (!o.k.empty()) c.k_values = pl::parse_k_spec(o.k);
  if (!o.strategy.empty()) c.strategy = ia::parse_seed_strategy(o.strategy);
  if (!o.num_seeds.empty()) c.num_seeds = pl::parse_num_seeds(o.num_seeds);
  if (o.master_seed) c.master_seed = *o.master_seed;
  if (o.directed) c.directed = true;
  if (o.workers) c.workers = *o.workers;
  if (!o.out.empty()) c.out = o.out;
  if (o.correction) c.correction = *o.correction;
  return c;
}

int run(const std::string& command, const Overrides& o) {
  const auto e = pl::open_experiment(resolve_config(o));
  if (command == "validate") {
    std::cout << pl::cmd_validate(e).dump(2) << "\n";
  } else if (command == "signatures") {
    pl::cmd_signatures(e);
  } else if (command == "cluster") {
    for (const auto& ac : pl::cmd_cluster(e)) {
      std::cout << "alpha " << pl::alpha_tag(ac.alpha) << ": k = " << ac.selected.k;
      if (ac.selected_by_silhouette) {
        std::cout << " (silhouette " << ia::format_number(*ac.silhouette[ac.selected_index]) << ")";
      } else {
        std::cout << " (silhouette unavailable)";
      }
      std::cout << "\n";
    }
  } else if (command == "compare-spectral") {
    for (const auto& r : pl::cmd_compare_spectral(e)) {
      std::cout << "alpha " << pl::alpha_tag(r.alpha) << ", k = " << r.k
                << ": ARI vs spectral = " << ia::format_number(r.ari_vs_spectral) << "\n";
    }
  } else if (command == "consistency") {
    pl::cmd_consistency(e);
  } else if (command == "attribute-tests") {
    pl::cmd_attribute_tests(e);
  } else if (command == "seed-eval") {
    pl::cmd_seed_eval(e);
  } else if (command == "report") {
    pl::cmd_report(e);
  }
  if (command != "validate") std::cerr << "wrote " << e.out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information access signatures and clustering"};
  app.require_subcommand(1, 1);
  Overrides o;
  const char* commands[][2] = {
      {"signatures", "estimate information access representations per alpha"},
      {"cluster", "k-means over each representation, silhouette and elbow tables"},
      {"compare-spectral", "spectral baseline and ARI against each alpha"},
      {"consistency", "ARI matrix between the clusterings of every alpha pair"},
      {"attribute-tests", "association tests between clusters and node attributes"},
      {"seed-eval", "ARI of sampled-seed clusterings against the full representation"},
      {"report", "SVG figures and index.json over existing artifacts"},
      {"validate", "check the config and inputs without computing"},
  };
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return run(command, o);
  } catch (const ia::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const ia::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ia::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
