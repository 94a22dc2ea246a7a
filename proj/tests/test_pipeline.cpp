#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "infoaccess/pipeline/commands.hpp"
#include "test_support.hpp"

using namespace infoaccess;
using namespace infoaccess::pipeline;
using namespace infoaccess::testing;

namespace {

std::string edge_text(const Graph& g) {
  std::ostringstream os;
  for (const auto& [u, v] : g.edges()) os << g.node_id(u) << ' ' << g.node_id(v) << '\n';
  return os.str();
}

struct Scratch {
  TempDir dir;
  ExperimentConfig config;
  std::ostringstream log;

  explicit Scratch(const Graph& g) {
    config.graph = dir.write("graph.edges", edge_text(g));
    config.directed = g.directed();
    config.out = (dir.path() / "out").string();
    config.trials = 2000;
    config.workers = 2;
    config.restarts = 4;
  }

  Experiment open() { return open_experiment(config, log); }
};

std::string star_edges() { return "t a\nt b\nt c\nt d\nt e\nt f\nt g\n"; }

int run_cli(const std::string& args) {
  const int status = std::system((std::string(INFOACCESS_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, DefaultsMatchTheDocumentedSetup) {
  ExperimentConfig c;
  EXPECT_EQ(c.trials, 10000u);
  EXPECT_EQ(c.correction, 10u);
  EXPECT_EQ(c.strategy, SeedStrategy::all);
  EXPECT_FALSE(c.num_seeds.has_value());
}

TEST(Config, KSpecForms) {
  EXPECT_EQ(parse_k_spec("5"), (std::vector<std::size_t>{5}));
  EXPECT_EQ(parse_k_spec("2-4"), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(parse_k_spec("2..4"), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(parse_k_spec("2,3,5"), (std::vector<std::size_t>{2, 3, 5}));
  EXPECT_THROW(parse_k_spec("4-2"), ConfigError);
  EXPECT_THROW(parse_k_spec("x"), ConfigError);
}

TEST(Config, NumSeedsSpec) {
  EXPECT_FALSE(parse_num_seeds("sqrt").has_value());
  EXPECT_EQ(parse_num_seeds("15"), std::optional<std::size_t>(15));
  EXPECT_THROW(parse_num_seeds("-1"), ConfigError);
  EXPECT_THROW(parse_num_seeds("1.5"), ConfigError);
}

TEST(Config, ParsesJsonAndResolvesRelativePaths) {
  TempDir dir;
  dir.write("g.edges", star_edges());
  dir.write("a.csv", "node_id,x\nt,1\n");
  const auto path = dir.write("c.json", R"({"graph": "g.edges", "alpha": [0.2, 0.4], "k": {"min": 2, "max": 3},
    "strategy": "random", "num_seeds": "sqrt", "attributes": [{"path": "a.csv", "types": {"x": "numeric"}}],
    "out": "results"})");
  const auto c = load_config(path);
  EXPECT_EQ(fs::path(c.graph), (dir.path() / "g.edges").lexically_normal());
  EXPECT_EQ(c.alpha, (std::vector<double>{0.2, 0.4}));
  EXPECT_EQ(c.k_values, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(c.strategy, SeedStrategy::random);
  ASSERT_EQ(c.attributes.size(), 1u);
  EXPECT_EQ(c.attributes[0].types.at("x"), AttributeKind::numeric);
  EXPECT_EQ(fs::path(c.out), (dir.path() / "results").lexically_normal());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsEveryInvariantViolation) {
  TempDir dir;
  const auto graph = dir.write("g.edges", star_edges());
  auto make = [&](const std::string& body) { return parse_config(json::parse(body), dir.path()); };
  EXPECT_THROW(make(R"({"graph": "g.edges", "bogus": 1})"), ConfigError);
  EXPECT_THROW(make(R"({"graph": "g.edges", "trials": "many"})"), ConfigError);
  for (const auto* body : {R"({"graph": "g.edges", "alpha": [0.5, 0.2]})", R"({"graph": "g.edges", "alpha": [0.2, 0.2]})",
                           R"({"graph": "g.edges", "alpha": [1.5]})", R"({"graph": "g.edges", "alpha": [-0.1]})",
                           R"({"graph": "g.edges", "k": 1})", R"({"graph": "missing.edges"})", R"({"alpha": [0.5]})",
                           R"({"graph": "g.edges", "trials": 0})",
                           R"({"graph": "g.edges", "attributes": ["nope.csv"]})"}) {
    EXPECT_THROW(make(body).validate(), ConfigError) << body;
  }
}

TEST(Config, SeedCountChecksAgainstTheGraph) {
  TempDir dir;
  ExperimentConfig c;
  c.graph = dir.write("g.edges", star_edges());
  c.out = (dir.path() / "out").string();
  c.strategy = SeedStrategy::random;
  c.num_seeds = 9;
  std::ostringstream log;
  EXPECT_THROW(open_experiment(c, log), ConfigError);  // m > n
  c.num_seeds = 3;
  EXPECT_NO_THROW(open_experiment(c, log));
  c.strategy = SeedStrategy::all;
  EXPECT_THROW(open_experiment(c, log), ConfigError);  // all requires m = n
  c.num_seeds.reset();
  c.k_values = {8};
  EXPECT_THROW(open_experiment(c, log), ConfigError);
  EXPECT_FALSE(fs::exists(c.out));  // nothing written before validation passes
}

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig c;
  c.graph = "/tmp/g.edges";
  c.alpha = {0.1, 0.3};
  c.k_values = {2, 5};
  c.strategy = SeedStrategy::degree;
  c.num_seeds = 4;
  c.master_seed = 99;
  const auto back = parse_config(config_to_json(c), "/");
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_EQ(back.k_values, c.k_values);
  EXPECT_EQ(back.strategy, c.strategy);
  EXPECT_EQ(back.num_seeds, c.num_seeds);
  EXPECT_EQ(back.master_seed, c.master_seed);
}

// ---------------------------------------------------------------- artifacts

TEST(Artifacts, Sha256KnownVector) {
  EXPECT_EQ(Sha256().update("abc").hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Artifacts, ManifestListsEveryFileWithItsHash) {
  TempDir dir;
  write_file_atomic(dir.path() / "a.txt", "abc");
  write_file_atomic(dir.path() / "sub" / "b.txt", "");
  write_file_atomic(dir.path() / "x.ckpt", "skip");
  const auto m = write_manifest(dir.path());
  EXPECT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"]["a.txt"]["sha256"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(m["files"]["sub/b.txt"]["bytes"], 0);
  EXPECT_TRUE(fs::exists(dir.path() / "manifest.json"));
}

TEST(Artifacts, CheckpointRoundTripAndTornTail) {
  TempDir dir;
  const auto path = dir.path() / "c.ckpt";
  const std::vector<float> a{0.5f, 1.0f}, b{0.25f, 0.75f};
  {
    ColumnCheckpoint ck(path, 42);
    ck.append(3, a);
    ck.append(0, b);
  }
  const auto full_size = fs::file_size(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("\x01\x00\x00", 3);  // interrupted record
  }
  {
    ColumnCheckpoint ck(path, 42);
    EXPECT_EQ(ck.restored_count(), 2u);
    EXPECT_EQ(*ck.find(3), a);
    EXPECT_EQ(*ck.find(0), b);
    EXPECT_FALSE(ck.find(1).has_value());
    EXPECT_EQ(fs::file_size(path), full_size);
  }
  ColumnCheckpoint other(path, 43);  // different run: start over
  EXPECT_EQ(other.restored_count(), 0u);
}

// ---------------------------------------------------------------- signatures

TEST(Signatures, StarMatchesClosedForms) {
  Scratch run(star_graph(7));
  run.config.trials = 10000;
  const auto e = run.open();
  const auto reps = cmd_signatures(e);
  ASSERT_EQ(reps.size(), 1u);
  const auto& r = reps[0];
  const auto center = *e.graph.index_of("t");  // seeds are every node in index order
  for (std::size_t v = 0; v < 8; ++v) {
    for (std::size_t s = 0; s < 8; ++s) {
      const double expect = v == s ? 1.0 : (v == center || s == center) ? 0.5 : 0.25;
      EXPECT_NEAR(r(v, s), expect, 0.02) << v << "," << s;
    }
  }
  const auto out = fs::path(run.config.out);
  for (const char* f : {"signatures/alpha_0.5.csv", "signatures/alpha_0.5.bin", "signatures/alpha_0.5.json",
                        "signatures/alpha_0.5_histogram.csv", "seeds.json", "graph.json", "config.json",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_FALSE(fs::exists(out / "signatures/alpha_0.5.ckpt"));
  const auto meta = read_json(out / "signatures/alpha_0.5.json");
  EXPECT_EQ(meta["sample_size_rule"], "ceil_sqrt");
  EXPECT_NE(meta["sample_size_note"].get<std::string>().find("626"), std::string::npos);
  // the CSV and binary files describe the same matrix
  std::ifstream csv(out / "signatures/alpha_0.5.csv");
  const auto table = read_representation_csv(csv);
  ASSERT_EQ(table.values.size(), r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) EXPECT_FLOAT_EQ(table.values[i], r.values[i]);
}

TEST(Signatures, AlphaExtremes) {
  Scratch run(cycle_graph(5));
  run.config.alpha = {0.0, 1.0};
  const auto reps = cmd_signatures(run.open());
  for (std::size_t v = 0; v < 5; ++v)
    for (std::size_t s = 0; s < 5; ++s) {
      EXPECT_EQ(reps[0](v, s), v == s ? 1.0f : 0.0f);
      EXPECT_EQ(reps[1](v, s), 1.0f);
    }
}

TEST(Signatures, SecondRunUsesTheCache) {
  Scratch run(path_graph(6));
  const auto e = run.open();
  cmd_signatures(e);
  const auto bin = fs::path(run.config.out) / "signatures/alpha_0.5.bin";
  const auto before = fs::last_write_time(bin);
  run.log.str("");
  cmd_signatures(e);
  EXPECT_NE(run.log.str().find("up to date"), std::string::npos);
  EXPECT_EQ(fs::last_write_time(bin), before);
}

TEST(Signatures, ChangedTrialsInvalidatesTheCache) {
  Scratch run(path_graph(6));
  cmd_signatures(run.open());
  run.config.trials = 1000;
  run.log.str("");
  const auto reps = cmd_signatures(run.open());
  EXPECT_EQ(run.log.str().find("up to date"), std::string::npos);
  EXPECT_EQ(reps[0].trials, 1000u);
}

TEST(Signatures, ResumesFromACheckpoint) {
  Scratch run(erdos_renyi(12, 0.3, 5));
  run.config.alpha = {0.4};
  const auto e = run.open();
  const auto fresh = cmd_signatures(e)[0];

  // Simulate an interrupted run: matrix files gone, three columns saved.
  fs::remove_all(fs::path(run.config.out) / "signatures");
  const auto seeds = experiment_seeds(e);
  {
    ColumnCheckpoint ck(paths::signature(e, 0.4, ".ckpt"), run_key(e, seeds, 0.4));
    for (std::size_t c : {0u, 4u, 7u}) {
      std::vector<float> col(fresh.rows);
      for (std::size_t v = 0; v < fresh.rows; ++v) col[v] = fresh(v, c);
      ck.append(c, col);
    }
  }
  run.log.str("");
  const auto resumed = ensure_representation(e, seeds, 0.4);
  EXPECT_NE(run.log.str().find("resuming with 3"), std::string::npos);
  EXPECT_EQ(resumed.values, fresh.values);
  EXPECT_FALSE(fs::exists(paths::signature(e, 0.4, ".ckpt")));
}

TEST(Signatures, SharedSeedSetAcrossAlpha) {
  Scratch run(erdos_renyi(30, 0.2, 9));
  run.config.strategy = SeedStrategy::random;
  run.config.num_seeds = 6;
  run.config.alpha = {0.2, 0.6};
  const auto reps = cmd_signatures(run.open());
  EXPECT_EQ(reps[0].seed_set.seeds, reps[1].seed_set.seeds);
  const auto seeds = read_json(fs::path(run.config.out) / "seeds.json");
  EXPECT_EQ(seeds["seed_ids"].size(), 6u);
  EXPECT_EQ(seeds["num_seeds_source"], "explicit");
}

TEST(Signatures, ByteIdenticalAcrossWorkerCounts) {
  const auto g = erdos_renyi(25, 0.15, 3);
  std::string bin[2];
  std::vector<std::uint32_t> labels[2];
  for (int i = 0; i < 2; ++i) {
    Scratch run(g);
    run.config.workers = i == 0 ? 1 : 4;
    run.config.alpha = {0.3, 0.6};
    run.config.k_values = {2, 3};
    const auto e = run.open();
    cmd_signatures(e);
    const auto clusters = cmd_cluster(e);
    bin[i] = read_text(fs::path(run.config.out) / "signatures/alpha_0.3.bin");
    labels[i] = clusters.back().selected.labels;
  }
  EXPECT_EQ(bin[0], bin[1]);
  EXPECT_EQ(labels[0], labels[1]);
}

// ---------------------------------------------------------------- cluster

TEST(Cluster, BarbellPrefersTwoClusters) {
  Scratch run(barbell_graph(6));
  run.config.alpha = {0.4, 0.5, 0.6};
  run.config.k_values = parse_k_spec("2-5");
  for (const auto& ac : cmd_cluster(run.open())) {
    EXPECT_TRUE(ac.selected_by_silhouette);
    EXPECT_EQ(ac.selected.k, 2u) << "alpha " << ac.alpha;
    EXPECT_NEAR(std::abs(adjusted_rand_index(ac.selected.labels, std::vector<std::uint32_t>{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1})),
                1.0, 1e-12);
  }
}

TEST(Cluster, DegenerateGeometryIsReportedAndTheRunContinues) {
  Scratch run(cycle_graph(6));
  run.config.alpha = {0.5, 1.0};
  const auto results = cmd_cluster(run.open());
  ASSERT_EQ(results.size(), 2u);
  EXPECT_TRUE(results[0].selected_by_silhouette);
  EXPECT_FALSE(results[1].selected_by_silhouette);
  EXPECT_FALSE(results[1].silhouette_error.front().empty());
  const auto sel = read_json(fs::path(run.config.out) / "clusters/selection.json");
  EXPECT_EQ(sel["alpha"][1]["selected_by"], "fallback_first_k");
  EXPECT_TRUE(fs::exists(fs::path(run.config.out) / "clusters/alpha_1.csv"));
}

TEST(Cluster, ElbowTableHasOneRowPerK) {
  Scratch run(planted_partition(60, 2, 0.3, 0.02, 4));
  run.config.k_values = parse_k_spec("2-10");
  run.config.alpha = {0.3};
  run.config.restarts = 10;
  cmd_cluster(run.open());
  const auto rows = read_csv_rows(fs::path(run.config.out) / "clusters/elbow.csv");
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LE(*parse_double(rows[i][2]), *parse_double(rows[i - 1][2]) + 1e-9);
  }
  EXPECT_EQ(read_csv_rows(fs::path(run.config.out) / "clusters/silhouette.csv").size(), 10u);
}

TEST(Cluster, FilesRoundTrip) {
  Scratch run(barbell_graph(4));
  const auto e = run.open();
  const auto c = cmd_cluster(e)[0].selected;
  const auto back = read_clustering(paths::selected(e, 0.5, ".csv"), e.graph);
  EXPECT_EQ(back.labels, c.labels);
  EXPECT_EQ(back.k, c.k);
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_DOUBLE_EQ(back.inertia, c.inertia);
}

TEST(Cluster, LabelsAlignedAcrossConsecutiveAlpha) {
  Scratch run(barbell_graph(5));
  run.config.alpha = {0.3, 0.4, 0.5, 0.6};
  const auto results = cmd_cluster(run.open());
  for (std::size_t i = 1; i < results.size(); ++i) {
    EXPECT_EQ(results[i].selected.labels, results[0].selected.labels);
  }
}

// ---------------------------------------------------------------- compare-spectral, consistency

TEST(CompareSpectral, StarDisagrees) {
  Scratch run(star_graph(7));
  run.config.trials = 10000;
  const auto e = run.open();
  cmd_cluster(e);
  const auto rows = cmd_compare_spectral(e);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].ari_self, 1.0);
  const auto spectral = read_clustering(paths::spectral(e, 2, ".csv"), e.graph);
  std::vector<std::uint32_t> center_alone(8, 0);
  center_alone[*e.graph.index_of("t")] = 1;
  EXPECT_LT(adjusted_rand_index(center_alone, spectral.labels), 0.1);
}

TEST(CompareSpectral, TwoTrianglesAgree) {
  Scratch run(make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}}));
  run.config.largest_component = false;
  run.config.alpha = {0.5};
  const auto e = run.open();
  cmd_cluster(e);
  EXPECT_DOUBLE_EQ(cmd_compare_spectral(e)[0].ari_vs_spectral, 1.0);
}

TEST(CompareSpectral, RequiresClusterings) {
  Scratch run(path_graph(5));
  try {
    cmd_compare_spectral(run.open());
    FAIL();
  } catch (const DataError& ex) {
    EXPECT_NE(std::string(ex.what()).find("infoaccess cluster"), std::string::npos);
  }
}

TEST(Consistency, MatrixShapeAndDiagonal) {
  Scratch run(barbell_graph(5));
  run.config.alpha = {0.3, 0.5, 0.7};
  const auto e = run.open();
  EXPECT_THROW(
      [&] {
        auto one = run.config;
        one.alpha = {0.5};
        cmd_consistency(open_experiment(one, run.log));
      }(),
      ConfigError);
  cmd_cluster(e);
  const auto m = cmd_consistency(e);
  ASSERT_EQ(m.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m[i][i], 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m[i][j], m[j][i]);
      EXPECT_DOUBLE_EQ(m[i][j], 1.0);  // the barbell split is stable
    }
  }
}

// ---------------------------------------------------------------- attribute tests

namespace {

std::string attribute_csv(const Graph& g, const std::vector<std::string>& header,
                          const std::function<std::vector<std::string>(NodeIndex)>& row) {
  std::ostringstream os;
  os << "node_id";
  for (const auto& h : header) os << ',' << h;
  os << '\n';
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    os << g.node_id(v);
    for (const auto& cell : row(v)) os << ',' << cell;
    os << '\n';
  }
  return os.str();
}

}  // namespace

TEST(AttributeTests, PerfectAssociationAndGating) {
  const auto g = barbell_graph(8);
  Scratch run(g);
  run.config.alpha = {0.4, 0.6};
  run.config.mc_trials = 2000;
  run.config.attributes.push_back(
      {run.dir.write("attrs.csv", attribute_csv(g, {"side", "value", "sparse"},
                                                [](NodeIndex v) {
                                                  return std::vector<std::string>{
                                                      v < 8 ? "left" : "right", std::to_string(v < 8 ? v : 100 + v),
                                                      v % 3 == 0 ? "" : std::to_string(v)};
                                                })),
       {{"side", AttributeKind::categorical}}});
  const auto e = run.open();
  cmd_cluster(e);
  const auto records = cmd_attribute_tests(e);
  auto find = [&](const std::string& attr, const std::string& purpose) -> const AttributeTestRecord* {
    for (const auto& r : records)
      if (r.attribute == attr && r.purpose == purpose && r.method == "info_access") return &r;
    return nullptr;
  };
  const auto* side = find("side", "association");
  ASSERT_TRUE(side && side->result);
  EXPECT_EQ(side->result->test_name, "fisher_exact");
  EXPECT_LT(side->result->p_value, 1e-3);  // exact 2x2 on a perfect split
  EXPECT_DOUBLE_EQ(side->result->corrected_p, side->result->p_value * 10);
  const auto* value = find("value", "association");
  ASSERT_TRUE(value && value->result);
  EXPECT_EQ(value->result->test_name, "kruskal_wallis");
  EXPECT_LT(value->result->p_value, 0.01);
  EXPECT_EQ(find("side", "missingness"), nullptr);  // fully observed
  EXPECT_EQ(find("value", "missingness"), nullptr);
  const auto* sparse = find("sparse", "missingness");
  ASSERT_TRUE(sparse && sparse->result);
  EXPECT_EQ(sparse->result->n_missing, 6u);

  const auto j = read_json(fs::path(run.config.out) / "attribute_tests.json");
  EXPECT_EQ(j["correction"], 10);
  for (const auto& r : j["results"]) {
    if (r.contains("skipped")) continue;
    for (const char* key : {"test", "statistic", "df", "p", "corrected_p", "n_used", "n_missing"}) {
      EXPECT_TRUE(r.contains(key)) << key;
    }
  }
  bool saw_side_minimum = false;
  for (const auto& m : j["minima"]) {
    if (m["attribute"] == "side") {
      saw_side_minimum = true;
      EXPECT_EQ(m["alphas_tested"], 2);
    }
  }
  EXPECT_TRUE(saw_side_minimum);
}

TEST(AttributeTests, MultiCategoryUsesMonteCarloAndHitsTheFloor) {
  const auto g = planted_partition(60, 3, 0.5, 0.01, 11);
  Scratch run(g);
  run.config.alpha = {0.3};
  run.config.k_values = {3};
  run.config.mc_trials = 999;
  run.config.attributes.push_back(
      {run.dir.write("attrs.csv",
                     attribute_csv(g, {"block"}, [](NodeIndex v) { return std::vector<std::string>{"b" + std::to_string(v / 20)}; })),
       {{"block", AttributeKind::categorical}}});
  const auto e = run.open();
  const auto c = cmd_cluster(e)[0].selected;
  std::vector<std::uint32_t> blocks(e.graph.node_count());
  for (NodeIndex v = 0; v < e.graph.node_count(); ++v) {
    blocks[v] = static_cast<std::uint32_t>(std::stoul(e.graph.node_id(v).substr(1)) / 20);
  }
  ASSERT_DOUBLE_EQ(adjusted_rand_index(c.labels, blocks), 1.0);
  const auto records = cmd_attribute_tests(e);
  ASSERT_TRUE(records[0].result);
  EXPECT_DOUBLE_EQ(records[0].result->p_value, 1.0 / 1000.0);
}

TEST(AttributeTests, AttributeWithNoValuesIsNamed) {
  const auto g = path_graph(6);
  Scratch run(g);
  run.config.attributes.push_back(
      {run.dir.write("attrs.csv", attribute_csv(g, {"x", "ghost"},
                                                [](NodeIndex v) { return std::vector<std::string>{std::to_string(v), ""}; })),
       {}});
  const auto e = run.open();
  cmd_cluster(e);
  try {
    cmd_attribute_tests(e);
    FAIL();
  } catch (const DataError& ex) {
    EXPECT_NE(std::string(ex.what()).find("ghost"), std::string::npos);
  }
}

TEST(AttributeTests, AttributesKeyedToNodesOutsideTheComponent) {
  // The attribute file may list nodes that fall outside the largest component.
  auto g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {4, 5}});
  Scratch run(g);
  run.config.attributes.push_back(
      {run.dir.write("attrs.csv", attribute_csv(g, {"x"}, [](NodeIndex v) { return std::vector<std::string>{std::to_string(v)}; })),
       {}});
  const auto e = run.open();
  EXPECT_EQ(e.graph.node_count(), 4u);
  cmd_cluster(e);
  const auto records = cmd_attribute_tests(e);
  ASSERT_TRUE(records[0].result);
  EXPECT_EQ(records[0].result->n_used, 4u);
}

// ---------------------------------------------------------------- seed-eval

TEST(SeedEval, FullSampleReproducesTheReference) {
  const auto g = planted_partition(40, 2, 0.4, 0.03, 2);
  Scratch run(g);
  run.config.alpha = {0.3};
  run.config.seed_eval.m_values = {largest_connected_component(g).node_count()};
  const auto rows = cmd_seed_eval(run.open());
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.ari, 1.0) << to_string(r.strategy);
}

TEST(SeedEval, TableShape) {
  Scratch run(planted_partition(40, 2, 0.4, 0.03, 2));
  run.config.alpha = {0.3, 0.5};
  run.config.seed_eval.strategies = {SeedStrategy::random, SeedStrategy::degree};
  run.config.seed_eval.m_values = {1, 5, 10};
  cmd_seed_eval(run.open());
  const auto rows = read_csv_rows(fs::path(run.config.out) / "seed_eval.csv");
  EXPECT_EQ(rows.size(), 1u + 2 * 2 * 3);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "strategy", "m", "k", "ari"}));
}

// ---------------------------------------------------------------- report

TEST(Report, StarRunWithoutAttributes) {
  Scratch run(star_graph(7));
  const auto e = run.open();
  EXPECT_THROW(cmd_report(e), DataError);
  cmd_cluster(e);
  cmd_compare_spectral(e);
  const auto index = cmd_report(e);
  EXPECT_EQ(index["histograms"].size(), 1u);
  EXPECT_EQ(index["ari_tables"].size(), 1u);
  EXPECT_FALSE(index.contains("attributes"));
  EXPECT_FALSE(index.contains("consistency"));
  const auto out = fs::path(run.config.out);
  EXPECT_TRUE(fs::exists(out / "report/histogram_alpha_0.5.svg"));
  // histogram bars carry the counts from the data file
  const auto svg_text = read_text(out / "report/histogram_alpha_0.5.svg");
  std::uint64_t total = 0;
  for (std::size_t pos = 0; (pos = svg_text.find("data-count=\"", pos)) != std::string::npos;) {
    pos += 12;
    total += std::stoull(svg_text.substr(pos));
  }
  EXPECT_EQ(total, 64u);
  const auto manifest = read_json(out / "manifest.json");
  EXPECT_TRUE(manifest["files"].contains("report/index.json"));
  EXPECT_EQ(manifest["files"]["report/index.json"]["sha256"], sha256_file(out / "report/index.json"));
}

TEST(Report, MissingAttributeTestsNamesTheCommand) {
  const auto g = path_graph(6);
  Scratch run(g);
  run.config.attributes.push_back(
      {run.dir.write("attrs.csv", attribute_csv(g, {"x"}, [](NodeIndex v) { return std::vector<std::string>{std::to_string(v)}; })),
       {}});
  const auto e = run.open();
  cmd_cluster(e);
  try {
    cmd_report(e);
    FAIL();
  } catch (const DataError& ex) {
    EXPECT_NE(std::string(ex.what()).find("attribute-tests"), std::string::npos);
  }
}

TEST(Report, HeatmapClampsOnlyTheRendering) {
  const auto svg_text = svg::heatmap("t", {"a", "b"}, {{1.0, -0.02}, {-0.02, 1.0}});
  EXPECT_NE(svg_text.find("data-raw=\"-0.02\" data-shown=\"0\""), std::string::npos);
  EXPECT_EQ(svg_text.find("data-shown=\"-"), std::string::npos);
}

TEST(Report, ConsistencyDataKeepsRawValues) {
  Scratch run(barbell_graph(5));
  run.config.alpha = {0.3, 0.6};
  const auto e = run.open();
  cmd_cluster(e);
  cmd_consistency(e);
  // Overwrite one entry with a negative ARI, as a real sweep can produce.
  write_file_atomic(fs::path(run.config.out) / "consistency.csv", "alpha,0.3,0.6\n0.3,1,-0.02\n0.6,-0.02,1\n");
  const auto index = cmd_report(e);
  EXPECT_EQ(index["consistency"]["svg"], "consistency_heatmap.svg");
  const auto svg_text = read_text(fs::path(run.config.out) / "report/consistency_heatmap.svg");
  EXPECT_NE(svg_text.find("data-raw=\"-0.02\" data-shown=\"0\""), std::string::npos);
  EXPECT_NE(read_text(fs::path(run.config.out) / "consistency.csv").find("-0.02"), std::string::npos);
}

TEST(Report, DensityOmittedForSparseClusterWithNote) {
  std::vector<std::string> notes;
  const auto svg_text =
      svg::density_plot("d", {{"cluster 0", {1.0, 2.0, 2.5}}, {"cluster 1", {4.0}}, {"cluster 2", {}}}, "x", &notes);
  ASSERT_EQ(notes.size(), 2u);
  EXPECT_NE(notes[0].find("cluster 1"), std::string::npos);
  EXPECT_NE(svg_text.find("cluster 1 (n=1)"), std::string::npos);
  EXPECT_NE(svg_text.find("cluster 0 (n=3)"), std::string::npos);
  EXPECT_EQ(std::count(svg_text.begin(), svg_text.end(), '\n') > 0, true);
  EXPECT_EQ(svg_text.find("<polyline"), svg_text.rfind("<polyline"));  // one curve
}

TEST(Report, KdeIntegratesToOne) {
  const std::vector<double> xs{0.0, 1.0, 1.5, 3.0};
  const double bw = svg::silverman_bandwidth(xs);
  EXPECT_GT(bw, 0.0);
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(-10 + 23.0 * i / 4000);
  const auto d = svg::gaussian_kde(xs, bw, grid);
  double area = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) area += 0.5 * (d[i] + d[i - 1]) * (grid[i] - grid[i - 1]);
  EXPECT_NEAR(area, 1.0, 1e-6);
}

// ---------------------------------------------------------------- cli

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto graph = dir.write("g.edges", star_edges());
  const auto out = (dir.path() / "out").string();
  const std::string base = " --graph " + graph + " --out " + out + " --trials 500 --workers 1";
  EXPECT_EQ(run_cli("validate" + base), 0);
  EXPECT_EQ(run_cli("signatures" + base + " --alpha 0.5,0.2"), 2);
  EXPECT_EQ(run_cli("signatures" + base + " --strategy random --num-seeds 20"), 2);
  EXPECT_EQ(run_cli("signatures" + base + " --k 1"), 2);
  EXPECT_EQ(run_cli("signatures --graph " + dir.path().string() + "/nope.edges"), 2);
  EXPECT_EQ(run_cli("signatures" + base + " --bogus"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("signatures --config " + dir.write("bad.json", "{not json")), 2);
  const auto bad_graph = dir.write("bad.edges", "a b c\n");
  EXPECT_EQ(run_cli("signatures --graph " + bad_graph + " --out " + out), 3);
  EXPECT_EQ(run_cli("consistency" + base + " --alpha 0.3,0.6"), 3);  // nothing clustered yet
  EXPECT_EQ(run_cli("cluster" + base + " --alpha 0.3,0.6"), 0);
  EXPECT_EQ(run_cli("consistency" + base + " --alpha 0.3,0.6"), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "consistency.csv"));
}

TEST(Cli, FlagsOverrideTheConfig) {
  TempDir dir;
  dir.write("g.edges", star_edges());
  const auto cfg = dir.write("c.json", R"({"graph": "g.edges", "alpha": [0.2], "trials": 300, "out": "o"})");
  ASSERT_EQ(run_cli("signatures --config " + cfg + " --alpha 0.4 --master-seed 5 --workers 1"), 0);
  const auto meta = read_json(dir.path() / "o/signatures/alpha_0.4.json");
  EXPECT_EQ(meta["master_seed"], 5);
  EXPECT_EQ(meta["trials"], 300);
  EXPECT_FALSE(fs::exists(dir.path() / "o/signatures/alpha_0.2.json"));
}
