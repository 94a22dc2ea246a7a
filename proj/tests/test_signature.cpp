#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "infoaccess/representation_io.hpp"
#include "infoaccess/signature.hpp"
#include "test_support.hpp"

using namespace infoaccess;
using namespace infoaccess::testing;

namespace {

double mc_bound(double p, std::uint64_t trials) {
  return 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials)) + 0.005;
}

}  // namespace

TEST(SampleSize, CeilSqrt) {
  EXPECT_EQ(default_sample_size(391'642), 626u);
  EXPECT_EQ(default_sample_size(4), 2u);
  EXPECT_EQ(default_sample_size(1), 1u);
  EXPECT_EQ(default_sample_size(5), 3u);
  EXPECT_EQ(default_sample_size(625), 25u);
  EXPECT_EQ(default_sample_size(626), 26u);
  EXPECT_THROW(default_sample_size(0), std::invalid_argument);
  for (std::size_t n = 1; n < 5000; ++n) {
    auto m = default_sample_size(n);
    EXPECT_GE(m * m, n);
    EXPECT_LT((m - 1) * (m - 1), n);
  }
}

TEST(SeedStrategy, Parse) {
  EXPECT_EQ(parse_seed_strategy("PageRank"), SeedStrategy::pagerank);
  EXPECT_EQ(parse_seed_strategy("all"), SeedStrategy::all);
  EXPECT_THROW(parse_seed_strategy("closeness"), ConfigError);
}

TEST(SelectSeeds, DegreeOnStar) {
  auto s = select_seeds(star_graph(7), SeedStrategy::degree, 1, 0);
  EXPECT_EQ(s.seeds, std::vector<NodeIndex>{7});
}

TEST(SelectSeeds, BetweennessOnPath) {
  auto s = select_seeds(path_graph(3), SeedStrategy::betweenness, 1, 0);
  EXPECT_EQ(s.seeds, std::vector<NodeIndex>{1});
}

TEST(SelectSeeds, PagerankOnStar) {
  auto s = select_seeds(star_graph(7), SeedStrategy::pagerank, 2, 0);
  EXPECT_EQ(s.seeds[0], 7u);
  EXPECT_EQ(s.seeds[1], 0u);  // leaves tie; smallest index wins
}

TEST(SelectSeeds, TiesBrokenBySmallerIndex) {
  auto s = select_seeds(cycle_graph(6), SeedStrategy::degree, 3, 0);
  EXPECT_EQ(s.seeds, (std::vector<NodeIndex>{0, 1, 2}));
  s = select_seeds(cycle_graph(7), SeedStrategy::betweenness, 2, 0);
  EXPECT_EQ(s.seeds, (std::vector<NodeIndex>{0, 1}));
}

TEST(SelectSeeds, RandomIsDeterministicPermutation) {
  auto g = erdos_renyi(30, 0.1, 1);
  auto a = select_seeds(g, SeedStrategy::random, 30, 99);
  auto b = select_seeds(g, SeedStrategy::random, 30, 99);
  EXPECT_EQ(a.seeds, b.seeds);
  auto sorted = a.seeds;
  std::sort(sorted.begin(), sorted.end());
  for (NodeIndex v = 0; v < 30; ++v) EXPECT_EQ(sorted[v], v);
  auto c = select_seeds(g, SeedStrategy::random, 5, 100);
  EXPECT_NO_THROW(c.validate(g));
  EXPECT_NE(select_seeds(g, SeedStrategy::random, 5, 99).seeds, c.seeds);
}

TEST(SelectSeeds, RandomIsRoughlyUniform) {
  auto g = path_graph(10);
  std::vector<int> hits(10, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (auto v : select_seeds(g, SeedStrategy::random, 3, seed).seeds) ++hits[v];
  // Each node is chosen with probability 0.3; expected 1200 hits, sd ~29.
  for (int h : hits) EXPECT_NEAR(h, 1200, 150);
}

TEST(SelectSeeds, Errors) {
  auto g = path_graph(4);
  EXPECT_THROW(select_seeds(g, SeedStrategy::degree, 5, 0), std::invalid_argument);
  EXPECT_THROW(select_seeds(g, SeedStrategy::degree, 0, 0), std::invalid_argument);
  EXPECT_THROW(select_seeds(g, SeedStrategy::all, 3, 0), std::invalid_argument);
  EXPECT_EQ(select_seeds(g, SeedStrategy::all, 4, 0).seeds.size(), 4u);
}

TEST(SeedSet, Validation) {
  auto g = path_graph(4);
  EXPECT_THROW((SeedSet{{0, 0}, SeedStrategy::random}.validate(g)), std::invalid_argument);
  EXPECT_THROW((SeedSet{{7}, SeedStrategy::random}.validate(g)), std::out_of_range);
  EXPECT_THROW((SeedSet{{0, 1}, SeedStrategy::all}.validate(g)), std::invalid_argument);
  EXPECT_THROW((SeedSet{{}, SeedStrategy::random}.validate(g)), std::invalid_argument);
}

TEST(BuildRepresentation, StarRows) {
  auto g = star_graph(7);
  auto seeds = select_seeds(g, SeedStrategy::all, 8, 0);
  CascadeParams params{0.5, 10'000, 0};
  auto rep = build_representation(g, seeds, params, 2);
  ASSERT_EQ(rep.rows, 8u);
  ASSERT_EQ(rep.cols, 8u);
  // Leaf row: (1, a^2, ..., a^2, a); center row: (a, ..., a, 1).
  for (NodeIndex c = 0; c < 8; ++c) {
    const double leaf_expected = c == 0 ? 1.0 : (c == 7 ? 0.5 : 0.25);
    EXPECT_NEAR(rep(0, c), leaf_expected, mc_bound(leaf_expected, params.trials));
    const double center_expected = c == 7 ? 1.0 : 0.5;
    EXPECT_NEAR(rep(7, c), center_expected, mc_bound(center_expected, params.trials));
  }
  for (NodeIndex v = 0; v < 8; ++v)
    for (NodeIndex c = 0; c < 8; ++c) EXPECT_NEAR(rep(v, c), rep(c, v), 2 * mc_bound(0.5, params.trials));
}

TEST(BuildRepresentation, AlphaExtremes) {
  auto g = largest_connected_component(erdos_renyi(25, 0.2, 3));
  auto seeds = select_seeds(g, SeedStrategy::degree, 5, 0);
  auto zero = build_representation(g, seeds, {0.0, 50, 0});
  auto one = build_representation(g, seeds, {1.0, 50, 0});
  for (std::size_t v = 0; v < zero.rows; ++v)
    for (std::size_t c = 0; c < zero.cols; ++c) {
      EXPECT_EQ(zero(v, c), seeds.seeds[c] == v ? 1.0f : 0.0f);
      EXPECT_EQ(one(v, c), 1.0f);
    }
}

TEST(BuildRepresentation, ColumnsMatchEstimatorBitForBit) {
  auto g = erdos_renyi(40, 0.1, 8);
  auto seeds = select_seeds(g, SeedStrategy::random, 6, 4);
  CascadeParams params{0.4, 3'000, 21};
  auto rep = build_representation(g, seeds, params, 3);
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    auto p = estimate_receipt_probabilities(g, seeds.seeds[c], params);
    for (std::size_t v = 0; v < rep.rows; ++v) EXPECT_EQ(rep(v, c), static_cast<float>(p[v]));
  }
}

TEST(BuildRepresentation, RestrictionEqualsSampled) {
  auto g = erdos_renyi(36, 0.12, 12);
  CascadeParams params{0.3, 2'000, 5};
  auto full = build_representation(g, select_seeds(g, SeedStrategy::all, 36, 5), params, 2);
  auto sample = select_seeds(g, SeedStrategy::random, default_sample_size(36), 5);
  auto sampled = build_representation(g, sample, params, 1);
  auto restricted = full.restrict_to(sample);
  EXPECT_EQ(restricted.values, sampled.values);
  EXPECT_EQ(restricted.seed_set.seeds, sample.seeds);
}

TEST(BuildRepresentation, IndependentOfWorkersAndHooks) {
  auto g = erdos_renyi(30, 0.15, 6);
  auto seeds = select_seeds(g, SeedStrategy::all, 30, 0);
  CascadeParams params{0.5, 500, 8};
  auto base = build_representation(g, seeds, params, 1);
  EXPECT_EQ(build_representation(g, seeds, params, 4).values, base.values);

  std::vector<std::vector<float>> saved(30);
  std::mutex mu;
  ColumnHooks record;
  record.completed = [&](std::size_t c, std::span<const float> col) {
    std::lock_guard lock(mu);
    saved[c].assign(col.begin(), col.end());
  };
  build_representation(g, seeds, params, 2, &record);
  ColumnHooks restore;
  std::size_t recomputed = 0;
  restore.restore = [&](std::size_t c) -> std::optional<std::vector<float>> {
    if (c % 3 == 0) return std::nullopt;
    return saved[c];
  };
  restore.completed = [&](std::size_t, std::span<const float>) {
    std::lock_guard lock(mu);
    ++recomputed;
  };
  EXPECT_EQ(build_representation(g, seeds, params, 2, &restore).values, base.values);
  EXPECT_EQ(recomputed, 10u);
}

TEST(BuildRepresentation, EntriesAreProbabilitiesWithUnitSeedEntry) {
  auto g = erdos_renyi(50, 0.06, 31, true);
  auto seeds = select_seeds(g, SeedStrategy::pagerank, 7, 0);
  auto rep = build_representation(g, seeds, {0.6, 300, 1});
  for (float x : rep.values) {
    EXPECT_GE(x, 0.0f);
    EXPECT_LE(x, 1.0f);
  }
  for (std::size_t c = 0; c < seeds.size(); ++c) EXPECT_EQ(rep(seeds.seeds[c], c), 1.0f);
}

TEST(Histogram, AllOnes) {
  Representation rep{3, 2, std::vector<float>(6, 1.0f), {}, 1.0, 1, 0};
  auto h = p_histogram(rep, 10);
  EXPECT_EQ(h.counts[9], 6u);
  EXPECT_EQ(h.total(), 6u);
  EXPECT_EQ(h.bin_edges.front(), 0.0);
  EXPECT_EQ(h.bin_edges.back(), 1.0);
}

TEST(Histogram, AlphaZero) {
  auto g = path_graph(5);
  auto seeds = select_seeds(g, SeedStrategy::degree, 2, 0);
  auto rep = build_representation(g, seeds, {0.0, 10, 0});
  auto h = p_histogram(rep, 5);
  EXPECT_EQ(h.counts[0], 8u);
  EXPECT_EQ(h.counts[4], 2u);
  EXPECT_EQ(h.total(), 10u);
}

TEST(Histogram, StarClosedFormBins) {
  // Closed-form star entries: leaf-leaf 0.25, center-leaf 0.5, diagonal 1.
  auto g = star_graph(7);
  Representation rep{8, 8, std::vector<float>(64), select_seeds(g, SeedStrategy::all, 8, 0), 0.5, 1, 0};
  for (NodeIndex i = 0; i < 8; ++i)
    for (NodeIndex j = 0; j < 8; ++j) rep(i, j) = i == j ? 1.0f : (i == 7 || j == 7 ? 0.5f : 0.25f);
  auto h = p_histogram(rep, 4);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{0, 42, 14, 8}));
}

TEST(Histogram, SimulatedStarMassNearClosedForm) {
  auto g = star_graph(7);
  auto rep = build_representation(g, select_seeds(g, SeedStrategy::all, 8, 0), {0.5, 10'000, 0});
  auto h = p_histogram(rep, 20);
  // Bins of width 0.05: 0.25 is bin 5 (or its lower neighbor), 0.5 bin 10
  // (or 9), 1 the last bin.
  EXPECT_EQ(h.counts[19], 8u);
  EXPECT_EQ(h.counts[4] + h.counts[5], 42u);
  EXPECT_EQ(h.counts[9] + h.counts[10], 14u);
  EXPECT_THROW(p_histogram(rep, 0), std::invalid_argument);
}

TEST(RepresentationIo, CsvRoundTrip) {
  auto g = star_graph(3);
  auto rep = build_representation(g, select_seeds(g, SeedStrategy::degree, 2, 0), {0.3, 777, 2});
  std::stringstream ss;
  write_representation_csv(ss, rep, g);
  auto table = read_representation_csv(ss);
  EXPECT_EQ(table.seed_ids, (std::vector<std::string>{"t", "leaf0"}));
  EXPECT_EQ(table.node_ids, g.node_ids());
  EXPECT_EQ(table.values, rep.values);
}

TEST(RepresentationIo, CsvRejectsBadEntries) {
  std::istringstream bad("node_id,a\na,1.5\n");
  EXPECT_THROW(read_representation_csv(bad), ParseError);
  std::istringstream ragged("node_id,a\na,0.5,0.2\n");
  EXPECT_THROW(read_representation_csv(ragged), ParseError);
}

TEST(RepresentationIo, BinaryRoundTripAndLayout) {
  auto g = path_graph(3);
  auto rep = build_representation(g, select_seeds(g, SeedStrategy::all, 3, 0), {0.5, 100, 0});
  std::stringstream ss;
  write_representation_binary(ss, rep);
  const auto bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 1 + 8 + 8 + 9 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "IARP");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 3);  // rows, little endian
  EXPECT_EQ(bytes[6], 0);
  auto m = read_representation_binary(ss);
  EXPECT_EQ(m.rows, 3u);
  EXPECT_EQ(m.cols, 3u);
  EXPECT_EQ(m.values, rep.values);
}

TEST(RepresentationIo, BinaryRejectsCorruption) {
  std::istringstream wrong_magic("IARX\x01");
  EXPECT_THROW(read_representation_binary(wrong_magic), DataError);
  std::string truncated = "IARP";
  truncated.push_back(1);
  truncated += std::string(8, '\0');
  std::istringstream t(truncated);
  EXPECT_THROW(read_representation_binary(t), DataError);
}

TEST(RepresentationIo, Metadata) {
  auto g = star_graph(3);
  auto rep = build_representation(g, select_seeds(g, SeedStrategy::degree, 1, 0), {0.25, 10, 4});
  auto j = representation_metadata(rep, g, "abc");
  EXPECT_EQ(j["alpha"], 0.25);
  EXPECT_EQ(j["trials"], 10);
  EXPECT_EQ(j["master_seed"], 4);
  EXPECT_EQ(j["strategy"], "degree");
  EXPECT_EQ(j["graph_hash"], "abc");
  EXPECT_EQ(j["seed_ids"][0], "t");
}
