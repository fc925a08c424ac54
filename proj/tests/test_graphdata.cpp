#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "graphdata.hpp"

using namespace rsgnn;
namespace fs = std::filesystem;

namespace {

// Triangle plus a pendant node: 0-1-2 triangle, 3 attached to 2.
AttributedGraph triangle_fixture() {
  AttributedGraph g;
  g.num_nodes = 4;
  g.num_classes = 2;
  g.features = Mat(4, 2);
  for (int i = 0; i < 4; ++i) {
    g.features(i, 0) = i;
    g.features(i, 1) = 1.0 - i;
  }
  g.edges = {{0, 1}, {0, 2}, {1, 2}, {2, 3}};
  g.labels = {0, 1, 0, 1};
  g.train_mask.assign(4, 0);
  g.val_mask.assign(4, 0);
  g.test_mask.assign(4, 0);
  return g;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rsgnn_gd_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("adjacency and has_edge on the triangle fixture") {
  AttributedGraph g = triangle_fixture();
  auto adj = g.adjacency();
  CHECK(adj[0] == std::vector<int>{1, 2});
  CHECK(adj[2] == std::vector<int>{0, 1, 3});
  CHECK(adj[3] == std::vector<int>{2});
  CHECK(g.has_edge(1, 0));
  CHECK(g.has_edge(2, 3));
  CHECK_FALSE(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(1, 1));
}

TEST_CASE("load_graph parses the canonical format and drops duplicates") {
  TempDir td;
  {
    std::ofstream n(td.path / "g.nodes");
    n << "0\t1\t0.5,1.5\n";
    n << "1\t0\t-1,2\n";
    n << "2\t1\t0,0\n";
  }
  {
    std::ofstream e(td.path / "g.edges");
    e << "0\t1\n1\t0\n1\t2\n2\t2\n";  // duplicate (reversed) + self-loop
  }
  int dropped = 0;
  AttributedGraph g = load_graph((td.path / "g.nodes").string(),
                                 (td.path / "g.edges").string(), &dropped);
  CHECK(g.num_nodes == 3);
  CHECK(g.num_classes == 2);
  CHECK(g.features(0, 1) == 1.5);
  CHECK(g.features(1, 0) == -1.0);
  CHECK(g.edges == EdgeList{{0, 1}, {1, 2}});
  CHECK(dropped == 2);
}

TEST_CASE("load_graph reports malformed lines with their line number") {
  TempDir td;
  {
    std::ofstream n(td.path / "bad.nodes");
    n << "0\t0\t1,2\n";
    n << "1\tnot_a_label\t3,4\n";
  }
  {
    std::ofstream e(td.path / "bad.edges");
  }
  try {
    load_graph((td.path / "bad.nodes").string(), (td.path / "bad.edges").string());
    FAIL("expected IoError");
  } catch (const IoError& err) {
    CHECK(std::string(err.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("save/load round trip preserves everything including noise record") {
  TempDir td;
  AttributedGraph g = triangle_fixture();
  g.train_mask[0] = 1;
  g.val_mask[1] = 1;
  g.test_mask[3] = 1;
  NoiseRecord rec;
  rec.added_edges = {{0, 3}};
  rec.removed_edges = {{0, 1}};
  rec.perturbation_rate = 0.25;
  g.noise = rec;

  std::string np = (td.path / "rt.nodes").string();
  std::string ep = (td.path / "rt.edges").string();
  std::string sp = (td.path / "rt.json").string();
  save_graph(g, np, ep, sp);
  AttributedGraph h = load_graph_with_sidecar(np, ep, sp);

  CHECK(h.num_nodes == g.num_nodes);
  CHECK(h.num_classes == g.num_classes);
  CHECK(h.edges == g.edges);
  CHECK(h.labels == g.labels);
  CHECK(h.train_mask == g.train_mask);
  CHECK(h.val_mask == g.val_mask);
  CHECK(h.test_mask == g.test_mask);
  for (size_t i = 0; i < g.features.size(); ++i)
    CHECK(h.features.data[i] == g.features.data[i]);
  REQUIRE(h.noise.has_value());
  CHECK(h.noise->added_edges == rec.added_edges);
  CHECK(h.noise->removed_edges == rec.removed_edges);
  CHECK(h.noise->perturbation_rate == 0.25);
}

TEST_CASE("split_labels: sizes, disjointness, determinism") {
  PlantedPartitionConfig cfg;
  cfg.num_nodes = 200;
  cfg.num_classes = 4;
  cfg.feature_dim = 4;
  cfg.p_in = 0.05;
  cfg.p_out = 0.01;
  cfg.seed = 3;
  AttributedGraph base = generate_planted_partition(cfg);

  AttributedGraph a = split_labels(base, 0.1, 40, 80, 7);
  AttributedGraph b = split_labels(base, 0.1, 40, 80, 7);
  AttributedGraph c = split_labels(base, 0.1, 40, 80, 8);

  auto train = a.mask_nodes(a.train_mask);
  auto val = a.mask_nodes(a.val_mask);
  auto test = a.mask_nodes(a.test_mask);
  CHECK(train.size() == 20);  // round(0.1 * 200)
  CHECK(val.size() == 40);
  CHECK(test.size() == 80);

  std::set<int> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == train.size() + val.size() + test.size());

  CHECK(a.train_mask == b.train_mask);  // same seed, same split
  CHECK(a.val_mask == b.val_mask);
  CHECK(a.train_mask != c.train_mask);  // different seed differs
}

TEST_CASE("split_labels rejects oversubscribed splits") {
  AttributedGraph g = triangle_fixture();
  CHECK_THROWS_AS(split_labels(g, 0.5, 2, 2, 0), ConfigError);
}

TEST_CASE("inject_random_noise arithmetic and bookkeeping") {
  PlantedPartitionConfig cfg;
  cfg.num_nodes = 100;
  cfg.num_classes = 2;
  cfg.feature_dim = 2;
  cfg.p_in = 0.2;
  cfg.p_out = 0.05;
  cfg.seed = 5;
  AttributedGraph base = generate_planted_partition(cfg);
  size_t e0 = base.edges.size();
  REQUIRE(e0 > 20);

  SUBCASE("pure additions") {
    auto [g, rec] = inject_random_noise(base, 0.2, 1.0, 11);
    size_t expect_add = static_cast<size_t>(std::llround(0.2 * e0));
    CHECK(rec.added_edges.size() == expect_add);
    CHECK(rec.removed_edges.empty());
    CHECK(g.edges.size() == e0 + expect_add);
    // every added edge must be new, canonical, and present afterwards
    for (auto [u, v] : rec.added_edges) {
      CHECK(u < v);
      CHECK_FALSE(std::binary_search(base.edges.begin(), base.edges.end(),
                                     std::make_pair(u, v)));
      CHECK(g.has_edge(u, v));
    }
    CHECK(g.noise.has_value());
    CHECK(g.noise->perturbation_rate == 0.2);
  }

  SUBCASE("mixed add/remove") {
    auto [g, rec] = inject_random_noise(base, 0.3, 0.5, 11);
    size_t expect_add = static_cast<size_t>(std::llround(0.3 * e0 * 0.5));
    size_t expect_rm = static_cast<size_t>(std::llround(0.3 * e0 * 0.5));
    CHECK(rec.added_edges.size() == expect_add);
    CHECK(rec.removed_edges.size() == expect_rm);
    CHECK(g.edges.size() == e0 + expect_add - expect_rm);
    for (auto [u, v] : rec.removed_edges) {
      CHECK(std::binary_search(base.edges.begin(), base.edges.end(), std::make_pair(u, v)));
      CHECK_FALSE(g.has_edge(u, v));
    }
  }

  SUBCASE("determinism") {
    auto [g1, r1] = inject_random_noise(base, 0.2, 0.7, 13);
    auto [g2, r2] = inject_random_noise(base, 0.2, 0.7, 13);
    CHECK(g1.edges == g2.edges);
    CHECK(r1.added_edges == r2.added_edges);
    CHECK(r1.removed_edges == r2.removed_edges);
  }
}

TEST_CASE("uninvolved_rate on a path graph") {
  // path 0-1-2-3-4, train = {0}, hops = 2 -> nodes 3,4 uninvolved -> 0.4
  AttributedGraph g;
  g.num_nodes = 5;
  g.num_classes = 2;
  g.features = Mat(5, 1);
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  g.labels.assign(5, 0);
  g.train_mask.assign(5, 0);
  g.val_mask.assign(5, 0);
  g.test_mask.assign(5, 0);
  g.train_mask[0] = 1;
  CHECK(uninvolved_rate(g, 2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(uninvolved_rate(g, 4) == 0.0);
  CHECK(uninvolved_rate(g, 0) == doctest::Approx(0.8).epsilon(1e-12));

  g.train_mask[0] = 0;
  CHECK_THROWS_AS(uninvolved_rate(g, 2), ConfigError);
}

TEST_CASE("planted partition matches its edge-probability model") {
  PlantedPartitionConfig cfg;
  cfg.num_nodes = 300;
  cfg.num_classes = 3;
  cfg.feature_dim = 3;
  cfg.p_in = 0.2;
  cfg.p_out = 0.02;
  cfg.feature_noise = 0.1;
  cfg.seed = 21;
  AttributedGraph g = generate_planted_partition(cfg);

  CHECK(g.num_nodes == 300);
  CHECK(g.num_classes == 3);
  for (int i = 0; i < g.num_nodes; ++i) CHECK(g.labels[i] == i % 3);

  // count intra/inter edges and compare against binomial expectations;
  // a 5-sigma band keeps this deterministic test meaningful but robust
  long intra = 0, inter = 0;
  for (auto [u, v] : g.edges) (g.labels[u] == g.labels[v] ? intra : inter)++;
  long intra_pairs = 0, inter_pairs = 0;
  for (int i = 0; i < 300; ++i)
    for (int j = i + 1; j < 300; ++j) (g.labels[i] == g.labels[j] ? intra_pairs : inter_pairs)++;
  auto band = [](long n, double p, long x) {
    double mu = n * p, sd = std::sqrt(n * p * (1 - p));
    return std::abs(x - mu) < 5 * sd;
  };
  CHECK(band(intra_pairs, cfg.p_in, intra));
  CHECK(band(inter_pairs, cfg.p_out, inter));

  // features: class centroid is one-hot, so the true-class coordinate should
  // dominate on average
  double own = 0, other = 0;
  for (int i = 0; i < g.num_nodes; ++i)
    for (int d = 0; d < 3; ++d) (d == g.labels[i] ? own : other) += g.features(i, d);
  CHECK(own / 300 > 0.8);
  CHECK(std::abs(other / 600) < 0.2);

  // determinism
  AttributedGraph h = generate_planted_partition(cfg);
  CHECK(h.edges == g.edges);
  CHECK(h.features.data == g.features.data);
}

TEST_CASE("add_random_edges adds exactly the requested count of new edges") {
  AttributedGraph g = triangle_fixture();
  AttributedGraph h = add_random_edges(g, 2, 9);
  CHECK(h.edges.size() == g.edges.size() + 2);
  std::set<std::pair<int, int>> uniq(h.edges.begin(), h.edges.end());
  CHECK(uniq.size() == h.edges.size());
  for (auto [u, v] : h.edges) CHECK(u < v);
}

TEST_CASE("involvement_sweep produces both axes with sane values") {
  PlantedPartitionConfig cfg;
  cfg.num_nodes = 150;
  cfg.num_classes = 3;
  cfg.feature_dim = 3;
  cfg.p_in = 0.03;
  cfg.p_out = 0.002;
  cfg.seed = 2;
  AttributedGraph g = generate_planted_partition(cfg);
  g = split_labels(std::move(g), 0.05, 20, 40, 1);

  auto rows = involvement_sweep(g, {0.02, 0.2}, {1.0, 2.0}, 2, 3, 4);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].axis == "label_rate");
  CHECK(rows[2].axis == "density");
  for (const auto& r : rows) {
    CHECK(r.mean >= 0.0);
    CHECK(r.mean <= 1.0);
    CHECK(r.stddev >= 0.0);
  }
  // more labels -> fewer uninvolved nodes
  CHECK(rows[0].mean >= rows[1].mean);
  // denser graph -> fewer uninvolved nodes
  CHECK(rows[2].mean >= rows[3].mean);

  auto rows2 = involvement_sweep(g, {0.02, 0.2}, {1.0, 2.0}, 2, 3, 4);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mean == rows2[i].mean);
    CHECK(rows[i].stddev == rows2[i].stddev);
  }
}

TEST_CASE("validate rejects inconsistent graphs") {
  AttributedGraph g = triangle_fixture();
  CHECK_NOTHROW(g.validate());
  g.edges.push_back({2, 9});
  CHECK_THROWS_AS(g.validate(), ConfigError);
}
