#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rsgnn/rsgnn.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rsgnn_capi_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const char* name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

rsgnn_graph* make_synthetic(int n = 80, uint64_t seed = 4) {
  char spec[256];
  snprintf(spec, sizeof(spec),
           "{\"num_nodes\":%d,\"num_classes\":4,\"p_in\":0.2,\"p_out\":0.02,"
           "\"feature_dim\":4,\"feature_noise\":0.3,\"seed\":%llu}",
           n, static_cast<unsigned long long>(seed));
  rsgnn_graph* g = nullptr;
  REQUIRE(rsgnn_graph_generate(spec, &g) == RSGNN_OK);
  return g;
}

}  // namespace

TEST_CASE("generate / accessors / split / noise / save / load round trip") {
  TempDir td;
  rsgnn_graph* g = make_synthetic();
  CHECK(rsgnn_graph_num_nodes(g) == 80);
  CHECK(rsgnn_graph_feature_dim(g) == 4);
  CHECK(rsgnn_graph_num_classes(g) == 4);
  int e0 = rsgnn_graph_num_edges(g);
  CHECK(e0 > 10);
  CHECK(rsgnn_graph_num_train(g) == 0);

  CHECK(rsgnn_graph_split_labels(g, 0.1, 20, 30, 1) == RSGNN_OK);
  CHECK(rsgnn_graph_num_train(g) == 8);

  CHECK(rsgnn_graph_inject_noise(g, 0.25, 1.0, 2) == RSGNN_OK);
  CHECK(rsgnn_graph_num_edges(g) == e0 + static_cast<int>(std::lround(0.25 * e0)));

  double rate = rsgnn_graph_uninvolved_rate(g, 2);
  CHECK(rate >= 0.0);
  CHECK(rate <= 1.0);

  CHECK(rsgnn_graph_save(g, td.str("g.nodes").c_str(), td.str("g.edges").c_str(),
                         td.str("g.json").c_str()) == RSGNN_OK);
  rsgnn_graph* h = nullptr;
  REQUIRE(rsgnn_graph_load(td.str("g.nodes").c_str(), td.str("g.edges").c_str(),
                           td.str("g.json").c_str(), &h) == RSGNN_OK);
  CHECK(rsgnn_graph_num_nodes(h) == rsgnn_graph_num_nodes(g));
  CHECK(rsgnn_graph_num_edges(h) == rsgnn_graph_num_edges(g));
  CHECK(rsgnn_graph_num_train(h) == rsgnn_graph_num_train(g));
  rsgnn_graph_free(h);
  rsgnn_graph_free(g);
}

TEST_CASE("error paths set status and message") {
  rsgnn_graph* g = nullptr;
  CHECK(rsgnn_graph_load("/nonexistent/x.nodes", "/nonexistent/x.edges", nullptr, &g) ==
        RSGNN_ERR_IO);
  CHECK(std::string(rsgnn_last_error()).find("x.nodes") != std::string::npos);

  CHECK(rsgnn_graph_generate("{not json", &g) != RSGNN_OK);

  // p_out >= p_in is a config error
  CHECK(rsgnn_graph_generate("{\"num_nodes\":10,\"p_in\":0.1,\"p_out\":0.5}", &g) ==
        RSGNN_ERR_CONFIG);

  rsgnn_graph* ok = make_synthetic(30);
  CHECK(rsgnn_train_single(ok, "{\"sigma\":-1}", nullptr, nullptr) == RSGNN_ERR_CONFIG);
  rsgnn_graph_free(ok);
}

TEST_CASE("prepare writes loadable files and reports a summary") {
  TempDir td;
  std::string prefix = td.str("ds");
  std::string spec = "{\"synthetic\":true,\"num_nodes\":60,\"num_classes\":3,"
                     "\"p_in\":0.2,\"p_out\":0.02,\"feature_dim\":3,\"feature_noise\":0.3,"
                     "\"label_rate\":0.1,\"val_size\":15,\"test_size\":20,"
                     "\"ptb_rate\":0.2,\"seed\":5,\"out_prefix\":\"" + prefix + "\"}";
  char* summary = nullptr;
  REQUIRE(rsgnn_prepare(spec.c_str(), &summary) == RSGNN_OK);
  REQUIRE(summary != nullptr);
  std::string s(summary);
  rsgnn_string_free(summary);
  CHECK(s.find("\"num_nodes\":60") != std::string::npos);

  rsgnn_graph* g = nullptr;
  REQUIRE(rsgnn_graph_load((prefix + ".nodes").c_str(), (prefix + ".edges").c_str(),
                           (prefix + ".json").c_str(), &g) == RSGNN_OK);
  CHECK(rsgnn_graph_num_nodes(g) == 60);
  CHECK(rsgnn_graph_num_train(g) == 6);
  rsgnn_graph_free(g);
}

TEST_CASE("train_single + weight_report + experiment determinism") {
  TempDir td;
  std::string prefix = td.str("ds");
  std::string spec = "{\"synthetic\":true,\"num_nodes\":80,\"num_classes\":4,"
                     "\"p_in\":0.2,\"p_out\":0.02,\"feature_dim\":4,\"feature_noise\":0.3,"
                     "\"label_rate\":0.1,\"val_size\":20,\"test_size\":30,"
                     "\"ptb_rate\":0.25,\"seed\":7,\"out_prefix\":\"" + prefix + "\"}";
  REQUIRE(rsgnn_prepare(spec.c_str(), nullptr) == RSGNN_OK);

  rsgnn_graph* g = nullptr;
  REQUIRE(rsgnn_graph_load((prefix + ".nodes").c_str(), (prefix + ".edges").c_str(),
                           (prefix + ".json").c_str(), &g) == RSGNN_OK);

  const char* cfg = "{\"variant\":\"full\",\"max_epochs\":12,\"patience\":12,"
                    "\"k\":5,\"q\":5,\"seed\":3}";
  double acc = -1.0;
  std::string run1 = td.str("run1"), run2 = td.str("run2");
  REQUIRE(rsgnn_train_single(g, cfg, run1.c_str(), &acc) == RSGNN_OK);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  REQUIRE(rsgnn_train_single(g, cfg, run2.c_str(), nullptr) == RSGNN_OK);
  for (const char* f : {"config.json", "report.json", "epochs.csv", "learned_graph.tsv",
                        "noise.json", "edge_scores.tsv"}) {
    CHECK(slurp(fs::path(run1) / f) == slurp(fs::path(run2) / f));
    CHECK(!slurp(fs::path(run1) / f).empty());
  }
  rsgnn_graph_free(g);

  double auc = -2.0;
  std::string wr = td.str("weights.csv");
  REQUIRE(rsgnn_weight_report(run1.c_str(), wr.c_str(), &auc) == RSGNN_OK);
  CHECK(auc == auc);  // has a noise record, so AUC must not be NaN
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);
  std::string csv = slurp(wr);
  CHECK(csv.find("bin_low,bin_high,clean_original,noisy_original,densified") !=
        std::string::npos);
  CHECK(csv.find("# auc,") != std::string::npos);
}

TEST_CASE("run_experiment executes the grid and writes byte-identical aggregates") {
  TempDir td;
  std::string prefix = td.str("ds");
  std::string pspec = "{\"synthetic\":true,\"num_nodes\":60,\"num_classes\":3,"
                      "\"p_in\":0.2,\"p_out\":0.02,\"feature_dim\":3,\"feature_noise\":0.3,"
                      "\"label_rate\":0.1,\"val_size\":15,\"test_size\":20,"
                      "\"ptb_rate\":0.2,\"seed\":2,\"out_prefix\":\"" + prefix + "\"}";
  REQUIRE(rsgnn_prepare(pspec.c_str(), nullptr) == RSGNN_OK);

  auto run = [&](const std::string& out) {
    std::string espec = "{\"dataset_prefix\":\"" + prefix + "\",\"out_dir\":\"" + out +
                        "\",\"seeds\":[0,1],\"variants\":[\"full\",\"plain_gcn\"],"
                        "\"k\":5,\"q\":5,\"max_epochs\":8,\"patience\":8,\"threads\":2}";
    int total = 0, failed = 0;
    REQUIRE(rsgnn_run_experiment(espec.c_str(), &total, &failed) == RSGNN_OK);
    CHECK(total == 4);
    CHECK(failed == 0);
  };
  run(td.str("e1"));
  run(td.str("e2"));
  CHECK(slurp(fs::path(td.str("e1")) / "aggregate.csv") ==
        slurp(fs::path(td.str("e2")) / "aggregate.csv"));
  CHECK(!slurp(fs::path(td.str("e1")) / "aggregate.csv").empty());
}

TEST_CASE("involvement_report writes both axes") {
  TempDir td;
  std::string prefix = td.str("ds");
  std::string pspec = "{\"synthetic\":true,\"num_nodes\":100,\"num_classes\":4,"
                      "\"p_in\":0.05,\"p_out\":0.005,\"feature_dim\":4,\"feature_noise\":0.3,"
                      "\"label_rate\":0.05,\"val_size\":20,\"test_size\":30,"
                      "\"seed\":6,\"out_prefix\":\"" + prefix + "\"}";
  REQUIRE(rsgnn_prepare(pspec.c_str(), nullptr) == RSGNN_OK);

  std::string out = td.str("inv.csv");
  std::string ispec = "{\"dataset_prefix\":\"" + prefix + "\",\"out_csv\":\"" + out +
                      "\",\"label_rates\":[0.02,0.2],\"densities\":[1,2],"
                      "\"hops\":2,\"trials\":2,\"seed\":1}";
  REQUIRE(rsgnn_involvement_report(ispec.c_str()) == RSGNN_OK);
  std::string csv = slurp(out);
  CHECK(csv.find("axis,setting,mean,std") != std::string::npos);
  CHECK(csv.find("label_rate,") != std::string::npos);
  CHECK(csv.find("density,") != std::string::npos);
}
