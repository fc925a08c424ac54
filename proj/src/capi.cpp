#include "rsgnn/rsgnn.h"

#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "harness.hpp"

using namespace rsgnn;
using nlohmann::json;

struct rsgnn_graph {
  AttributedGraph g;
};

namespace {

thread_local std::string g_last_error;

rsgnn_status to_status(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const ConfigError*>(&e)) return RSGNN_ERR_CONFIG;
  if (dynamic_cast<const IoError*>(&e)) return RSGNN_ERR_IO;
  if (dynamic_cast<const NumericError*>(&e)) return RSGNN_ERR_NUMERIC;
  if (dynamic_cast<const ShapeError*>(&e)) return RSGNN_ERR_SHAPE;
  return RSGNN_ERR_UNKNOWN;
}

template <typename Fn>
rsgnn_status guarded(Fn&& fn) {
  try {
    fn();
    return RSGNN_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    g_last_error = "unknown error";
    return RSGNN_ERR_UNKNOWN;
  }
}

PrepareSpec prepare_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("prepare spec parse failure: " + std::string(e.what()));
  }
  PrepareSpec s;
  s.node_file = j.value("node_file", "");
  s.edge_file = j.value("edge_file", "");
  s.cora_content = j.value("cora_content", "");
  s.cora_cites = j.value("cora_cites", "");
  s.synthetic = j.value("synthetic", false);
  if (s.synthetic) {
    s.synth.num_nodes = j.value("num_nodes", 400);
    s.synth.num_classes = j.value("num_classes", 4);
    s.synth.p_in = j.value("p_in", 0.1);
    s.synth.p_out = j.value("p_out", 0.01);
    s.synth.feature_dim = j.value("feature_dim", s.synth.num_classes);
    s.synth.feature_noise = j.value("feature_noise", 0.3);
  }
  s.label_rate = j.value("label_rate", 0.01);
  s.val_size = j.value("val_size", 500);
  s.test_size = j.value("test_size", 1000);
  s.ptb_rate = j.value("ptb_rate", 0.0);
  s.add_fraction = j.value("add_fraction", 1.0);
  s.seed = j.value("seed", 0ULL);
  s.out_prefix = j.value("out_prefix", "");
  return s;
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("train config parse failure: " + std::string(e.what()));
  }
  TrainConfig c;
  c.variant = variant_from_string(j.value("variant", "full"));
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.sigma = j.value("sigma", c.sigma);
  c.q = j.value("q", c.q);
  c.k = j.value("k", c.k);
  c.t_l = j.value("t_l", c.t_l);
  c.t_h = j.value("t_h", c.t_h);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace

extern "C" {

const char* rsgnn_last_error(void) { return g_last_error.c_str(); }

rsgnn_status rsgnn_graph_load(const char* node_file, const char* edge_file,
                              const char* sidecar_json, rsgnn_graph** out) {
  return guarded([&]() {
    auto* h = new rsgnn_graph;
    try {
      h->g = sidecar_json ? load_graph_with_sidecar(node_file, edge_file, sidecar_json)
                          : load_graph(node_file, edge_file);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

rsgnn_status rsgnn_graph_load_cora(const char* content_file, const char* cites_file,
                                   rsgnn_graph** out) {
  return guarded([&]() {
    auto* h = new rsgnn_graph;
    try {
      h->g = load_cora(content_file, cites_file);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

rsgnn_status rsgnn_graph_generate(const char* params_json, rsgnn_graph** out) {
  return guarded([&]() {
    json j = json::parse(params_json);
    PlantedPartitionConfig c;
    c.num_nodes = j.at("num_nodes").get<int>();
    c.num_classes = j.value("num_classes", 2);
    c.p_in = j.value("p_in", 0.1);
    c.p_out = j.value("p_out", 0.01);
    c.feature_dim = j.value("feature_dim", c.num_classes);
    c.feature_noise = j.value("feature_noise", 0.0);
    c.seed = j.value("seed", 0ULL);
    auto* h = new rsgnn_graph;
    h->g = generate_planted_partition(c);
    *out = h;
  });
}

rsgnn_status rsgnn_graph_split_labels(rsgnn_graph* g, double label_rate, int val_size,
                                      int test_size, uint64_t seed) {
  return guarded([&]() { g->g = split_labels(std::move(g->g), label_rate, val_size, test_size, seed); });
}

rsgnn_status rsgnn_graph_inject_noise(rsgnn_graph* g, double ptb_rate, double add_fraction,
                                      uint64_t seed) {
  return guarded([&]() {
    auto [noisy, rec] = inject_random_noise(std::move(g->g), ptb_rate, add_fraction, seed);
    g->g = std::move(noisy);
  });
}

rsgnn_status rsgnn_graph_save(const rsgnn_graph* g, const char* node_file,
                              const char* edge_file, const char* sidecar_json) {
  return guarded([&]() { save_graph(g->g, node_file, edge_file, sidecar_json); });
}

int rsgnn_graph_num_nodes(const rsgnn_graph* g) { return g->g.num_nodes; }
int rsgnn_graph_num_edges(const rsgnn_graph* g) { return static_cast<int>(g->g.edges.size()); }
int rsgnn_graph_feature_dim(const rsgnn_graph* g) { return g->g.feature_dim(); }
int rsgnn_graph_num_classes(const rsgnn_graph* g) { return g->g.num_classes; }
int rsgnn_graph_num_train(const rsgnn_graph* g) {
  return static_cast<int>(g->g.mask_nodes(g->g.train_mask).size());
}

double rsgnn_graph_uninvolved_rate(const rsgnn_graph* g, int hops) {
  try {
    return uninvolved_rate(g->g, hops);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1.0;
  }
}

void rsgnn_graph_free(rsgnn_graph* g) { delete g; }

rsgnn_status rsgnn_prepare(const char* spec_json, char** summary_json) {
  return guarded([&]() {
    PrepareSummary s = run_prepare(prepare_spec_from_json(spec_json));
    if (summary_json) {
      json j;
      j["num_nodes"] = s.num_nodes;
      j["num_edges"] = s.num_edges;
      j["feature_dim"] = s.feature_dim;
      j["num_classes"] = s.num_classes;
      j["num_train"] = s.num_train;
      std::string text = j.dump();
      *summary_json = static_cast<char*>(malloc(text.size() + 1));
      memcpy(*summary_json, text.c_str(), text.size() + 1);
    }
  });
}

rsgnn_status rsgnn_run_experiment(const char* spec_json, int* out_total, int* out_failed) {
  return guarded([&]() {
    auto outcomes = run_experiment(experiment_spec_from_json(spec_json));
    int failed = 0;
    for (const auto& o : outcomes)
      if (o.failed) ++failed;
    if (out_total) *out_total = static_cast<int>(outcomes.size());
    if (out_failed) *out_failed = failed;
    if (failed == static_cast<int>(outcomes.size()) && !outcomes.empty())
      throw NumericError("all runs failed; first reason: " + outcomes.front().failure_reason);
  });
}

rsgnn_status rsgnn_train_single(const rsgnn_graph* g, const char* config_json,
                                const char* run_dir, double* out_test_acc) {
  return guarded([&]() {
    TrainConfig cfg = train_config_from_json(config_json);
    TrainResult res = train(g->g, cfg);
    if (out_test_acc) *out_test_acc = res.report.final_test_acc;
    if (run_dir && *run_dir) write_run_outputs(run_dir, cfg, res, g->g);
  });
}

rsgnn_status rsgnn_weight_report(const char* run_dir, const char* out_csv, double* out_auc) {
  return guarded([&]() {
    double auc = 0.0;
    run_weight_report(run_dir, out_csv, &auc);
    if (out_auc) *out_auc = auc;
  });
}

rsgnn_status rsgnn_involvement_report(const char* spec_json) {
  return guarded([&]() {
    json j = json::parse(spec_json);
    InvolvementSpec s;
    s.dataset_prefix = j.at("dataset_prefix").get<std::string>();
    if (j.contains("label_rates")) s.label_rates = j["label_rates"].get<std::vector<double>>();
    if (j.contains("densities")) s.densities = j["densities"].get<std::vector<double>>();
    s.hops = j.value("hops", s.hops);
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    s.out_csv = j.at("out_csv").get<std::string>();
    run_involvement(s);
  });
}

void rsgnn_string_free(char* s) { free(s); }

}  // extern "C"
