// rsgnn command-line experiment driver. Talks to the core exclusively
// through the C API in rsgnn/rsgnn.h.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsgnn/rsgnn.h"

using nlohmann::json;

namespace {

// exit codes: 0 success, 1 usage/config error, 2 runtime/numeric failure
int status_to_exit(rsgnn_status s) {
  if (s == RSGNN_OK) return 0;
  if (s == RSGNN_ERR_CONFIG) return 1;
  return 2;
}

int fail(rsgnn_status s) {
  fprintf(stderr, "error: %s\n", rsgnn_last_error());
  return status_to_exit(s);
}

struct PrepareArgs {
  std::string node_file, edge_file, cora_content, cora_cites;
  bool synthetic = false;
  int nodes = 400, classes = 4, feature_dim = 0;
  double p_in = 0.1, p_out = 0.01, feature_noise = 0.3;
  double label_rate = 0.01;
  int val_size = 500, test_size = 1000;
  double ptb_rate = 0.0, add_fraction = 1.0;
  uint64_t seed = 0;
  std::string out;
};

int do_prepare(const PrepareArgs& a) {
  json j;
  if (a.synthetic) {
    j["synthetic"] = true;
    j["num_nodes"] = a.nodes;
    j["num_classes"] = a.classes;
    j["p_in"] = a.p_in;
    j["p_out"] = a.p_out;
    j["feature_dim"] = a.feature_dim > 0 ? a.feature_dim : a.classes;
    j["feature_noise"] = a.feature_noise;
  } else if (!a.cora_content.empty()) {
    j["cora_content"] = a.cora_content;
    j["cora_cites"] = a.cora_cites;
  } else {
    j["node_file"] = a.node_file;
    j["edge_file"] = a.edge_file;
  }
  j["label_rate"] = a.label_rate;
  j["val_size"] = a.val_size;
  j["test_size"] = a.test_size;
  j["ptb_rate"] = a.ptb_rate;
  j["add_fraction"] = a.add_fraction;
  j["seed"] = a.seed;
  j["out_prefix"] = a.out;

  char* summary = nullptr;
  rsgnn_status s = rsgnn_prepare(j.dump().c_str(), &summary);
  if (s != RSGNN_OK) return fail(s);
  json sj = json::parse(summary);
  rsgnn_string_free(summary);
  printf("N=%d |E|=%d d=%d C=%d train=%d label_rate=%g\n", sj["num_nodes"].get<int>(),
         sj["num_edges"].get<int>(), sj["feature_dim"].get<int>(),
         sj["num_classes"].get<int>(), sj["num_train"].get<int>(),
         sj["num_nodes"].get<int>() > 0
             ? sj["num_train"].get<double>() / sj["num_nodes"].get<double>()
             : 0.0);
  return 0;
}

struct RunArgs {
  std::string dataset, out;
  std::vector<uint64_t> seeds = {0};
  std::vector<std::string> variants = {"full"};
  std::vector<double> alphas = {0.3}, betas = {0.1}, sigmas = {100.0};
  std::vector<double> t_ls = {0.1}, t_hs = {0.8};
  std::vector<int> qs = {50}, ks = {100};
  double lr = 0.001;
  int max_epochs = 1000, patience = 100, threads = 0;
};

int do_run(const RunArgs& a) {
  json j;
  j["dataset_prefix"] = a.dataset;
  j["out_dir"] = a.out;
  j["seeds"] = a.seeds;
  j["variants"] = a.variants;
  j["alpha"] = a.alphas;
  j["beta"] = a.betas;
  j["sigma"] = a.sigmas;
  j["q"] = a.qs;
  j["k"] = a.ks;
  j["t_l"] = a.t_ls;
  j["t_h"] = a.t_hs;
  j["learning_rate"] = a.lr;
  j["max_epochs"] = a.max_epochs;
  j["patience"] = a.patience;
  j["threads"] = a.threads;

  size_t grid = a.seeds.size() * a.variants.size() * a.alphas.size() * a.betas.size() *
                a.sigmas.size() * a.qs.size() * a.ks.size() * a.t_ls.size() * a.t_hs.size();
  printf("executing %zu runs into %s\n", grid, a.out.c_str());

  int total = 0, failed = 0;
  rsgnn_status s = rsgnn_run_experiment(j.dump().c_str(), &total, &failed);
  if (s != RSGNN_OK) return fail(s);
  printf("completed %d runs (%d failed); aggregate at %s/aggregate.csv\n", total, failed,
         a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RS-GNN: robust GNN training on noisy, sparsely labeled graphs"};
  app.require_subcommand(1);

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "build canonical dataset files");
  prep->add_option("--node-file", pa.node_file);
  prep->add_option("--edge-file", pa.edge_file);
  prep->add_option("--cora-content", pa.cora_content);
  prep->add_option("--cora-cites", pa.cora_cites);
  prep->add_flag("--synthetic", pa.synthetic, "planted-partition generator");
  prep->add_option("--nodes", pa.nodes);
  prep->add_option("--classes", pa.classes);
  prep->add_option("--feature-dim", pa.feature_dim);
  prep->add_option("--p-in", pa.p_in);
  prep->add_option("--p-out", pa.p_out);
  prep->add_option("--feature-noise", pa.feature_noise);
  prep->add_option("--label-rate", pa.label_rate);
  prep->add_option("--val-size", pa.val_size);
  prep->add_option("--test-size", pa.test_size);
  prep->add_option("--ptb-rate", pa.ptb_rate);
  prep->add_option("--add-fraction", pa.add_fraction);
  prep->add_option("--seed", pa.seed);
  prep->add_option("--out", pa.out)->required();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "train over a seed/variant/hyperparameter grid");
  run->add_option("--dataset", ra.dataset)->required();
  run->add_option("--out", ra.out)->required();
  run->add_option("--seed", ra.seeds);
  run->add_option("--variant", ra.variants);
  run->add_option("--alpha", ra.alphas);
  run->add_option("--beta", ra.betas);
  run->add_option("--sigma", ra.sigmas);
  run->add_option("--q", ra.qs);
  run->add_option("--k", ra.ks);
  run->add_option("--t-l", ra.t_ls);
  run->add_option("--t-h", ra.t_hs);
  run->add_option("--lr", ra.lr);
  run->add_option("--max-epochs", ra.max_epochs);
  run->add_option("--patience", ra.patience);
  run->add_option("--threads", ra.threads, "worker pool size (default: RSGNN_THREADS or #cpus)");

  std::string wr_dir, wr_out;
  auto* wrep = app.add_subcommand("weight-report", "learned-weight histograms for a run");
  wrep->add_option("--run-dir", wr_dir)->required();
  wrep->add_option("--out", wr_out)->required();

  std::string inv_dataset, inv_out;
  std::vector<double> inv_rates = {0.01, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> inv_densities = {1.0, 2.0, 3.0};
  int inv_hops = 2, inv_trials = 5;
  uint64_t inv_seed = 0;
  auto* inv = app.add_subcommand("involvement", "uninvolved-node-rate curves");
  inv->add_option("--dataset", inv_dataset)->required();
  inv->add_option("--out", inv_out)->required();
  inv->add_option("--label-rates", inv_rates);
  inv->add_option("--densities", inv_densities);
  inv->add_option("--hops", inv_hops);
  inv->add_option("--trials", inv_trials);
  inv->add_option("--seed", inv_seed);

  CLI11_PARSE(app, argc, argv);

  if (prep->parsed()) return do_prepare(pa);
  if (run->parsed()) return do_run(ra);
  if (wrep->parsed()) {
    double auc = 0.0;
    rsgnn_status s = rsgnn_weight_report(wr_dir.c_str(), wr_out.c_str(), &auc);
    if (s != RSGNN_OK) return fail(s);
    if (std::isnan(auc))
      printf("warning: no noise record; pooled histogram only (auc=null)\n");
    else
      printf("auc=%g\n", auc);
    return 0;
  }
  if (inv->parsed()) {
    json j;
    j["dataset_prefix"] = inv_dataset;
    j["out_csv"] = inv_out;
    j["label_rates"] = inv_rates;
    j["densities"] = inv_densities;
    j["hops"] = inv_hops;
    j["trials"] = inv_trials;
    j["seed"] = inv_seed;
    rsgnn_status s = rsgnn_involvement_report(j.dump().c_str());
    if (s != RSGNN_OK) return fail(s);
    printf("wrote %s\n", inv_out.c_str());
    return 0;
  }
  return 1;
}
