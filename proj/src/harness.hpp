#pragma once
#include <string>
#include <vector>

#include "graphdata.hpp"
#include "trainer.hpp"

namespace rsgnn {

// Dataset preparation: load or synthesize, split labels, optionally inject
// noise, and write the canonical node/edge/sidecar triple under `out_prefix`
// (<prefix>.nodes, <prefix>.edges, <prefix>.json).
struct PrepareSpec {
  // exactly one source:
  std::string node_file, edge_file;        // canonical format
  std::string cora_content, cora_cites;    // citation-dataset layout
  bool synthetic = false;
  PlantedPartitionConfig synth;

  double label_rate = 0.01;
  int val_size = 500;
  int test_size = 1000;
  double ptb_rate = 0.0;
  double add_fraction = 1.0;
  uint64_t seed = 0;
  std::string out_prefix;
};

struct PrepareSummary {
  int num_nodes = 0;
  int num_edges = 0;
  int feature_dim = 0;
  int num_classes = 0;
  int num_train = 0;
};
PrepareSummary run_prepare(const PrepareSpec& spec);

AttributedGraph load_dataset(const std::string& prefix);

// A full experiment: cross product of hyperparameter grids x variants x
// seeds, dispatched to a worker pool. Worker count: threads field if > 0,
// else RSGNN_THREADS, else hardware concurrency.
struct ExperimentSpec {
  std::string dataset_prefix;
  std::vector<uint64_t> seeds = {0};
  std::vector<std::string> variants = {"full"};
  std::vector<double> alphas = {0.3};
  std::vector<double> betas = {0.1};
  std::vector<double> sigmas = {100.0};
  std::vector<int> qs = {50};
  std::vector<int> ks = {100};
  std::vector<double> t_ls = {0.1};
  std::vector<double> t_hs = {0.8};
  double learning_rate = 0.001;
  int max_epochs = 1000;
  int patience = 100;
  int threads = 0;
  std::string out_dir;
};

ExperimentSpec experiment_spec_from_json(const std::string& json_text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

struct RunOutcome {
  std::string run_id;
  TrainConfig config;
  bool failed = false;
  std::string failure_reason;
  double test_acc = 0.0;
  double val_acc = 0.0;
};

// Executes every run, writes per-run config.json / report.json / epochs.csv /
// learned_graph.tsv / noise.json, then <out_dir>/aggregate.csv. Returns all
// outcomes; throws only if the spec itself is invalid.
std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec);

// Standard run-directory layout (config.json, report.json, epochs.csv,
// learned_graph.tsv, noise.json) for a finished training run.
void write_run_outputs(const std::string& dir, const TrainConfig& cfg, const TrainResult& res,
                       const AttributedGraph& g);

// Fig.-2-style histogram CSV from a run directory. Returns false (with the
// pooled histogram still written) when no noise record is available.
bool run_weight_report(const std::string& run_dir, const std::string& out_csv,
                       double* auc_out = nullptr);

struct InvolvementSpec {
  std::string dataset_prefix;
  std::vector<double> label_rates = {0.01, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> densities = {1.0, 2.0, 3.0};
  int hops = 2;
  int trials = 5;
  uint64_t seed = 0;
  std::string out_csv;
};
std::vector<InvolvementRow> run_involvement(const InvolvementSpec& spec);

}  // namespace rsgnn
