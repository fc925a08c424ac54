#pragma once
#include <string>

#include "gnnclf.hpp"
#include "graphdata.hpp"
#include "linkpred.hpp"
#include "numcore.hpp"

namespace rsgnn {

enum class Variant {
  kFull,
  kNoDensify,    // candidate sets empty, pair universe = original edges
  kNoSmooth,     // beta forced to 0
  kDenoiseOnly,  // both restrictions
  kGcnPredictor, // link-predictor embeddings come from a GCN on the raw graph
  kPlainGcn,     // baseline: GCN on the raw graph, no predictor at all
};

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct TrainConfig {
  double alpha = 0.3;
  double beta = 0.1;
  double sigma = 100.0;
  int q = 50;
  int k = 100;
  double t_l = 0.1;
  double t_h = 0.8;
  double learning_rate = 0.001;
  int max_epochs = 1000;
  int patience = 100;
  uint64_t seed = 0;
  Variant variant = Variant::kFull;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct VariantFlags {
  bool densify = true;
  bool smooth = true;
  bool use_predictor = true;
  bool gcn_predictor = false;
};
VariantFlags apply_variant(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double loss_gnn = 0.0;
  double loss_edge = 0.0;
  double loss_smooth = 0.0;
  double loss_total = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct WeightHistogram {
  // 20 bins over [0,1], plus means per provenance group
  std::vector<int> clean_original = std::vector<int>(20, 0);
  std::vector<int> noisy_original = std::vector<int>(20, 0);
  std::vector<int> densified = std::vector<int>(20, 0);
  double mean_clean = 0.0;
  double mean_noisy = 0.0;
  double mean_densified = 0.0;
  bool has_noise_record = false;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_acc = 0.0;
  double final_test_acc = 0.0;
  double final_train_acc = 0.0;
  WeightHistogram weights;
  double uninvolved_before = 0.0;  // raw graph, 2 hops
  double uninvolved_after = 0.0;   // learned graph structure, 2 hops
};

struct TrainResult {
  ParamStore params;  // values restored to the best-validation epoch
  RunReport report;
  LearnedGraph learned;  // built from the best parameters
  // Predictor weight min(1, ReLU(z_i . z_j)) per original edge, parallel to
  // the graph's edge list; all 1.0 for the predictor-free baseline.
  std::vector<double> edge_scores;
};

TrainResult train(const AttributedGraph& g, const TrainConfig& cfg);

struct Accuracy {
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
};
// Argmax accuracy per mask, ties broken by lowest class index.
Accuracy evaluate(const ParamStore& params, const AttributedGraph& g, const LearnedGraph& s);
Accuracy accuracy_from_logits(const Mat& logits, const AttributedGraph& g);

// Per-provenance weight histogram against the graph's NoiseRecord. Original
// edges are scored by `original_scores` (the predictor's clamped weight,
// parallel to g.edges); densified entries come from the learned graph.
WeightHistogram weight_histogram(const LearnedGraph& lg, const AttributedGraph& g,
                                 const std::vector<double>& original_scores);

// AUC of the predictor score as a classifier separating clean original edges
// (positive, expected high) from noisy original edges. Returns false when a
// group is empty (AUC undefined).
bool weight_separation_auc(const std::vector<double>& original_scores,
                           const AttributedGraph& g, double* auc);

}  // namespace rsgnn
