#pragma once
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "numcore.hpp"

namespace rsgnn {

using Rng = std::mt19937_64;
using EdgeList = std::vector<std::pair<int, int>>;  // canonical i < j

struct NoiseRecord {
  EdgeList added_edges;
  EdgeList removed_edges;
  double perturbation_rate = 0.0;
};

struct AttributedGraph {
  int num_nodes = 0;
  int num_classes = 0;
  Mat features;             // num_nodes x d
  EdgeList edges;           // undirected, i < j, no self-loops, sorted unique
  std::vector<int> labels;  // class index, -1 unknown
  std::vector<uint8_t> train_mask, val_mask, test_mask;
  std::optional<NoiseRecord> noise;  // set after inject_random_noise

  int feature_dim() const { return features.cols; }
  std::vector<std::vector<int>> adjacency() const;
  bool has_edge(int u, int v) const;
  std::vector<int> mask_nodes(const std::vector<uint8_t>& mask) const;
  void validate() const;
};

// Node file: `id<TAB>label<TAB>f1,f2,...`; edge file: `u<TAB>v`. Duplicate
// edges and self-loops are dropped (count reported via *dropped if non-null).
AttributedGraph load_graph(const std::string& node_file, const std::string& edge_file,
                           int* dropped = nullptr);
// Standard citation-dataset layout (.content / .cites), string ids remapped
// to dense indices in first-appearance order of the content file.
AttributedGraph load_cora(const std::string& content_file, const std::string& cites_file);

void save_graph(const AttributedGraph& g, const std::string& node_file,
                const std::string& edge_file, const std::string& sidecar_json);
// Loads node/edge files plus the JSON sidecar carrying masks and NoiseRecord.
AttributedGraph load_graph_with_sidecar(const std::string& node_file,
                                        const std::string& edge_file,
                                        const std::string& sidecar_json);

AttributedGraph split_labels(AttributedGraph g, double label_rate, int val_size, int test_size,
                             uint64_t seed);

std::pair<AttributedGraph, NoiseRecord> inject_random_noise(AttributedGraph g, double ptb_rate,
                                                            double add_fraction, uint64_t seed);

// Fraction of nodes farther than `hops` (BFS) from every train-mask node.
double uninvolved_rate(const AttributedGraph& g, int hops);

struct InvolvementRow {
  std::string axis;  // "label_rate" or "density"
  double setting = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};
// Label-rate sweep at the graph's own density, then density sweep (edge
// multipliers) at label rate 0.01. Trials resample masks / added edges with
// seeds derived as seed + trial index.
std::vector<InvolvementRow> involvement_sweep(const AttributedGraph& g,
                                              const std::vector<double>& label_rates,
                                              const std::vector<double>& densities, int hops,
                                              int trials, uint64_t seed);

struct PlantedPartitionConfig {
  int num_nodes = 0;
  int num_classes = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  int feature_dim = 2;
  double feature_noise = 0.0;
  uint64_t seed = 0;
};
AttributedGraph generate_planted_partition(const PlantedPartitionConfig& cfg);

// Uniformly adds `count` random non-edges; helper for the density sweeps.
AttributedGraph add_random_edges(AttributedGraph g, int count, uint64_t seed);

}  // namespace rsgnn
