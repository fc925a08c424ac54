#pragma once
#include "graphdata.hpp"
#include "numcore.hpp"

namespace rsgnn {

// Parameter names of the MLP link predictor inside the shared ParamStore.
namespace predictor_params {
inline constexpr const char* kW1 = "theta_E/W1";
inline constexpr const char* kB1 = "theta_E/b1";
inline constexpr const char* kW2 = "theta_E/W2";
inline constexpr const char* kB2 = "theta_E/b2";
}  // namespace predictor_params

inline constexpr int kPredictorHidden = 64;  // "one-hidden layer MLP with 64 filters"

// Per node: the K most cosine-similar other nodes in raw feature space,
// ties broken by ascending index. Computed once per run.
struct CandidateSets {
  std::vector<std::vector<int>> lists;
};

enum class Provenance : uint8_t { kKeptOriginal = 0, kDensified = 1 };

struct LearnedGraph {
  SparseWeighted s;                     // weights in (T_l, 1], i < j, no self-loops
  std::vector<Provenance> provenance;   // parallel to s.entries
};

void init_predictor_params(ParamStore& params, int feature_dim, Rng& rng);

// z_i = MLP(x_i): one ReLU hidden layer, linear output.
Tape::Ref embed(Tape& t, ParamStore& params, Tape::Ref x);
Mat embed_plain(const ParamStore& params, const Mat& x);

// w(i,j) = ReLU(z_i . z_j); raw, unclamped.
double edge_weight(const Mat& z, int i, int j);

// Q distinct nodes uniform over non-neighbors of i (excluding i). If fewer
// than Q exist, returns all of them and sets *flagged.
std::vector<int> sample_negatives(const std::vector<std::vector<int>>& adj, int num_nodes, int i,
                                  int q, Rng& rng, bool* flagged = nullptr);

// exp(-d2/sigma^2) for positives, exp(+d2/sigma^2) for negatives; the
// positive exponent argument is clamped at 50 before exponentiation.
double similarity_weight(const Mat& x, int i, int j, double sigma, bool positive);

// Feature-similarity-weighted reconstruction loss over all (node, neighbor)
// directed pairs plus Q fresh negatives per positive.
Tape::Ref loss_reconstruction(Tape& t, Tape::Ref z, const AttributedGraph& g, double sigma,
                              int q, Rng& rng);

CandidateSets build_candidates(const Mat& x, int k, bool* zero_row_warning = nullptr);

// Unordered pair universe: original edges plus (i, candidate) pairs, deduped.
EdgeList build_pair_universe(const AttributedGraph& g, const CandidateSets& candidates);

LearnedGraph build_learned_graph(const ParamStore& params, const AttributedGraph& g,
                                 const CandidateSets& candidates, double t_l);
// Same thresholding given precomputed embeddings (used by variant predictors).
LearnedGraph build_learned_graph_from_z(const Mat& z, const AttributedGraph& g,
                                        const CandidateSets& candidates, double t_l);

void save_learned_graph(const LearnedGraph& lg, const std::string& path);
LearnedGraph load_learned_graph(const std::string& path);

// --- tape ops for the training path ----------------------------------------

// d_p = z_i . z_j per pair, as a P x 1 matrix.
Tape::Ref tape_pair_dot(Tape& t, Tape::Ref z, EdgeList pairs);
// Elementwise min(value, 1); gradient passes only where value < 1.
Tape::Ref tape_clamp_max1(Tape& t, Tape::Ref a);
// sum_p coeff_p * (a_p - target_p)^2 over a P x 1 matrix.
Tape::Ref tape_weighted_sq_err(Tape& t, Tape::Ref a, std::vector<double> coeff,
                               std::vector<double> target);

}  // namespace rsgnn
