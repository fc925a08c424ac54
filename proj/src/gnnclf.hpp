#pragma once
#include "graphdata.hpp"
#include "linkpred.hpp"
#include "numcore.hpp"

namespace rsgnn {

namespace gcn_params {
inline constexpr const char* kW1 = "theta_G/W1";
inline constexpr const char* kW2 = "theta_G/W2";
}  // namespace gcn_params

inline constexpr int kGcnHidden = 64;

void init_gcn_params(ParamStore& params, int feature_dim, int num_classes, Rng& rng);

// Symmetric renormalization with self-loops: D^{-1/2} (S + I) D^{-1/2}.
// Degree-zero rows come out as a pure self-loop of value 1.
SparseWeighted normalize_adjacency(const SparseWeighted& s);

// Entries T_ij = S_ij where S_ij > T_h.
SparseWeighted build_smoothness_mask(const SparseWeighted& s, double t_h);

struct GcnOutput {
  Tape::Ref hidden;
  Tape::Ref logits;
};
// logits = A . ReLU(A . X . W1) . W2 over the normalized adjacency entries.
GcnOutput gcn_forward(Tape& t, ParamStore& params, Tape::Ref adj_entries,
                      const SparsePattern& pat, Tape::Ref x);

Mat gcn_forward_plain(const ParamStore& params, const SparseWeighted& normalized, const Mat& x);

// Mean cross-entropy over train-mask rows. Returns the scalar loss ref.
Tape::Ref loss_classification(Tape& t, Tape::Ref logits, const AttributedGraph& g);

// sum over unlabeled i, mask pairs (i,j): T_ij * ||p_i - p_j||^2. `kept_w`
// are the learned weights over `pat.pairs`; `mask_idx` selects the pairs
// above T_h. Gradient flows into both the probabilities and the weights.
Tape::Ref loss_smoothness(Tape& t, Tape::Ref probs, Tape::Ref kept_w, const SparsePattern& pat,
                          const std::vector<int>& mask_idx, const std::vector<uint8_t>& labeled);

// Non-tape evaluation of the same sum for fixed probabilities and mask.
double loss_smoothness_plain(const Mat& probs, const SparseWeighted& mask,
                             const std::vector<uint8_t>& labeled);

// --- tape ops over the sparse pattern ---------------------------------------

// Input: kept weights over pat.pairs (P x 1). Output: normalized adjacency
// entries, laid out as P pair entries followed by pat.n diagonal entries.
Tape::Ref tape_normalize_adjacency(Tape& t, Tape::Ref kept_w, const SparsePattern& pat);

// y = A . x for the symmetric sparse A given by the entry layout above.
Tape::Ref tape_spmm(Tape& t, Tape::Ref adj_entries, const SparsePattern& pat, Tape::Ref x);

}  // namespace rsgnn
