#pragma once
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace rsgnn {

// Row-major dense matrix of doubles. Scalars are 1x1.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

std::string shape_str(const Mat& m);

// Symmetric sparse matrix stored as unordered entries with i <= j; an entry
// (i,j) stands for both directions. Diagonal entries are allowed (self-loops
// produced by adjacency normalization).
struct SparseWeighted {
  struct Entry {
    int i = 0;
    int j = 0;
    double w = 0.0;
  };
  int num_nodes = 0;
  std::vector<Entry> entries;
};

// The fixed sparsity pattern a training step works over: undirected pairs
// (i < j) over n nodes. Adjacency entries on the tape are laid out as
// [pair 0..P-1, diagonal 0..n-1] in a (P+n) x 1 matrix.
struct SparsePattern {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;
};

// Reverse-mode tape. Nodes own their value/grad unless created as leaves, in
// which case they alias external storage (parameter tensors). Backward rules
// are closures appended by the op constructors; modules outside numcore add
// their own rules through custom().
class Tape {
 public:
  using Ref = int;

  Ref leaf(Mat* value, Mat* grad);
  Ref constant(Mat value);
  // Creates a node owning `value`; attach the backward rule afterwards with
  // set_backward once the node's own ref is known. Backward rules run during
  // the reverse sweep and accumulate into the grads of the node's inputs.
  Ref custom(Mat value);
  void set_backward(Ref r, std::function<void()> backward) {
    nodes_[r].backward = std::move(backward);
  }

  Mat& val(Ref r) { return *nodes_[r].value; }
  const Mat& val(Ref r) const { return *nodes_[r].value; }
  Mat& grad(Ref r) { return *nodes_[r].grad; }

  // Seeds d(loss)/d(loss) = 1 and runs all backward rules in reverse order.
  void backward(Ref scalar_loss);

 private:
  struct Node {
    Mat* value = nullptr;
    Mat* grad = nullptr;
    Mat owned_value;
    Mat owned_grad;
    std::function<void()> backward;
  };
  std::deque<Node> nodes_;
};

// --- differentiable ops -----------------------------------------------------

Tape::Ref tape_matmul(Tape& t, Tape::Ref a, Tape::Ref b);
Tape::Ref tape_add_row_bias(Tape& t, Tape::Ref a, Tape::Ref bias);
Tape::Ref tape_relu(Tape& t, Tape::Ref a);
Tape::Ref tape_gather_rows(Tape& t, Tape::Ref a, std::vector<int> rows);
Tape::Ref tape_softmax_rows(Tape& t, Tape::Ref logits);

struct CrossEntropyResult {
  Tape::Ref loss;  // 1x1
  Mat probs;       // softmax of the logits, one row per input row
};
// Mean of -log softmax(logits)[true class] over all rows; onehot rows must
// each contain a single 1.
CrossEntropyResult tape_softmax_cross_entropy(Tape& t, Tape::Ref logits, const Mat& onehot);

// Sum of coef * scalar over the given terms; every term must be 1x1.
Tape::Ref tape_weighted_sum(Tape& t, const std::vector<std::pair<Tape::Ref, double>>& terms);

// Non-tape forward helpers shared by plain (inference-time) paths.
Mat matmul(const Mat& a, const Mat& b);
Mat relu(const Mat& a);
void softmax_rows_inplace(Mat& m);

// --- parameters and optimization -------------------------------------------

struct ParamStore {
  struct Entry {
    Mat value;
    Mat grad;
    Mat m;  // Adam first moment
    Mat v;  // Adam second moment
  };
  std::map<std::string, Entry> params;  // ordered by name for determinism
  long long step = 0;

  Mat& add(const std::string& name, int rows, int cols);
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  bool has(const std::string& name) const { return params.count(name) != 0; }
  void zero_grads();
  std::map<std::string, Mat> snapshot_values() const;
  void restore_values(const std::map<std::string, Mat>& snap);

  auto begin() { return params.begin(); }
  auto end() { return params.end(); }
  auto begin() const { return params.begin(); }
  auto end() const { return params.end(); }
};

// One Adam update over every parameter; zeroes gradients and bumps the step
// counter. Throws NumericError on NaN gradients before touching any value.
void adam_step(ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Central finite differences against the analytic gradients currently stored
// in params (caller runs its backward first). loss_fn must be deterministic.
// If structure_signature is set, elements whose +/- epsilon evaluations land
// on different signatures (e.g. a threshold mask flipped) are excluded.
struct GradCheckOptions {
  std::function<uint64_t(ParamStore&)> structure_signature;
};
double grad_check(const std::function<double(ParamStore&)>& loss_fn, ParamStore& params,
                  double epsilon, const GradCheckOptions& opts = {});

}  // namespace rsgnn
