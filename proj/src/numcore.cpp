#include "numcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rsgnn {

bool Mat::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const Mat& m) {
  std::ostringstream os;
  os << m.rows << "x" << m.cols;
  return os.str();
}

// --- Tape -------------------------------------------------------------------

Tape::Ref Tape::leaf(Mat* value, Mat* grad) {
  Node n;
  n.value = value;
  n.grad = grad;
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::constant(Mat value) {
  Node n;
  n.owned_value = std::move(value);
  n.owned_grad = Mat(n.owned_value.rows, n.owned_value.cols);
  nodes_.push_back(std::move(n));
  // Point at the deque-resident storage; deque growth never relocates
  // existing elements, so these stay valid for the tape's lifetime.
  Node& stored = nodes_.back();
  stored.value = &stored.owned_value;
  stored.grad = &stored.owned_grad;
  return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::custom(Mat value) { return constant(std::move(value)); }

void Tape::backward(Ref scalar_loss) {
  Mat& g = grad(scalar_loss);
  if (g.rows != 1 || g.cols != 1) throw ShapeError("backward: loss is not a scalar");
  g(0, 0) = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->backward) it->backward();
}

// --- ops --------------------------------------------------------------------

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
    double* crow = &c.data[static_cast<size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Mat relu(const Mat& a) {
  Mat out = a;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

void softmax_rows_inplace(Mat& m) {
  for (int i = 0; i < m.rows; ++i) {
    double* row = &m.data[static_cast<size_t>(i) * m.cols];
    double mx = row[0];
    for (int c = 1; c < m.cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int c = 0; c < m.cols; ++c) row[c] /= sum;
  }
}

Tape::Ref tape_matmul(Tape& t, Tape::Ref a, Tape::Ref b) {
  Mat c = matmul(t.val(a), t.val(b));
  Tape::Ref self = t.custom(std::move(c));
  t.set_backward(self, [&t, a, b, self]() {
    const Mat& g = t.grad(self);
    const Mat& av = t.val(a);
    const Mat& bv = t.val(b);
    Mat& ga = t.grad(a);
    Mat& gb = t.grad(b);
    // dL/da = g . b^T
    for (int i = 0; i < av.rows; ++i)
      for (int k = 0; k < av.cols; ++k) {
        double s = 0.0;
        for (int j = 0; j < bv.cols; ++j) s += g(i, j) * bv(k, j);
        ga(i, k) += s;
      }
    // dL/db = a^T . g
    for (int k = 0; k < bv.rows; ++k)
      for (int j = 0; j < bv.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < av.rows; ++i) s += av(i, k) * g(i, j);
        gb(k, j) += s;
      }
  });
  return self;
}

Tape::Ref tape_add_row_bias(Tape& t, Tape::Ref a, Tape::Ref bias) {
  const Mat& av = t.val(a);
  const Mat& bv = t.val(bias);
  if (bv.rows != 1 || bv.cols != av.cols)
    throw ShapeError("add_row_bias: " + shape_str(av) + " + " + shape_str(bv));
  Mat out = av;
  for (int i = 0; i < out.rows; ++i)
    for (int c = 0; c < out.cols; ++c) out(i, c) += bv(0, c);
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, a, bias, self]() {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    Mat& gb = t.grad(bias);
    for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    for (int i = 0; i < g.rows; ++i)
      for (int c = 0; c < g.cols; ++c) gb(0, c) += g(i, c);
  });
  return self;
}

Tape::Ref tape_relu(Tape& t, Tape::Ref a) {
  Mat out = relu(t.val(a));
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, a, self]() {
    const Mat& g = t.grad(self);
    const Mat& av = t.val(a);
    Mat& ga = t.grad(a);
    // subgradient at exactly 0 is 0, matching the forward mask
    for (size_t i = 0; i < g.size(); ++i)
      if (av.data[i] > 0.0) ga.data[i] += g.data[i];
  });
  return self;
}

Tape::Ref tape_gather_rows(Tape& t, Tape::Ref a, std::vector<int> rows) {
  const Mat& av = t.val(a);
  Mat out(static_cast<int>(rows.size()), av.cols);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < av.cols; ++c) out(static_cast<int>(r), c) = av(rows[r], c);
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, a, self, rows = std::move(rows)]() {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < g.cols; ++c) ga(rows[r], c) += g(static_cast<int>(r), c);
  });
  return self;
}

Tape::Ref tape_softmax_rows(Tape& t, Tape::Ref logits) {
  Mat p = t.val(logits);
  softmax_rows_inplace(p);
  Tape::Ref self = t.custom(std::move(p));
  t.set_backward(self, [&t, logits, self]() {
    const Mat& g = t.grad(self);
    const Mat& p = t.val(self);
    Mat& gl = t.grad(logits);
    for (int i = 0; i < p.rows; ++i) {
      double dot = 0.0;
      for (int c = 0; c < p.cols; ++c) dot += g(i, c) * p(i, c);
      for (int c = 0; c < p.cols; ++c) gl(i, c) += p(i, c) * (g(i, c) - dot);
    }
  });
  return self;
}

CrossEntropyResult tape_softmax_cross_entropy(Tape& t, Tape::Ref logits, const Mat& onehot) {
  const Mat& lv = t.val(logits);
  if (!lv.same_shape(onehot))
    throw ShapeError("softmax_cross_entropy: " + shape_str(lv) + " vs onehot " +
                     shape_str(onehot));
  Mat probs = lv;
  softmax_rows_inplace(probs);
  double loss = 0.0;
  for (int i = 0; i < lv.rows; ++i) {
    // max-subtracted log-sum-exp, evaluated directly on the logits
    double mx = lv(i, 0);
    for (int c = 1; c < lv.cols; ++c) mx = std::max(mx, lv(i, c));
    double lse = 0.0;
    double dot = 0.0;
    for (int c = 0; c < lv.cols; ++c) {
      lse += std::exp(lv(i, c) - mx);
      dot += onehot(i, c) * (lv(i, c) - mx);
    }
    loss += std::log(lse) - dot;
  }
  loss /= lv.rows;
  Mat lm(1, 1);
  lm(0, 0) = loss;
  CrossEntropyResult res;
  res.probs = probs;
  Tape::Ref self = t.custom(std::move(lm));
  res.loss = self;
  t.set_backward(self, [&t, logits, self, probs = std::move(probs), onehot]() {
    const double gs = t.grad(self)(0, 0);
    Mat& gl = t.grad(logits);
    const double inv = 1.0 / probs.rows;
    for (size_t i = 0; i < probs.size(); ++i)
      gl.data[i] += gs * (probs.data[i] - onehot.data[i]) * inv;
  });
  return res;
}

Tape::Ref tape_weighted_sum(Tape& t, const std::vector<std::pair<Tape::Ref, double>>& terms) {
  double total = 0.0;
  for (auto& [r, c] : terms) {
    const Mat& v = t.val(r);
    if (v.rows != 1 || v.cols != 1) throw ShapeError("weighted_sum: non-scalar term");
    total += c * v(0, 0);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, self, terms]() {
    const double gs = t.grad(self)(0, 0);
    for (auto& [r, c] : terms) t.grad(r)(0, 0) += gs * c;
  });
  return self;
}

// --- ParamStore / Adam ------------------------------------------------------

Mat& ParamStore::add(const std::string& name, int rows, int cols) {
  Entry e;
  e.value = Mat(rows, cols);
  e.grad = Mat(rows, cols);
  e.m = Mat(rows, cols);
  e.v = Mat(rows, cols);
  auto [it, inserted] = params.emplace(name, std::move(e));
  if (!inserted) throw ConfigError("parameter already exists: " + name);
  return it->second.value;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [_, e] : params) e.grad.fill(0.0);
}

std::map<std::string, Mat> ParamStore::snapshot_values() const {
  std::map<std::string, Mat> snap;
  for (auto& [name, e] : params) snap[name] = e.value;
  return snap;
}

void ParamStore::restore_values(const std::map<std::string, Mat>& snap) {
  for (auto& [name, v] : snap) at(name).value = v;
}

void adam_step(ParamStore& params, double lr, double beta1, double beta2, double eps) {
  for (auto& [name, e] : params)
    if (!e.grad.all_finite()) throw NumericError("NaN/Inf gradient in parameter " + name);
  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (auto& [_, e] : params) {
    for (size_t i = 0; i < e.value.size(); ++i) {
      double g = e.grad.data[i];
      e.m.data[i] = beta1 * e.m.data[i] + (1.0 - beta1) * g;
      e.v.data[i] = beta2 * e.v.data[i] + (1.0 - beta2) * g * g;
      double mhat = e.m.data[i] / bc1;
      double vhat = e.v.data[i] / bc2;
      e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    e.grad.fill(0.0);
  }
}

double grad_check(const std::function<double(ParamStore&)>& loss_fn, ParamStore& params,
                  double epsilon, const GradCheckOptions& opts) {
  double max_rel = 0.0;
  for (auto& [name, e] : params) {
    for (size_t i = 0; i < e.value.size(); ++i) {
      const double saved = e.value.data[i];
      e.value.data[i] = saved + epsilon;
      double fp = loss_fn(params);
      uint64_t sig_p = opts.structure_signature ? opts.structure_signature(params) : 0;
      e.value.data[i] = saved - epsilon;
      double fm = loss_fn(params);
      uint64_t sig_m = opts.structure_signature ? opts.structure_signature(params) : 0;
      e.value.data[i] = saved;
      if (sig_p != sig_m) continue;  // crossed a mask discontinuity
      double numeric = (fp - fm) / (2.0 * epsilon);
      double analytic = e.grad.data[i];
      double rel = std::fabs(analytic - numeric) /
                   std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace rsgnn
