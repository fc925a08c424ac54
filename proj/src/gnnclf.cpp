#include "gnnclf.hpp"

#include <algorithm>
#include <cmath>

namespace rsgnn {

void init_gcn_params(ParamStore& params, int feature_dim, int num_classes, Rng& rng) {
  using namespace gcn_params;
  auto glorot = [&rng](Mat& w) {
    double limit = std::sqrt(6.0 / (w.rows + w.cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : w.data) v = u(rng);
  };
  glorot(params.add(kW1, feature_dim, kGcnHidden));
  glorot(params.add(kW2, kGcnHidden, num_classes));
}

static std::vector<double> weighted_degrees(const SparseWeighted& s) {
  std::vector<double> d(s.num_nodes, 1.0);  // self-loop contributes 1
  for (const auto& e : s.entries) {
    d[e.i] += e.w;
    if (e.i != e.j) d[e.j] += e.w;
  }
  return d;
}

SparseWeighted normalize_adjacency(const SparseWeighted& s) {
  auto d = weighted_degrees(s);
  SparseWeighted out;
  out.num_nodes = s.num_nodes;
  for (const auto& e : s.entries)
    if (e.i != e.j) out.entries.push_back({e.i, e.j, e.w / std::sqrt(d[e.i] * d[e.j])});
  for (int i = 0; i < s.num_nodes; ++i) out.entries.push_back({i, i, 1.0 / d[i]});
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  return out;
}

SparseWeighted build_smoothness_mask(const SparseWeighted& s, double t_h) {
  if (t_h < 0 || t_h >= 1) throw ConfigError("require 0 <= T_h < 1");
  SparseWeighted out;
  out.num_nodes = s.num_nodes;
  for (const auto& e : s.entries)
    if (e.w > t_h) out.entries.push_back(e);
  return out;
}

Tape::Ref tape_normalize_adjacency(Tape& t, Tape::Ref kept_w, const SparsePattern& pat) {
  const Mat& wv = t.val(kept_w);
  const int P = static_cast<int>(pat.pairs.size());
  if (wv.rows != P || wv.cols != 1) throw ShapeError("normalize_adjacency: weight shape");
  std::vector<double> d(pat.n, 1.0);
  for (int p = 0; p < P; ++p) {
    d[pat.pairs[p].first] += wv(p, 0);
    d[pat.pairs[p].second] += wv(p, 0);
  }
  Mat out(P + pat.n, 1);
  for (int p = 0; p < P; ++p)
    out(p, 0) = wv(p, 0) / std::sqrt(d[pat.pairs[p].first] * d[pat.pairs[p].second]);
  for (int i = 0; i < pat.n; ++i) out(P + i, 0) = 1.0 / d[i];
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, kept_w, self, &pat, d = std::move(d)]() {
    const Mat& g = t.grad(self);
    const Mat& a = t.val(self);
    Mat& gw = t.grad(kept_w);
    const int P = static_cast<int>(pat.pairs.size());
    // per-node accumulator for the degree-dependence of every entry touching
    // the node: h_k = sum_p g_p * (-1/2) a_p / d_k  +  g_diag_k * (-1/d_k^2)
    std::vector<double> h(pat.n, 0.0);
    for (int p = 0; p < P; ++p) {
      auto [i, j] = pat.pairs[p];
      double gp = g(p, 0);
      h[i] += gp * (-0.5) * a(p, 0) / d[i];
      h[j] += gp * (-0.5) * a(p, 0) / d[j];
    }
    for (int i = 0; i < pat.n; ++i) h[i] += g(P + i, 0) * (-1.0 / (d[i] * d[i]));
    for (int p = 0; p < P; ++p) {
      auto [i, j] = pat.pairs[p];
      gw(p, 0) += g(p, 0) / std::sqrt(d[i] * d[j]) + h[i] + h[j];
    }
  });
  return self;
}

Tape::Ref tape_spmm(Tape& t, Tape::Ref adj_entries, const SparsePattern& pat, Tape::Ref x) {
  const Mat& a = t.val(adj_entries);
  const Mat& xv = t.val(x);
  const int P = static_cast<int>(pat.pairs.size());
  if (a.rows != P + pat.n || xv.rows != pat.n) throw ShapeError("spmm: shape mismatch");
  const int F = xv.cols;
  Mat y(pat.n, F);
  for (int p = 0; p < P; ++p) {
    auto [i, j] = pat.pairs[p];
    double w = a(p, 0);
    for (int c = 0; c < F; ++c) {
      y(i, c) += w * xv(j, c);
      y(j, c) += w * xv(i, c);
    }
  }
  for (int i = 0; i < pat.n; ++i) {
    double w = a(P + i, 0);
    for (int c = 0; c < F; ++c) y(i, c) += w * xv(i, c);
  }
  Tape::Ref self = t.custom(std::move(y));
  t.set_backward(self, [&t, adj_entries, x, self, &pat]() {
    const Mat& g = t.grad(self);
    const Mat& a = t.val(adj_entries);
    const Mat& xv = t.val(x);
    Mat& ga = t.grad(adj_entries);
    Mat& gx = t.grad(x);
    const int P = static_cast<int>(pat.pairs.size());
    const int F = xv.cols;
    for (int p = 0; p < P; ++p) {
      auto [i, j] = pat.pairs[p];
      double w = a(p, 0);
      double s = 0.0;
      for (int c = 0; c < F; ++c) {
        s += g(i, c) * xv(j, c) + g(j, c) * xv(i, c);
        gx(j, c) += w * g(i, c);
        gx(i, c) += w * g(j, c);
      }
      ga(p, 0) += s;
    }
    for (int i = 0; i < pat.n; ++i) {
      double w = a(P + i, 0);
      double s = 0.0;
      for (int c = 0; c < F; ++c) {
        s += g(i, c) * xv(i, c);
        gx(i, c) += w * g(i, c);
      }
      ga(P + i, 0) += s;
    }
  });
  return self;
}

GcnOutput gcn_forward(Tape& t, ParamStore& params, Tape::Ref adj_entries,
                      const SparsePattern& pat, Tape::Ref x) {
  using namespace gcn_params;
  auto& w1 = params.at(kW1);
  auto& w2 = params.at(kW2);
  Tape::Ref ax = tape_spmm(t, adj_entries, pat, x);
  Tape::Ref hidden = tape_relu(t, tape_matmul(t, ax, t.leaf(&w1.value, &w1.grad)));
  Tape::Ref ah = tape_spmm(t, adj_entries, pat, hidden);
  Tape::Ref logits = tape_matmul(t, ah, t.leaf(&w2.value, &w2.grad));
  return {hidden, logits};
}

static Mat spmm_plain(const SparseWeighted& a, const Mat& x) {
  Mat y(x.rows, x.cols);
  for (const auto& e : a.entries) {
    for (int c = 0; c < x.cols; ++c) {
      y(e.i, c) += e.w * x(e.j, c);
      if (e.i != e.j) y(e.j, c) += e.w * x(e.i, c);
    }
  }
  return y;
}

Mat gcn_forward_plain(const ParamStore& params, const SparseWeighted& normalized, const Mat& x) {
  using namespace gcn_params;
  Mat h = relu(matmul(spmm_plain(normalized, x), params.at(kW1).value));
  return matmul(spmm_plain(normalized, h), params.at(kW2).value);
}

Tape::Ref loss_classification(Tape& t, Tape::Ref logits, const AttributedGraph& g) {
  std::vector<int> rows = g.mask_nodes(g.train_mask);
  if (rows.empty()) throw ConfigError("loss_classification: empty train mask");
  Mat onehot(static_cast<int>(rows.size()), g.num_classes);
  for (size_t r = 0; r < rows.size(); ++r) onehot(static_cast<int>(r), g.labels[rows[r]]) = 1.0;
  Tape::Ref gathered = tape_gather_rows(t, logits, rows);
  return tape_softmax_cross_entropy(t, gathered, onehot).loss;
}

Tape::Ref loss_smoothness(Tape& t, Tape::Ref probs, Tape::Ref kept_w, const SparsePattern& pat,
                          const std::vector<int>& mask_idx,
                          const std::vector<uint8_t>& labeled) {
  const Mat& pv = t.val(probs);
  const Mat& wv = t.val(kept_w);
  double loss = 0.0;
  for (int m : mask_idx) {
    auto [i, j] = pat.pairs[m];
    double mult = (labeled[i] ? 0.0 : 1.0) + (labeled[j] ? 0.0 : 1.0);
    if (mult == 0.0) continue;
    double d2 = 0.0;
    for (int c = 0; c < pv.cols; ++c) {
      double d = pv(i, c) - pv(j, c);
      d2 += d * d;
    }
    loss += mult * wv(m, 0) * d2;
  }
  Mat lm(1, 1);
  lm(0, 0) = loss;
  Tape::Ref self = t.custom(std::move(lm));
  t.set_backward(self, [&t, probs, kept_w, self, &pat, mask_idx, labeled]() {
    const double gs = t.grad(self)(0, 0);
    const Mat& pv = t.val(probs);
    const Mat& wv = t.val(kept_w);
    Mat& gp = t.grad(probs);
    Mat& gw = t.grad(kept_w);
    for (int m : mask_idx) {
      auto [i, j] = pat.pairs[m];
      double mult = (labeled[i] ? 0.0 : 1.0) + (labeled[j] ? 0.0 : 1.0);
      if (mult == 0.0) continue;
      double d2 = 0.0;
      for (int c = 0; c < pv.cols; ++c) {
        double d = pv(i, c) - pv(j, c);
        d2 += d * d;
        gp(i, c) += gs * mult * wv(m, 0) * 2.0 * d;
        gp(j, c) -= gs * mult * wv(m, 0) * 2.0 * d;
      }
      gw(m, 0) += gs * mult * d2;
    }
  });
  return self;
}

double loss_smoothness_plain(const Mat& probs, const SparseWeighted& mask,
                             const std::vector<uint8_t>& labeled) {
  double loss = 0.0;
  for (const auto& e : mask.entries) {
    double mult = (labeled[e.i] ? 0.0 : 1.0) + (labeled[e.j] ? 0.0 : 1.0);
    if (mult == 0.0) continue;
    double d2 = 0.0;
    for (int c = 0; c < probs.cols; ++c) {
      double d = probs(e.i, c) - probs(e.j, c);
      d2 += d * d;
    }
    loss += mult * e.w * d2;
  }
  return loss;
}

}  // namespace rsgnn
