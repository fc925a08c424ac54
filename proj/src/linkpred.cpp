#include "linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace rsgnn {

static void glorot_init(Mat& w, Rng& rng) {
  double limit = std::sqrt(6.0 / (w.rows + w.cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : w.data) v = u(rng);
}

void init_predictor_params(ParamStore& params, int feature_dim, Rng& rng) {
  using namespace predictor_params;
  glorot_init(params.add(kW1, feature_dim, kPredictorHidden), rng);
  params.add(kB1, 1, kPredictorHidden);
  glorot_init(params.add(kW2, kPredictorHidden, kPredictorHidden), rng);
  params.add(kB2, 1, kPredictorHidden);
}

Tape::Ref embed(Tape& t, ParamStore& params, Tape::Ref x) {
  using namespace predictor_params;
  auto leaf = [&](const char* name) {
    auto& e = params.at(name);
    return t.leaf(&e.value, &e.grad);
  };
  Tape::Ref h = tape_relu(t, tape_add_row_bias(t, tape_matmul(t, x, leaf(kW1)), leaf(kB1)));
  return tape_add_row_bias(t, tape_matmul(t, h, leaf(kW2)), leaf(kB2));
}

Mat embed_plain(const ParamStore& params, const Mat& x) {
  using namespace predictor_params;
  Mat h = matmul(x, params.at(kW1).value);
  const Mat& b1 = params.at(kB1).value;
  for (int i = 0; i < h.rows; ++i)
    for (int c = 0; c < h.cols; ++c) h(i, c) += b1(0, c);
  h = relu(h);
  Mat z = matmul(h, params.at(kW2).value);
  const Mat& b2 = params.at(kB2).value;
  for (int i = 0; i < z.rows; ++i)
    for (int c = 0; c < z.cols; ++c) z(i, c) += b2(0, c);
  return z;
}

double edge_weight(const Mat& z, int i, int j) {
  if (i == j) throw ConfigError("edge_weight: self-edges are never scored");
  double dot = 0.0;
  for (int c = 0; c < z.cols; ++c) dot += z(i, c) * z(j, c);
  return dot > 0.0 ? dot : 0.0;
}

std::vector<int> sample_negatives(const std::vector<std::vector<int>>& adj, int num_nodes, int i,
                                  int q, Rng& rng, bool* flagged) {
  std::set<int> excluded(adj[i].begin(), adj[i].end());
  excluded.insert(i);
  int available = num_nodes - static_cast<int>(excluded.size());
  if (flagged) *flagged = available < q;
  std::vector<int> out;
  if (available <= q) {
    for (int v = 0; v < num_nodes; ++v)
      if (!excluded.count(v)) out.push_back(v);
    return out;
  }
  std::uniform_int_distribution<int> pick(0, num_nodes - 1);
  std::set<int> chosen;
  while (static_cast<int>(out.size()) < q) {
    int v = pick(rng);
    if (excluded.count(v) || chosen.count(v)) continue;
    chosen.insert(v);
    out.push_back(v);
  }
  return out;
}

double similarity_weight(const Mat& x, int i, int j, double sigma, bool positive) {
  if (sigma <= 0) throw ConfigError("sigma must be > 0");
  double d2 = 0.0;
  for (int c = 0; c < x.cols; ++c) {
    double d = x(i, c) - x(j, c);
    d2 += d * d;
  }
  double arg = d2 / (sigma * sigma);
  if (positive) return std::exp(-arg);
  return std::exp(std::min(arg, 50.0));  // clamp keeps the ordering, avoids Inf
}

Tape::Ref tape_pair_dot(Tape& t, Tape::Ref z, EdgeList pairs) {
  const Mat& zv = t.val(z);
  Mat out(static_cast<int>(pairs.size()), 1);
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    double dot = 0.0;
    for (int c = 0; c < zv.cols; ++c) dot += zv(i, c) * zv(j, c);
    out(static_cast<int>(p), 0) = dot;
  }
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, z, self, pairs = std::move(pairs)]() {
    const Mat& g = t.grad(self);
    const Mat& zv = t.val(z);
    Mat& gz = t.grad(z);
    for (size_t p = 0; p < pairs.size(); ++p) {
      auto [i, j] = pairs[p];
      double gp = g(static_cast<int>(p), 0);
      if (gp == 0.0) continue;
      for (int c = 0; c < zv.cols; ++c) {
        gz(i, c) += gp * zv(j, c);
        gz(j, c) += gp * zv(i, c);
      }
    }
  });
  return self;
}

Tape::Ref tape_clamp_max1(Tape& t, Tape::Ref a) {
  Mat out = t.val(a);
  for (double& v : out.data) v = std::min(v, 1.0);
  Tape::Ref self = t.custom(std::move(out));
  t.set_backward(self, [&t, a, self]() {
    const Mat& g = t.grad(self);
    const Mat& av = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i)
      if (av.data[i] < 1.0) ga.data[i] += g.data[i];
  });
  return self;
}

Tape::Ref tape_weighted_sq_err(Tape& t, Tape::Ref a, std::vector<double> coeff,
                               std::vector<double> target) {
  const Mat& av = t.val(a);
  if (av.cols != 1 || av.size() != coeff.size() || coeff.size() != target.size())
    throw ShapeError("weighted_sq_err: mismatched lengths");
  double loss = 0.0;
  for (size_t i = 0; i < coeff.size(); ++i) {
    double d = av.data[i] - target[i];
    loss += coeff[i] * d * d;
  }
  Mat lm(1, 1);
  lm(0, 0) = loss;
  Tape::Ref self = t.custom(std::move(lm));
  t.set_backward(self, [&t, a, self, coeff = std::move(coeff), target = std::move(target)]() {
    const double gs = t.grad(self)(0, 0);
    const Mat& av = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < coeff.size(); ++i)
      ga.data[i] += gs * 2.0 * coeff[i] * (av.data[i] - target[i]);
  });
  return self;
}

Tape::Ref loss_reconstruction(Tape& t, Tape::Ref z, const AttributedGraph& g, double sigma,
                              int q, Rng& rng) {
  if (q < 1) throw ConfigError("Q must be >= 1");
  auto adj = g.adjacency();
  EdgeList pairs;
  std::vector<double> coeff, target;
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j : adj[i]) {
      pairs.emplace_back(i, j);
      coeff.push_back(similarity_weight(g.features, i, j, sigma, true));
      target.push_back(1.0);
      for (int n : sample_negatives(adj, g.num_nodes, i, q, rng)) {
        pairs.emplace_back(i, n);
        coeff.push_back(similarity_weight(g.features, i, n, sigma, false));
        target.push_back(0.0);
      }
    }
  }
  if (pairs.empty()) return t.constant(Mat(1, 1));  // no edges -> zero loss
  Tape::Ref w = tape_relu(t, tape_pair_dot(t, z, std::move(pairs)));
  return tape_weighted_sq_err(t, w, std::move(coeff), std::move(target));
}

CandidateSets build_candidates(const Mat& x, int k, bool* zero_row_warning) {
  if (k < 1) throw ConfigError("K must be >= 1");
  const int n = x.rows;
  std::vector<double> norm(n, 0.0);
  bool any_zero = false;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) s += x(i, c) * x(i, c);
    norm[i] = std::sqrt(s);
    if (norm[i] == 0.0) any_zero = true;
  }
  if (zero_row_warning) *zero_row_warning = any_zero;
  CandidateSets cs;
  cs.lists.resize(n);
  std::vector<std::pair<double, int>> scored(n);
  const int kk = std::min(k, n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double sim = 0.0;
      if (j != i && norm[i] > 0.0 && norm[j] > 0.0) {
        double dot = 0.0;
        for (int c = 0; c < x.cols; ++c) dot += x(i, c) * x(j, c);
        sim = dot / (norm[i] * norm[j]);
      }
      // sort descending by similarity, ascending index on ties; self sinks
      scored[j] = {j == i ? -1e300 : sim, j};
    }
    std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    cs.lists[i].resize(kk);
    for (int r = 0; r < kk; ++r) cs.lists[i][r] = scored[r].second;
  }
  return cs;
}

EdgeList build_pair_universe(const AttributedGraph& g, const CandidateSets& candidates) {
  EdgeList pairs = g.edges;
  if (!candidates.lists.empty()) {
    for (int i = 0; i < g.num_nodes; ++i)
      for (int j : candidates.lists[i])
        pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

LearnedGraph build_learned_graph_from_z(const Mat& z, const AttributedGraph& g,
                                        const CandidateSets& candidates, double t_l) {
  if (t_l < 0 || t_l >= 1) throw ConfigError("require 0 <= T_l < 1");
  EdgeList pairs = build_pair_universe(g, candidates);
  LearnedGraph lg;
  lg.s.num_nodes = g.num_nodes;
  for (auto [i, j] : pairs) {
    double w = std::min(1.0, edge_weight(z, i, j));
    if (w > t_l) {
      lg.s.entries.push_back({i, j, w});
      lg.provenance.push_back(g.has_edge(i, j) ? Provenance::kKeptOriginal
                                               : Provenance::kDensified);
    }
  }
  return lg;
}

LearnedGraph build_learned_graph(const ParamStore& params, const AttributedGraph& g,
                                 const CandidateSets& candidates, double t_l) {
  return build_learned_graph_from_z(embed_plain(params, g.features), g, candidates, t_l);
}

void save_learned_graph(const LearnedGraph& lg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write learned graph: " + path);
  char buf[64];
  for (size_t e = 0; e < lg.s.entries.size(); ++e) {
    const auto& en = lg.s.entries[e];
    snprintf(buf, sizeof(buf), "%.17g", en.w);
    f << en.i << '\t' << en.j << '\t' << buf << '\t'
      << (lg.provenance[e] == Provenance::kKeptOriginal ? "kept-original" : "densified")
      << '\n';
  }
}

LearnedGraph load_learned_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open learned graph: " + path);
  LearnedGraph lg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i, j;
    double w;
    std::string prov;
    if (!(ss >> i >> j >> w >> prov))
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed learned-graph line");
    lg.s.num_nodes = std::max(lg.s.num_nodes, std::max(i, j) + 1);
    lg.s.entries.push_back({i, j, w});
    lg.provenance.push_back(prov == "kept-original" ? Provenance::kKeptOriginal
                                                    : Provenance::kDensified);
  }
  return lg;
}

}  // namespace rsgnn
