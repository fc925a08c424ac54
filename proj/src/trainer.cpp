#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace rsgnn {

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "no_densify") return Variant::kNoDensify;
  if (s == "no_smooth") return Variant::kNoSmooth;
  if (s == "denoise_only") return Variant::kDenoiseOnly;
  if (s == "gcn_predictor") return Variant::kGcnPredictor;
  if (s == "plain_gcn") return Variant::kPlainGcn;
  throw ConfigError("unknown variant: " + s);
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoDensify: return "no_densify";
    case Variant::kNoSmooth: return "no_smooth";
    case Variant::kDenoiseOnly: return "denoise_only";
    case Variant::kGcnPredictor: return "gcn_predictor";
    case Variant::kPlainGcn: return "plain_gcn";
  }
  throw ConfigError("unknown variant enum");
}

void TrainConfig::validate() const {
  if (alpha < 0 || beta < 0) throw ConfigError("alpha/beta must be >= 0");
  if (t_l < 0 || t_l >= 1) throw ConfigError("require 0 <= T_l < 1");
  if (t_h < 0 || t_h >= 1) throw ConfigError("require 0 <= T_h < 1");
  if (sigma <= 0) throw ConfigError("sigma must be > 0");
  if (q < 1 || k < 1) throw ConfigError("Q and K must be >= 1");
  if (max_epochs < 1 || patience < 1) throw ConfigError("epochs/patience must be >= 1");
  if (learning_rate <= 0) throw ConfigError("learning rate must be > 0");
}

VariantFlags apply_variant(const TrainConfig& cfg) {
  VariantFlags f;
  switch (cfg.variant) {
    case Variant::kFull: break;
    case Variant::kNoDensify: f.densify = false; break;
    case Variant::kNoSmooth: f.smooth = false; break;
    case Variant::kDenoiseOnly: f.densify = false; f.smooth = false; break;
    case Variant::kGcnPredictor: f.gcn_predictor = true; break;
    case Variant::kPlainGcn:
      f.use_predictor = false;
      f.densify = false;
      f.smooth = false;
      break;
  }
  return f;
}

// Splits a normalized symmetric sparse matrix into the tape entry layout:
// off-diagonal pairs followed by the n diagonal values.
static std::pair<SparsePattern, Mat> to_pattern_entries(const SparseWeighted& a) {
  SparsePattern pat;
  pat.n = a.num_nodes;
  std::vector<double> diag(a.num_nodes, 0.0);
  std::vector<double> vals;
  for (const auto& e : a.entries) {
    if (e.i == e.j) {
      diag[e.i] = e.w;
    } else {
      pat.pairs.emplace_back(e.i, e.j);
      vals.push_back(e.w);
    }
  }
  Mat entries(static_cast<int>(vals.size()) + a.num_nodes, 1);
  for (size_t p = 0; p < vals.size(); ++p) entries(static_cast<int>(p), 0) = vals[p];
  for (int i = 0; i < a.num_nodes; ++i) entries(static_cast<int>(vals.size()) + i, 0) = diag[i];
  return {std::move(pat), std::move(entries)};
}

Accuracy accuracy_from_logits(const Mat& logits, const AttributedGraph& g) {
  auto acc_on = [&](const std::vector<uint8_t>& mask) {
    int total = 0, correct = 0;
    for (int i = 0; i < g.num_nodes; ++i) {
      if (!mask[i]) continue;
      ++total;
      int best = 0;
      for (int c = 1; c < logits.cols; ++c)
        if (logits(i, c) > logits(i, best)) best = c;  // ties keep lowest index
      if (best == g.labels[i]) ++correct;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  };
  return {acc_on(g.train_mask), acc_on(g.val_mask), acc_on(g.test_mask)};
}

Accuracy evaluate(const ParamStore& params, const AttributedGraph& g, const LearnedGraph& s) {
  Mat logits = gcn_forward_plain(params, normalize_adjacency(s.s), g.features);
  return accuracy_from_logits(logits, g);
}

static Mat predictor_embed_plain(const ParamStore& params, const AttributedGraph& g,
                                 const VariantFlags& flags,
                                 const SparseWeighted& raw_normalized) {
  using namespace predictor_params;
  if (!flags.gcn_predictor) return embed_plain(params, g.features);
  auto spmm = [&](const Mat& x) {
    Mat y(x.rows, x.cols);
    for (const auto& e : raw_normalized.entries)
      for (int c = 0; c < x.cols; ++c) {
        y(e.i, c) += e.w * x(e.j, c);
        if (e.i != e.j) y(e.j, c) += e.w * x(e.i, c);
      }
    return y;
  };
  auto add_bias = [](Mat m, const Mat& b) {
    for (int i = 0; i < m.rows; ++i)
      for (int c = 0; c < m.cols; ++c) m(i, c) += b(0, c);
    return m;
  };
  Mat h = relu(add_bias(matmul(spmm(g.features), params.at(kW1).value), params.at(kB1).value));
  return add_bias(matmul(spmm(h), params.at(kW2).value), params.at(kB2).value);
}

WeightHistogram weight_histogram(const LearnedGraph& lg, const AttributedGraph& g,
                                 const std::vector<double>& original_scores) {
  if (original_scores.size() != g.edges.size())
    throw ShapeError("weight_histogram: one score per original edge required");
  WeightHistogram h;
  h.has_noise_record = g.noise.has_value();
  auto bin_of = [](double w) { return std::min(19, static_cast<int>(w * 20.0)); };
  std::set<std::pair<int, int>> added;
  if (g.noise)
    added.insert(g.noise->added_edges.begin(), g.noise->added_edges.end());
  double sum_clean = 0, sum_noisy = 0;
  int n_clean = 0, n_noisy = 0;
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    auto e = g.edges[ei];
    double w = original_scores[ei];
    if (added.count(e)) {
      h.noisy_original[bin_of(w)]++;
      sum_noisy += w;
      ++n_noisy;
    } else {
      h.clean_original[bin_of(w)]++;
      sum_clean += w;
      ++n_clean;
    }
  }
  double sum_dens = 0;
  int n_dens = 0;
  for (size_t e = 0; e < lg.s.entries.size(); ++e) {
    if (lg.provenance[e] == Provenance::kDensified) {
      h.densified[bin_of(lg.s.entries[e].w)]++;
      sum_dens += lg.s.entries[e].w;
      ++n_dens;
    }
  }
  h.mean_clean = n_clean ? sum_clean / n_clean : 0.0;
  h.mean_noisy = n_noisy ? sum_noisy / n_noisy : 0.0;
  h.mean_densified = n_dens ? sum_dens / n_dens : 0.0;
  return h;
}

bool weight_separation_auc(const std::vector<double>& original_scores,
                           const AttributedGraph& g, double* auc) {
  if (!g.noise || g.noise->added_edges.empty()) return false;
  if (original_scores.size() != g.edges.size())
    throw ShapeError("weight_separation_auc: one score per original edge required");
  std::set<std::pair<int, int>> added(g.noise->added_edges.begin(), g.noise->added_edges.end());
  std::vector<double> clean, noisy;
  for (size_t ei = 0; ei < g.edges.size(); ++ei)
    (added.count(g.edges[ei]) ? noisy : clean).push_back(original_scores[ei]);
  if (clean.empty() || noisy.empty()) return false;
  // AUC = P(clean > noisy) + 0.5 P(clean == noisy), by pairwise comparison of
  // sorted arrays
  std::sort(clean.begin(), clean.end());
  std::sort(noisy.begin(), noisy.end());
  double wins = 0.0;
  for (double c : clean) {
    auto lo = std::lower_bound(noisy.begin(), noisy.end(), c) - noisy.begin();
    auto hi = std::upper_bound(noisy.begin(), noisy.end(), c) - noisy.begin();
    wins += static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo);
  }
  *auc = wins / (static_cast<double>(clean.size()) * noisy.size());
  return true;
}

// Uninvolved rate over the kept structure of a learned graph.
static double uninvolved_on_learned(const LearnedGraph& lg, const AttributedGraph& g, int hops) {
  AttributedGraph h = g;
  h.edges.clear();
  for (const auto& e : lg.s.entries)
    if (e.i != e.j) h.edges.emplace_back(e.i, e.j);
  std::sort(h.edges.begin(), h.edges.end());
  h.edges.erase(std::unique(h.edges.begin(), h.edges.end()), h.edges.end());
  return uninvolved_rate(h, hops);
}

TrainResult train(const AttributedGraph& g, const TrainConfig& cfg) {
  cfg.validate();
  if (g.mask_nodes(g.train_mask).empty()) throw ConfigError("train: empty train mask");
  const VariantFlags flags = apply_variant(cfg);
  const double beta_eff = flags.smooth ? cfg.beta : 0.0;

  Rng init_rng(cfg.seed);
  TrainResult result;
  ParamStore& params = result.params;
  if (flags.use_predictor) init_predictor_params(params, g.feature_dim(), init_rng);
  init_gcn_params(params, g.feature_dim(), g.num_classes, init_rng);

  // candidate sets are computed once, before epoch 0
  CandidateSets candidates;
  if (flags.use_predictor && flags.densify)
    candidates = build_candidates(g.features, cfg.k);
  const EdgeList pair_universe =
      flags.use_predictor ? build_pair_universe(g, candidates) : EdgeList{};

  // raw-graph normalized adjacency, used by plain_gcn and the GCN predictor
  SparseWeighted raw;
  raw.num_nodes = g.num_nodes;
  for (auto [u, v] : g.edges) raw.entries.push_back({u, v, 1.0});
  const SparseWeighted raw_normalized = normalize_adjacency(raw);

  std::vector<uint8_t> labeled(g.num_nodes, 0);
  for (int i = 0; i < g.num_nodes; ++i) labeled[i] = g.train_mask[i];

  std::map<std::string, Mat> best_values = params.snapshot_values();
  int best_epoch = -1;
  double best_val = -1.0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng epoch_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(epoch) + 1);
    Tape t;
    Tape::Ref x = t.constant(g.features);

    double lgnn_v = 0, le_v = 0, lu_v = 0;
    Tape::Ref total;
    Mat logits_value;

    SparsePattern pat;      // must outlive backward()
    SparsePattern raw_pat;  // raw-graph pattern for the GCN-predictor variant
    std::vector<int> kept_idx, mask_idx;

    if (!flags.use_predictor) {
      auto [rpat, rentries] = to_pattern_entries(raw_normalized);
      pat = std::move(rpat);
      Tape::Ref adj = t.constant(std::move(rentries));
      GcnOutput out = gcn_forward(t, params, adj, pat, x);
      Tape::Ref lgnn = loss_classification(t, out.logits, g);
      total = tape_weighted_sum(t, {{lgnn, 1.0}});
      lgnn_v = t.val(lgnn)(0, 0);
      logits_value = t.val(out.logits);
      t.backward(total);
    } else {
      Tape::Ref z;
      if (flags.gcn_predictor) {
        auto [rpat, rentries] = to_pattern_entries(raw_normalized);
        raw_pat = std::move(rpat);
        Tape::Ref adj = t.constant(std::move(rentries));
        using namespace predictor_params;
        auto leaf = [&](const char* name) {
          auto& e = params.at(name);
          return t.leaf(&e.value, &e.grad);
        };
        Tape::Ref h = tape_relu(
            t, tape_add_row_bias(
                   t, tape_matmul(t, tape_spmm(t, adj, raw_pat, x), leaf(kW1)), leaf(kB1)));
        z = tape_add_row_bias(t, tape_matmul(t, tape_spmm(t, adj, raw_pat, h), leaf(kW2)),
                              leaf(kB2));
      } else {
        z = embed(t, params, x);
      }

      // learned graph over the pair universe (Eq. 4); the keep mask is a
      // constant within the step
      Tape::Ref clamped =
          tape_clamp_max1(t, tape_relu(t, tape_pair_dot(t, z, pair_universe)));
      const Mat& cw = t.val(clamped);
      for (int p = 0; p < cw.rows; ++p)
        if (cw(p, 0) > cfg.t_l) kept_idx.push_back(p);
      pat.n = g.num_nodes;
      for (int p : kept_idx) pat.pairs.push_back(pair_universe[p]);
      Tape::Ref kept_w = tape_gather_rows(t, clamped, kept_idx);
      const Mat& kv = t.val(kept_w);
      for (int m = 0; m < kv.rows; ++m)
        if (kv(m, 0) > cfg.t_h) mask_idx.push_back(m);

      Tape::Ref adj = tape_normalize_adjacency(t, kept_w, pat);
      GcnOutput out = gcn_forward(t, params, adj, pat, x);
      Tape::Ref lgnn = loss_classification(t, out.logits, g);
      Tape::Ref le = loss_reconstruction(t, z, g, cfg.sigma, cfg.q, epoch_rng);
      std::vector<std::pair<Tape::Ref, double>> terms = {{lgnn, 1.0}, {le, cfg.alpha}};
      Tape::Ref lu = -1;
      if (beta_eff > 0.0) {
        Tape::Ref probs = tape_softmax_rows(t, out.logits);
        lu = loss_smoothness(t, probs, kept_w, pat, mask_idx, labeled);
        terms.push_back({lu, beta_eff});
      }
      total = tape_weighted_sum(t, terms);
      lgnn_v = t.val(lgnn)(0, 0);
      le_v = t.val(le)(0, 0);
      lu_v = lu >= 0 ? t.val(lu)(0, 0) : 0.0;
      logits_value = t.val(out.logits);
      t.backward(total);
    }

    const double total_v = t.val(total)(0, 0);
    if (!std::isfinite(lgnn_v)) throw NumericError("NaN in classification loss");
    if (!std::isfinite(le_v)) throw NumericError("NaN in reconstruction loss");
    if (!std::isfinite(lu_v)) throw NumericError("NaN in smoothness loss");
    if (total_v > 1e8) throw NumericError("training diverged: loss " + std::to_string(total_v));

    Accuracy acc = accuracy_from_logits(logits_value, g);
    result.report.epochs.push_back(
        {epoch, lgnn_v, le_v, lu_v, total_v, acc.train, acc.val, acc.test});

    if (acc.val > best_val) {
      best_val = acc.val;
      best_epoch = epoch;
      best_values = params.snapshot_values();
    }
    if (epoch - best_epoch >= cfg.patience) {
      params.zero_grads();
      break;
    }
    adam_step(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  }

  params.restore_values(best_values);
  result.report.best_epoch = best_epoch;
  result.report.best_val_acc = best_val;

  // artifacts from the best parameters
  if (flags.use_predictor) {
    Mat z = predictor_embed_plain(params, g, flags, raw_normalized);
    result.learned = build_learned_graph_from_z(z, g, candidates, cfg.t_l);
    result.edge_scores.reserve(g.edges.size());
    for (auto [u, v] : g.edges)
      result.edge_scores.push_back(std::min(1.0, edge_weight(z, u, v)));
  } else {
    result.learned.s = raw;
    result.learned.provenance.assign(raw.entries.size(), Provenance::kKeptOriginal);
    result.edge_scores.assign(g.edges.size(), 1.0);
  }
  Accuracy final_acc = evaluate(params, g, result.learned);
  result.report.final_test_acc = final_acc.test;
  result.report.final_train_acc = final_acc.train;
  result.report.weights = weight_histogram(result.learned, g, result.edge_scores);
  result.report.uninvolved_before = uninvolved_rate(g, 2);
  result.report.uninvolved_after = uninvolved_on_learned(result.learned, g, 2);
  return result;
}

}  // namespace rsgnn
