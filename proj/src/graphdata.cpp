#include "graphdata.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rsgnn {

using nlohmann::json;

std::vector<std::vector<int>> AttributedGraph::adjacency() const {
  std::vector<std::vector<int>> adj(num_nodes);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

bool AttributedGraph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
}

std::vector<int> AttributedGraph::mask_nodes(const std::vector<uint8_t>& mask) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

void AttributedGraph::validate() const {
  if (features.rows != num_nodes) throw ConfigError("feature row count != num_nodes");
  for (auto [u, v] : edges) {
    if (u >= v) throw ConfigError("non-canonical edge");
    if (v >= num_nodes) throw ConfigError("edge index out of range");
  }
  for (int i = 0; i < num_nodes; ++i) {
    int in = (i < (int)train_mask.size() && train_mask[i]) +
             (i < (int)val_mask.size() && val_mask[i]) +
             (i < (int)test_mask.size() && test_mask[i]);
    if (in > 1) throw ConfigError("masks overlap at node " + std::to_string(i));
    if (!train_mask.empty() && train_mask[i] && (labels[i] < 0 || labels[i] >= num_classes))
      throw ConfigError("labeled node without valid class: " + std::to_string(i));
  }
}

static void canonicalize_edges(EdgeList& edges, int num_nodes, int* dropped) {
  int before = static_cast<int>(edges.size());
  EdgeList out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw IoError("edge references unknown node: " + std::to_string(u) + "-" +
                    std::to_string(v));
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (dropped) *dropped = before - static_cast<int>(out.size());
  edges = std::move(out);
}

AttributedGraph load_graph(const std::string& node_file, const std::string& edge_file,
                           int* dropped) {
  std::ifstream nf(node_file);
  if (!nf) throw IoError("cannot open node file: " + node_file);
  AttributedGraph g;
  std::vector<std::vector<double>> feats;
  std::string line;
  int lineno = 0;
  int max_label = -1;
  while (std::getline(nf, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long id, label;
    std::string featstr;
    if (!(ss >> id >> label >> featstr))
      throw IoError(node_file + ":" + std::to_string(lineno) + ": malformed node line");
    if (id != static_cast<long>(feats.size()))
      throw IoError(node_file + ":" + std::to_string(lineno) + ": node ids must be 0..N-1");
    std::vector<double> row;
    std::istringstream fs(featstr);
    std::string tok;
    while (std::getline(fs, tok, ',')) row.push_back(std::stod(tok));
    if (!feats.empty() && row.size() != feats.front().size())
      throw IoError(node_file + ":" + std::to_string(lineno) + ": inconsistent feature width");
    feats.push_back(std::move(row));
    g.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  g.num_nodes = static_cast<int>(feats.size());
  g.num_classes = max_label + 1;
  int d = feats.empty() ? 0 : static_cast<int>(feats.front().size());
  g.features = Mat(g.num_nodes, d);
  for (int i = 0; i < g.num_nodes; ++i)
    for (int c = 0; c < d; ++c) g.features(i, c) = feats[i][c];

  std::ifstream ef(edge_file);
  if (!ef) throw IoError("cannot open edge file: " + edge_file);
  lineno = 0;
  while (std::getline(ef, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int u, v;
    if (!(ss >> u >> v))
      throw IoError(edge_file + ":" + std::to_string(lineno) + ": malformed edge line");
    g.edges.emplace_back(u, v);
  }
  canonicalize_edges(g.edges, g.num_nodes, dropped);
  g.train_mask.assign(g.num_nodes, 0);
  g.val_mask.assign(g.num_nodes, 0);
  g.test_mask.assign(g.num_nodes, 0);
  g.validate();
  return g;
}

AttributedGraph load_cora(const std::string& content_file, const std::string& cites_file) {
  std::ifstream cf(content_file);
  if (!cf) throw IoError("cannot open content file: " + content_file);
  AttributedGraph g;
  std::map<std::string, int> ids;
  std::map<std::string, int> class_ids;
  std::vector<std::vector<double>> feats;
  std::string line;
  int lineno = 0;
  while (std::getline(cf, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(tok);
    if (toks.size() < 3)
      throw IoError(content_file + ":" + std::to_string(lineno) + ": malformed content line");
    const std::string& pid = toks.front();
    const std::string& cls = toks.back();
    if (ids.count(pid))
      throw IoError(content_file + ":" + std::to_string(lineno) + ": duplicate id " + pid);
    ids[pid] = static_cast<int>(feats.size());
    std::vector<double> row(toks.size() - 2);
    for (size_t i = 1; i + 1 < toks.size(); ++i) row[i - 1] = std::stod(toks[i]);
    feats.push_back(std::move(row));
    auto it = class_ids.find(cls);
    if (it == class_ids.end()) it = class_ids.emplace(cls, (int)class_ids.size()).first;
    g.labels.push_back(it->second);
  }
  g.num_nodes = static_cast<int>(feats.size());
  g.num_classes = static_cast<int>(class_ids.size());
  int d = feats.empty() ? 0 : static_cast<int>(feats.front().size());
  g.features = Mat(g.num_nodes, d);
  for (int i = 0; i < g.num_nodes; ++i)
    for (int c = 0; c < d; ++c) g.features(i, c) = feats[i][c];

  std::ifstream ef(cites_file);
  if (!ef) throw IoError("cannot open cites file: " + cites_file);
  lineno = 0;
  while (std::getline(ef, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!(ss >> a >> b))
      throw IoError(cites_file + ":" + std::to_string(lineno) + ": malformed cites line");
    auto ia = ids.find(a);
    auto ib = ids.find(b);
    // citations to papers outside the content file are skipped, matching the
    // usual handling of this layout
    if (ia == ids.end() || ib == ids.end()) continue;
    g.edges.emplace_back(ia->second, ib->second);
  }
  canonicalize_edges(g.edges, g.num_nodes, nullptr);
  g.train_mask.assign(g.num_nodes, 0);
  g.val_mask.assign(g.num_nodes, 0);
  g.test_mask.assign(g.num_nodes, 0);
  g.validate();
  return g;
}

static std::string fmt_double(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_graph(const AttributedGraph& g, const std::string& node_file,
                const std::string& edge_file, const std::string& sidecar_json) {
  std::ofstream nf(node_file);
  if (!nf) throw IoError("cannot write node file: " + node_file);
  for (int i = 0; i < g.num_nodes; ++i) {
    nf << i << '\t' << g.labels[i] << '\t';
    for (int c = 0; c < g.feature_dim(); ++c) {
      if (c) nf << ',';
      nf << fmt_double(g.features(i, c));
    }
    nf << '\n';
  }
  std::ofstream ef(edge_file);
  if (!ef) throw IoError("cannot write edge file: " + edge_file);
  for (auto [u, v] : g.edges) ef << u << '\t' << v << '\n';

  json j;
  j["num_classes"] = g.num_classes;
  j["train_mask"] = g.mask_nodes(g.train_mask);
  j["val_mask"] = g.mask_nodes(g.val_mask);
  j["test_mask"] = g.mask_nodes(g.test_mask);
  if (g.noise) {
    json n;
    n["perturbation_rate"] = g.noise->perturbation_rate;
    n["added_edges"] = g.noise->added_edges;
    n["removed_edges"] = g.noise->removed_edges;
    j["noise"] = n;
  }
  std::ofstream sf(sidecar_json);
  if (!sf) throw IoError("cannot write sidecar: " + sidecar_json);
  sf << j.dump(2) << '\n';
}

AttributedGraph load_graph_with_sidecar(const std::string& node_file,
                                        const std::string& edge_file,
                                        const std::string& sidecar_json) {
  AttributedGraph g = load_graph(node_file, edge_file);
  std::ifstream sf(sidecar_json);
  if (!sf) throw IoError("cannot open sidecar: " + sidecar_json);
  json j;
  try {
    sf >> j;
  } catch (const json::exception& e) {
    throw IoError("sidecar parse failure: " + std::string(e.what()));
  }
  g.num_classes = j.at("num_classes").get<int>();
  for (int i : j.at("train_mask").get<std::vector<int>>()) g.train_mask.at(i) = 1;
  for (int i : j.at("val_mask").get<std::vector<int>>()) g.val_mask.at(i) = 1;
  for (int i : j.at("test_mask").get<std::vector<int>>()) g.test_mask.at(i) = 1;
  if (j.contains("noise")) {
    NoiseRecord n;
    n.perturbation_rate = j["noise"].at("perturbation_rate").get<double>();
    n.added_edges = j["noise"].at("added_edges").get<EdgeList>();
    n.removed_edges = j["noise"].at("removed_edges").get<EdgeList>();
    g.noise = std::move(n);
  }
  g.validate();
  return g;
}

AttributedGraph split_labels(AttributedGraph g, double label_rate, int val_size, int test_size,
                             uint64_t seed) {
  int n_train = static_cast<int>(std::lround(label_rate * g.num_nodes));
  if (n_train + val_size + test_size > g.num_nodes)
    throw ConfigError("split sizes exceed node count");
  std::vector<int> perm(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) perm[i] = i;
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  g.train_mask.assign(g.num_nodes, 0);
  g.val_mask.assign(g.num_nodes, 0);
  g.test_mask.assign(g.num_nodes, 0);
  int pos = 0;
  for (int k = 0; k < n_train; ++k) g.train_mask[perm[pos++]] = 1;
  for (int k = 0; k < val_size; ++k) g.val_mask[perm[pos++]] = 1;
  for (int k = 0; k < test_size; ++k) g.test_mask[perm[pos++]] = 1;
  g.validate();
  return g;
}

static std::pair<int, int> random_nonedge(const AttributedGraph& g,
                                          const std::set<std::pair<int, int>>& taken, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, g.num_nodes - 1);
  while (true) {
    int u = pick(rng);
    int v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    auto e = std::make_pair(u, v);
    if (g.has_edge(u, v) || taken.count(e)) continue;
    return e;
  }
}

std::pair<AttributedGraph, NoiseRecord> inject_random_noise(AttributedGraph g, double ptb_rate,
                                                            double add_fraction, uint64_t seed) {
  if (ptb_rate < 0 || add_fraction < 0 || add_fraction > 1)
    throw ConfigError("invalid noise parameters");
  const int num_edges = static_cast<int>(g.edges.size());
  int n_add = static_cast<int>(std::lround(ptb_rate * num_edges * add_fraction));
  int n_remove = static_cast<int>(std::lround(ptb_rate * num_edges * (1.0 - add_fraction)));
  if (n_remove > num_edges) throw ConfigError("requested removals exceed edge count");
  NoiseRecord rec;
  rec.perturbation_rate = ptb_rate;
  Rng rng(seed);
  std::set<std::pair<int, int>> added;
  for (int k = 0; k < n_add; ++k) added.insert(random_nonedge(g, added, rng));
  if (n_remove > 0) {
    std::vector<int> idx(num_edges);
    for (int i = 0; i < num_edges; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::set<int> drop(idx.begin(), idx.begin() + n_remove);
    EdgeList kept;
    for (int i = 0; i < num_edges; ++i) {
      if (drop.count(i))
        rec.removed_edges.push_back(g.edges[i]);
      else
        kept.push_back(g.edges[i]);
    }
    g.edges = std::move(kept);
  }
  rec.added_edges.assign(added.begin(), added.end());
  g.edges.insert(g.edges.end(), rec.added_edges.begin(), rec.added_edges.end());
  std::sort(g.edges.begin(), g.edges.end());
  std::sort(rec.removed_edges.begin(), rec.removed_edges.end());
  g.noise = rec;
  return {std::move(g), std::move(rec)};
}

double uninvolved_rate(const AttributedGraph& g, int hops) {
  if (hops < 0) throw ConfigError("hops must be >= 0");
  std::vector<int> seeds = g.mask_nodes(g.train_mask);
  if (seeds.empty()) throw ConfigError("uninvolved_rate: empty train mask");
  std::vector<int> dist(g.num_nodes, -1);
  std::deque<int> q;
  for (int s : seeds) {
    dist[s] = 0;
    q.push_back(s);
  }
  auto adj = g.adjacency();
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    if (dist[u] >= hops) continue;
    for (int v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  int uninvolved = 0;
  for (int i = 0; i < g.num_nodes; ++i)
    if (dist[i] < 0) ++uninvolved;
  return static_cast<double>(uninvolved) / g.num_nodes;
}

AttributedGraph add_random_edges(AttributedGraph g, int count, uint64_t seed) {
  Rng rng(seed);
  std::set<std::pair<int, int>> added;
  for (int k = 0; k < count; ++k) added.insert(random_nonedge(g, added, rng));
  g.edges.insert(g.edges.end(), added.begin(), added.end());
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

static std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

std::vector<InvolvementRow> involvement_sweep(const AttributedGraph& g,
                                              const std::vector<double>& label_rates,
                                              const std::vector<double>& densities, int hops,
                                              int trials, uint64_t seed) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<InvolvementRow> rows;
  for (double rate : label_rates) {
    std::vector<double> vals;
    for (int tr = 0; tr < trials; ++tr) {
      AttributedGraph h = split_labels(g, rate, 0, 0, seed + tr);
      vals.push_back(uninvolved_rate(h, hops));
    }
    auto [m, s] = mean_std(vals);
    rows.push_back({"label_rate", rate, m, s});
  }
  const double density_label_rate = 0.01;
  for (double mult : densities) {
    if (mult < 1.0) throw ConfigError("density multiplier must be >= 1");
    int extra = static_cast<int>(std::lround((mult - 1.0) * g.edges.size()));
    std::vector<double> vals;
    for (int tr = 0; tr < trials; ++tr) {
      AttributedGraph h = split_labels(g, density_label_rate, 0, 0, seed + tr);
      if (extra > 0) h = add_random_edges(std::move(h), extra, seed + 1000003ULL * (tr + 1));
      vals.push_back(uninvolved_rate(h, hops));
    }
    auto [m, s] = mean_std(vals);
    rows.push_back({"density", mult, m, s});
  }
  return rows;
}

AttributedGraph generate_planted_partition(const PlantedPartitionConfig& cfg) {
  if (cfg.p_out < 0 || cfg.p_out >= cfg.p_in || cfg.p_in > 1)
    throw ConfigError("require 0 <= p_out < p_in <= 1");
  if (cfg.feature_dim < cfg.num_classes)
    throw ConfigError("feature_dim must be >= num_classes for one-hot centroids");
  AttributedGraph g;
  g.num_nodes = cfg.num_nodes;
  g.num_classes = cfg.num_classes;
  g.labels.resize(cfg.num_nodes);
  for (int i = 0; i < cfg.num_nodes; ++i) g.labels[i] = i % cfg.num_classes;
  Rng rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  g.features = Mat(cfg.num_nodes, cfg.feature_dim);
  for (int i = 0; i < cfg.num_nodes; ++i) {
    g.features(i, g.labels[i]) = 1.0;
    for (int c = 0; c < cfg.feature_dim; ++c)
      g.features(i, c) += cfg.feature_noise * noise(rng);
  }
  // Homophily within each block: the per-pair edge probability is modulated
  // by feature similarity, normalized so the expected intra-class density
  // stays p_in and inter-class density stays p_out. Similar nodes are then
  // genuinely more likely to connect, which is what lets a feature-based
  // link predictor separate organic edges from uniformly injected ones.
  const double kHomophilySharpness = 16.0;
  auto sq_dist = [&](int u, int v) {
    double d2 = 0.0;
    for (int c = 0; c < cfg.feature_dim; ++c) {
      double d = g.features(u, c) - g.features(v, c);
      d2 += d * d;
    }
    return d2;
  };
  // Scale distances by each group's own mean squared distance so both groups
  // get an O(1) similarity spread; a single global scale would drive every
  // inter-class similarity to zero once the classes are well separated.
  double tau_intra = 0.0, tau_inter = 0.0;
  long n_intra = 0, n_inter = 0;
  for (int u = 0; u < cfg.num_nodes; ++u)
    for (int v = u + 1; v < cfg.num_nodes; ++v) {
      if (g.labels[u] == g.labels[v]) {
        tau_intra += sq_dist(u, v);
        ++n_intra;
      } else {
        tau_inter += sq_dist(u, v);
        ++n_inter;
      }
    }
  tau_intra = n_intra > 0 ? tau_intra / n_intra : 1.0;
  tau_inter = n_inter > 0 ? tau_inter / n_inter : 1.0;
  if (tau_intra <= 0.0) tau_intra = 1.0;  // feature_noise = 0: all equal
  if (tau_inter <= 0.0) tau_inter = 1.0;

  std::vector<double> sim(static_cast<size_t>(cfg.num_nodes) * cfg.num_nodes, 0.0);
  for (int u = 0; u < cfg.num_nodes; ++u)
    for (int v = u + 1; v < cfg.num_nodes; ++v) {
      double tau = g.labels[u] == g.labels[v] ? tau_intra : tau_inter;
      sim[static_cast<size_t>(u) * cfg.num_nodes + v] =
          std::exp(-kHomophilySharpness * sq_dist(u, v) / tau);
    }
  // Per group, find the multiplier m such that mean(min(1, m * s)) equals the
  // target density; plain mean-normalization undershoots once clamping kicks
  // in, which would bias |E| low. Bisection over m is monotone and exact.
  auto solve_multiplier = [&](bool same_class, double target) {
    if (target <= 0.0) return 0.0;
    auto realized = [&](double m) {
      double total = 0.0;
      long count = 0;
      for (int u = 0; u < cfg.num_nodes; ++u)
        for (int v = u + 1; v < cfg.num_nodes; ++v) {
          if ((g.labels[u] == g.labels[v]) != same_class) continue;
          total += std::min(1.0, m * sim[static_cast<size_t>(u) * cfg.num_nodes + v]);
          ++count;
        }
      return count > 0 ? total / count : 0.0;
    };
    double lo = 0.0, hi = 1.0;
    while (realized(hi) < target && hi < 1e18) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (realized(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double m_intra = solve_multiplier(true, cfg.p_in);
  double m_inter = solve_multiplier(false, cfg.p_out);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int u = 0; u < cfg.num_nodes; ++u)
    for (int v = u + 1; v < cfg.num_nodes; ++v) {
      bool same = g.labels[u] == g.labels[v];
      double m = same ? m_intra : m_inter;
      double p = std::min(1.0, m * sim[static_cast<size_t>(u) * cfg.num_nodes + v]);
      if (unif(rng) < p) g.edges.emplace_back(u, v);
    }
  g.train_mask.assign(g.num_nodes, 0);
  g.val_mask.assign(g.num_nodes, 0);
  g.test_mask.assign(g.num_nodes, 0);
  g.validate();
  return g;
}

}  // namespace rsgnn
