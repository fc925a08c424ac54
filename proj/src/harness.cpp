#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rsgnn {

namespace fs = std::filesystem;
using nlohmann::json;

static std::string fmt_g(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --- prepare ----------------------------------------------------------------

PrepareSummary run_prepare(const PrepareSpec& spec) {
  AttributedGraph g;
  if (spec.synthetic) {
    PlantedPartitionConfig c = spec.synth;
    c.seed = spec.seed;
    g = generate_planted_partition(c);
  } else if (!spec.cora_content.empty()) {
    g = load_cora(spec.cora_content, spec.cora_cites);
  } else if (!spec.node_file.empty()) {
    g = load_graph(spec.node_file, spec.edge_file);
  } else {
    throw ConfigError("prepare: no dataset source given");
  }
  g = split_labels(std::move(g), spec.label_rate, spec.val_size, spec.test_size, spec.seed + 1);
  if (spec.ptb_rate > 0.0) {
    auto [noisy, rec] = inject_random_noise(std::move(g), spec.ptb_rate, spec.add_fraction,
                                           spec.seed + 2);
    g = std::move(noisy);
  }
  if (spec.out_prefix.empty()) throw ConfigError("prepare: out_prefix required");
  save_graph(g, spec.out_prefix + ".nodes", spec.out_prefix + ".edges",
             spec.out_prefix + ".json");
  PrepareSummary s;
  s.num_nodes = g.num_nodes;
  s.num_edges = static_cast<int>(g.edges.size());
  s.feature_dim = g.feature_dim();
  s.num_classes = g.num_classes;
  s.num_train = static_cast<int>(g.mask_nodes(g.train_mask).size());
  return s;
}

AttributedGraph load_dataset(const std::string& prefix) {
  return load_graph_with_sidecar(prefix + ".nodes", prefix + ".edges", prefix + ".json");
}

// --- experiment spec JSON ---------------------------------------------------

template <typename T>
static std::vector<T> list_or_scalar(const json& j, const std::string& key,
                                     std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

ExperimentSpec experiment_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("experiment spec parse failure: " + std::string(e.what()));
  }
  ExperimentSpec s;
  s.dataset_prefix = j.at("dataset_prefix").get<std::string>();
  s.out_dir = j.at("out_dir").get<std::string>();
  s.seeds = list_or_scalar<uint64_t>(j, "seeds", s.seeds);
  s.variants = list_or_scalar<std::string>(j, "variants", s.variants);
  s.alphas = list_or_scalar<double>(j, "alpha", s.alphas);
  s.betas = list_or_scalar<double>(j, "beta", s.betas);
  s.sigmas = list_or_scalar<double>(j, "sigma", s.sigmas);
  s.qs = list_or_scalar<int>(j, "q", s.qs);
  s.ks = list_or_scalar<int>(j, "k", s.ks);
  s.t_ls = list_or_scalar<double>(j, "t_l", s.t_ls);
  s.t_hs = list_or_scalar<double>(j, "t_h", s.t_hs);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.max_epochs = j.value("max_epochs", s.max_epochs);
  s.patience = j.value("patience", s.patience);
  s.threads = j.value("threads", s.threads);
  if (s.seeds.empty()) throw ConfigError("experiment spec: seed list must be non-empty");
  for (const auto& v : s.variants) variant_from_string(v);
  return s;
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  json j;
  j["dataset_prefix"] = s.dataset_prefix;
  j["out_dir"] = s.out_dir;
  j["seeds"] = s.seeds;
  j["variants"] = s.variants;
  j["alpha"] = s.alphas;
  j["beta"] = s.betas;
  j["sigma"] = s.sigmas;
  j["q"] = s.qs;
  j["k"] = s.ks;
  j["t_l"] = s.t_ls;
  j["t_h"] = s.t_hs;
  j["learning_rate"] = s.learning_rate;
  j["max_epochs"] = s.max_epochs;
  j["patience"] = s.patience;
  j["threads"] = s.threads;
  return j.dump(2);
}

// --- run execution ----------------------------------------------------------

static std::string sanitize(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%g", v);
  std::string s = buf;
  for (char& c : s)
    if (c == '.' || c == '-' || c == '+') c = 'p';
  return s;
}

static std::string make_run_id(const TrainConfig& c) {
  std::ostringstream os;
  os << variant_to_string(c.variant) << "_a" << sanitize(c.alpha) << "_b" << sanitize(c.beta)
     << "_sg" << sanitize(c.sigma) << "_q" << c.q << "_k" << c.k << "_tl" << sanitize(c.t_l)
     << "_th" << sanitize(c.t_h) << "_seed" << c.seed;
  return os.str();
}

static json config_to_json(const TrainConfig& c) {
  json j;
  j["variant"] = variant_to_string(c.variant);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["sigma"] = c.sigma;
  j["q"] = c.q;
  j["k"] = c.k;
  j["t_l"] = c.t_l;
  j["t_h"] = c.t_h;
  j["learning_rate"] = c.learning_rate;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  return j;
}

void write_run_outputs(const std::string& dir_str, const TrainConfig& cfg,
                       const TrainResult& res, const AttributedGraph& g) {
  fs::path dir(dir_str);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "config.json");
    f << config_to_json(cfg).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "epochs.csv");
    f << "epoch,loss_gnn,loss_edge,loss_smooth,loss_total,train_acc,val_acc,test_acc\n";
    for (const auto& e : res.report.epochs)
      f << e.epoch << ',' << fmt_g(e.loss_gnn) << ',' << fmt_g(e.loss_edge) << ','
        << fmt_g(e.loss_smooth) << ',' << fmt_g(e.loss_total) << ',' << fmt_g(e.train_acc)
        << ',' << fmt_g(e.val_acc) << ',' << fmt_g(e.test_acc) << '\n';
  }
  save_learned_graph(res.learned, (dir / "learned_graph.tsv").string());
  {
    // predictor score per original edge, the basis of the weight report
    std::ofstream f(dir / "edge_scores.tsv");
    for (size_t ei = 0; ei < g.edges.size(); ++ei)
      f << g.edges[ei].first << '\t' << g.edges[ei].second << '\t'
        << fmt_g(res.edge_scores[ei]) << '\n';
  }
  {
    json n;
    if (g.noise) {
      n["perturbation_rate"] = g.noise->perturbation_rate;
      n["added_edges"] = g.noise->added_edges;
      n["removed_edges"] = g.noise->removed_edges;
    }
    n["original_edges"] = g.edges;
    std::ofstream f(dir / "noise.json");
    f << n.dump() << '\n';
  }
  {
    const RunReport& r = res.report;
    json j;
    j["config"] = config_to_json(cfg);
    j["best_epoch"] = r.best_epoch;
    j["best_val_acc"] = r.best_val_acc;
    j["final_test_acc"] = r.final_test_acc;
    j["final_train_acc"] = r.final_train_acc;
    j["epochs_run"] = r.epochs.size();
    j["uninvolved_before"] = r.uninvolved_before;
    j["uninvolved_after"] = r.uninvolved_after;
    json w;
    w["has_noise_record"] = r.weights.has_noise_record;
    w["mean_clean"] = r.weights.mean_clean;
    w["mean_noisy"] = r.weights.mean_noisy;
    w["mean_densified"] = r.weights.mean_densified;
    w["clean_original"] = r.weights.clean_original;
    w["noisy_original"] = r.weights.noisy_original;
    w["densified"] = r.weights.densified;
    j["weights"] = w;
    std::ofstream f(dir / "report.json");
    f << j.dump(2) << '\n';
  }
}

static int worker_count(const ExperimentSpec& spec) {
  if (spec.threads > 0) return spec.threads;
  if (const char* env = std::getenv("RSGNN_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec) {
  AttributedGraph g = load_dataset(spec.dataset_prefix);
  std::vector<TrainConfig> configs;
  for (const auto& variant : spec.variants)
    for (double alpha : spec.alphas)
      for (double beta : spec.betas)
        for (double sigma : spec.sigmas)
          for (int q : spec.qs)
            for (int k : spec.ks)
              for (double t_l : spec.t_ls)
                for (double t_h : spec.t_hs)
                  for (uint64_t seed : spec.seeds) {
                    TrainConfig c;
                    c.variant = variant_from_string(variant);
                    c.alpha = alpha;
                    c.beta = beta;
                    c.sigma = sigma;
                    c.q = q;
                    c.k = k;
                    c.t_l = t_l;
                    c.t_h = t_h;
                    c.learning_rate = spec.learning_rate;
                    c.max_epochs = spec.max_epochs;
                    c.patience = spec.patience;
                    c.seed = seed;
                    c.validate();
                    configs.push_back(c);
                  }

  std::vector<RunOutcome> outcomes(configs.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      const TrainConfig& cfg = configs[i];
      RunOutcome& out = outcomes[i];
      out.run_id = make_run_id(cfg);
      out.config = cfg;
      try {
        TrainResult res = train(g, cfg);
        write_run_outputs((fs::path(spec.out_dir) / out.run_id).string(), cfg, res, g);
        out.test_acc = res.report.final_test_acc;
        out.val_acc = res.report.best_val_acc;
      } catch (const std::exception& e) {
        out.failed = true;
        out.failure_reason = e.what();
      }
    }
  };
  int n_workers = std::min<int>(worker_count(spec), static_cast<int>(configs.size()));
  std::vector<std::thread> workers;
  for (int w = 0; w < std::max(1, n_workers); ++w) workers.emplace_back(work);
  for (auto& w : workers) w.join();

  // aggregate mean +/- std per (variant, hyperparameter setting) across seeds
  fs::create_directories(spec.out_dir);
  std::ofstream agg(fs::path(spec.out_dir) / "aggregate.csv");
  agg << "variant,alpha,beta,sigma,q,k,t_l,t_h,n_runs,n_failed,mean_test_acc,std_test_acc\n";
  std::map<std::string, std::vector<const RunOutcome*>> groups;
  std::vector<std::string> order;
  for (const auto& o : outcomes) {
    std::ostringstream key;
    const TrainConfig& c = o.config;
    key << variant_to_string(c.variant) << ',' << fmt_g(c.alpha) << ',' << fmt_g(c.beta) << ','
        << fmt_g(c.sigma) << ',' << c.q << ',' << c.k << ',' << fmt_g(c.t_l) << ','
        << fmt_g(c.t_h);
    if (!groups.count(key.str())) order.push_back(key.str());
    groups[key.str()].push_back(&o);
  }
  for (const auto& key : order) {
    const auto& runs = groups[key];
    std::vector<double> accs;
    int failed = 0;
    for (const auto* r : runs) {
      if (r->failed)
        ++failed;
      else
        accs.push_back(r->test_acc);
    }
    double mean = 0, sd = 0;
    if (!accs.empty()) {
      for (double a : accs) mean += a;
      mean /= accs.size();
      for (double a : accs) sd += (a - mean) * (a - mean);
      sd = accs.size() > 1 ? std::sqrt(sd / (accs.size() - 1)) : 0.0;
    }
    agg << key << ',' << runs.size() << ',' << failed << ',' << fmt_g(mean) << ',' << fmt_g(sd)
        << '\n';
  }
  return outcomes;
}

// --- weight report ----------------------------------------------------------

bool run_weight_report(const std::string& run_dir, const std::string& out_csv, double* auc_out) {
  fs::path dir(run_dir);
  LearnedGraph lg = load_learned_graph((dir / "learned_graph.tsv").string());

  AttributedGraph g;  // only edges/noise matter here
  bool have_noise = false;
  std::ifstream nf(dir / "noise.json");
  if (nf) {
    json n;
    nf >> n;
    g.edges = n.at("original_edges").get<EdgeList>();
    for (auto [u, v] : g.edges) g.num_nodes = std::max(g.num_nodes, std::max(u, v) + 1);
    if (n.contains("added_edges")) {
      NoiseRecord rec;
      rec.perturbation_rate = n.value("perturbation_rate", 0.0);
      rec.added_edges = n.at("added_edges").get<EdgeList>();
      rec.removed_edges = n.at("removed_edges").get<EdgeList>();
      g.noise = std::move(rec);
      have_noise = !g.noise->added_edges.empty();
    }
  } else {
    // no noise metadata: pool every learned entry as "original"
    for (const auto& e : lg.s.entries)
      if (e.i != e.j) g.edges.emplace_back(e.i, e.j);
    std::sort(g.edges.begin(), g.edges.end());
  }
  g.num_nodes = std::max(g.num_nodes, lg.s.num_nodes);

  // per-edge predictor scores; fall back to learned-graph lookup (dropped
  // edges scoring 0) for run directories predating the scores file
  std::map<std::pair<int, int>, double> scored;
  std::ifstream sf(dir / "edge_scores.tsv");
  if (sf) {
    int u, v;
    double w;
    while (sf >> u >> v >> w) scored[{u, v}] = w;
  } else {
    for (const auto& e : lg.s.entries) scored[{e.i, e.j}] = e.w;
  }
  std::vector<double> scores;
  scores.reserve(g.edges.size());
  for (auto e : g.edges) {
    auto it = scored.find(e);
    scores.push_back(it == scored.end() ? 0.0 : it->second);
  }

  WeightHistogram h = weight_histogram(lg, g, scores);
  double auc = 0.0;
  bool have_auc = weight_separation_auc(scores, g, &auc);
  if (auc_out) *auc_out = have_auc ? auc : std::nan("");

  std::ofstream f(out_csv);
  if (!f) throw IoError("cannot write histogram csv: " + out_csv);
  f << "bin_low,bin_high,clean_original,noisy_original,densified\n";
  for (int b = 0; b < 20; ++b)
    f << fmt_g(b / 20.0) << ',' << fmt_g((b + 1) / 20.0) << ',' << h.clean_original[b] << ','
      << h.noisy_original[b] << ',' << h.densified[b] << '\n';
  f << "# mean_clean," << fmt_g(h.mean_clean) << '\n';
  f << "# mean_noisy," << fmt_g(h.mean_noisy) << '\n';
  f << "# mean_densified," << fmt_g(h.mean_densified) << '\n';
  f << "# auc," << (have_auc ? fmt_g(auc) : std::string("null")) << '\n';
  return have_noise;
}

// --- involvement ------------------------------------------------------------

std::vector<InvolvementRow> run_involvement(const InvolvementSpec& spec) {
  AttributedGraph g = load_dataset(spec.dataset_prefix);
  auto rows = involvement_sweep(g, spec.label_rates, spec.densities, spec.hops, spec.trials,
                                spec.seed);
  if (!spec.out_csv.empty()) {
    std::ofstream f(spec.out_csv);
    if (!f) throw IoError("cannot write involvement csv: " + spec.out_csv);
    f << "axis,setting,mean,std\n";
    for (const auto& r : rows)
      f << r.axis << ',' << fmt_g(r.setting) << ',' << fmt_g(r.mean) << ',' << fmt_g(r.stddev)
        << '\n';
  }
  return rows;
}

}  // namespace rsgnn
