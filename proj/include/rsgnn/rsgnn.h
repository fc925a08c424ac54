/* C API for the RS-GNN library: robust semi-supervised node classification
 * on noisy graphs via a jointly learned denoised/densified graph structure.
 *
 * All functions return RSGNN_OK on success; on failure the error message is
 * available from rsgnn_last_error() (thread-local). Handles are opaque and
 * must be released with their matching _free function.
 */
#ifndef RSGNN_H
#define RSGNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  RSGNN_OK = 0,
  RSGNN_ERR_CONFIG = 1,  /* invalid parameters / spec */
  RSGNN_ERR_IO = 2,      /* file missing or malformed */
  RSGNN_ERR_NUMERIC = 3, /* NaN / divergence during training */
  RSGNN_ERR_SHAPE = 4,   /* dimension mismatch */
  RSGNN_ERR_UNKNOWN = 5
} rsgnn_status;

const char* rsgnn_last_error(void);

typedef struct rsgnn_graph rsgnn_graph;

/* Canonical node/edge files; pass NULL sidecar to start with empty masks. */
rsgnn_status rsgnn_graph_load(const char* node_file, const char* edge_file,
                              const char* sidecar_json, rsgnn_graph** out);
/* Citation-dataset .content / .cites layout. */
rsgnn_status rsgnn_graph_load_cora(const char* content_file, const char* cites_file,
                                   rsgnn_graph** out);
/* Synthetic planted-partition generator; params_json keys: num_nodes,
 * num_classes, p_in, p_out, feature_dim, feature_noise, seed. */
rsgnn_status rsgnn_graph_generate(const char* params_json, rsgnn_graph** out);

rsgnn_status rsgnn_graph_split_labels(rsgnn_graph* g, double label_rate, int val_size,
                                      int test_size, uint64_t seed);
rsgnn_status rsgnn_graph_inject_noise(rsgnn_graph* g, double ptb_rate, double add_fraction,
                                      uint64_t seed);
rsgnn_status rsgnn_graph_save(const rsgnn_graph* g, const char* node_file,
                              const char* edge_file, const char* sidecar_json);

int rsgnn_graph_num_nodes(const rsgnn_graph* g);
int rsgnn_graph_num_edges(const rsgnn_graph* g);
int rsgnn_graph_feature_dim(const rsgnn_graph* g);
int rsgnn_graph_num_classes(const rsgnn_graph* g);
int rsgnn_graph_num_train(const rsgnn_graph* g);
/* Fraction of nodes beyond `hops` BFS steps from every labeled node;
 * negative on error. */
double rsgnn_graph_uninvolved_rate(const rsgnn_graph* g, int hops);

void rsgnn_graph_free(rsgnn_graph* g);

/* One-stop dataset preparation matching the `prepare` CLI subcommand;
 * spec_json keys mirror the CLI flags (see README). Writes
 * <out_prefix>.nodes/.edges/.json; summary_json (optional, may be NULL)
 * receives a JSON summary, caller frees with rsgnn_string_free. */
rsgnn_status rsgnn_prepare(const char* spec_json, char** summary_json);

/* Executes a full experiment (grid x variants x seeds) and writes per-run
 * directories plus aggregate.csv. spec_json matches the `run` subcommand.
 * If out_failed is non-NULL it receives the number of failed runs; the total
 * run count goes to out_total. */
rsgnn_status rsgnn_run_experiment(const char* spec_json, int* out_total, int* out_failed);

/* Single training run into run_dir; config_json holds TrainConfig fields.
 * out_test_acc may be NULL. */
rsgnn_status rsgnn_train_single(const rsgnn_graph* g, const char* config_json,
                                const char* run_dir, double* out_test_acc);

/* Weight-distribution histogram for a finished run directory. out_auc may be
 * NULL; it is NaN when no noise record is present. Returns RSGNN_OK with a
 * pooled-only histogram when noise metadata is missing. */
rsgnn_status rsgnn_weight_report(const char* run_dir, const char* out_csv, double* out_auc);

/* Involvement-rate curves; spec_json matches the `involvement` subcommand. */
rsgnn_status rsgnn_involvement_report(const char* spec_json);

void rsgnn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* RSGNN_H */
