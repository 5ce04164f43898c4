#ifndef CROSSWALK_H
#define CROSSWALK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define CW_METHOD_DEEPWALK 0

#define CW_METHOD_FAIRWALK 1

#define CW_METHOD_CROSSWALK 2

// Result code of every fallible call.
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_IO = 3,
  CW_STATUS_PARSE = 4,
  CW_STATUS_VALIDATION = 5,
  CW_STATUS_GUARD_EXCEEDED = 6,
  CW_STATUS_OUT_OF_RANGE = 7,
  CW_STATUS_BUFFER_TOO_SMALL = 8,
  CW_STATUS_INTERNAL = 9,
} CwStatus;

// Random-walk corpus.
typedef struct CwCorpus CwCorpus;

// Node embedding matrix.
typedef struct CwEmbedding CwEmbedding;

// A graph with its node names and, optionally, group labels.
typedef struct CwGraph CwGraph;

typedef struct CwWalkParams {
  size_t walks_per_node;
  size_t walk_length;
  // Node2Vec return parameter; used when `second_order` is nonzero.
  double return_param;
  double inout_param;
  uint8_t second_order;
  uint64_t seed;
} CwWalkParams;

typedef struct CwSgnsParams {
  size_t dim;
  size_t window;
  size_t negatives;
  size_t epochs;
  double learning_rate;
  uint64_t seed;
  // Nonzero for single-threaded, bit-reproducible training.
  uint8_t deterministic;
} CwSgnsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *cw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cw_version(void);

struct CwWalkParams cw_walk_params_default(void);

struct CwSgnsParams cw_sgns_params_default(void);

// Loads an edge list and, when `groups_path` is not NULL, a group file.
//
// # Safety
// `edges_path` and a non-NULL `groups_path` must be NUL-terminated strings;
// `out` must be writable.
enum CwStatus cw_graph_load(const char *edges_path,
                            const char *groups_path,
                            uint8_t directed,
                            struct CwGraph **out);

// Undirected stochastic block model. `inter_probs` has one entry per
// unordered group pair in the order (0,1), (0,2), ..., (1,2), ...
//
// # Safety
// `sizes` and `intra_probs` must hold `group_count` values, `inter_probs`
// `group_count * (group_count - 1) / 2`; `out` must be writable.
enum CwStatus cw_graph_sbm(const size_t *sizes,
                           const double *intra_probs,
                           const double *inter_probs,
                           size_t group_count,
                           uint64_t seed,
                           struct CwGraph **out);

// # Safety
// `graph` must be NULL or a live handle.
size_t cw_graph_node_count(const struct CwGraph *graph);

// Number of stored arcs (an undirected edge counts twice).
//
// # Safety
// `graph` must be NULL or a live handle.
size_t cw_graph_arc_count(const struct CwGraph *graph);

// Copies group labels into `out` (length `len` >= node count).
//
// # Safety
// `graph` must be a live handle and `out` must hold `len` values.
enum CwStatus cw_graph_groups(const struct CwGraph *graph, size_t *out, size_t len);

// Walk graph for one of the `CW_METHOD_*` methods. The result keeps the
// input's groups and is only accepted by walk generation, not by
// evaluation.
//
// # Safety
// `graph` must be a live handle with groups; `out` must be writable.
enum CwStatus cw_graph_reweight(const struct CwGraph *graph,
                                uint32_t method,
                                double alpha,
                                double p_exponent,
                                size_t walk_count_r,
                                size_t walk_length_d,
                                uint64_t seed,
                                struct CwGraph **out);

// Monte-Carlo proximity m(v) for every node into `out` (length `len`).
//
// # Safety
// `graph` must be a live handle with groups; `out` must hold `len` values.
enum CwStatus cw_proximity(const struct CwGraph *graph,
                           size_t walk_count_r,
                           size_t walk_length_d,
                           uint64_t seed,
                           double *out,
                           size_t len);

// # Safety
// `graph` must be NULL or a handle from this library, freed once.
void cw_graph_free(struct CwGraph *graph);

// # Safety
// `graph` and `params` must be valid; `out` must be writable.
enum CwStatus cw_walks_generate(const struct CwGraph *graph,
                                const struct CwWalkParams *params,
                                struct CwCorpus **out);

// Number of walks in the corpus.
//
// # Safety
// `corpus` must be NULL or a live handle.
size_t cw_corpus_len(const struct CwCorpus *corpus);

// Copies walk `index` into `out`; `*written` receives its length.
//
// # Safety
// `corpus` must be a live handle, `out` must hold `len` values and
// `written` must be writable.
enum CwStatus cw_corpus_walk(const struct CwCorpus *corpus,
                             size_t index,
                             size_t *out,
                             size_t len,
                             size_t *written);

// # Safety
// `corpus` must be NULL or a handle from this library, freed once.
void cw_corpus_free(struct CwCorpus *corpus);

// Trains skip-gram with negative sampling on the corpus.
//
// # Safety
// `corpus` and `params` must be valid; `out` must be writable.
enum CwStatus cw_embed(const struct CwCorpus *corpus,
                       const struct CwSgnsParams *params,
                       struct CwEmbedding **out);

// # Safety
// `emb` must be NULL or a live handle.
size_t cw_embedding_dim(const struct CwEmbedding *emb);

// # Safety
// `emb` must be NULL or a live handle.
size_t cw_embedding_node_count(const struct CwEmbedding *emb);

// Copies the vector of `node` into `out` (length `len` >= dim).
//
// # Safety
// `emb` must be a live handle and `out` must hold `len` values.
enum CwStatus cw_embedding_row(const struct CwEmbedding *emb, size_t node, double *out, size_t len);

// # Safety
// `emb` must be NULL or a handle from this library, freed once.
void cw_embedding_free(struct CwEmbedding *emb);

// k-medoids seed nodes into `out` (length `len` >= k), ascending;
// `*written` receives the count.
//
// # Safety
// `emb` must be a live handle, `out` must hold `len` values and
// `written` must be writable.
enum CwStatus cw_kmedoids(const struct CwEmbedding *emb,
                          size_t k,
                          size_t restarts,
                          uint64_t seed,
                          size_t *out,
                          size_t len,
                          size_t *written);

// Monte-Carlo IC influence of `seeds` with constant probability
// `ic_prob` on an original (not reweighted) graph. Writes the expected
// fraction of all nodes to `*total` and per-group fractions to
// `per_group` (length `groups_len` >= group count).
//
// # Safety
// `graph` must be a live handle with groups, `seeds` must hold
// `seed_count` values, `per_group` must hold `groups_len` values and
// `total` must be writable.
enum CwStatus cw_influence(const struct CwGraph *graph,
                           const size_t *seeds,
                           size_t seed_count,
                           double ic_prob,
                           size_t samples,
                           uint64_t seed,
                           double *total,
                           double *per_group,
                           size_t groups_len);

// Population variance of `scores`.
//
// # Safety
// `scores` must hold `len` values and `out` must be writable.
enum CwStatus cw_disparity(const double *scores, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSWALK_H */
