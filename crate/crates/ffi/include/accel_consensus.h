#ifndef ACCEL_CONSENSUS_H
#define ACCEL_CONSENSUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum AcStatus {
  AC_STATUS_OK = 0,
  AC_STATUS_NULL_POINTER = 1,
  AC_STATUS_INVALID_SIZE = 2,
  AC_STATUS_INVALID_PARAMETER = 3,
  AC_STATUS_DISCONNECTED = 4,
  AC_STATUS_SHAPE_MISMATCH = 5,
  AC_STATUS_FAILED = 6,
  AC_STATUS_PANIC = 7,
} AcStatus;

/**
 * A running accelerated consensus instance bound to one graph.
 */
typedef struct AcConsensus AcConsensus;

/**
 * An undirected connected or disconnected graph.
 */
typedef struct AcGraph AcGraph;

/**
 * Outcome of a consensus run.
 */
typedef struct AcConsensusSummary {
  size_t rounds;
  bool converged;
  /**
   * Largest `actual - bound` over all rounds; nonpositive when the
   * decay guarantee held.
   */
  double worst_bound_excess;
} AcConsensusSummary;

/**
 * Outcome of a distributed median run.
 */
typedef struct AcMedianSummary {
  double step_size;
  double dispersion;
  double dispersion_bound;
  double error;
  double error_bound;
} AcMedianSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ac_last_error_message(void);

/**
 * Path on nodes `0..n`.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_line(size_t n, struct AcGraph **out);

/**
 * Clique on the first `n/2` nodes with a path hanging off it; `n` even.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_lollipop(size_t n, struct AcGraph **out);

/**
 * `k x k` grid.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_grid(size_t k, struct AcGraph **out);

/**
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_complete(size_t n, struct AcGraph **out);

/**
 * Star centered on node 0.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_star(size_t n, struct AcGraph **out);

/**
 * Random geometric graph in the unit square with connection radius
 * `radius`. The result may be disconnected.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_geometric(size_t n, double radius, uint64_t seed, struct AcGraph **out);

/**
 * Connected Erdos-Renyi graph with edge probability `p`.
 *
 * # Safety
 * `out` must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_random(size_t n, double p, uint64_t seed, struct AcGraph **out);

/**
 * Graph from `edge_count` pairs stored flat in `endpoints`
 * (`2 * edge_count` zero-based node ids).
 *
 * # Safety
 * `endpoints` must point to `2 * edge_count` readable values and `out`
 * must be null or valid for a pointer write.
 */
enum AcStatus ac_graph_from_edges(size_t n,
                                  const size_t *endpoints,
                                  size_t edge_count,
                                  struct AcGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from a graph constructor, not yet freed.
 */
void ac_graph_free(struct AcGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; `nodes` and `edges` null or writable.
 */
enum AcStatus ac_graph_size(const struct AcGraph *g, size_t *nodes, size_t *edges);

/**
 * # Safety
 * `g` must be a live graph handle and `out` writable.
 */
enum AcStatus ac_graph_is_connected(const struct AcGraph *g, bool *out);

/**
 * Second largest eigenvalue of the lazy Metropolis matrix of `g`.
 *
 * # Safety
 * `g` must be a live graph handle and `out` writable.
 */
enum AcStatus ac_graph_lambda2(const struct AcGraph *g, double *out);

/**
 * Runs accelerated consensus from `x1` (length = node count) with size
 * bound `u` until the max-norm deviation of `x` from the average is below
 * `eps`. That final `x` is copied to `final_values` when it is not null.
 *
 * # Safety
 * `g` must be a live graph handle, `x1` readable for `len` values,
 * `final_values` null or writable for `len` values, `summary` writable.
 */
enum AcStatus ac_run_consensus(const struct AcGraph *g,
                               const double *x1,
                               size_t len,
                               double u,
                               double eps,
                               size_t max_iter,
                               double *final_values,
                               struct AcConsensusSummary *summary);

/**
 * Starts a step-by-step consensus instance at `x1`.
 *
 * # Safety
 * `g` must be a live graph handle, `x1` readable for `len` values and
 * `out` writable. The instance does not borrow `g`.
 */
enum AcStatus ac_consensus_new(const struct AcGraph *g,
                               const double *x1,
                               size_t len,
                               double u,
                               struct AcConsensus **out);

/**
 * Advances the instance by `rounds` rounds.
 *
 * # Safety
 * `c` must be a live consensus handle.
 */
enum AcStatus ac_consensus_step(struct AcConsensus *c, size_t rounds);

/**
 * Current round index (1 before any step) and the averaged iterate `y`.
 *
 * # Safety
 * `c` must be a live consensus handle; `round` null or writable;
 * `values` null or writable for `len` values, `len` equal to the node count.
 */
enum AcStatus ac_consensus_values(const struct AcConsensus *c,
                                  size_t *round,
                                  double *values,
                                  size_t len);

/**
 * # Safety
 * `c` must be null or a handle from `ac_consensus_new`, not yet freed.
 */
void ac_consensus_free(struct AcConsensus *c);

/**
 * Distributed median of `targets`: node `i` holds `|theta - targets[i]|`
 * and starts at `start[i]`. Runs `rounds` rounds with size bound `u`; the
 * averaged estimates go to `estimates` when it is not null.
 *
 * # Safety
 * `g` must be a live graph handle, `targets` and `start` readable for
 * `len` values, `estimates` null or writable for `len` values and
 * `summary` writable.
 */
enum AcStatus ac_run_median(const struct AcGraph *g,
                            const double *targets,
                            const double *start,
                            size_t len,
                            double u,
                            size_t rounds,
                            double *estimates,
                            struct AcMedianSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCEL_CONSENSUS_H */
