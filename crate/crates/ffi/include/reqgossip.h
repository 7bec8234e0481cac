#ifndef REQGOSSIP_H
#define REQGOSSIP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RgStatus {
  RG_STATUS_OK = 0,
  RG_STATUS_NULL_POINTER = 1,
  RG_STATUS_INVALID_ARGUMENT = 2,
  RG_STATUS_INVALID_GRAPH = 3,
  RG_STATUS_INVALID_UTF8 = 4,
  /**
   * The library panicked; the handle involved should be freed.
   */
  RG_STATUS_INTERNAL = 5,
} RgStatus;

/**
 * Why `rg_sim_run` stopped.
 */
typedef enum RgStopReason {
  RG_STOP_REASON_CONSENSUS = 0,
  RG_STOP_REASON_RATIO = 1,
  RG_STOP_REASON_BUDGET = 2,
} RgStopReason;

/**
 * Opaque allowable graph.
 */
typedef struct RgGraph RgGraph;

/**
 * Opaque simulation state with its trace.
 */
typedef struct RgSim RgSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *rg_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rg_string_free(char *s);

/**
 * Builds a connected graph on labels `1..=n` from `edge_count` pairs stored
 * flat in `edges` (`2 * edge_count` labels).
 *
 * # Safety
 * `edges` must point to `2 * edge_count` readable values; `out` must be writable.
 */
enum RgStatus rg_graph_new(size_t n, const size_t *edges, size_t edge_count, struct RgGraph **out);

/**
 * Generates a graph from `KIND,n[,p]` (for example `"random-connected,8,0.4"`).
 *
 * # Safety
 * `spec` must be a nul-terminated string; `out` must be writable.
 */
enum RgStatus rg_graph_generate(const char *spec, uint64_t seed, struct RgGraph **out);

/**
 * # Safety
 * `g` must come from `rg_graph_new`/`rg_graph_generate` and not have been freed.
 */
void rg_graph_free(struct RgGraph *g);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
size_t rg_graph_vertex_count(const struct RgGraph *g);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
size_t rg_graph_edge_count(const struct RgGraph *g);

/**
 * Graph as `{"n": .., "edges": [[u, v], ..]}`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum RgStatus rg_graph_json(const struct RgGraph *g, char **out);

/**
 * Starts a simulation with integer initial values (`n` of them). The graph
 * is copied. `queue_seed < 0` selects ascending queues, otherwise queues are
 * shuffled with that seed.
 *
 * # Safety
 * `g` must be live, `values` must hold `n` readable values, `out` writable.
 */
enum RgStatus rg_sim_new(const struct RgGraph *g,
                         uint8_t protocol,
                         const int64_t *values,
                         size_t n,
                         int64_t queue_seed,
                         struct RgSim **out);

/**
 * As [`rg_sim_new`] with values given as `"num/den"` or integer strings.
 *
 * # Safety
 * `values` must hold `n` nul-terminated strings.
 */
enum RgStatus rg_sim_new_rational(const struct RgGraph *g,
                                  uint8_t protocol,
                                  const char *const *values,
                                  size_t n,
                                  int64_t queue_seed,
                                  struct RgSim **out);

/**
 * # Safety
 * `s` must come from `rg_sim_new*` and not have been freed.
 */
void rg_sim_free(struct RgSim *s);

/**
 * Executes one iteration; `gossips` (nullable) receives its gossip count.
 *
 * # Safety
 * `s` must be live; `gossips` null or writable.
 */
enum RgStatus rg_sim_step(struct RgSim *s, size_t *gossips);

/**
 * Runs up to `max_iters` iterations, stopping early at consensus or once the
 * complete-graph indicator drops below `stop_ratio` (`"P/Q"`, nullable)
 * times its initial value.
 *
 * # Safety
 * `s` must be live; `stop_ratio` null or a nul-terminated string; `reason` null or writable.
 */
enum RgStatus rg_sim_run(struct RgSim *s,
                         size_t max_iters,
                         const char *stop_ratio,
                         enum RgStopReason *reason);

/**
 * Iterations executed so far, or 0 for a null handle.
 *
 * # Safety
 * `s` must be a live handle or null.
 */
size_t rg_sim_iterations(const struct RgSim *s);

/**
 * Writes the current values as floats into `buf` (`len` must equal `n`).
 *
 * # Safety
 * `buf` must hold `len` writable doubles.
 */
enum RgStatus rg_sim_values(const struct RgSim *s, double *buf, size_t len);

/**
 * Exact current value of `agent` (1-based) as `"num/den"`.
 *
 * # Safety
 * `s` must be live; `out` writable.
 */
enum RgStatus rg_sim_value_string(const struct RgSim *s, size_t agent, char **out);

/**
 * Complete-graph indicator `Σ_{i<j} |x_i - x_j|` of the current values, as
 * a float and (nullable `exact`) as `"num/den"`.
 *
 * # Safety
 * `s` must be live; `value` writable; `exact` null or writable.
 */
enum RgStatus rg_sim_indicator(const struct RgSim *s, double *value, char **exact);

/**
 * The trace so far, one JSON record per line.
 *
 * # Safety
 * `s` must be live; `out` writable.
 */
enum RgStatus rg_sim_trace_jsonl(const struct RgSim *s, char **out);

/**
 * Checks a named claim (for example `"lemma_pizza"`) on the trace so far.
 * `pass` receives the verdict; `report` (nullable) the JSON report.
 *
 * # Safety
 * `s` must be live; `claim` nul-terminated; `pass` writable; `report` null or writable.
 */
enum RgStatus rg_sim_verify(const struct RgSim *s, const char *claim, bool *pass, char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REQGOSSIP_H */
