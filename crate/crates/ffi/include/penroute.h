#ifndef PENROUTE_H
#define PENROUTE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  PR_STATUS_NULL_POINTER = 1,
  PR_STATUS_INVALID_UTF8 = 2,
  PR_STATUS_PARSE = 3,
  PR_STATUS_INVALID_ARGUMENT = 4,
  PR_STATUS_TOO_LARGE = 5,
  PR_STATUS_IO = 6,
  PR_STATUS_PANIC = 7,
  PR_STATUS_OTHER = 8,
} PrStatus;

// A parsed instance together with its constraints.
typedef struct PrInstance PrInstance;

// A solved tour.
typedef struct PrSolution PrSolution;

// Search settings. Zero in `time_limit_ms` or `runs` means unset; with
// both unset a single run is made.
typedef struct PrConfig {
  uint32_t max_candidates;
  uint32_t max_trials_factor;
  uint64_t penalty_multiplier;
  uint64_t time_limit_ms;
  uint32_t runs;
  uint64_t seed;
  // 3 for 3-opt moves only, 34 for 3-opt and 4-opt.
  uint32_t move_type;
} PrConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *pr_last_error(void);

// Defaults matching the command-line solver.
struct PrConfig pr_config_default(void);

// Parses an instance in the extended TSPLIB format.
//
// # Safety
// `text` must be a nul-terminated string; `out` must be writable.
enum PrStatus pr_instance_parse(const char *text, struct PrInstance **out);

// Builds an unconstrained instance from a row-major `n × n` matrix. Stop 0
// is the depot.
//
// # Safety
// `weights` must point to `n * n` values; `out` must be writable.
enum PrStatus pr_instance_from_matrix(uintptr_t n, const int64_t *weights, struct PrInstance **out);

// Number of stops, 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
uintptr_t pr_instance_dimension(const struct PrInstance *inst);

// # Safety
// `inst` must be null or a handle not yet freed.
void pr_instance_free(struct PrInstance *inst);

// Solves `inst`. A null `config` means [`pr_config_default`].
//
// # Safety
// `inst` must be a live handle, `config` null or valid, `out` writable.
enum PrStatus pr_solve(const struct PrInstance *inst,
                       const struct PrConfig *config,
                       struct PrSolution **out);

// Tour length under the original travel times.
//
// # Safety
// `sol` must be null or a live handle.
int64_t pr_solution_length(const struct PrSolution *sol);

// Total penalty.
//
// # Safety
// `sol` must be null or a live handle.
uint64_t pr_solution_penalty(const struct PrSolution *sol);

// Copies up to `cap` stop indices (0-based, depot first) into `buf` and
// returns the tour's full stop count. Pass a null `buf` to query the size.
//
// # Safety
// `sol` must be null or a live handle; `buf` null or valid for `cap` writes.
uintptr_t pr_solution_stops(const struct PrSolution *sol, uintptr_t *buf, uintptr_t cap);

// # Safety
// `sol` must be null or a handle not yet freed.
void pr_solution_free(struct PrSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PENROUTE_H */
