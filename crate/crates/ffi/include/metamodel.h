#ifndef METAMODEL_H
#define METAMODEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MmStatus {
  MM_STATUS_OK = 0,
  MM_STATUS_NULL_POINTER = 1,
  MM_STATUS_INVALID_UTF8 = 2,
  MM_STATUS_INVALID_ARGUMENT = 3,
  MM_STATUS_PARSE_ERROR = 4,
  MM_STATUS_MODEL_ERROR = 5,
  MM_STATUS_TOOLCHAIN_ERROR = 6,
  MM_STATUS_PANIC = 7,
} MmStatus;

/**
 * Opaque handle to a metastable system.
 */
typedef struct MmSystem MmSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty when none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *mm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mm_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mm_string_free(char *s);

/**
 * Build an elementary cellular automaton on a ring from a rule number
 * (0..=255) and a `0`/`1` initial state.
 *
 * # Safety
 * `init` must be a NUL-terminated string; `out` must be writable.
 */
enum MmStatus mm_ca_system_new(uint32_t rule_number, const char *init, struct MmSystem **out);

/**
 * Build a system from an AMP document.
 *
 * # Safety
 * `amp` must be a NUL-terminated string; `out` must be writable.
 */
enum MmStatus mm_system_from_amp(const char *amp, struct MmSystem **out);

/**
 * Release a system. Null is ignored.
 *
 * # Safety
 * `system` must come from this library and not have been freed.
 */
void mm_system_free(struct MmSystem *system);

/**
 * Advance the system by `steps` time steps.
 *
 * # Safety
 * `system` must be a live handle.
 */
enum MmStatus mm_system_step(struct MmSystem *system, uint64_t steps);

/**
 * Current time step.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_system_time(const struct MmSystem *system, uint64_t *out);

/**
 * Number of entities.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_system_size(const struct MmSystem *system, size_t *out);

/**
 * Current state as a trajectory line.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_system_state(const struct MmSystem *system, char **out);

/**
 * AMP document of the system run for `steps` steps from its initial state.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_system_emit_amp(const struct MmSystem *system, uint64_t steps, char **out);

/**
 * C program printing the trajectory of the system over `steps` steps.
 *
 * # Safety
 * `system` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_system_generate_c(const struct MmSystem *system, uint64_t steps, char **out);

/**
 * Fraction of positions at which two `0`/`1` states agree.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` must be writable.
 */
enum MmStatus mm_match_score(const char *a, const char *b, double *out);

/**
 * Seeded random rule search on a ring. `out_rule` receives the solution or
 * -1 when the budget ran out; `out_attempts` the attempts made.
 *
 * # Safety
 * `init` and `target` must be NUL-terminated strings; outputs must be writable.
 */
enum MmStatus mm_ca_search(const char *init,
                           const char *target,
                           uint64_t steps,
                           uint64_t budget,
                           uint64_t seed,
                           int32_t *out_rule,
                           uint64_t *out_attempts);

/**
 * Every rule mapping `init` to `target` in `steps` steps, ascending.
 * `out_rules` needs room for 256 entries.
 *
 * # Safety
 * `init` and `target` must be NUL-terminated strings; `out_rules` must hold
 * 256 bytes; `out_count` must be writable.
 */
enum MmStatus mm_ca_enumerate(const char *init,
                              const char *target,
                              uint64_t steps,
                              uint8_t *out_rules,
                              size_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METAMODEL_H */
