#ifndef KDGRAPH_H
#define KDGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KdgStatus {
  KDG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KDG_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  KDG_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument value was not recognized (pattern, confidence level).
   */
  KDG_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The fact text did not parse.
   */
  KDG_STATUS_PARSE = 4,
  /**
   * A superclass, structural or subevent cycle.
   */
  KDG_STATUS_CYCLE = 5,
  /**
   * A named node is not in the graph.
   */
  KDG_STATUS_UNKNOWN_NODE = 6,
  /**
   * The input was rejected for another reason.
   */
  KDG_STATUS_REJECTED = 7,
  /**
   * The call needs `kdg_analyze` to have succeeded first.
   */
  KDG_STATUS_NOT_ANALYZED = 8,
  /**
   * The engine panicked; the session should be freed.
   */
  KDG_STATUS_PANIC = 9,
} KdgStatus;

/**
 * Opaque session handle.
 */
typedef struct KdgSession KdgSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kdg_version(void);

/**
 * Creates an empty session. Free it with `kdg_session_free`.
 */
struct KdgSession *kdg_session_new(void);

/**
 * Frees a session. Null is ignored.
 *
 * # Safety
 * `session` must come from `kdg_session_new` and not be used afterwards.
 */
void kdg_session_free(struct KdgSession *session);

/**
 * Parses `text` as facts and adds them to the session's store. `origin`
 * names the source in parse errors and may be null. Discards any previous
 * analysis. On a parse error the store is unchanged.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_load_facts(struct KdgSession *session, const char *text, const char *origin);

/**
 * Number of facts in the store, or in the completed store after a
 * successful `kdg_analyze`. Returns 0 for a null session.
 *
 * # Safety
 * `session` must be null or valid.
 */
uintptr_t kdg_fact_count(const struct KdgSession *session);

/**
 * Runs every derivation stage, restricted to the graph rooted at `root`
 * when it is non-null.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_analyze(struct KdgSession *session, const char *root);

/**
 * Writes the derived facts (or all facts when `include_asserted`) in fact
 * file syntax to `*out`.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_derived_facts(struct KdgSession *session, bool include_asserted, char **out);

/**
 * Writes the instance and spatial matches as JSON to `*out`.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_matches_json(struct KdgSession *session, char **out);

/**
 * Writes joins, possible next events, chains and super-events as JSON to
 * `*out`. `min_confidence` (`low`, `medium`, `high` or null) drops weaker
 * joins.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_link_json(struct KdgSession *session, const char *min_confidence, char **out);

/**
 * Writes the super-event facts of the link step in fact file syntax to
 * `*out`.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_link_patch(struct KdgSession *session, const char *min_confidence, char **out);

/**
 * Compares the engine with the rule program on the session's store and
 * writes the report as JSON to `*out`. A difference is reported through
 * the `passes` field, not the status.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_check_json(struct KdgSession *session, const char *root, char **out);

/**
 * Extracts the answer structure of `pattern` (`how-occurs`,
 * `how-produces`, `how-related` or `why-important`) and writes it as JSON
 * to `*out`. `y` is ignored by `how-occurs` and required by the others.
 * `cap` is the maximum number of edges in an ordering path; 0 means the
 * default.
 *
 * # Safety
 * Pointers must be null or valid per the module contract.
 */
enum KdgStatus kdg_query_json(struct KdgSession *session,
                              const char *pattern,
                              const char *x,
                              const char *y,
                              uintptr_t cap,
                              char **out);

/**
 * Message of the last failed call on this session, or null when the last
 * call succeeded. Valid until the next call on the session.
 *
 * # Safety
 * `session` must be null or valid.
 */
const char *kdg_last_error_message(const struct KdgSession *session);

/**
 * Frees a string returned through an `out` parameter. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void kdg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDGRAPH_H */
