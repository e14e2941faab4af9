#ifndef CAUSALID_H
#define CAUSALID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CID_STATUS_OK = 0,
  CID_STATUS_NULL_ARGUMENT = 1,
  CID_STATUS_INVALID_UTF8 = 2,
  CID_STATUS_PARSE = 3,
  CID_STATUS_UNKNOWN_VARIABLE = 4,
  CID_STATUS_INVALID_QUERY = 5,
  CID_STATUS_POSITIVITY = 6,
  CID_STATUS_MODEL = 7,
  /*
   A size guard or table budget refused the operation.
   */
  CID_STATUS_LIMIT = 8,
  CID_STATUS_EXPRESSION = 9,
  CID_STATUS_INTERNAL = 10,
  CID_STATUS_PANIC = 11,
} CidStatus;

typedef enum {
  CID_IDENTIFY_STATUS_IDENTIFIED = 0,
  CID_IDENTIFY_STATUS_NOT_IDENTIFIED_WITHIN_BUDGET = 1,
  CID_IDENTIFY_STATUS_KNOWN_NON_IDENTIFIABLE = 2,
} CidIdentifyStatus;

/*
 A causal graph.
 */
typedef struct CidGraph CidGraph;

/*
 A discrete model with exact tables.
 */
typedef struct CidModel CidModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *cid_version(void);

/*
 Message of the last failure on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *cid_last_error(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void cid_string_free(char *s);

/*
 Parses the graph DSL into a new handle stored in `*out`.

 # Safety
 `dsl` must be a NUL-terminated string and `out` writable.
 */
CidStatus cid_graph_parse(const char *dsl, CidGraph **out);

/*
 # Safety
 `g` must come from [`cid_graph_parse`] and not have been freed. NULL is ignored.
 */
void cid_graph_free(CidGraph *g);

/*
 Number of variables, latent ones included; 0 for NULL.

 # Safety
 `g` must be NULL or a live graph handle.
 */
size_t cid_graph_len(const CidGraph *g);

/*
 Canonical DSL text of the graph, freed with [`cid_string_free`].

 # Safety
 `g` must be a live graph handle and `out` writable.
 */
CidStatus cid_graph_to_dsl(const CidGraph *g, char **out);

/*
 Whether `given` d-separates `x` from `y`. `given` may be NULL or empty.

 # Safety
 Strings must be NUL-terminated, `g` live and `out` writable.
 */
CidStatus cid_d_separated(const CidGraph *g,
                          const char *x,
                          const char *y,
                          const char *given,
                          bool *out);

/*
 Searches for a do-free formula of `p(y|do(x))` within `budget` steps.
 When identified and `formula` is not NULL, `*formula` receives the text
 form, freed with [`cid_string_free`]; otherwise it is set to NULL.

 # Safety
 Strings must be NUL-terminated, `g` live and `status` writable.
 */
CidStatus cid_identify(const CidGraph *g,
                       const char *x,
                       const char *y,
                       uint32_t budget,
                       CidIdentifyStatus *status,
                       char **formula);

/*
 Parses the model DSL into a new handle stored in `*out`.

 # Safety
 `dsl` must be a NUL-terminated string and `out` writable.
 */
CidStatus cid_model_parse(const char *dsl, CidModel **out);

/*
 # Safety
 `m` must come from [`cid_model_parse`] and not have been freed. NULL is ignored.
 */
void cid_model_free(CidModel *m);

/*
 Evaluates `formula` exactly with its free variables set by `binding`
 (`"x=1,y=0"`, values as written in the model's domains). `*value`
 receives the nearest double; when `exact` is not NULL, `*exact` receives
 the rational as text, freed with [`cid_string_free`].

 # Safety
 Strings must be NUL-terminated, `m` live and `value` writable.
 */
CidStatus cid_eval(const CidModel *m,
                   const char *formula,
                   const char *binding,
                   double *value,
                   char **exact);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSALID_H */
