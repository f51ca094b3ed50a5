/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CQF_H
#define CQF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CqfStatus {
  CQF_STATUS_OK = 0,
  CQF_STATUS_NULL_ARGUMENT = 1,
  CQF_STATUS_INVALID_UTF8 = 2,
  CQF_STATUS_PARSE = 3,
  CQF_STATUS_INVALID_SCHEMA = 4,
  CQF_STATUS_PATH = 5,
  CQF_STATUS_QUERY = 6,
  CQF_STATUS_EVAL = 7,
  CQF_STATUS_SQL = 8,
  CQF_STATUS_PANIC = 99,
} CqfStatus;

/*
 A resumable path enumeration between two object types.
 */
typedef struct CqfEnumerator CqfEnumerator;

/*
 A fact population bound to the schema it was parsed against.
 */
typedef struct CqfPopulation CqfPopulation;

/*
 A parsed query expression bound to its schema.
 */
typedef struct CqfQuery CqfQuery;

/*
 A parsed schema.
 */
typedef struct CqfSchema CqfSchema;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failure on this thread, or NULL. Valid until the
 next call into this library from the same thread.
 */
const char *cqf_last_error_message(void);

/*
 Library version as a static string.
 */
const char *cqf_version(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library, freed once.
 */
void cqf_string_free(char *s);

/*
 Parses and validates `.cqs` schema text.

 # Safety
 `source` must be a NUL-terminated string; `out` must be writable.
 */
enum CqfStatus cqf_schema_parse(const char *source, struct CqfSchema **out);

/*
 # Safety
 `schema` must be NULL or a handle from [`cqf_schema_parse`], freed once.
 */
void cqf_schema_free(struct CqfSchema *schema);

/*
 Object type names in importance order, one per line.

 # Safety
 `schema` must be a live handle; `out` must be writable.
 */
enum CqfStatus cqf_schema_object_types(const struct CqfSchema *schema, char **out);

/*
 `CREATE TABLE` statements for the schema.

 # Safety
 `schema` must be a live handle; `out` must be writable.
 */
enum CqfStatus cqf_schema_ddl(const struct CqfSchema *schema, char **out);

/*
 Opens a path enumeration between two object types.

 # Safety
 `schema` must be a live handle, `from`/`to` NUL-terminated strings and
 `out` writable. The enumerator keeps the schema alive on its own.
 */
enum CqfStatus cqf_enumerator_open(const struct CqfSchema *schema,
                                   const char *from,
                                   const char *to,
                                   struct CqfEnumerator **out);

/*
 Next at most `batch` paths as `weight<TAB>verbalization` lines. An
 empty string means the enumeration is exhausted.

 # Safety
 `e` must be a live enumerator used from one thread at a time; `out`
 must be writable.
 */
enum CqfStatus cqf_enumerator_next_batch(struct CqfEnumerator *e, size_t batch, char **out);

/*
 1 when no further paths exist, 0 otherwise (also 0 for NULL).

 # Safety
 `e` must be NULL or a live enumerator.
 */
int32_t cqf_enumerator_is_exhausted(const struct CqfEnumerator *e);

/*
 # Safety
 `e` must be NULL or a handle from [`cqf_enumerator_open`], freed once.
 */
void cqf_enumerator_free(struct CqfEnumerator *e);

/*
 Point-to-point query over `count` points; writes the verbalization of
 the best connecting path.

 # Safety
 `points` must hold `count` NUL-terminated strings; `out` must be
 writable.
 */
enum CqfStatus cqf_ppq_run(const struct CqfSchema *schema,
                           const char *const *points,
                           size_t count,
                           size_t batch,
                           char **out);

/*
 Parses `.cqp` population text against a schema.

 # Safety
 `schema` must be a live handle, `source` NUL-terminated, `out` writable.
 */
enum CqfStatus cqf_population_parse(const struct CqfSchema *schema,
                                    const char *source,
                                    struct CqfPopulation **out);

/*
 Number of facts in a population (0 for NULL).

 # Safety
 `pop` must be NULL or a live handle.
 */
size_t cqf_population_fact_count(const struct CqfPopulation *pop);

/*
 # Safety
 `pop` must be NULL or a handle from [`cqf_population_parse`], freed once.
 */
void cqf_population_free(struct CqfPopulation *pop);

/*
 Parses and type-checks query text.

 # Safety
 `schema` must be a live handle, `source` NUL-terminated, `out` writable.
 */
enum CqfStatus cqf_query_parse(const struct CqfSchema *schema,
                               const char *source,
                               struct CqfQuery **out);

/*
 # Safety
 `q` must be NULL or a handle from [`cqf_query_parse`], freed once.
 */
void cqf_query_free(struct CqfQuery *q);

/*
 Natural-language rendering of a query.

 # Safety
 `q` must be a live handle; `out` must be writable.
 */
enum CqfStatus cqf_query_verbalize(const struct CqfQuery *q, char **out);

/*
 SQL for a query.

 # Safety
 `q` must be a live handle; `out` must be writable.
 */
enum CqfStatus cqf_query_sql(const struct CqfQuery *q, char **out);

/*
 Evaluates a query. Relations and tables come back as TSV with a header
 line; counts as a bare number.

 # Safety
 `q` and `pop` must be live handles; `out` must be writable.
 */
enum CqfStatus cqf_query_eval(const struct CqfQuery *q,
                              const struct CqfPopulation *pop,
                              char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CQF_H */
