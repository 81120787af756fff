/*
 * patcard — online cardinality estimation over canonical subquery patterns.
 *
 * C boundary for the shared library. All functions return a status code
 * (PATCARD_OK on success); patcard_last_error() describes the most recent
 * failure on the calling thread. Strings returned through out-parameters
 * are heap-allocated and must be released with patcard_free().
 */

#ifndef PATCARD_H
#define PATCARD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  PATCARD_OK = 0,
  PATCARD_ERR_CONFIG = 2,   /* bad configuration or arguments file content */
  PATCARD_ERR_RUNTIME = 3,  /* evaluation/learning failure */
  PATCARD_ERR_PARSE = 4,    /* SQL or JSON syntax */
  PATCARD_ERR_IO = 5,       /* file system */
  PATCARD_ERR_ARG = 6       /* null/invalid call arguments */
};

typedef struct patcard_engine patcard_engine;

/* Most recent error message for this thread; empty string if none. */
const char* patcard_last_error(void);

/* Release any string returned by this library. */
void patcard_free(char* s);

/*
 * Engine lifecycle. config_json (optional, may be NULL) holds the store
 * configuration; schema_path is required; stats_path may be NULL, in which
 * case statistics degrade to schema ranges.
 */
int patcard_engine_open(const char* config_json, const char* schema_path,
                        const char* stats_path, patcard_engine** out);
void patcard_engine_close(patcard_engine* e);

/*
 * Estimate all subqueries of one SQL query. *result_json receives an array
 * ordered by subquery id:
 *   [{"subquery_id":0,"n_join":0,"h3":"<hex>","estimate":123,
 *     "provenance":"level3","bucket_size":17}, ...]
 */
int patcard_engine_estimate(patcard_engine* e, const char* sql, char** result_json);

/*
 * Feed observed true cardinalities for the same SQL query; truths must
 * hold one value per subquery in the same enumeration order as
 * patcard_engine_estimate (count must match, else PATCARD_ERR_ARG).
 */
int patcard_engine_observe(patcard_engine* e, const char* sql,
                           const uint64_t* truths, size_t count);

int patcard_engine_snapshot_save(patcard_engine* e, const char* path);
int patcard_engine_snapshot_load(patcard_engine** e, const char* snapshot_path,
                                 const char* schema_path, const char* stats_path);
int patcard_engine_bucket_dump(patcard_engine* e, const char* csv_path);

/*
 * Batch verbs (the CLI is a thin wrapper over these).
 */

/* Scan CSVs under tables_dir (per schema) into statistics JSON at out_path. */
int patcard_analyze(const char* schema_path, const char* tables_dir,
                    const char* out_path);

/* Generate a synthetic dataset: CSVs plus schema.json under out_dir. */
int patcard_generate_dataset(const char* spec_json, const char* out_dir);

/* Generate a workload .sql file from a template spec. */
int patcard_generate_workload(const char* spec_json, const char* out_path);

/* Replay a workload; writes replay.csv, detail.csv, cumulative.csv,
 * summary.json under the configured output directory. */
int patcard_simulate(const char* run_config_json);

/* Recompute summary.json from the CSVs of a finished run. */
int patcard_report(const char* run_dir);

/* Merged run configuration (defaults + overrides) as JSON. */
int patcard_print_config(const char* run_config_json, char** merged_json);

#ifdef __cplusplus
}
#endif

#endif /* PATCARD_H */
