/*
 * C interface to the slipstream runtime: experiment runs over scripted or
 * HTTP backends, trace reporting, and config validation.
 *
 * Conventions: every function returns ss_status (SS_OK on success); the
 * failure message for the calling thread is available via ss_last_error().
 * Strings returned through char** are owned by the caller and must be
 * released with ss_string_free().
 */
#ifndef SLIPSTREAM_H
#define SLIPSTREAM_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
    SS_OK = 0,
    SS_ERR_INVALID_ARG = 1,
    SS_ERR_CONFIG = 2,
    SS_ERR_PARSE = 3,
    SS_ERR_BACKEND = 4,
    SS_ERR_INVARIANT = 5,
    SS_ERR_IO = 6,
    SS_ERR_INTERNAL = 7
} ss_status;

const char* ss_version(void);

/* Message for the most recent failure on this thread; empty when none. */
const char* ss_last_error(void);

void ss_string_free(char* s);

/* ---- experiments -------------------------------------------------------- */

typedef struct ss_experiment ss_experiment;

/* Loads a config file; relative paths resolve against its directory. */
ss_status ss_experiment_open(const char* config_path, ss_experiment** out);

/* Parses a config document directly; relative paths resolve against base_dir
 * (NULL means the current directory). */
ss_status ss_experiment_open_json(const char* config_json, const char* base_dir,
                                  ss_experiment** out);

/* Newline-separated diagnostics; empty string when the config is runnable. */
ss_status ss_experiment_validate(ss_experiment* experiment, char** diagnostics_out);

/* Executes the grid, writing one trace file per (mode, threshold, query). */
ss_status ss_experiment_run(ss_experiment* experiment);

/* Trace files written by the last successful run. */
int ss_experiment_trace_count(const ss_experiment* experiment);
const char* ss_experiment_trace_path(const ss_experiment* experiment, int index);

void ss_experiment_close(ss_experiment* experiment);

/* Standalone validation; diagnostics as above. Returns SS_OK when the file
 * parsed (even with diagnostics); the caller decides what a nonempty list
 * means. */
ss_status ss_config_validate(const char* config_path, char** diagnostics_out);

/* ---- reporting ---------------------------------------------------------- */

/* Aggregates traces matching the glob into a report.
 *   format:      "json" or "table"
 *   labels_path: optional deviation-label file (NULL for none)
 *   out_path:    optional file to write (NULL writes nothing)
 *   report_out:  optional receiver for the rendered report (NULL to skip)
 */
ss_status ss_report_run(const char* traces_glob, const char* labels_path, const char* format,
                        const char* out_path, char** report_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SLIPSTREAM_H */
