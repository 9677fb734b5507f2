#ifndef NDHARM_NDHARM_H
#define NDHARM_NDHARM_H

#include <stddef.h>

#if defined(_WIN32)
#define NDH_API __declspec(dllexport)
#else
#define NDH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ndh_experiment ndh_experiment;
typedef struct ndh_result ndh_result;

typedef enum ndh_status {
  NDH_OK = 0,
  NDH_ERR_INVALID_ARGUMENT = 1,
  NDH_ERR_CONFIG = 2,
  NDH_ERR_NUMERIC = 3,
  NDH_ERR_CHART = 4,
  NDH_ERR_IO = 5,
  NDH_ERR_NOT_CONVERGED = 6,
  NDH_ERR_BUFFER_TOO_SMALL = 7,
  NDH_ERR_NOT_FOUND = 8,
  NDH_ERR_INTERNAL = 9
} ndh_status;

typedef enum ndh_verdict {
  NDH_VERDICT_CONVERGED = 0,
  NDH_VERDICT_CIRCLING = 1,
  NDH_VERDICT_BLOWUP = 2,
  NDH_VERDICT_CHART_EXIT = 3,
  NDH_VERDICT_BUDGET = 4
} ndh_verdict;

/* Receives one line of text (no trailing newline). */
typedef void (*ndh_line_sink)(const char* line, void* user);

/* Message of the last failed call on this thread; never NULL. */
NDH_API const char* ndh_last_error(void);
NDH_API const char* ndh_status_string(ndh_status status);
NDH_API const char* ndh_version(void);

NDH_API ndh_status ndh_experiment_from_file(const char* path, ndh_experiment** out);
NDH_API ndh_status ndh_experiment_from_text(const char* text, ndh_experiment** out);
NDH_API ndh_status ndh_experiment_from_scenario(const char* name, ndh_experiment** out);
/* Artifact directory; NULL or "" disables artifact output. By default the
   directory is resolved from NDHARM_OUTPUT_ROOT or the config. */
NDH_API ndh_status ndh_experiment_set_output(ndh_experiment* exp, const char* dir);
NDH_API ndh_status ndh_experiment_name(const ndh_experiment* exp, const char** name);
NDH_API void ndh_experiment_free(ndh_experiment* exp);

NDH_API ndh_status ndh_experiment_run(const ndh_experiment* exp, ndh_result** out);
NDH_API void ndh_result_free(ndh_result* res);
NDH_API ndh_status ndh_result_verdict(const ndh_result* res, ndh_verdict* verdict);
/* Named numeric evidence, e.g. "final_sup_tension", "drift_0", "steps". */
NDH_API ndh_status ndh_result_evidence(const ndh_result* res, const char* key, double* value);
/* Copies the verdict JSON (NUL-terminated) into buf; *needed receives the
   required size including the terminator. buf may be NULL when cap is 0. */
NDH_API ndh_status ndh_result_json(const ndh_result* res, char* buf, size_t cap, size_t* needed);
/* Artifact directory of the run ("" when none was written). */
NDH_API const char* ndh_result_output_dir(const ndh_result* res);

NDH_API int ndh_verdict_exit_code(ndh_verdict verdict);
NDH_API const char* ndh_verdict_string(ndh_verdict verdict);

NDH_API size_t ndh_scenario_count(void);
NDH_API ndh_status ndh_scenario_info(size_t index, const char** name, const char** description, const char** claim,
                                     ndh_verdict* expected);

/* Report lines go to sink. *exit_code: 0 pass, 1 mismatch, 65 nothing matched.
   golden_dir may be NULL for the built-in location. */
NDH_API ndh_status ndh_verify_goldens(const char* filter, const char* golden_dir, ndh_line_sink sink, void* user,
                                      int* exit_code);
NDH_API ndh_status ndh_bless_goldens(const char* filter, const char* golden_dir, ndh_line_sink sink, void* user);

/* Sparse operator of the experiment's domain as "row col value" lines. */
NDH_API ndh_status ndh_dump_operator(const ndh_experiment* exp, ndh_line_sink sink, void* user);

#ifdef __cplusplus
}
#endif

#endif
