/* tiersim — tiered-memory training-iteration simulator and placement planner.
 *
 * C interface over the simulation core. All heap objects are opaque handles
 * released through the matching *_free function; every entry point returns a
 * tiersim_status, with details from tiersim_last_error() on failure. Handles
 * are independent; one handle must not be used from two threads at once.
 */

#ifndef TIERSIM_H
#define TIERSIM_H

#include <stddef.h>

#if defined(_WIN32)
#define TIERSIM_API __declspec(dllexport)
#else
#define TIERSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tiersim_status {
    TIERSIM_OK = 0,
    TIERSIM_ERR_INVALID_ARG = 1, /* null pointer, unknown format name */
    TIERSIM_ERR_PARSE = 2,       /* config or anchors file did not parse */
    TIERSIM_ERR_VALIDATION = 3,  /* config parsed but violates an invariant */
    TIERSIM_ERR_RUNTIME = 4      /* internal failure */
} tiersim_status;

typedef struct tiersim_config tiersim_config;
typedef struct tiersim_result tiersim_result;

/* Message describing the most recent failure on this thread. */
TIERSIM_API const char* tiersim_last_error(void);

TIERSIM_API const char* tiersim_version(void);

/* Builds a scenario from JSON text (// comments allowed). */
TIERSIM_API tiersim_status tiersim_config_from_json(const char* json_text, tiersim_config** out);
TIERSIM_API tiersim_status tiersim_config_from_file(const char* path, tiersim_config** out);
TIERSIM_API void tiersim_config_free(tiersim_config* config);

/* Number of sweep-point x policy runs the config describes. */
TIERSIM_API tiersim_status tiersim_config_run_count(const tiersim_config* config, size_t* out);

/* Runs the full sweep. Infeasible points become records, not errors. */
TIERSIM_API tiersim_status tiersim_run(const tiersim_config* config, tiersim_result** out);
TIERSIM_API void tiersim_result_free(tiersim_result* result);

TIERSIM_API tiersim_status tiersim_result_count(const tiersim_result* result, size_t* out);

/* Renders records; format is "csv", "jsonl", or "table". Free with
 * tiersim_string_free. */
TIERSIM_API tiersim_status tiersim_result_render(const tiersim_result* result, const char* format,
                                                 char** out_text);

/* Placement plans for the base scenario point, without simulating. */
TIERSIM_API tiersim_status tiersim_plan_text(const tiersim_config* config, char** out_text);

/* Fits free parameters against an anchors JSON document; returns a JSON
 * report. */
TIERSIM_API tiersim_status tiersim_calibrate(const tiersim_config* config,
                                             const char* anchors_json, char** out_text);

/* Built-in model/topology presets and calibration defaults as JSON. */
TIERSIM_API tiersim_status tiersim_presets(char** out_text);

TIERSIM_API void tiersim_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* TIERSIM_H */
