/* Copyright (C) 2026 the avtp authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the active visuo-tactile pose estimation library. The library
 * loads simulated clutter scenes, runs the estimation pipelines (scene
 * decluttering, next-best-view vision, next-best-touch refinement) and
 * writes metrics, traces and reports to disk.
 *
 * All functions return avtp_status; on failure avtp_last_error() carries a
 * human-readable message for the calling thread. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * avtp_string_free().
 */

#ifndef AVTP_H
#define AVTP_H

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#define AVTP_API __declspec(dllexport)
#elif defined __GNUC__
#define AVTP_API __attribute__((visibility("default")))
#else
#define AVTP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avtp_status {
  AVTP_OK = 0,
  AVTP_ERROR_INVALID_ARGUMENT = 1,
  AVTP_ERROR_CONFIG = 2,
  AVTP_ERROR_IO = 3,
  AVTP_ERROR_RUNTIME = 4
} avtp_status;

/* Library version string, statically allocated. */
AVTP_API const char* avtp_version(void);

/* Symbolic name of a status code, statically allocated. */
AVTP_API const char* avtp_status_name(avtp_status status);

/* Message of the last failure on this thread, or "" when none. */
AVTP_API const char* avtp_last_error(void);

AVTP_API void avtp_string_free(char* s);

/* --------------------------------------------------------------------- */
/* Scenes                                                                 */

/* Opaque simulated scene. scene_spec is a scene file path or
 * "gen:<seed>[:degraded]" for a generated clutter scene. */
typedef struct avtp_scene avtp_scene;

AVTP_API avtp_status avtp_scene_open(const char* scene_spec,
                                     avtp_scene** out_scene);
AVTP_API void avtp_scene_close(avtp_scene* scene);
AVTP_API size_t avtp_scene_object_count(const avtp_scene* scene);

/* Validates a scene spec; on success *out_summary_json (if non-NULL)
 * receives a JSON description of the scene. */
AVTP_API avtp_status avtp_validate_config(const char* scene_spec,
                                          char** out_summary_json);

/* Renders the scene from the standard oblique view into out_dir:
 * cloud.xyz (depth returns), ids.pgm (label image), render.json (camera). */
AVTP_API avtp_status avtp_scene_render(const avtp_scene* scene, uint64_t seed,
                                       const char* out_dir);

/* --------------------------------------------------------------------- */
/* Pipeline runs                                                          */

/* Opaque finished run holding the run record. */
typedef struct avtp_run avtp_run;

/* Runs a pipeline ("static", "active-vision", "declutter+active-vision" or
 * "full") on the scene. params is an optional array of "key=value" strings.
 * When out_dir is non-NULL the run directory (config snapshot, record.json,
 * metrics.csv, traces) is written beneath it. */
AVTP_API avtp_status avtp_run_pipeline(const avtp_scene* scene,
                                       const char* pipeline, uint64_t seed,
                                       const char* const* params,
                                       size_t num_params, const char* out_dir,
                                       avtp_run** out_run);

/* Run record as JSON. */
AVTP_API avtp_status avtp_run_record_json(const avtp_run* run,
                                          char** out_json);

/* Per-stage metrics CSV of the run. */
AVTP_API avtp_status avtp_run_metrics_csv(const avtp_run* run,
                                          char** out_csv);

/* 1 when the pipeline aborted with a structured failure record. */
AVTP_API int avtp_run_failed(const avtp_run* run);

/* Failure message of an aborted run ("" otherwise); owned by the run. */
AVTP_API const char* avtp_run_failure_message(const avtp_run* run);

AVTP_API void avtp_run_free(avtp_run* run);

/* --------------------------------------------------------------------- */
/* Reports                                                                */

/* Aggregates record.json files into summary.csv, series.csv and series.svg
 * under out_dir. */
AVTP_API avtp_status avtp_report(const char* const* record_files,
                                 size_t num_files, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* AVTP_H */
