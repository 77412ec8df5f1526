#ifndef BIHNLS_H
#define BIHNLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum BihnlsStatus {
  BIHNLS_STATUS_OK = 0,
  BIHNLS_STATUS_NULL_POINTER = 1,
  BIHNLS_STATUS_INVALID_ARGUMENT = 2,
  BIHNLS_STATUS_CONFIG = 3,
  BIHNLS_STATUS_UNKNOWN_PRESET = 4,
  BIHNLS_STATUS_GRID = 5,
  BIHNLS_STATUS_GROUND_STATE = 6,
  BIHNLS_STATUS_CHECKPOINT = 7,
  BIHNLS_STATUS_IO = 8,
  BIHNLS_STATUS_NUMERICAL = 9,
  BIHNLS_STATUS_PANIC = 10,
} BihnlsStatus;

/**
 * State of a simulation handle.
 */
typedef enum BihnlsRunState {
  BIHNLS_RUN_STATE_RUNNING = 0,
  BIHNLS_RUN_STATE_BLOWUP_DETECTED = 1,
  BIHNLS_RUN_STATE_COMPLETED = 2,
  BIHNLS_RUN_STATE_FAILED = 3,
} BihnlsRunState;

/**
 * Opaque run configuration.
 */
typedef struct BihnlsConfig BihnlsConfig;

/**
 * Opaque simulation: a field on its grid with the stepping state.
 */
typedef struct BihnlsSim BihnlsSim;

/**
 * Conserved and monitored functionals at one time.
 */
typedef struct BihnlsFunctionals {
  double time;
  double mass;
  double energy;
  double grad_sq;
  double lap_sq;
  double pot;
} BihnlsFunctionals;

/**
 * Summary of a scenario run.
 */
typedef struct BihnlsRunSummary {
  enum BihnlsRunState state;
  bool blowup_detected;
  uint64_t steps;
  double final_time;
  double growth_ratio;
  double max_mass_drift;
  double max_energy_drift;
  /**
   * Interior violations of the virial rate inequality, summed over radii.
   */
  uint64_t virial_violations;
} BihnlsRunSummary;

/**
 * Summary of a ground-state solve.
 */
typedef struct BihnlsGroundState {
  uint64_t iterations;
  double residual;
  double mass_q;
  double lap_q_sq;
  double energy_q;
  double pohozaev_rel_err;
} BihnlsGroundState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bihnls_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length plus one, or 0 when
 * there is no message.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bihnls_last_error(char *buf, size_t len);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library and not yet freed.
 */
void bihnls_string_free(char *s);

/**
 * Build the named preset.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BihnlsStatus bihnls_config_from_preset(const char *name, struct BihnlsConfig **out);

/**
 * Parse and validate a JSON config.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BihnlsStatus bihnls_config_from_json(const char *json, struct BihnlsConfig **out);

/**
 * The config as pretty JSON; free with [`bihnls_string_free`].
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum BihnlsStatus bihnls_config_to_json(const struct BihnlsConfig *cfg, char **out);

/**
 * Override the seed of randomized diagnostics.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
enum BihnlsStatus bihnls_config_set_seed(struct BihnlsConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be null or a handle from this library not yet freed.
 */
void bihnls_config_free(struct BihnlsConfig *cfg);

/**
 * Create a simulation at t = 0 from the config's initial datum.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum BihnlsStatus bihnls_sim_new(const struct BihnlsConfig *cfg, struct BihnlsSim **out);

/**
 * Restore a simulation from a checkpoint written by this library; the
 * config supplies the stepping parameters and must match its physics.
 *
 * # Safety
 * `cfg` must be a live config handle, `path` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum BihnlsStatus bihnls_sim_from_checkpoint(const struct BihnlsConfig *cfg,
                                             const char *path,
                                             struct BihnlsSim **out);

/**
 * # Safety
 * `sim` must be null or a handle from this library not yet freed.
 */
void bihnls_sim_free(struct BihnlsSim *sim);

/**
 * Advance with adaptive steps until `t_target`, blowup detection or failure.
 *
 * # Safety
 * `sim` must be a live simulation handle; `state` may be null.
 */
enum BihnlsStatus bihnls_sim_advance(struct BihnlsSim *sim,
                                     double t_target,
                                     enum BihnlsRunState *state);

/**
 * Functionals of the current field.
 *
 * # Safety
 * `sim` must be a live simulation handle and `out` a valid pointer.
 */
enum BihnlsStatus bihnls_sim_functionals(const struct BihnlsSim *sim,
                                         struct BihnlsFunctionals *out);

/**
 * Grid sizes; the field has n_r * n_z complex values, r outer and z inner.
 *
 * # Safety
 * `sim` must be a live simulation handle; outputs may be null.
 */
enum BihnlsStatus bihnls_sim_dims(const struct BihnlsSim *sim, size_t *n_r, size_t *n_z);

/**
 * Copy the field as interleaved (re, im) pairs into `buf` of `len` doubles.
 *
 * # Safety
 * `sim` must be a live simulation handle and `buf` must point to `len`
 * writable doubles.
 */
enum BihnlsStatus bihnls_sim_field(const struct BihnlsSim *sim, double *buf, size_t len);

/**
 * Current time, accepted steps and state.
 *
 * # Safety
 * `sim` must be a live simulation handle; outputs may be null.
 */
enum BihnlsStatus bihnls_sim_progress(const struct BihnlsSim *sim,
                                      double *t,
                                      uint64_t *steps,
                                      enum BihnlsRunState *state);

/**
 * Write a checkpoint of the current state.
 *
 * # Safety
 * `sim` must be a live simulation handle and `path` a NUL-terminated string.
 */
enum BihnlsStatus bihnls_sim_save_checkpoint(const struct BihnlsSim *sim, const char *path);

/**
 * Run a full scenario, writing artifacts under `out_dir`.
 *
 * # Safety
 * `cfg` must be a live config handle, `out_dir` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum BihnlsStatus bihnls_run_scenario(const struct BihnlsConfig *cfg,
                                      const char *out_dir,
                                      struct BihnlsRunSummary *out);

/**
 * Solve for the radial ground state in R^d; `n_r` = 0 and `r_max` ≤ 0
 * select the defaults.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BihnlsStatus bihnls_ground_state(uint32_t d,
                                      double sigma,
                                      size_t n_r,
                                      double r_max,
                                      struct BihnlsGroundState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIHNLS_H */
