#ifndef HYBRID_IB_H
#define HYBRID_IB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HibStatus {
  HIB_STATUS_OK = 0,
  HIB_STATUS_NULL_POINTER = 1,
  HIB_STATUS_INVALID_ARGUMENT = 2,
  HIB_STATUS_NUMERICAL = 3,
  HIB_STATUS_IO = 4,
  /**
   * The library panicked; the handle involved should not be reused.
   */
  HIB_STATUS_INTERNAL = 5,
} HibStatus;

typedef enum HibScheme {
  HIB_SCHEME_EXPLICIT = 0,
  HIB_SCHEME_IMPLICIT_BENDING = 1,
  HIB_SCHEME_IMPLICIT_BENDING_TENSION = 2,
} HibScheme;

/**
 * Fibers on a grid. Fibers may be added until the first step.
 */
typedef struct HibSimulation HibSimulation;

/**
 * Periodic Stokes solver on a fixed grid.
 */
typedef struct HibStokesSolver HibStokesSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. Valid until the next call into the library on this thread.
 */
const char *hib_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hib_version(void);

/**
 * Correction radius `R_c` for hydrodynamic radius `rh` and physical radius `r`.
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
enum HibStatus hib_correction_radius(double rh, double r, double *out);

/**
 * Drag coefficient `ξ = 1/(6πμR_c)`.
 */
double hib_drag_coefficient(double rc, double mu);

/**
 * # Safety
 * `out` must be null or point to a writable handle pointer.
 */
enum HibStatus hib_stokes_solver_new(size_t nx,
                                     size_t ny,
                                     size_t nz,
                                     double h,
                                     double mu,
                                     struct HibStokesSolver **out);

/**
 * # Safety
 * `solver` must be null or a handle from [`hib_stokes_solver_new`] not yet freed.
 */
void hib_stokes_solver_free(struct HibStokesSolver *solver);

/**
 * Velocity for the force density `force`; both arrays have `len = 3 · nx · ny · nz` entries.
 *
 * # Safety
 * `solver` must be a live handle; `force` and `velocity` must hold `len` doubles.
 */
enum HibStatus hib_stokes_solve(const struct HibStokesSolver *solver,
                                const double *force,
                                double *velocity,
                                size_t len);

/**
 * New simulation on an `nx × ny × nz` grid centred on the origin. With
 * `coupled = 0` markers ignore the grid and move by drag and shear only.
 *
 * # Safety
 * `out` must be null or point to a writable handle pointer.
 */
enum HibStatus hib_simulation_new(size_t nx,
                                  size_t ny,
                                  size_t nz,
                                  double h,
                                  double mu,
                                  enum HibScheme scheme,
                                  double dt,
                                  double shear_rate,
                                  int32_t coupled,
                                  struct HibSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`hib_simulation_new`] not yet freed.
 */
void hib_simulation_free(struct HibSimulation *sim);

/**
 * Add a fiber of `markers` markers (`positions` holds `3 · markers` doubles)
 * with uniform drag coefficient `xi`. Only allowed before the first step.
 *
 * # Safety
 * `sim` must be a live handle and `positions` must hold `3 · markers` doubles.
 */
enum HibStatus hib_simulation_add_fiber(struct HibSimulation *sim,
                                        const double *positions,
                                        size_t markers,
                                        double ds,
                                        double ks,
                                        double kb,
                                        double xi);

/**
 * Advance `steps` timesteps. On a numerical failure the state stays at the
 * last completed step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum HibStatus hib_simulation_step(struct HibSimulation *sim, uint64_t steps);

/**
 * # Safety
 * `sim` must be a live handle; `out` must point to a writable double.
 */
enum HibStatus hib_simulation_time(const struct HibSimulation *sim, double *out);

/**
 * # Safety
 * `sim` must be a live handle; `out` must point to a writable size.
 */
enum HibStatus hib_simulation_fiber_count(const struct HibSimulation *sim, size_t *out);

/**
 * # Safety
 * `sim` must be a live handle; `out` must point to a writable size.
 */
enum HibStatus hib_simulation_marker_count(const struct HibSimulation *sim,
                                           size_t fiber,
                                           size_t *out);

/**
 * Copy the marker positions of `fiber` into `out` (`len = 3 · markers`).
 *
 * # Safety
 * `sim` must be a live handle; `out` must hold `len` doubles.
 */
enum HibStatus hib_simulation_positions(const struct HibSimulation *sim,
                                        size_t fiber,
                                        double *out,
                                        size_t len);

/**
 * Run the experiment described by a JSON configuration document. When
 * `summary` is non-null it receives the summary JSON, to be released with
 * [`hib_string_free`]. When `output_dir` is non-null the CSV and JSON
 * artifacts are written there as well.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `output_dir` null or one;
 * `summary` null or writable.
 */
enum HibStatus hib_run_experiment(const char *config_json, const char *output_dir, char **summary);

/**
 * Release a string returned by the library.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void hib_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRID_IB_H */
