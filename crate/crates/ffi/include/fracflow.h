#ifndef FRACFLOW_H
#define FRACFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum FracflowStatus {
  FRACFLOW_STATUS_OK = 0,
  FRACFLOW_STATUS_NULL_POINTER = 1,
  FRACFLOW_STATUS_INVALID_ARGUMENT = 2,
  FRACFLOW_STATUS_MESH_ERROR = 3,
  FRACFLOW_STATUS_INVALID_GRID = 4,
  FRACFLOW_STATUS_SOLVER_ERROR = 5,
  FRACFLOW_STATUS_IO_ERROR = 6,
  FRACFLOW_STATUS_PANIC = 7,
} FracflowStatus;

/*
 Opaque mixed-dimensional grid.
 */
typedef struct FracflowGrid FracflowGrid;

/*
 Opaque result of a benchmark run.
 */
typedef struct FracflowRun FracflowRun;

/*
 Scalar checks of a finished run.
 */
typedef struct FracflowDiagnostics {
  size_t num_dofs;
  size_t nnz;
  size_t flow_iterations;
  double flow_imbalance;
  double inlet_flux;
  double head_min;
  double head_max;
  double concentration_min;
  double concentration_max;
  double max_budget_error;
} FracflowDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer stays valid
 until the next failing call on the same thread.
 */
const char *fracflow_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *fracflow_version(void);

/*
 Reads an MSH 2.2 file into a new grid handle.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FracflowStatus fracflow_grid_from_msh_file(const char *path, struct FracflowGrid **out);

/*
 Builds the lattice grid of the regular network case at the given refinement.

 # Safety
 `out` must be a valid pointer.
 */
enum FracflowStatus fracflow_grid_regular(uint32_t refinement, struct FracflowGrid **out);

/*
 Number of cells of dimension `dim` (0 to 3).

 # Safety
 `grid` must come from this library; `out` must be a valid pointer.
 */
enum FracflowStatus fracflow_grid_cell_count(const struct FracflowGrid *grid,
                                             uint32_t dim,
                                             size_t *out);

/*
 Checks the grid invariants. Returns `InvalidGrid` with the violation list as the
 error message if any check fails; `num_errors` receives the count either way.

 # Safety
 `grid` must come from this library; `num_errors` may be null.
 */
enum FracflowStatus fracflow_grid_validate(const struct FracflowGrid *grid, size_t *num_errors);

/*
 Releases a grid. Null is ignored.

 # Safety
 `grid` must come from this library and not be used afterwards.
 */
void fracflow_grid_free(struct FracflowGrid *grid);

/*
 Runs flow and transport of a benchmark case on a copy of `grid`.

 `case_name` is one of `single`, `regular`, `small_features`, `field`; `cond` is 0
 or 1 for `regular` and negative otherwise.

 # Safety
 `case_name` must be a NUL-terminated string, `grid` a handle from this library and
 `out` a valid pointer.
 */
enum FracflowStatus fracflow_run_case(const char *case_name,
                                      uint32_t refinement,
                                      int32_t cond,
                                      const struct FracflowGrid *grid,
                                      struct FracflowRun **out);

/*
 Borrowed view of the cell heads of dimension `dim`. The data lives as long as `run`.

 # Safety
 `run` must come from this library; `data` and `len` must be valid pointers.
 */
enum FracflowStatus fracflow_run_heads(const struct FracflowRun *run,
                                       uint32_t dim,
                                       const double **data,
                                       size_t *len);

/*
 Number of time levels stored, including the initial state.

 # Safety
 `run` must come from this library; `out` must be a valid pointer.
 */
enum FracflowStatus fracflow_run_num_levels(const struct FracflowRun *run, size_t *out);

/*
 Borrowed view of the concentration at time level `level` over all unknowns,
 ordered matrix cells first, then fractures, intersection lines and points.

 # Safety
 `run` must come from this library; `time`, `data` and `len` must be valid pointers.
 */
enum FracflowStatus fracflow_run_concentration(const struct FracflowRun *run,
                                               size_t level,
                                               double *time,
                                               const double **data,
                                               size_t *len);

/*
 Fills `out` with the run's conservation and range checks.

 # Safety
 `run` must come from this library; `out` must be a valid pointer.
 */
enum FracflowStatus fracflow_run_diagnostics(const struct FracflowRun *run,
                                             struct FracflowDiagnostics *out);

/*
 Writes the run's dol, dot and results files into `dir`, which must exist.

 # Safety
 `run` must come from this library and `dir` a NUL-terminated string.
 */
enum FracflowStatus fracflow_run_write_reports(const struct FracflowRun *run, const char *dir);

/*
 Releases a run. Null is ignored.

 # Safety
 `run` must come from this library and not be used afterwards.
 */
void fracflow_run_free(struct FracflowRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACFLOW_H */
