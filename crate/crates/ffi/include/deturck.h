#ifndef DETURCK_H
#define DETURCK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
enum DtStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_UTF8 = 2,
  DT_STATUS_CONFIG = 3,
  /**
   * The mesh degenerated; the handle stays valid but further steps fail.
   */
  DT_STATUS_DEGENERATED = 4,
  DT_STATUS_NUMERICAL = 5,
  DT_STATUS_IO = 6,
  DT_STATUS_BUFFER_TOO_SMALL = 7,
  DT_STATUS_INVALID_MESH = 8,
  DT_STATUS_PANIC = 9,
};
#ifndef __cplusplus
typedef int32_t DtStatus;
#endif // __cplusplus

/**
 * Opaque simulation handle.
 */
typedef struct DtSimulation DtSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation from configuration text. On success `*out` owns
 * the handle, to be released with [`dt_simulation_free`].
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
DtStatus dt_simulation_new(const char *config, struct DtSimulation **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`dt_simulation_new`] and not be used afterwards.
 */
void dt_simulation_free(struct DtSimulation *sim);

/**
 * Advances one time step, adapting the mesh when an adaptation is due.
 *
 * # Safety
 * `sim` must be a live handle.
 */
DtStatus dt_simulation_step(struct DtSimulation *sim);

/**
 * Steps until `t_end`. Returns [`DtStatus::Degenerated`] when the mesh
 * degenerates first; the time reached is then available from
 * [`dt_simulation_time`].
 *
 * # Safety
 * `sim` must be a live handle.
 */
DtStatus dt_simulation_run(struct DtSimulation *sim, double t_end);

/**
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
DtStatus dt_simulation_time(const struct DtSimulation *sim, double *out);

/**
 * Largest triangle quality `h/ρ` of the current mesh.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
DtStatus dt_simulation_sigma_max(const struct DtSimulation *sim, double *out);

/**
 * Number of vertices and triangles of the current mesh.
 *
 * # Safety
 * `sim` must be a live handle; either output pointer may be null.
 */
DtStatus dt_simulation_counts(const struct DtSimulation *sim, size_t *vertices, size_t *triangles);

/**
 * Copies vertex coordinates as `x0 y0 z0 x1 …` into `buf`, which must
 * hold at least three values per vertex.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
DtStatus dt_simulation_copy_vertices(const struct DtSimulation *sim, double *buf, size_t len);

/**
 * Copies counter-clockwise vertex indices, three per triangle.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
DtStatus dt_simulation_copy_triangles(const struct DtSimulation *sim, uint64_t *buf, size_t len);

/**
 * Writes the current mesh as a legacy VTK file.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
DtStatus dt_simulation_write_vtk(const struct DtSimulation *sim, const char *path);

/**
 * Copies the last error message of this thread into `buf` with a
 * terminating NUL, truncating if needed. Returns the full message length
 * in bytes, without the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` writes, or null with `len` zero.
 */
size_t dt_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DETURCK_H */
