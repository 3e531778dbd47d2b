#ifndef RIS_H
#define RIS_H

#include <stddef.h>
#include <stdint.h>

typedef enum RisStatus {
  RIS_STATUS_OK = 0,
  RIS_STATUS_NULL_POINTER = 1,
  RIS_STATUS_INVALID_ARGUMENT = 2,
  RIS_STATUS_BUFFER_TOO_SMALL = 3,
  RIS_STATUS_NOT_FOUND = 4,
  RIS_STATUS_DOMAIN = 5,
  RIS_STATUS_REJECTED_CONFIGURATION = 6,
  RIS_STATUS_DEGENERATE_DATASET = 7,
  RIS_STATUS_CONFIG = 8,
  RIS_STATUS_FORMAT = 9,
  RIS_STATUS_FINGERPRINT = 10,
  RIS_STATUS_GENERATION_ABORTED = 11,
  RIS_STATUS_NON_FINITE_LOSS = 12,
  RIS_STATUS_IO = 13,
  RIS_STATUS_PANIC = 14,
} RisStatus;

/*
 In-memory lookup table of optimized amplitude vectors.
 */
typedef struct RisLookupTable RisLookupTable;

/*
 Exact simulator built from a physics configuration.
 */
typedef struct RisSimulator RisSimulator;

/*
 Trained network loaded from a model file.
 */
typedef struct RisSurrogate RisSurrogate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Description of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *ris_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ris_version(void);

/*
 Simulator with the built-in physics defaults.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum RisStatus ris_simulator_new_default(struct RisSimulator **out);

/*
 Simulator from the `[physics]` section of a TOML run configuration.

 # Safety
 `config_path` must be a NUL-terminated string; `out` as in
 [`ris_simulator_new_default`].
 */
enum RisStatus ris_simulator_from_config(const char *config_path, struct RisSimulator **out);

/*
 # Safety
 `sim` must come from a `ris_simulator_*` constructor, or be null.
 */
void ris_simulator_free(struct RisSimulator *sim);

/*
 Number of BSW harmonics, the length of every amplitude vector.

 # Safety
 `sim` must be a live handle or null (which yields 0).
 */
size_t ris_simulator_harmonics(const struct RisSimulator *sim);

/*
 Number of angles in the sampling grid, the length of every pattern.

 # Safety
 `sim` must be a live handle or null (which yields 0).
 */
size_t ris_simulator_grid_len(const struct RisSimulator *sim);

/*
 Writes the grid angles in degrees.

 # Safety
 `angles` must point to `len` writable doubles.
 */
enum RisStatus ris_simulator_grid_angles(const struct RisSimulator *sim,
                                         double *angles,
                                         size_t len);

/*
 Radiation pattern (dB) of amplitude vector `w` over the grid.

 # Safety
 `w` must point to `w_len` doubles and `powers_db` to `len` writable doubles.
 */
enum RisStatus ris_simulator_pattern(const struct RisSimulator *sim,
                                     const double *w,
                                     size_t w_len,
                                     double *powers_db,
                                     size_t len);

/*
 Exact SLNR (dB) of `w` for the given beam and null directions.

 # Safety
 Arrays must hold the stated number of doubles; `slnr_db` must be writable.
 */
enum RisStatus ris_simulator_slnr(const struct RisSimulator *sim,
                                  const double *w,
                                  size_t w_len,
                                  const double *beams,
                                  size_t beam_count,
                                  const double *nulls,
                                  size_t null_count,
                                  double *slnr_db);

/*
 Loads a model file; its fingerprint must match the simulator's physics.

 # Safety
 `model_path` must be a NUL-terminated string; `out` must be writable.
 */
enum RisStatus ris_surrogate_load(const struct RisSimulator *sim,
                                  const char *model_path,
                                  struct RisSurrogate **out);

/*
 # Safety
 `model` must come from [`ris_surrogate_load`], or be null.
 */
void ris_surrogate_free(struct RisSurrogate *model);

/*
 Predicted pattern (dB) of `w`.

 # Safety
 `w` must point to `w_len` doubles and `powers_db` to `len` writable doubles.
 */
enum RisStatus ris_surrogate_predict(const struct RisSurrogate *model,
                                     const double *w,
                                     size_t w_len,
                                     double *powers_db,
                                     size_t len);

/*
 # Safety
 `out` must be writable.
 */
enum RisStatus ris_table_new(struct RisLookupTable **out);

/*
 Loads a table file. Malformed lines are skipped.

 # Safety
 `table_path` must be a NUL-terminated string; `out` must be writable.
 */
enum RisStatus ris_table_load(const char *table_path, struct RisLookupTable **out);

/*
 # Safety
 `table_path` must be a NUL-terminated string.
 */
enum RisStatus ris_table_save(const struct RisLookupTable *table, const char *table_path);

/*
 # Safety
 `table` must come from a `ris_table_*` constructor, or be null.
 */
void ris_table_free(struct RisLookupTable *table);

/*
 # Safety
 `table` must be a live handle or null (which yields 0).
 */
size_t ris_table_len(const struct RisLookupTable *table);

/*
 Exact lookup for the backend selected by `model` (null for the exact
 simulator). Returns `RIS_STATUS_NOT_FOUND` when there is no entry.

 # Safety
 Arrays must hold the stated number of doubles; outputs must be writable.
 */
enum RisStatus ris_table_lookup(const struct RisLookupTable *table,
                                const struct RisSimulator *sim,
                                const struct RisSurrogate *model,
                                const double *beams,
                                size_t beam_count,
                                const double *nulls,
                                size_t null_count,
                                double *w_out,
                                size_t w_len,
                                double *slnr_db);

/*
 Optimizes amplitudes for the given directions.

 `model` selects the network backend; null uses the exact simulator. With a
 null `table` this is one annealing run from zero amplitudes. Otherwise the
 table is consulted and extended in place, and cold starts read the dataset
 at `dataset_path` (may be null when the table already holds a usable entry).
 `max_iter` of 0 keeps the default iteration budget. `slnr_db` receives the
 backend's own SLNR.

 # Safety
 Arrays must hold the stated number of doubles; strings must be
 NUL-terminated; outputs must be writable.
 */
enum RisStatus ris_optimize(const struct RisSimulator *sim,
                            const struct RisSurrogate *model,
                            struct RisLookupTable *table,
                            const char *dataset_path,
                            const double *beams,
                            size_t beam_count,
                            const double *nulls,
                            size_t null_count,
                            uint64_t seed,
                            size_t max_iter,
                            double *w_out,
                            size_t w_len,
                            double *slnr_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIS_H */
