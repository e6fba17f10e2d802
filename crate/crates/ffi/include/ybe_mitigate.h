/* Copyright 2026 The ybe-mitigate Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef YBE_MITIGATE_H
#define YBE_MITIGATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum YbeStatus {
  YBE_STATUS_OK = 0,
  YBE_STATUS_NULL_POINTER = 1,
  YBE_STATUS_INVALID_ARGUMENT = 2,
  YBE_STATUS_COMPRESSION_FAILED = 3,
  YBE_STATUS_SIMULATION_FAILED = 4,
  YBE_STATUS_EXTRAPOLATION_FAILED = 5,
  YBE_STATUS_MODEL_ERROR = 6,
  // At least one pipeline cell failed; the other cells were written.
  YBE_STATUS_CELL_FAILED = 7,
  YBE_STATUS_IO = 8,
  YBE_STATUS_PANIC = 9,
} YbeStatus;

// Extrapolation model selector for [`ybe_zne_extrapolate`].
typedef enum YbeFitKind {
  YBE_FIT_KIND_LINEAR = 0,
  YBE_FIT_KIND_QUADRATIC = 1,
  YBE_FIT_KIND_EXPONENTIAL = 2,
} YbeFitKind;

// Opaque circuit handle.
typedef struct YbeCircuit YbeCircuit;

// Opaque trained-model handle.
typedef struct YbeModel YbeModel;

// Noise parameters for [`ybe_circuit_noisy_magnetization`].
typedef struct YbeNoise {
  double p2;
  double p1;
  double readout_flip;
  double wait_units_per_layer;
} YbeNoise;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *ybe_last_error(void);

// Builds the first-order Trotter circuit of the XY chain.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum YbeStatus ybe_trotter_circuit_new(size_t n_spins,
                                       double j_x,
                                       double j_y,
                                       double dt,
                                       size_t n_steps,
                                       struct YbeCircuit **out);

// # Safety
// `c` must be null or a handle from this library that has not been freed.
void ybe_circuit_free(struct YbeCircuit *c);

// Writes the block count, CNOT count (two per block) and layer depth.
//
// # Safety
// `c` must be a live handle; output pointers may be null to skip a value.
enum YbeStatus ybe_circuit_stats(const struct YbeCircuit *c,
                                 size_t *blocks,
                                 size_t *cnots,
                                 size_t *depth);

// Fully compresses `c` when `compressed_steps < 0`; otherwise compresses
// that many leading Trotter steps and merges the rest. The input handle is
// left untouched.
//
// # Safety
// `c` must be a live handle and `out` valid for one handle.
enum YbeStatus ybe_circuit_compress(const struct YbeCircuit *c,
                                    int64_t compressed_steps,
                                    struct YbeCircuit **out);

// Exact staggered magnetization `<m_s>` of the circuit applied to the Néel
// state under the given noise, from the density matrix (no shot noise).
//
// # Safety
// `c` must be a live handle; `noise` and `out` must be valid pointers.
enum YbeStatus ybe_circuit_noisy_magnetization(const struct YbeCircuit *c,
                                               const struct YbeNoise *noise,
                                               double lambda,
                                               double *out);

// Exact `m_s(t)` of the Néel state under the XY Hamiltonian.
//
// # Safety
// `times` must point to `len` readable values and `out` to `len` writable
// values.
enum YbeStatus ybe_exact_magnetization(size_t n_spins,
                                       double j_x,
                                       double j_y,
                                       const double *times,
                                       size_t len,
                                       double *out);

// Fits `E(λ)` and writes the extrapolated `E(0)`. The first scale must be 1.
//
// # Safety
// `lambdas` and `values` must point to `len` readable values; `out` must be
// writable.
enum YbeStatus ybe_zne_extrapolate(const double *lambdas,
                                   const double *values,
                                   size_t len,
                                   enum YbeFitKind kind,
                                   double *out);

// Loads a model checkpoint written by the pipeline.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string and `out` valid for one
// handle.
enum YbeStatus ybe_model_load(const char *path, struct YbeModel **out);

// Number of input features the model expects.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum YbeStatus ybe_model_n_features(const struct YbeModel *m, size_t *out);

// Evaluates the model on one feature vector `[fc, pc, t/T, N/10, ...]`.
//
// # Safety
// `m` must be a live handle, `x` must point to `len` readable values and
// `out` must be writable.
enum YbeStatus ybe_model_predict(const struct YbeModel *m,
                                 const double *x,
                                 size_t len,
                                 double *out);

// # Safety
// `m` must be null or a handle from this library that has not been freed.
void ybe_model_free(struct YbeModel *m);

// Runs the full pipeline. `config_json` may be null for defaults; a non-null
// `out_dir` overrides the configured output directory.
//
// # Safety
// Non-null arguments must be NUL-terminated UTF-8 strings.
enum YbeStatus ybe_run_pipeline(const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YBE_MITIGATE_H */
