#ifndef PHOTON_SLH_H
#define PHOTON_SLH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_PARSE = 3,
  // Model fails the single-photon linearity conditions or is unstable.
  PS_STATUS_CONDITION = 4,
  // Time grid too short or too coarse for the filter.
  PS_STATUS_GRID_INSUFFICIENT = 5,
  PS_STATUS_SINGULAR_LOOP = 6,
  PS_STATUS_PANIC = 7,
} PsStatus;

typedef struct PsModel PsModel;

typedef struct PsPulse PsPulse;

typedef struct PsTransfer PsTransfer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or an empty string.
// Valid until the next call into this library on the same thread.
const char *ps_last_error(void);

// Library version as a static NUL-terminated string.
const char *ps_version(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must come from this library or be null.
void ps_string_free(char *s);

// Parses a model from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum PsStatus ps_model_from_json(const char *json, struct PsModel **out);

// Single-channel two-level emitter with decay rate `kappa` and transition
// frequency `omega_c`.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_model_two_level(double kappa, double omega_c, struct PsModel **out);

// Serializes a model to JSON. Release the string with [`ps_string_free`].
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum PsStatus ps_model_to_json(const struct PsModel *model, char **out);

// # Safety
// `model` must be a live handle; the outputs must be writable or null.
enum PsStatus ps_model_dims(const struct PsModel *model, size_t *channels, size_t *levels);

// Checks the single-photon linearity conditions. `passed` receives 1 or 0;
// the call itself succeeds either way.
//
// # Safety
// `model` must be a live handle; `passed` must be writable.
enum PsStatus ps_model_validate(const struct PsModel *model, double tol, int32_t *passed);

// Series product: the photon passes `first`, then `second`.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PsStatus ps_model_series(const struct PsModel *first,
                              const struct PsModel *second,
                              struct PsModel **out);

// Feeds output channel 2 of a two-channel model back into input channel 2.
// `delta` receives the frequency shift and may be null.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum PsStatus ps_model_feedback(const struct PsModel *model, struct PsModel **out, double *delta);

// # Safety
// `model` must come from this library or be null; it is invalid afterwards.
void ps_model_free(struct PsModel *model);

// Extracts the photon transfer function of a validated model.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum PsStatus ps_transfer_from_model(const struct PsModel *model,
                                     double tol,
                                     struct PsTransfer **out);

// Cascade: the photon passes `first`, then `next`.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PsStatus ps_transfer_cascade(const struct PsTransfer *first,
                                  const struct PsTransfer *next,
                                  struct PsTransfer **out);

// # Safety
// `transfer` must be a live handle; `out` must be writable.
enum PsStatus ps_transfer_channels(const struct PsTransfer *transfer, size_t *out);

// Writes the `n x n` response matrix at `omega` row-major into `out` as
// `2 n²` interleaved doubles. `len` is the capacity of `out` in doubles.
//
// # Safety
// `transfer` must be a live handle; `out` must hold `len` doubles.
enum PsStatus ps_transfer_response(const struct PsTransfer *transfer,
                                   double omega,
                                   double *out,
                                   size_t len);

// # Safety
// `transfer` must come from this library or be null.
void ps_transfer_free(struct PsTransfer *transfer);

// Sampled pulse on `t_start + k dt`, `k < len`. `samples` holds
// `2 len n_channels` doubles, channel-major and interleaved.
// `len` must be a power of two.
//
// # Safety
// `samples` must hold the stated number of doubles; `out` must be writable.
enum PsStatus ps_pulse_from_samples(double t_start,
                                    double dt,
                                    size_t len,
                                    size_t n_channels,
                                    const double *samples,
                                    struct PsPulse **out);

// Normalized Gaussian wavepacket in `channel`, vacuum elsewhere.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_pulse_gaussian(double t_start,
                                double dt,
                                size_t len,
                                size_t n_channels,
                                size_t channel,
                                double center,
                                double width,
                                double carrier,
                                struct PsPulse **out);

// # Safety
// `pulse` must be a live handle; the outputs must be writable or null.
enum PsStatus ps_pulse_dims(const struct PsPulse *pulse, size_t *len, size_t *n_channels);

// Copies one channel into `out` as `2 len` interleaved doubles.
//
// # Safety
// `pulse` must be a live handle; `out` must hold `cap` doubles.
enum PsStatus ps_pulse_samples(const struct PsPulse *pulse,
                               size_t channel,
                               double *out,
                               size_t cap);

// L² norm over all channels.
//
// # Safety
// `pulse` must be a live handle; `out` must be writable.
enum PsStatus ps_pulse_norm(const struct PsPulse *pulse, double *out);

// # Safety
// `pulse` must come from this library or be null.
void ps_pulse_free(struct PsPulse *pulse);

// Output wavepacket via frequency-domain filtering.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PsStatus ps_shape_fft(const struct PsPulse *pulse,
                           const struct PsTransfer *transfer,
                           struct PsPulse **out);

// Output wavepacket via time-domain integration of the single-stage filter.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PsStatus ps_shape_ode(const struct PsPulse *pulse,
                           const struct PsTransfer *transfer,
                           struct PsPulse **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTON_SLH_H */
