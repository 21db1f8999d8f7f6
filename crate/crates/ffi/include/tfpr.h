#ifndef TFPR_H
#define TFPR_H

#include <stddef.h>
#include <stdint.h>

typedef enum TfprStatus {
  TFPR_STATUS_OK = 0,
  TFPR_STATUS_INVALID_ARGUMENT = 1,
  TFPR_STATUS_INVALID_GRID = 2,
  TFPR_STATUS_DIMENSION = 3,
  TFPR_STATUS_NON_FINITE = 4,
  TFPR_STATUS_NOT_A_FRAME = 5,
  TFPR_STATUS_NUMERICAL = 6,
  TFPR_STATUS_DATA = 7,
  TFPR_STATUS_NULL_POINTER = 8,
  TFPR_STATUS_PANIC = 9,
} TfprStatus;

typedef enum TfprWindow {
  TFPR_WINDOW_GAUSSIAN = 0,
  TFPR_WINDOW_HANN = 1,
  TFPR_WINDOW_BLACKMAN = 2,
  TFPR_WINDOW_BARTLETT = 3,
} TfprWindow;

// Analysis window, dual window and lattice for one signal length.
typedef struct TfprSystem TfprSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *tfpr_last_error_message(void);

// System for a requested λ and redundancy. The lattice is chosen among the
// divisors of `len`; the realized λ is available from
// [`tfpr_system_lambda`].
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TfprStatus tfpr_system_new(enum TfprWindow window,
                                double lambda,
                                size_t redundancy,
                                size_t len,
                                uint32_t sample_rate,
                                struct TfprSystem **out);

// System on an explicit lattice, window matched to it (λ = aM/ξ_s).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TfprStatus tfpr_system_new_grid(enum TfprWindow window,
                                     size_t hop,
                                     size_t channels,
                                     size_t len,
                                     uint32_t sample_rate,
                                     struct TfprSystem **out);

// # Safety
// `sys` must be null or a handle from `tfpr_system_new*` not yet freed.
void tfpr_system_free(struct TfprSystem *sys);

// Hop size `a`. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_hop(const struct TfprSystem *sys);

// Channel count `M`. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_channels(const struct TfprSystem *sys);

// Signal length `L`. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_len(const struct TfprSystem *sys);

// Frame count `L / a`. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_frames(const struct TfprSystem *sys);

// Stored channels per frame, `M/2 + 1`. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_half_channels(const struct TfprSystem *sys);

// Length of coefficient and magnitude arrays. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t tfpr_system_coeff_count(const struct TfprSystem *sys);

// Time-frequency ratio of the window. Zero for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
double tfpr_system_lambda(const struct TfprSystem *sys);

// Forward STFT of `len` samples into `count` coefficients.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_stft(const struct TfprSystem *sys,
                          const double *signal,
                          size_t len,
                          double *out_re,
                          double *out_im,
                          size_t count);

// Inverse STFT with the canonical dual window.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_istft(const struct TfprSystem *sys,
                           const double *re,
                           const double *im,
                           size_t count,
                           double *out_signal,
                           size_t len);

// Phase gradient heap integration. `out_phase` may be null.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_pghi(const struct TfprSystem *sys,
                          const double *mags,
                          size_t count,
                          double rel_tolerance,
                          uint64_t seed,
                          double *out_signal,
                          size_t len,
                          double *out_phase);

// Fast Griffin-Lim from zero phase. `out_phase` may be null.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_fgla(const struct TfprSystem *sys,
                          const double *mags,
                          size_t count,
                          double alpha,
                          size_t iterations,
                          double *out_signal,
                          size_t len,
                          double *out_phase);

// Single-pass spectrogram inversion. `out_phase` may be null.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_spsi(const struct TfprSystem *sys,
                          const double *mags,
                          size_t count,
                          double *out_signal,
                          size_t len,
                          double *out_phase);

// Spectrogram SNR in dB on the fixed reference analysis; `+inf` for a
// perfect match.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum TfprStatus tfpr_snr_ms(const double *original,
                            const double *reconstructed,
                            size_t len,
                            uint32_t sample_rate,
                            double *out_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFPR_H */
