#ifndef REVIVAL_H
#define REVIVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Result code of every fallible call.
 */
typedef enum RevivalStatus {
  REVIVAL_STATUS_OK = 0,
  REVIVAL_STATUS_NULL_POINTER = 1,
  REVIVAL_STATUS_INVALID_ARGUMENT = 2,
  REVIVAL_STATUS_INVALID_STATE = 3,
  REVIVAL_STATUS_NON_PHYSICAL_CHANNEL = 4,
  REVIVAL_STATUS_DEGENERATE_CONDITIONING = 5,
  REVIVAL_STATUS_NUMERIC_FAILURE = 6,
  REVIVAL_STATUS_PROTOCOL = 7,
  REVIVAL_STATUS_PANIC = 8,
} RevivalStatus;

/**
 * Normalized list of Gaussian spectral lines.
 */
typedef struct RevivalSpectrum RevivalSpectrum;

/**
 * Two-qubit density matrix in the `{HH, HV, VH, VV}` basis.
 */
typedef struct RevivalState RevivalState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *revival_last_error_message(void);

/**
 * Library version as a NUL-terminated string with static lifetime.
 */
const char *revival_version(void);

/**
 * State from row-major real and imaginary parts (16 entries each); validated.
 *
 * # Safety
 * `re` and `im` must point to 16 readable doubles; `out` must be writable.
 */
enum RevivalStatus revival_state_from_parts(const double *re,
                                            const double *im,
                                            struct RevivalState **out);

/**
 * `|Φ⁺⟩ = (|HH⟩ + |VV⟩)/√2`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RevivalStatus revival_state_bell(struct RevivalState **out);

/**
 * Maximally entangled input with mode b dephased by `κ_b`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RevivalStatus revival_state_maximal(double kb_re, double kb_im, struct RevivalState **out);

/**
 * Partially entangled family with coherences `κ_a` and `κ_b`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RevivalStatus revival_state_partial(double ka_re,
                                         double ka_im,
                                         double kb_re,
                                         double kb_im,
                                         struct RevivalState **out);

/**
 * Dephases one photon (`mode` 0 for a, 1 for b) into a new state.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum RevivalStatus revival_state_dephase(const struct RevivalState *state,
                                         double k_re,
                                         double k_im,
                                         uint32_t mode,
                                         struct RevivalState **out);

/**
 * Entry `(row, col)` of the density matrix.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` must be writable.
 */
enum RevivalStatus revival_state_entry(const struct RevivalState *state,
                                       size_t row,
                                       size_t col,
                                       double *re,
                                       double *im);

/**
 * Releases a state handle. Null is ignored.
 *
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void revival_state_free(struct RevivalState *state);

/**
 * Signed Wootters quantity `√χ₁ − √χ₂ − √χ₃ − √χ₄`.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum RevivalStatus revival_gamma(const struct RevivalState *state, double *out);

/**
 * Concurrence `max(0, Γ)`.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum RevivalStatus revival_concurrence(const struct RevivalState *state, double *out);

/**
 * Degree of polarization of photon b heralded by `H` on photon a.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum RevivalStatus revival_degree_of_polarization(const struct RevivalState *state, double *out);

/**
 * Root fidelity `Tr √(√ρ σ √ρ)`.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum RevivalStatus revival_fidelity(const struct RevivalState *rho,
                                    const struct RevivalState *sigma,
                                    double *out);

/**
 * CHSH value at analyzer angles `{θ₁, θ₁′, θ₂, θ₂′}` in degrees.
 *
 * # Safety
 * `state` must be a live handle; `angles_deg` must point to 4 doubles; `out` must be writable.
 */
enum RevivalStatus revival_chsh(const struct RevivalState *state,
                                const double *angles_deg,
                                double *out);

/**
 * Largest CHSH value over linear-polarization analyzers, and the angles attaining it.
 *
 * # Safety
 * `state` must be a live handle; `angles_out` must hold 4 doubles; `s_out` must be writable.
 */
enum RevivalStatus revival_chsh_optimize(const struct RevivalState *state,
                                         double *angles_out,
                                         double *s_out);

/**
 * Maximal CHSH value over all projective measurements.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum RevivalStatus revival_horodecki_smax(const struct RevivalState *state, double *out);

/**
 * Spectrum from `n` lines; amplitudes are renormalized to sum to one.
 *
 * # Safety
 * The three arrays must hold `n` doubles each; `out` must be writable.
 */
enum RevivalStatus revival_spectrum_new(size_t n,
                                        const double *amplitudes,
                                        const double *centers_nm,
                                        const double *widths_nm,
                                        double lambda0_nm,
                                        struct RevivalSpectrum **out);

/**
 * Releases a spectrum handle. Null is ignored.
 *
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void revival_spectrum_free(struct RevivalSpectrum *spectrum);

/**
 * Dephasing kernel `κ(x)` of a spectrum at delay `x` (units of `λ₀`).
 *
 * # Safety
 * `spectrum` must be a live handle; `re` and `im` must be writable.
 */
enum RevivalStatus revival_kernel(const struct RevivalSpectrum *spectrum,
                                  double x,
                                  double *re,
                                  double *im);

/**
 * Kernel of a single Gaussian envelope.
 *
 * # Safety
 * `re` and `im` must be writable.
 */
enum RevivalStatus revival_kernel_gaussian(double center_nm,
                                           double width_nm,
                                           double lambda0_nm,
                                           double x,
                                           double *re,
                                           double *im);

/**
 * Simulated coincidence counts for the 16 settings `{H,V,D,R}²`, id `4a + b`.
 *
 * # Safety
 * `state` must be a live handle; `counts_out` must hold 16 `uint64_t`.
 */
enum RevivalStatus revival_simulate_counts(const struct RevivalState *state,
                                           uint64_t n_per_setting,
                                           uint64_t seed,
                                           bool noiseless,
                                           uint64_t *counts_out);

/**
 * Maximum-likelihood state from 16 counts ordered by setting id.
 *
 * # Safety
 * `counts` must hold 16 `uint64_t`; `out` must be writable.
 */
enum RevivalStatus revival_tomography_mle(const uint64_t *counts, struct RevivalState **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVIVAL_H */
