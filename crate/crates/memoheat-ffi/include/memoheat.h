/* memoheat C API: modal solver for heat conduction with exponential-sum memory kernels. */

#ifndef MEMOHEAT_H
#define MEMOHEAT_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which time-domain scheme `mh_solve_mode` uses.
typedef enum MhMethod {
  MH_METHOD_ODE = 0,
  MH_METHOD_VOLTERRA = 1,
} MhMethod;

// Status code of every fallible API call.
typedef enum MhStatus {
  MH_STATUS_OK = 0,
  MH_STATUS_NULL_POINTER = 1,
  MH_STATUS_INVALID_ARGUMENT = 2,
  MH_STATUS_VALIDATION = 3,
  MH_STATUS_POLE_HIT = 4,
  MH_STATUS_SPECTRUM_POINT = 5,
  MH_STATUS_SOLVER_FAILURE = 6,
  MH_STATUS_NOT_CERTIFIED = 7,
  MH_STATUS_INTERNAL = 8,
} MhStatus;

// Laplace-domain symbol selector for `mh_symbol`.
typedef enum MhSymbol {
  MH_SYMBOL_G = 0,
  MH_SYMBOL_G0 = 1,
  MH_SYMBOL_INV_G = 2,
  MH_SYMBOL_INV_G0 = 3,
  MH_SYMBOL_THETA = 4,
  MH_SYMBOL_D = 5,
} MhSymbol;

// Opaque validated kernel handle.
typedef struct MhKernel MhKernel;

// Opaque certified-spectrum handle.
typedef struct MhSpectrum MhSpectrum;

// Opaque solved-mode handle.
typedef struct MhTrajectory MhTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Human-readable description of a status code (static storage).
const char *mh_status_message(enum MhStatus status);

// Builds a validated kernel from `len` amplitude/rate pairs.
//
// # Safety
// `amplitudes` and `rates` must point to `len` readable doubles and
// `out` to a writable handle slot.
enum MhStatus mh_kernel_new(const double *amplitudes,
                            const double *rates,
                            size_t len,
                            struct MhKernel **out);

// Frees a kernel handle; accepts null.
//
// # Safety
// `kernel` must come from `mh_kernel_new` and not be freed twice.
void mh_kernel_free(struct MhKernel *kernel);

// Number of exponential terms M.
//
// # Safety
// `kernel` must be a live handle.
size_t mh_kernel_len(const struct MhKernel *kernel);

// k(t) = Σ aₖ e^{−bₖt}.
//
// # Safety
// `kernel` must be a live handle and `out` writable.
enum MhStatus mh_kernel_eval_k(const struct MhKernel *kernel, double t, double *out);

// q(t) = ∫₀ᵗ k.
//
// # Safety
// `kernel` must be a live handle and `out` writable.
enum MhStatus mh_kernel_eval_q(const struct MhKernel *kernel, double t, double *out);

// Moment sums α = Σaₖ, β = Σaₖbₖ, γ = Σaₖbₖ², and Σaₖ/bₖ (+∞ when a
// zero-rate term carries amplitude). Any out-pointer may be null.
//
// # Safety
// `kernel` must be a live handle; non-null out-pointers writable.
enum MhStatus mh_kernel_moments(const struct MhKernel *kernel,
                                double *alpha,
                                double *beta,
                                double *gamma,
                                double *c0_sum);

// K(z) = Σ aₖ/(z+bₖ) at z = re + i·im.
//
// # Safety
// `kernel` must be a live handle; `out_re`, `out_im` writable.
enum MhStatus mh_kernel_laplace(const struct MhKernel *kernel,
                                double re,
                                double im,
                                double *out_re,
                                double *out_im);

// Laplace-domain symbol (G, G⁰, their reciprocals, Θ for unit datum, or D)
// for mode n at z = re + i·im.
//
// # Safety
// `kernel` must be a live handle; `out_re`, `out_im` writable.
enum MhStatus mh_symbol(const struct MhKernel *kernel,
                        uint32_t n,
                        enum MhSymbol kind,
                        double re,
                        double im,
                        double *out_re,
                        double *out_im);

// Solves one mode with zero forcing on the uniform grid [0, t_end] and
// returns a trajectory handle.
//
// # Safety
// `kernel` must be a live handle and `out` writable.
enum MhStatus mh_solve_mode(const struct MhKernel *kernel,
                            uint32_t n,
                            double xi_n,
                            double t_end,
                            double step,
                            enum MhMethod method,
                            struct MhTrajectory **out);

// Number of samples (grid points) in a trajectory.
//
// # Safety
// `traj` must be a live handle.
size_t mh_trajectory_len(const struct MhTrajectory *traj);

// Whether the solve satisfied the n·√α·step resolution certificate.
//
// # Safety
// `traj` must be a live handle.
bool mh_trajectory_step_certified(const struct MhTrajectory *traj);

// Copies up to `cap` samples of t, θ, θ' into the caller's buffers (any of
// which may be null to skip) and returns the number written.
//
// # Safety
// `traj` must be a live handle; non-null buffers must hold `cap` doubles.
size_t mh_trajectory_copy(const struct MhTrajectory *traj,
                          double *t_out,
                          double *theta_out,
                          double *theta_dot_out,
                          size_t cap);

// Frees a trajectory handle; accepts null.
//
// # Safety
// `traj` must come from `mh_solve_mode` and not be freed twice.
void mh_trajectory_free(struct MhTrajectory *traj);

// Computes the certified spectrum of mode n (all zeros of Gₙ) with the
// requested residual tolerance.
//
// # Safety
// `kernel` must be a live handle and `out` writable.
enum MhStatus mh_spectrum_compute(const struct MhKernel *kernel,
                                  uint32_t n,
                                  double tol,
                                  struct MhSpectrum **out);

// Number of certified roots (with multiplicity).
//
// # Safety
// `spectrum` must be a live handle.
size_t mh_spectrum_len(const struct MhSpectrum *spectrum);

// Root `idx` and its residual |Gₙ(root)|; out-pointers may be null.
//
// # Safety
// `spectrum` must be a live handle; non-null out-pointers writable.
enum MhStatus mh_spectrum_get(const struct MhSpectrum *spectrum,
                              size_t idx,
                              double *out_re,
                              double *out_im,
                              double *out_residual);

// Frees a spectrum handle; accepts null.
//
// # Safety
// `spectrum` must come from `mh_spectrum_compute` and not be freed twice.
void mh_spectrum_free(struct MhSpectrum *spectrum);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MEMOHEAT_H */
