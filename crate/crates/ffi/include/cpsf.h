#ifndef CPSF_H
#define CPSF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpsfStatus {
  CPSF_STATUS_OK = 0,
  CPSF_STATUS_NULL_POINTER = 1,
  CPSF_STATUS_INVALID_PARAMETER = 2,
  /**
   * Pole, near-singular solve or vanishing denominator.
   */
  CPSF_STATUS_NUMERICAL = 3,
  CPSF_STATUS_UNSTABLE = 4,
  CPSF_STATUS_PANIC = 5,
} CpsfStatus;

/**
 * Opaque model handle.
 */
typedef struct CpsfModel CpsfModel;

/**
 * Dimensional parameters; `lambda_*` are moduli and `phi_*` phases.
 */
typedef struct CpsfSystemParams {
  double kappa;
  double gamma_m;
  double gamma_d;
  double g;
  double big_g;
  double lambda_m;
  double lambda_d;
  double phi_m;
  double phi_d;
} CpsfSystemParams;

typedef struct CpsfGreens {
  double omega;
  double g_ret_aad_re;
  double g_ret_aad_im;
  double g_ret_aa_re;
  double g_ret_aa_im;
  double cpsf;
  double kappa_eff;
} CpsfGreens;

typedef struct CpsfOnResonance {
  double c_a;
  double c_a_prime;
  double c_a_dprime;
  /**
   * κ𝒜(0)
   */
  double m;
  double kappa_eff_ratio;
} CpsfOnResonance;

typedef struct CpsfStability {
  double c_m;
  double c_d;
  double xi_m_max;
  double xi_d_max;
  double margin;
  double max_real_part;
  bool stable_closed_form;
  bool stable_eigen;
} CpsfStability;

typedef struct CpsfOptimum {
  double xi_m;
  double xi_d;
  double achieved_m;
  bool feasible;
} CpsfOptimum;

typedef struct CpsfKeldysh {
  /**
   * −iG^k(ω)
   */
  double keldysh;
  double cpsf;
  double ratio;
  /**
   * NaN unless `t_eff_defined`.
   */
  double t_eff;
  bool t_eff_defined;
} CpsfKeldysh;

/**
 * Creates a model in κ = 1 units from cooperativities and paramps.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum CpsfStatus cpsf_model_new_dimensionless(double c0,
                                             double c1,
                                             double xi_m,
                                             double xi_d,
                                             double kappa_over_gamma_m,
                                             double gamma_ratio,
                                             struct CpsfModel **out);

/**
 * Creates a model from dimensional parameters.
 *
 * # Safety
 * `params` must point to a valid struct and `out` must be valid for writing.
 */
enum CpsfStatus cpsf_model_new_system(const struct CpsfSystemParams *params,
                                      struct CpsfModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from a `cpsf_model_new_*` call and not be used afterwards.
 */
void cpsf_model_free(struct CpsfModel *model);

/**
 * Retarded Green's functions, CPSF and effective damping at one frequency.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum CpsfStatus cpsf_greens(const struct CpsfModel *model, double omega, struct CpsfGreens *out);

/**
 * 𝒜(ω) at `n` frequencies, written to `cpsf_out[0..n]`.
 *
 * # Safety
 * `omegas` must be readable and `cpsf_out` writable for `n` doubles.
 */
enum CpsfStatus cpsf_spectrum(const struct CpsfModel *model,
                              const double *omegas,
                              size_t n,
                              double *cpsf_out);

/**
 * On-resonance cooperativity algebra.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum CpsfStatus cpsf_on_resonance(const struct CpsfModel *model, struct CpsfOnResonance *out);

/**
 * Closed-form and eigenvalue stability.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum CpsfStatus cpsf_stability(const struct CpsfModel *model, struct CpsfStability *out);

/**
 * Minimum-norm stable paramps with κ𝒜(0) = `target_m`. An unreachable
 * target returns `Ok` with `feasible = false`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum CpsfStatus cpsf_optimize(const struct CpsfModel *model,
                              double target_m,
                              struct CpsfOptimum *out);

/**
 * Keldysh function and effective temperature for thermal baths.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writing.
 */
enum CpsfStatus cpsf_keldysh(const struct CpsfModel *model,
                             double n_c,
                             double n_m,
                             double n_d,
                             double omega,
                             struct CpsfKeldysh *out);

/**
 * Spectral function a(ω) and F(ω) of a stable detuned parametric amplifier.
 *
 * # Safety
 * `a_out` and `f_out` must be valid for writing.
 */
enum CpsfStatus cpsf_opa_cpsf(double kappa,
                              double lambda,
                              double delta_p,
                              double omega,
                              double *a_out,
                              double *f_out);

/**
 * Message of the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *cpsf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpsf_version(void);

#endif  /* CPSF_H */
