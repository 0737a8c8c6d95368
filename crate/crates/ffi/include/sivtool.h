#ifndef SIVTOOL_H
#define SIVTOOL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 and 3 match the command-line exit codes.
 */
typedef enum SivtoolStatus {
  SIVTOOL_STATUS_OK = 0,
  SIVTOOL_STATUS_NULL_POINTER = 1,
  SIVTOOL_STATUS_VALIDATION = 2,
  SIVTOOL_STATUS_NON_CONVERGENCE = 3,
  SIVTOOL_STATUS_DOMAIN = 4,
  SIVTOOL_STATUS_PANIC = 5,
} SivtoolStatus;

/**
 * Opaque product Jahn-Teller parameter set.
 */
typedef struct SivtoolParams SivtoolParams;

/**
 * Opaque sampled 1D potential.
 */
typedef struct SivtoolPotential SivtoolPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sivtool_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated) and returns the full message length in bytes,
 * or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t sivtool_last_error(char *buf, size_t len);

/**
 * Creates a parameter set labeled by pressure in GPa. Energies in meV.
 *
 * # Safety
 * `out_params` must be valid for writes.
 */
enum SivtoolStatus sivtool_params_new(double pressure_gpa,
                                      double f_g,
                                      double f_u,
                                      double hbar_omega,
                                      double lambda,
                                      double xi,
                                      struct SivtoolParams **out_params);

/**
 * Releases a parameter set; null is ignored.
 *
 * # Safety
 * `params` must come from [`sivtool_params_new`] and not be used afterwards.
 */
void sivtool_params_free(struct SivtoolParams *params);

/**
 * Closed-form Jahn-Teller stabilization energies (meV).
 *
 * # Safety
 * Pointers must be valid.
 */
enum SivtoolStatus sivtool_jt_energies(const struct SivtoolParams *params,
                                       double *out_e_jt1,
                                       double *out_e_jt2);

/**
 * Dark-bright vibronic gap (meV) and Ham factors from a truncated
 * diagonalization with `n_max` bosons and `k` eigenpairs.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SivtoolStatus sivtool_vibronic_gap(const struct SivtoolParams *params,
                                        size_t n_max,
                                        size_t k,
                                        double tol,
                                        double *out_delta_mev,
                                        double *out_p_u,
                                        double *out_p_g);

/**
 * Builds a potential from `n` uniform samples (Angstrom sqrt(amu), meV).
 *
 * # Safety
 * `q` and `v` must hold `n` values; `out_potential` must be valid.
 */
enum SivtoolStatus sivtool_potential_new(const double *q,
                                         const double *v,
                                         size_t n,
                                         double mass_amu,
                                         struct SivtoolPotential **out_potential);

/**
 * Releases a potential; null is ignored.
 *
 * # Safety
 * `potential` must come from [`sivtool_potential_new`] and not be used afterwards.
 */
void sivtool_potential_free(struct SivtoolPotential *potential);

/**
 * Tunneling splitting (meV) and rate (GHz) of a symmetric double well.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SivtoolStatus sivtool_tunneling_splitting(const struct SivtoolPotential *potential,
                                               double *out_delta_mev,
                                               double *out_nu_ghz);

/**
 * Radiative rate (1/s) and lifetime (ns; +infinity for a zero dipole).
 *
 * # Safety
 * Pointers must be valid.
 */
enum SivtoolStatus sivtool_radiative_rate(double e_zpl_ev,
                                          double refractive_index,
                                          double mu_debye,
                                          double *out_gamma,
                                          double *out_tau_ns);

/**
 * Six zero-field hyperfine levels (MHz, ascending) for S = 1, I = 1/2.
 *
 * # Safety
 * `out_levels` must be valid for 6 writes.
 */
enum SivtoolStatus sivtool_hf_levels(double a_par, double a_perp, double *out_levels);

/**
 * Ordinary least squares over `n` points.
 *
 * # Safety
 * `x` and `y` must hold `n` values; outputs must be valid.
 */
enum SivtoolStatus sivtool_linear_calibration(const double *x,
                                              const double *y,
                                              size_t n,
                                              double *out_slope,
                                              double *out_intercept,
                                              double *out_r_squared);

/**
 * Charge transition level (eV above the VBM) between charges q_a and q_b.
 *
 * # Safety
 * `out_level` must be valid.
 */
enum SivtoolStatus sivtool_transition_level(int32_t q_a,
                                            double e_tot_a,
                                            double e_el_a,
                                            double delta_v_a,
                                            int32_t q_b,
                                            double e_tot_b,
                                            double e_el_b,
                                            double delta_v_b,
                                            double e_vbm,
                                            double *out_level);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIVTOOL_H */
