#ifndef SEL_LAB_H
#define SEL_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Domain underlying the `L^p` space.
 */
typedef enum SelDomain {
  SelDomain_WholeSpace = 0,
  SelDomain_Ball = 1,
  SelDomain_Exterior = 2,
} SelDomain;

/**
 * Status code returned by every fallible entry point.  `InvalidInput` and
 * `NumericFailure` match the CLI exit codes 2 and 3.
 */
typedef enum SelStatus {
  SelStatus_Ok = 0,
  SelStatus_NullPointer = 1,
  SelStatus_InvalidInput = 2,
  SelStatus_NumericFailure = 3,
} SelStatus;

/**
 * Which realizations of the operator generate an analytic semigroup.
 */
typedef enum SelVerdict {
  SelVerdict_GeneratesMin = 0,
  SelVerdict_GeneratesIntOnly = 1,
  SelVerdict_GeneratesMax = 2,
  SelVerdict_GeneratesMinAndMax = 3,
  SelVerdict_NoRealizationGenerates = 4,
  SelVerdict_Alpha2AllP = 5,
  SelVerdict_NegativeDiscriminant = 6,
} SelVerdict;

/**
 * Opaque handle: validated operator coefficients.
 */
typedef struct SelParams SelParams;

/**
 * Opaque handle: positive radial kernel pair for fixed `(params, lambda)`.
 */
typedef struct SelRadialPair SelRadialPair;

/**
 * Flattened classification record.
 *
 * The `lo`/`hi` fields carry the generation window in the variable `N/p`
 * and are meaningful only when `has_interval` is set; likewise the
 * `theta_*` fields and `has_theta_interval` / `has_theta0`.  `selfadjoint`
 * is a tri-state: -1 = not applicable (needs `c = alpha` and `p = 2`),
 * 0 = no, 1 = yes.
 */
typedef struct SelClassification {
  enum SelVerdict verdict;
  double n_over_p;
  bool has_interval;
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;
  bool int_eq_min;
  bool int_eq_max;
  int8_t selfadjoint;
  bool has_theta_interval;
  double theta_lo;
  double theta_hi;
  bool theta_lo_closed;
  bool theta_hi_closed;
  bool has_theta0;
  double theta0;
} SelClassification;

/**
 * Modified Bessel values of one order at one argument.  Plain
 * `I_nu(x)`, `K_nu(x)` and x-derivatives, or the exponentially scaled
 * variants `e^{-x} I`, `e^{x} K` when requested.
 */
typedef struct SelBessel {
  double i;
  double k;
  double di;
  double dk;
} SelBessel;

/**
 * Values and derivatives of the radial kernel pair at one radius.
 * `u1` decays at the singular end of the scale, `u2` at the other.
 */
typedef struct SelPairEval {
  double u1;
  double du1;
  double u2;
  double du2;
} SelPairEval;

/**
 * Non-positivity witness: a location `s` in the log variable and the
 * (negative) value of the candidate kernel average there.
 */
typedef struct SelWitness {
  double s;
  double value;
} SelWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validate coefficients of `L = |x|^a lap + c |x|^{a-1} (x/|x|).grad
 * - b |x|^{a-2}` and allocate a handle.  Free with `sel_params_free`.
 */
enum SelStatus sel_params_new(uint32_t dim,
                              double alpha,
                              double b,
                              double c,
                              struct SelParams **out);

/**
 * Release a handle from `sel_params_new`.  Null is a no-op.
 */
void sel_params_free(struct SelParams *params);

/**
 * Discriminant `D = b + ((N - 2 + c) / 2)^2` of the indicial polynomial.
 */
enum SelStatus sel_params_discriminant(const struct SelParams *params, double *out);

/**
 * Vertex `s0 = (N - 2 + c) / 2` of the indicial polynomial.
 */
enum SelStatus sel_params_s0(const struct SelParams *params, double *out);

/**
 * Indicial polynomial `f(s) = b + s (N - 2 + c - s)`.
 */
enum SelStatus sel_params_f_eval(const struct SelParams *params, double s, double *out);

/**
 * Growth bound `b - (N/p) (N - N/p - 2 + c)` of the `L^p` semigroup norm
 * in the scale-free case `alpha = 2`.  Requires `1 < p < infinity`.
 */
enum SelStatus sel_growth_exponent(const struct SelParams *params, double p, double *out);

/**
 * Decide which realizations generate an analytic semigroup on
 * `L^p(domain)` and flatten the result.
 */
enum SelStatus sel_classify(const struct SelParams *params,
                            double p,
                            enum SelDomain domain,
                            struct SelClassification *out);

/**
 * Modified Bessel `I_nu(x)`, `K_nu(x)` with derivatives; with `scaled`
 * set, the overflow-free variants `e^{-x} I`, `e^{x} K` instead.
 */
enum SelStatus sel_bessel_ik(double nu, double x, bool scaled, struct SelBessel *out);

/**
 * Build the positive radial kernel pair for `lambda > 0`.  Fails on
 * `alpha = 2` (power-law kernel, no Bessel pair) and on negative
 * discriminant (oscillatory regime).  Free with `sel_radial_pair_free`.
 */
enum SelStatus sel_radial_pair_new(const struct SelParams *params,
                                   double lambda,
                                   struct SelRadialPair **out);

/**
 * Release a handle from `sel_radial_pair_new`.  Null is a no-op.
 */
void sel_radial_pair_free(struct SelRadialPair *pair);

/**
 * Evaluate the kernel pair at radius `r > 0`.  Deep in the exponential
 * regime the plain values overflow and this reports `NumericFailure`.
 */
enum SelStatus sel_radial_pair_eval(const struct SelRadialPair *pair,
                                    double r,
                                    struct SelPairEval *out);

/**
 * In the negative-discriminant regime, search for a nonnegative bump whose
 * kernel average goes negative, certifying that no realization can be
 * resolvent-positive.  On success `out->value <= -1e-6`.
 */
enum SelStatus sel_oscillation_witness(const struct SelParams *params,
                                       double lambda,
                                       struct SelWitness *out);

/**
 * Copy the message of the most recent failure on this thread into `buf`
 * (NUL-terminated, truncated to `cap` bytes).  Returns the length the full
 * message needs, terminator included; call with `cap = 0` to size a buffer.
 */
uintptr_t sel_last_error(char *buf, uintptr_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEL_LAB_H */
