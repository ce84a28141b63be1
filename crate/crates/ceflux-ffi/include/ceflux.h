#ifndef CEFLUX_H
#define CEFLUX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CEFLUX_STATUS_OK = 0,
  CEFLUX_STATUS_NULL_POINTER = 1,
  CEFLUX_STATUS_INVALID_ARGUMENT = 2,
  CEFLUX_STATUS_DIMENSION = 3,
  CEFLUX_STATUS_MASS_MISMATCH = 4,
  CEFLUX_STATUS_INFEASIBLE = 5,
  CEFLUX_STATUS_UNBOUNDED = 6,
  CEFLUX_STATUS_PIVOT_LIMIT = 7,
  CEFLUX_STATUS_UNKNOWN_EXAMPLE = 8,
  CEFLUX_STATUS_PARSE = 9,
  CEFLUX_STATUS_IO = 10,
  CEFLUX_STATUS_NUMERICAL = 11,
  CEFLUX_STATUS_PANIC = 12,
} CefluxStatus;

typedef enum {
  CEFLUX_NORM_L1 = 0,
  CEFLUX_NORM_L2 = 1,
  CEFLUX_NORM_LINF = 2,
} CefluxNorm;

/**
 * Which part of a pair to discretise.
 */
typedef enum {
  CEFLUX_PART_MU = 0,
  CEFLUX_PART_NU = 1,
  CEFLUX_PART_MU0 = 2,
} CefluxPart;

/**
 * Weighted atoms (tᵢ, xᵢ, wᵢ) in [0, ∞) × R^dim with weights in R^m.
 */
typedef struct CefluxMeasure CefluxMeasure;

/**
 * A candidate solution (μ, ν) with initial datum and horizon.
 */
typedef struct CefluxPair CefluxPair;

typedef struct {
  double max_abs;
  double max_normalized;
  double normalization;
  size_t n_basis;
  /**
   * Some atom fell outside the basis box.
   */
  bool cover_warning;
} CefluxResidual;

typedef struct {
  /**
   * Total variation of the retained singular part.
   */
  double objective;
  double tv_singular;
  double max_violation;
  bool is_submeasure;
} CefluxMinimalFlux;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ceflux_version(void);

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ceflux_last_error(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
CefluxStatus ceflux_measure_new(size_t dim, size_t m, CefluxNorm norm, CefluxMeasure **out);

/**
 * Appends one atom. `x` holds `dim` values and `w` holds `m`.
 *
 * # Safety
 * `h` must be a live measure handle; `x` and `w` must point to arrays of
 * the measure's sizes.
 */
CefluxStatus ceflux_measure_push(CefluxMeasure *h, double t, const double *x, const double *w);

/**
 * # Safety
 * `h` must be a live measure handle and `out` valid for writes.
 */
CefluxStatus ceflux_measure_len(const CefluxMeasure *h, size_t *out);

/**
 * Σ‖wᵢ‖ in the measure's norm.
 *
 * # Safety
 * `h` must be a live measure handle and `out` valid for writes.
 */
CefluxStatus ceflux_measure_total_variation(const CefluxMeasure *h, double *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void ceflux_measure_free(CefluxMeasure *h);

/**
 * W₁ between two scalar measures of equal mass, in the norm of `a`.
 *
 * # Safety
 * `a`, `b` must be live measure handles and `out` valid for writes.
 */
CefluxStatus ceflux_w1(const CefluxMeasure *a, const CefluxMeasure *b, double *out);

/**
 * Loads a built-in example such as "7.1" or "7.4(5)".
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` valid for writes.
 */
CefluxStatus ceflux_pair_from_example(const char *id, CefluxPair **out);

/**
 * Parses a pair from JSON with keys mu, nu, mu0 and horizon.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
CefluxStatus ceflux_pair_from_json(const char *json, CefluxPair **out);

/**
 * Serialises a pair to JSON. Release the string with `ceflux_string_free`.
 *
 * # Safety
 * `p` must be a live pair handle and `out` valid for writes.
 */
CefluxStatus ceflux_pair_to_json(const CefluxPair *p, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void ceflux_string_free(char *s);

/**
 * # Safety
 * `p` must be a live pair handle and `out` valid for writes.
 */
CefluxStatus ceflux_pair_horizon(const CefluxPair *p, double *out);

/**
 * Discretises one part of the pair on `res` cells per unit direction.
 *
 * # Safety
 * `p` must be a live pair handle and `out` valid for writes.
 */
CefluxStatus ceflux_pair_discretize(const CefluxPair *p,
                                    CefluxPart part,
                                    size_t res,
                                    CefluxMeasure **out);

/**
 * Weak-form residual of the continuity equation over a `knots`-spline
 * basis. `res = 0` pairs the symbolic measures exactly; otherwise they are
 * discretised at that resolution first.
 *
 * # Safety
 * `p` must be a live pair handle and `out` valid for writes.
 */
CefluxStatus ceflux_ce_residual(const CefluxPair *p, size_t knots, size_t res, CefluxResidual *out);

/**
 * Minimal sub-flux of ν: keeps the part co-located with μ (within
 * `eps_loc`) and solves for the least singular mass preserving the
 * divergence constraints to `eps_con`.
 *
 * # Safety
 * `p` must be a live pair handle and `out` valid for writes.
 */
CefluxStatus ceflux_minimal_flux(const CefluxPair *p,
                                 size_t knots,
                                 size_t res,
                                 double eps_loc,
                                 double eps_con,
                                 CefluxMinimalFlux *out);

/**
 * # Safety
 * `p` must be NULL or a handle not yet freed.
 */
void ceflux_pair_free(CefluxPair *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEFLUX_H */
