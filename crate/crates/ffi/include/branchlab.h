/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BRANCHLAB_H
#define BRANCHLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_INPUT = 2,
  BL_STATUS_NON_CRITICAL = 3,
  BL_STATUS_TRUNCATION = 4,
  BL_STATUS_NO_CONVERGENCE = 5,
  BL_STATUS_OVERFLOW = 6,
  BL_STATUS_CONFIG = 7,
  BL_STATUS_IO = 8,
  BL_STATUS_PANIC = 9,
} BlStatus;

// Opaque family-size law.
typedef struct BlFamilyLaw BlFamilyLaw;

// Opaque Lévy triple.
typedef struct BlLevyTriple BlLevyTriple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length without the NUL.
// `buf` may be null when `len` is 0.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t bl_last_error_message(char *buf, size_t len);

// Built-in law by name: `unit`, `binary`, `ternary`, `subcritical-demo`.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum BlStatus bl_family_law_named(const char *name, struct BlFamilyLaw **out);

// Law with `π̂(j) = weights[j]` for `j < n`.
//
// # Safety
// `weights` must hold `n` readable values; `out` must be writable.
enum BlStatus bl_family_law_from_weights(const double *weights, size_t n, struct BlFamilyLaw **out);

// Releases a law; null is ignored.
//
// # Safety
// `law` must be null or a handle not yet freed.
void bl_family_law_free(struct BlFamilyLaw *law);

// Mean family size `Ξ`.
//
// # Safety
// `law` must be a live handle; `out` must be writable.
enum BlStatus bl_family_law_xi(const struct BlFamilyLaw *law, double *out);

// `ν_n(j)` for `j = 0..=cap` into `masses` and the mass above `cap` into `tail`.
//
// # Safety
// `law` must be a live handle; `masses` must hold `cap + 1` writable values;
// `tail` must be writable.
enum BlStatus bl_descendant_distribution(const struct BlFamilyLaw *law,
                                         size_t n,
                                         size_t cap,
                                         double *masses,
                                         double *tail);

// `Ψ̂(s)` for `s ∈ [0, 1]`.
//
// # Safety
// `law` must be a live handle; `out` must be writable.
enum BlStatus bl_discrete_mechanism(const struct BlFamilyLaw *law, double s, double *out);

// Euler exponent of the law rescaled by `(h, τ)` at `(q, t)`.
//
// # Safety
// `law` must be a live handle; `out` must be writable.
enum BlStatus bl_euler_exponent(const struct BlFamilyLaw *law,
                                double h,
                                double tau,
                                double q,
                                double t,
                                double *out);

// Triple `(α₀, α_∞, Σ weights[i]δ_{locations[i]})`.
//
// # Safety
// `locations` and `weights` must hold `n` readable values; `out` must be writable.
enum BlStatus bl_levy_triple_new(double alpha0,
                                 double alpha_inf,
                                 const double *locations,
                                 const double *weights,
                                 size_t n,
                                 struct BlLevyTriple **out);

// Quadrature triple of the `alpha`-stable mechanism `Ψ(q) = q^alpha`, `1 < alpha < 2`.
//
// # Safety
// `out` must be writable.
enum BlStatus bl_levy_triple_stable(double alpha, struct BlLevyTriple **out);

// Releases a triple; null is ignored.
//
// # Safety
// `triple` must be null or a handle not yet freed.
void bl_levy_triple_free(struct BlLevyTriple *triple);

// Bernstein transform `Φ(q)`, `q > 0`.
//
// # Safety
// `triple` must be a live handle; `out` must be writable.
enum BlStatus bl_bernstein(const struct BlLevyTriple *triple, double q, double *out);

// Branching mechanism `Ψ(q)`, `q ≥ 0`.
//
// # Safety
// `triple` must be a live handle; `out` must be writable.
enum BlStatus bl_mechanism(const struct BlLevyTriple *triple, double q, double *out);

// `φ(q, times[i])` for `n_times` increasing times into `out`.
//
// # Safety
// `triple` must be a live handle; `times` and `out` must hold `n_times` values.
enum BlStatus bl_solve_exponent(const struct BlLevyTriple *triple,
                                double q,
                                const double *times,
                                size_t n_times,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRANCHLAB_H */
