/* SPDX-License-Identifier: Apache-2.0 */
#ifndef QBTRACE_H
#define QBTRACE_H

/*
 * C interface to the boundary-trace library: domains, the billiard map,
 * eigenvalue spectra with their boundary traces, boundary observables and
 * the asymptotic diagnostics.
 *
 * Every function returns a qbt_status. On failure the message of the most
 * recent error on the calling thread is available from qbt_last_error().
 * Objects are opaque handles released with the matching *_free function;
 * passing NULL to a *_free function is allowed.
 *
 * Functions writing arrays take a capacity and report the full length in
 * *count; when the capacity is too small nothing beyond it is written and
 * QBT_E_BUFFER is returned.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QBT_API __declspec(dllexport)
#else
#define QBT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qbt_status {
  QBT_OK = 0,
  QBT_E_INVALID_ARGUMENT = 1,
  QBT_E_INVALID_SPEC = 2,
  QBT_E_DOMAIN = 3,
  QBT_E_AMBIGUOUS_FRAME = 4,
  QBT_E_CORNER_HIT = 5,
  QBT_E_GRAZING = 6,
  QBT_E_RESOLUTION = 7,
  QBT_E_UNSUPPORTED_DOMAIN = 8,
  QBT_E_PRECONDITION = 9,
  QBT_E_NUMERICAL = 10,
  QBT_E_IO = 11,
  QBT_E_CHECKSUM = 12,
  QBT_E_CONFIG = 13,
  QBT_E_WRONG_BC = 14,
  QBT_E_INTERNAL = 15,
  QBT_E_BUFFER = 16
} qbt_status;

typedef enum qbt_bc { QBT_DIRICHLET = 0, QBT_NEUMANN = 1 } qbt_bc;

typedef struct qbt_domain qbt_domain;
typedef struct qbt_spectrum qbt_spectrum;
typedef struct qbt_observable qbt_observable;

QBT_API const char *qbt_version(void);
QBT_API const char *qbt_last_error(void);
QBT_API const char *qbt_status_name(qbt_status status);
/* Releases strings returned through char ** out-parameters. */
QBT_API void qbt_string_free(char *s);

/* ---- domains ---------------------------------------------------------- */

/* spec: "disc:R=1", "ellipse:a=2,b=1", "stadium:a=1,R=1", "half_disc:R=1", ... */
QBT_API qbt_status qbt_domain_create(const char *spec, qbt_domain **out);
QBT_API void qbt_domain_free(qbt_domain *domain);

typedef struct qbt_domain_info {
  double area;
  double perimeter;
  int convex;
  int has_corners;
  size_t arc_count;
  double box_min[2];
  double box_max[2];
} qbt_domain_info;

QBT_API qbt_status qbt_domain_get_info(const qbt_domain *domain, qbt_domain_info *info);
/* Canonical spec string; free with qbt_string_free. */
QBT_API qbt_status qbt_domain_name(const qbt_domain *domain, char **name);
/* Point, unit tangent and inward normal at arclength s (side: -1 before, +1 after a junction). */
QBT_API qbt_status qbt_domain_frame(const qbt_domain *domain, double s, int side, double position[2],
                                    double tangent[2], double normal[2], double *curvature);

/* ---- billiard --------------------------------------------------------- */

typedef struct qbt_bounce {
  double s, eta, flight_length;
  int terminated; /* corner or grazing hit; the remaining fields are undefined */
} qbt_bounce;

/* Up to n bounces from (s, eta). */
QBT_API qbt_status qbt_billiard_orbit(const qbt_domain *domain, double s, double eta, size_t n,
                                      qbt_bounce *out, size_t *count);
/* Birkhoff average of gamma = sqrt(1 - eta^2) over n bounces. */
QBT_API qbt_status qbt_birkhoff_gamma(const qbt_domain *domain, double s, double eta, size_t n, double *average);

typedef struct qbt_loop_profile {
  double loop_measure;
  double confidence_half_width;
  size_t samples;
  size_t rejected_grazing;
} qbt_loop_profile;

QBT_API qbt_status qbt_loop_profile_at(const qbt_domain *domain, double s, int n_max, size_t samples, double tol,
                                       qbt_loop_profile *out);
/* Lengths of loops through s returning at iterates 2..n_max. */
QBT_API qbt_status qbt_loop_lengths(const qbt_domain *domain, double s, int n_max, double *lengths,
                                    size_t capacity, size_t *count);

/* ---- spectra ---------------------------------------------------------- */

typedef struct qbt_solver_options {
  double ppw;          /* nodes per wavelength for refinement and traces */
  double scan_ppw;     /* nodes per wavelength during the scan */
  double dlambda;      /* scan step; 0 picks a quarter of the mean spacing */
  double accept_sigma; /* largest accepted smallest singular value */
  uint64_t seed;
} qbt_solver_options;

QBT_API void qbt_solver_options_default(qbt_solver_options *options);

/* options may be NULL for the defaults. */
QBT_API qbt_status qbt_spectrum_compute(const qbt_domain *domain, qbt_bc bc, double lmin, double lmax,
                                        const qbt_solver_options *options, qbt_spectrum **out);
/* Closed-form modes (disc, half-disc). */
QBT_API qbt_status qbt_spectrum_analytic(const qbt_domain *domain, qbt_bc bc, double lmax, qbt_spectrum **out);
/* Cached computation driven by a JSON configuration; *hit reports a cache hit. */
QBT_API qbt_status qbt_spectrum_from_config(const char *config_json, qbt_spectrum **out, int *hit);
QBT_API qbt_status qbt_spectrum_load(const char *dir, qbt_spectrum **out);
QBT_API qbt_status qbt_spectrum_save(const qbt_spectrum *spectrum, const char *dir);
QBT_API void qbt_spectrum_free(qbt_spectrum *spectrum);

QBT_API qbt_status qbt_spectrum_size(const qbt_spectrum *spectrum, size_t *count);
/* Domain spec, bc, range and solve time. */
QBT_API qbt_status qbt_spectrum_describe(const qbt_spectrum *spectrum, char **domain_spec, qbt_bc *bc, double *lmin,
                                         double *lmax, double *seconds);
/* Warnings joined by newlines; free with qbt_string_free. */
QBT_API qbt_status qbt_spectrum_warnings(const qbt_spectrum *spectrum, char **text);

typedef struct qbt_trace_info {
  double lambda;
  int n;
  double sigma_min;
  double fone_residual;
  double helmholtz_residual;
  double norm_estimate;
  double norm_error;
  int flagged;
  int cluster_id;
  int cluster_size;
  int mode_m, mode_k; /* analytic modes only */
} qbt_trace_info;

QBT_API qbt_status qbt_trace_get_info(const qbt_spectrum *spectrum, size_t index, qbt_trace_info *info);
/* Grid arclengths and trace samples (interleaved re, im: 2 n doubles). */
QBT_API qbt_status qbt_trace_samples(const qbt_spectrum *spectrum, size_t index, double *s, double *values,
                                     size_t capacity, size_t *count);
QBT_API qbt_status qbt_trace_eval(const qbt_spectrum *spectrum, size_t index, double s, double value[2]);

typedef struct qbt_trace_norms {
  double l2, l4, l8, sup;
} qbt_trace_norms;

QBT_API qbt_status qbt_trace_get_norms(const qbt_spectrum *spectrum, size_t index, qbt_trace_norms *norms);
/* ||(I -+ F)u|| / ||u|| with a freshly assembled operator. */
QBT_API qbt_status qbt_trace_fixed_point_residual(const qbt_spectrum *spectrum, size_t index, double *residual);

/* Bessel-zero eigenvalues of the disc of radius R, with multiplicity. */
QBT_API qbt_status qbt_disc_oracle(double radius, qbt_bc bc, double lmax, double *lambdas, size_t capacity,
                                   size_t *count);
QBT_API qbt_status qbt_weyl_count(const qbt_domain *domain, qbt_bc bc, double lambda, double *count);

/* ---- observables and quantum ergodicity ------------------------------- */

/* Terms joined by '+', factors by '*': one, eta, eta2, cos:k=K, bump:s0=S,w=W, chi:delta=D. */
QBT_API qbt_status qbt_observable_parse(const qbt_domain *domain, const char *text, qbt_observable **out);
QBT_API void qbt_observable_free(qbt_observable *observable);
QBT_API qbt_status qbt_observable_omega(const qbt_observable *observable, const qbt_domain *domain, qbt_bc bc,
                                        double *omega);

/* Real parts of <Op(a) u_j, u_j> for every trace (Dirichlet scaled by lambda^-2). */
QBT_API qbt_status qbt_matrix_elements(const qbt_spectrum *spectrum, const qbt_observable *observable,
                                       double *lambdas, double *values, size_t capacity, size_t *count,
                                       double *omega);

typedef struct qbt_qe_stats {
  double lambda;
  int count;
  double mean;
  double omega;
  double variance;
  double fraction_005, fraction_01, fraction_02; /* |deviation| > 0.05, 0.1, 0.2 */
} qbt_qe_stats;

QBT_API qbt_status qbt_qe_statistics(const qbt_spectrum *spectrum, const qbt_observable *observable, double lambda,
                                     qbt_qe_stats *stats);

typedef struct qbt_egorov {
  double invariance, egorov, undefined_fraction;
  int flagged;
} qbt_egorov;

QBT_API qbt_status qbt_egorov_check(const qbt_spectrum *spectrum, size_t index, const qbt_observable *observable,
                                    qbt_egorov *out);

/* ---- asymptotics ------------------------------------------------------ */

/* Sum over lambda_j <= lambda of |u_j(s)|^2. Requires a spectrum complete from 0. */
QBT_API qbt_status qbt_pointwise_sum(const qbt_spectrum *spectrum, double s, double lambda, double *sum);
QBT_API qbt_status qbt_jump_bound(const qbt_spectrum *spectrum, double s, double lambda, double *jump);

typedef struct qbt_fit {
  double exponent, ci_lo, ci_hi, prefactor, residual;
  int points;
} qbt_fit;

QBT_API qbt_status qbt_exponent_fit(const double *lambdas, const double *values, size_t n, double lo, double hi,
                                    uint64_t seed, qbt_fit *fit);

typedef struct qbt_weyl_audit {
  double max_deviation;
  double at_lambda;
  double mean_deviation;
  size_t gaps;
} qbt_weyl_audit;

/* gap_bounds (may be NULL) receives lo, hi pairs for up to gap_capacity gaps. */
QBT_API qbt_status qbt_weyl_audit_run(const qbt_spectrum *spectrum, qbt_weyl_audit *audit, double *gap_bounds,
                                      size_t gap_capacity);

/* Smoothed wave trace on t[0..nt): values interleaved re, im (2 nt doubles). */
QBT_API qbt_status qbt_wave_trace(const qbt_spectrum *spectrum, double s, const double *t, size_t nt,
                                  double sigma_t, double *values);

typedef struct qbt_peak {
  double t, value, prominence;
} qbt_peak;

QBT_API qbt_status qbt_wave_peaks(const qbt_spectrum *spectrum, double s, const double *t, size_t nt, double sigma_t,
                                  double t_min, double fraction, qbt_peak *peaks, size_t capacity, size_t *count);

/* ---- configuration and acceptance ------------------------------------- */

/* Canonical JSON form and hash of a configuration (both freed with qbt_string_free). */
QBT_API qbt_status qbt_config_normalize(const char *config_json, char **canonical, char **hash);

QBT_API qbt_status qbt_acceptance_prepare(const char *cache_dir);

typedef struct qbt_criterion {
  int id;
  int pass;
  double seconds;
} qbt_criterion;

/* Runs one criterion (1..12); *report receives the one-line summary, *json
 * the full record including metrics and analysis. Either may be NULL. */
QBT_API qbt_status qbt_acceptance_run(int id, const char *cache_dir, qbt_criterion *result, char **report,
                                      char **json);

#ifdef __cplusplus
}
#endif

#endif /* QBTRACE_H */
