/* SPDX-License-Identifier: Apache-2.0 */
/* Exercises the C interface from C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "qbtrace/qbtrace.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, \
              #cond, qbt_last_error());                                 \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

#define NEAR(a, b, tol) EXPECT(fabs((a) - (b)) <= (tol))

static void domains(void) {
  qbt_domain *d = NULL;
  qbt_domain_info info;
  char *name = NULL;
  double p[2], t[2], n[2], k;

  EXPECT(qbt_domain_create("stadium:a=1,R=1", &d) == QBT_OK);
  EXPECT(qbt_domain_get_info(d, &info) == QBT_OK);
  NEAR(info.area, 4.0 + M_PI, 1e-12);
  NEAR(info.perimeter, 4.0 + 2.0 * M_PI, 1e-12);
  EXPECT(info.convex && !info.has_corners);
  EXPECT(qbt_domain_name(d, &name) == QBT_OK);
  EXPECT(name && strncmp(name, "stadium", 7) == 0);
  qbt_string_free(name);

  /* centre of the upper flat side */
  EXPECT(qbt_domain_frame(d, M_PI / 2 + 1, 1, p, t, n, &k) == QBT_OK);
  NEAR(p[0], 0.0, 1e-12);
  NEAR(p[1], 1.0, 1e-12);
  NEAR(n[1], -1.0, 1e-12);
  NEAR(k, 0.0, 1e-12);
  qbt_domain_free(d);

  d = NULL;
  EXPECT(qbt_domain_create("stadium:a=-1", &d) == QBT_E_INVALID_SPEC);
  EXPECT(d == NULL);
  EXPECT(strlen(qbt_last_error()) > 0);
  EXPECT(qbt_domain_create("hexagon", &d) != QBT_OK);
  EXPECT(qbt_domain_get_info(NULL, &info) == QBT_E_INVALID_ARGUMENT);
  qbt_domain_free(NULL);
}

static void billiard(void) {
  qbt_domain *d = NULL;
  qbt_bounce b[4];
  size_t n = 0;
  double g = 0.0, lengths[2];

  EXPECT(qbt_domain_create("disc:R=1", &d) == QBT_OK);
  EXPECT(qbt_billiard_orbit(d, 0.0, 0.0, 4, b, &n) == QBT_OK);
  EXPECT(n == 4);
  NEAR(b[0].s, M_PI, 1e-12);
  NEAR(b[0].flight_length, 2.0, 1e-12);
  NEAR(b[1].s, 0.0, 1e-12);

  /* the disc preserves eta, so gamma is constant */
  EXPECT(qbt_birkhoff_gamma(d, 0.4, 0.6, 100, &g) == QBT_OK);
  NEAR(g, 0.8, 1e-12);

  EXPECT(qbt_loop_lengths(d, 0.0, 3, lengths, 1, &n) == QBT_E_BUFFER);
  EXPECT(n == 2);
  EXPECT(qbt_loop_lengths(d, 0.0, 3, lengths, 2, &n) == QBT_OK);
  NEAR(lengths[0], 4.0, 1e-8);
  NEAR(lengths[1], 3.0 * sqrt(3.0), 1e-8);
  qbt_domain_free(d);
}

static void spectra(void) {
  qbt_domain *d = NULL;
  qbt_spectrum *sp = NULL, *an = NULL;
  qbt_solver_options opt;
  qbt_trace_info info;
  qbt_trace_norms nm;
  size_t n = 0, m = 0, i;
  double oracle[16], res = 1.0, v[2];

  EXPECT(qbt_domain_create("disc:R=1", &d) == QBT_OK);
  qbt_solver_options_default(&opt);
  EXPECT(opt.ppw > 0 && opt.accept_sigma > 0);
  EXPECT(qbt_spectrum_compute(d, QBT_DIRICHLET, 2.0, 6.0, &opt, &sp) == QBT_OK);
  EXPECT(qbt_spectrum_size(sp, &n) == QBT_OK);
  EXPECT(qbt_disc_oracle(1.0, QBT_DIRICHLET, 6.0, oracle, 16, &m) == QBT_OK);
  /* j01, j11 (x2), j21 (x2), j02; nothing below 2 */
  EXPECT(n == 6 && m == 6);
  for (i = 0; i < n && i < m; ++i) {
    EXPECT(qbt_trace_get_info(sp, i, &info) == QBT_OK);
    NEAR(info.lambda, oracle[i], 1e-7);
  }
  EXPECT(qbt_trace_fixed_point_residual(sp, 0, &res) == QBT_OK);
  EXPECT(res < 1e-6);

  /* j01 mode: u^b = lambda / sqrt(pi) for the Rellich normalization */
  EXPECT(qbt_trace_eval(sp, 0, 1.3, v) == QBT_OK);
  NEAR(hypot(v[0], v[1]), oracle[0] / sqrt(M_PI), 1e-6);
  EXPECT(qbt_trace_get_norms(sp, 0, &nm) == QBT_OK);
  NEAR(nm.l2, oracle[0] * sqrt(2.0), 1e-6);
  EXPECT(qbt_trace_get_info(sp, 99, &info) == QBT_E_INVALID_ARGUMENT);

  /* pointwise sums need a spectrum complete from zero; [2, 6] is, [3, 6] is not */
  EXPECT(qbt_pointwise_sum(sp, 0.0, 5.0, v) == QBT_OK);
  {
    qbt_spectrum *late = NULL;
    EXPECT(qbt_spectrum_compute(d, QBT_DIRICHLET, 3.0, 4.0, &opt, &late) == QBT_OK);
    EXPECT(qbt_pointwise_sum(late, 0.0, 4.0, v) == QBT_E_PRECONDITION);
    qbt_spectrum_free(late);
  }

  EXPECT(qbt_spectrum_analytic(d, QBT_DIRICHLET, 6.0, &an) == QBT_OK);
  EXPECT(qbt_pointwise_sum(an, 0.0, 3.0, v) == QBT_OK);
  NEAR(v[0], oracle[0] * oracle[0] / M_PI, 1e-9);

  qbt_spectrum_free(an);
  qbt_spectrum_free(sp);
  qbt_domain_free(d);
}

static void observables(void) {
  qbt_domain *d = NULL;
  qbt_spectrum *sp = NULL;
  qbt_observable *one = NULL, *bad = NULL;
  double l[64], val[64], omega = 0.0;
  size_t n = 0, i;
  qbt_qe_stats st;

  EXPECT(qbt_domain_create("disc:R=1", &d) == QBT_OK);
  EXPECT(qbt_spectrum_analytic(d, QBT_DIRICHLET, 10.0, &sp) == QBT_OK);
  EXPECT(qbt_observable_parse(d, "one", &one) == QBT_OK);
  EXPECT(qbt_observable_parse(d, "one+", &bad) == QBT_E_INVALID_SPEC);
  EXPECT(qbt_observable_omega(one, d, QBT_DIRICHLET, &omega) == QBT_OK);
  /* perimeter over area */
  NEAR(omega, 2.0, 1e-12);
  EXPECT(qbt_matrix_elements(sp, one, l, val, 64, &n, &omega) == QBT_OK);
  EXPECT(n > 10);
  /* Rellich on the unit disc: every Dirichlet boundary mass is 2 lambda^2 */
  for (i = 0; i < n && i < 64; ++i) NEAR(val[i], omega, 1e-8);
  EXPECT(qbt_qe_statistics(sp, one, 10.0, &st) == QBT_OK);
  NEAR(st.mean, omega, 1e-8);
  EXPECT(st.fraction_005 == 0.0);
  qbt_observable_free(one);
  qbt_spectrum_free(sp);
  qbt_domain_free(d);
}

static void fits_and_config(void) {
  double x[40], y[40];
  qbt_fit fit;
  char *canon = NULL, *hash = NULL, *hash2 = NULL;
  int i;

  for (i = 0; i < 40; ++i) {
    x[i] = 1.0 + i;
    y[i] = 3.0 * pow(x[i], 1.5);
  }
  EXPECT(qbt_exponent_fit(x, y, 40, 5.0, 40.0, 1, &fit) == QBT_OK);
  NEAR(fit.exponent, 1.5, 1e-9);
  NEAR(fit.prefactor, 3.0, 1e-8);
  EXPECT(qbt_exponent_fit(x, y, 40, 20.0, 40.0, 1, &fit) == QBT_E_PRECONDITION);

  EXPECT(qbt_config_normalize("{\"domain\":\"disc:R=1\",\"bc\":\"neumann\",\"lmax\":8}", &canon, &hash) == QBT_OK);
  EXPECT(canon && strstr(canon, "neumann"));
  qbt_string_free(canon);
  EXPECT(qbt_config_normalize("{\"bc\":\"neumann\",\"lmax\":8,\"domain\":\"disc:R=1\"}", NULL, &hash2) == QBT_OK);
  EXPECT(hash && hash2 && strcmp(hash, hash2) == 0);
  qbt_string_free(hash);
  qbt_string_free(hash2);
  EXPECT(qbt_config_normalize("{\"domian\":\"disc\"}", &canon, NULL) == QBT_E_CONFIG);
  EXPECT(qbt_config_normalize("{", &canon, NULL) == QBT_E_CONFIG);
  EXPECT(strcmp(qbt_status_name(QBT_E_BUFFER), "") != 0);
  EXPECT(strlen(qbt_version()) > 0);
}

int main(void) {
  domains();
  billiard();
  spectra();
  observables();
  fits_and_config();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("all C interface checks passed\n");
  return failures ? 1 : 0;
}
