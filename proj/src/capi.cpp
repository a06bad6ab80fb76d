// SPDX-License-Identifier: Apache-2.0
#include "qbtrace/qbtrace.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "qbt/acceptance.hpp"
#include "qbt/asymptotics.hpp"
#include "qbt/billiard.hpp"
#include "qbt/config.hpp"
#include "qbt/error.hpp"
#include "qbt/qe.hpp"

using namespace qbt;

struct qbt_domain {
  std::shared_ptr<const geometry::Domain> d;
};

struct qbt_spectrum {
  spectrum::SpectrumStore store;
  std::unique_ptr<asymptotics::SpectralSeries> series;  // built on first use

  const asymptotics::SpectralSeries &get_series() {
    if (!series) series = std::make_unique<asymptotics::SpectralSeries>(store);
    return *series;
  }
};

struct qbt_observable {
  qe::Observable obs;
};

namespace {

thread_local std::string last_error;

qbt_status status_of(ErrorCode c) { return static_cast<qbt_status>(static_cast<int>(c)); }

template <class F>
qbt_status guard(F &&f) {
  try {
    f();
    last_error.clear();
    return QBT_OK;
  } catch (const Error &e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc &) {
    last_error = "out of memory";
    return QBT_E_INTERNAL;
  } catch (const std::exception &e) {
    last_error = e.what();
    return QBT_E_INTERNAL;
  }
}

void need(const void *p, const char *what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

BoundaryCondition to_bc(qbt_bc bc) {
  if (bc == QBT_DIRICHLET) return BoundaryCondition::dirichlet;
  if (bc == QBT_NEUMANN) return BoundaryCondition::neumann;
  fail(ErrorCode::invalid_argument, "unknown boundary condition");
}

char *dup(const std::string &s) {
  char *p = static_cast<char *>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

const spectrum::EigenTrace &trace_ref(const qbt_spectrum *sp, size_t i) {
  need(sp, "spectrum");
  if (i >= sp->store.traces.size()) fail(ErrorCode::invalid_argument, "trace index out of range");
  return sp->store.traces[i];
}

// copies n items when they fit; reports the full count either way
struct Buffer {
  size_t capacity;
  size_t *count;
  bool fits(size_t n) const {
    if (count) *count = n;
    return n <= capacity;
  }
};

}  // namespace

extern "C" {

const char *qbt_version(void) { return qbt::version(); }

const char *qbt_last_error(void) { return last_error.c_str(); }

const char *qbt_status_name(qbt_status s) {
  if (s == QBT_OK) return "ok";
  if (s == QBT_E_BUFFER) return "buffer";
  if (s >= QBT_E_INVALID_ARGUMENT && s <= QBT_E_INTERNAL) return error_code_name(static_cast<ErrorCode>(s));
  return "unknown";
}

void qbt_string_free(char *s) { std::free(s); }

qbt_status qbt_domain_create(const char *spec, qbt_domain **out) {
  return guard([&] {
    need(spec, "spec");
    need(out, "out");
    *out = new qbt_domain{std::make_shared<const geometry::Domain>(geometry::build_domain(std::string(spec)))};
  });
}

void qbt_domain_free(qbt_domain *d) { delete d; }

qbt_status qbt_domain_get_info(const qbt_domain *d, qbt_domain_info *info) {
  return guard([&] {
    need(d, "domain");
    need(info, "info");
    info->area = d->d->area();
    info->perimeter = d->d->perimeter();
    info->convex = d->d->convex();
    info->has_corners = d->d->has_corners();
    info->arc_count = d->d->arcs().size();
    info->box_min[0] = d->d->box_min().x;
    info->box_min[1] = d->d->box_min().y;
    info->box_max[0] = d->d->box_max().x;
    info->box_max[1] = d->d->box_max().y;
  });
}

qbt_status qbt_domain_name(const qbt_domain *d, char **name) {
  return guard([&] {
    need(d, "domain");
    need(name, "name");
    *name = dup(d->d->name());
  });
}

qbt_status qbt_domain_frame(const qbt_domain *d, double s, int side, double position[2], double tangent[2],
                            double normal[2], double *curvature) {
  return guard([&] {
    need(d, "domain");
    const auto sd = side < 0 ? geometry::Side::before : side > 0 ? geometry::Side::after : geometry::Side::none;
    const auto f = geometry::frame_at(*d->d, s, sd);
    if (position) position[0] = f.position.x, position[1] = f.position.y;
    if (tangent) tangent[0] = f.tangent.x, tangent[1] = f.tangent.y;
    if (normal) normal[0] = f.inward_normal.x, normal[1] = f.inward_normal.y;
    if (curvature) *curvature = f.curvature;
  });
}

qbt_status qbt_billiard_orbit(const qbt_domain *d, double s, double eta, size_t n, qbt_bounce *out, size_t *count) {
  qbt_status st = guard([&] {
    need(d, "domain");
    need(out, "out");
    billiard::PhasePoint q = billiard::PhasePoint::make(s, eta);
    size_t k = 0;
    for (; k < n; ++k) {
      billiard::BilliardStepResult r;
      try {
        r = billiard::step(*d->d, q);
      } catch (const Error &e) {
        if (e.code() != ErrorCode::grazing && e.code() != ErrorCode::corner_hit) throw;
        out[k] = {0.0, 0.0, 0.0, 1};
        ++k;
        break;
      }
      if (!r.next) {
        out[k] = {r.chord.s2, 0.0, r.flight_length, 1};
        ++k;
        break;
      }
      out[k] = {r.next->s, r.next->eta, r.flight_length, 0};
      q = *r.next;
    }
    if (count) *count = k;
  });
  return st;
}

qbt_status qbt_birkhoff_gamma(const qbt_domain *d, double s, double eta, size_t n, double *average) {
  return guard([&] {
    need(d, "domain");
    need(average, "average");
    const auto r = billiard::birkhoff_average(*d->d, billiard::PhasePoint::make(s, eta),
                                              [](const billiard::PhasePoint &q) { return q.gamma; }, n);
    if (r.terminated) fail(ErrorCode::corner_hit, "orbit ended in a corner after " + std::to_string(r.completed));
    *average = r.average;
  });
}

qbt_status qbt_loop_profile_at(const qbt_domain *d, double s, int n_max, size_t samples, double tol,
                               qbt_loop_profile *out) {
  return guard([&] {
    need(d, "domain");
    need(out, "out");
    const auto p = billiard::loop_profile(*d->d, s, n_max, samples, tol);
    out->loop_measure = p.loop_measure_estimate;
    out->confidence_half_width = p.confidence_half_width;
    out->samples = p.samples.size();
    out->rejected_grazing = p.rejected_grazing;
  });
}

qbt_status qbt_loop_lengths(const qbt_domain *d, double s, int n_max, double *lengths, size_t capacity,
                            size_t *count) {
  bool too_small = false;
  qbt_status st = guard([&] {
    need(d, "domain");
    const auto l = asymptotics::loop_lengths(*d->d, s, n_max);
    if (!Buffer{capacity, count}.fits(l.size())) {
      too_small = true;
      return;
    }
    need(lengths, "lengths");
    std::copy(l.begin(), l.end(), lengths);
  });
  if (st == QBT_OK && too_small) {
    last_error = "buffer too small";
    return QBT_E_BUFFER;
  }
  return st;
}

void qbt_solver_options_default(qbt_solver_options *o) {
  if (!o) return;
  const spectrum::SolverOptions d;
  o->ppw = d.ppw;
  o->scan_ppw = d.scan_ppw;
  o->dlambda = d.dlambda;
  o->accept_sigma = d.accept_sigma;
  o->seed = d.seed;
}

qbt_status qbt_spectrum_compute(const qbt_domain *d, qbt_bc bc, double lmin, double lmax,
                                const qbt_solver_options *options, qbt_spectrum **out) {
  return guard([&] {
    need(d, "domain");
    need(out, "out");
    spectrum::SolverOptions o;
    if (options) {
      o.ppw = options->ppw;
      o.scan_ppw = options->scan_ppw;
      o.dlambda = options->dlambda;
      o.accept_sigma = options->accept_sigma;
      o.seed = options->seed;
    }
    auto sp = std::make_unique<qbt_spectrum>();
    sp->store = spectrum::compute_spectrum(*d->d, to_bc(bc), lmin, lmax, o);
    *out = sp.release();
  });
}

qbt_status qbt_spectrum_analytic(const qbt_domain *d, qbt_bc bc, double lmax, qbt_spectrum **out) {
  return guard([&] {
    need(d, "domain");
    need(out, "out");
    auto sp = std::make_unique<qbt_spectrum>();
    sp->store = spectrum::analytic_store(*d->d, to_bc(bc), lmax);
    *out = sp.release();
  });
}

qbt_status qbt_spectrum_from_config(const char *config_json, qbt_spectrum **out, int *hit) {
  return guard([&] {
    need(config_json, "config_json");
    need(out, "out");
    auto r = cached_spectrum(config_from_json(config_json));
    auto sp = std::make_unique<qbt_spectrum>();
    sp->store = std::move(r.store);
    if (hit) *hit = r.hit;
    *out = sp.release();
  });
}

qbt_status qbt_spectrum_load(const char *dir, qbt_spectrum **out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    auto sp = std::make_unique<qbt_spectrum>();
    sp->store = spectrum::load_store(dir);
    *out = sp.release();
  });
}

qbt_status qbt_spectrum_save(const qbt_spectrum *sp, const char *dir) {
  return guard([&] {
    need(sp, "spectrum");
    need(dir, "dir");
    spectrum::save_store(sp->store, dir);
  });
}

void qbt_spectrum_free(qbt_spectrum *sp) { delete sp; }

qbt_status qbt_spectrum_size(const qbt_spectrum *sp, size_t *count) {
  return guard([&] {
    need(sp, "spectrum");
    need(count, "count");
    *count = sp->store.traces.size();
  });
}

qbt_status qbt_spectrum_describe(const qbt_spectrum *sp, char **domain_spec, qbt_bc *bc, double *lmin, double *lmax,
                                 double *seconds) {
  return guard([&] {
    need(sp, "spectrum");
    if (domain_spec) *domain_spec = dup(sp->store.domain_spec);
    if (bc) *bc = sp->store.bc == BoundaryCondition::dirichlet ? QBT_DIRICHLET : QBT_NEUMANN;
    if (lmin) *lmin = sp->store.lmin;
    if (lmax) *lmax = sp->store.lmax;
    if (seconds) *seconds = sp->store.seconds;
  });
}

qbt_status qbt_spectrum_warnings(const qbt_spectrum *sp, char **text) {
  return guard([&] {
    need(sp, "spectrum");
    need(text, "text");
    std::string all;
    for (const auto &w : sp->store.warnings) all += w + "\n";
    *text = dup(all);
  });
}

qbt_status qbt_trace_get_info(const qbt_spectrum *sp, size_t index, qbt_trace_info *info) {
  return guard([&] {
    const auto &t = trace_ref(sp, index);
    need(info, "info");
    info->lambda = t.lambda;
    info->n = t.grid ? t.grid->n : 0;
    info->sigma_min = t.sigma_min;
    info->fone_residual = t.fone_residual;
    info->helmholtz_residual = t.interior_helmholtz_residual;
    info->norm_estimate = t.normalization.interior_norm_estimate;
    info->norm_error = t.normalization.error_bar;
    info->flagged = t.normalization.flagged;
    info->cluster_id = t.cluster_id;
    info->cluster_size = t.cluster_size;
    info->mode_m = t.mode_m;
    info->mode_k = t.mode_k;
  });
}

qbt_status qbt_trace_samples(const qbt_spectrum *sp, size_t index, double *s, double *values, size_t capacity,
                             size_t *count) {
  bool too_small = false;
  qbt_status st = guard([&] {
    const auto &t = trace_ref(sp, index);
    const size_t n = static_cast<size_t>(t.grid->n);
    if (!Buffer{capacity, count}.fits(n)) {
      too_small = true;
      return;
    }
    for (size_t i = 0; i < n; ++i) {
      if (s) s[i] = t.grid->s[i];
      if (values) values[2 * i] = t.trace[i].real(), values[2 * i + 1] = t.trace[i].imag();
    }
  });
  if (st == QBT_OK && too_small) {
    last_error = "buffer too small";
    return QBT_E_BUFFER;
  }
  return st;
}

qbt_status qbt_trace_eval(const qbt_spectrum *sp, size_t index, double s, double value[2]) {
  return guard([&] {
    need(value, "value");
    const cdouble v = spectrum::trace_at(trace_ref(sp, index), s);
    value[0] = v.real();
    value[1] = v.imag();
  });
}

qbt_status qbt_trace_get_norms(const qbt_spectrum *sp, size_t index, qbt_trace_norms *norms) {
  return guard([&] {
    need(norms, "norms");
    const auto n = asymptotics::trace_norms(trace_ref(sp, index));
    *norms = {n.l2, n.l4, n.l8, n.sup};
  });
}

qbt_status qbt_trace_fixed_point_residual(const qbt_spectrum *sp, size_t index, double *residual) {
  return guard([&] {
    need(residual, "residual");
    const auto &t = trace_ref(sp, index);
    const auto F = layer::assemble_F(t.lambda, t.grid, t.bc);
    const double sgn = t.bc == BoundaryCondition::dirichlet ? -1.0 : 1.0;
    const layer::Vector r = t.trace - sgn * layer::apply(F, t.trace);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < t.grid->n; ++i) {
      num += t.grid->weight[i] * std::norm(r[i]);
      den += t.grid->weight[i] * std::norm(t.trace[i]);
    }
    *residual = std::sqrt(num / den);
  });
}

qbt_status qbt_disc_oracle(double radius, qbt_bc bc, double lmax, double *lambdas, size_t capacity, size_t *count) {
  bool too_small = false;
  qbt_status st = guard([&] {
    const auto l = spectrum::disc_oracle(radius, to_bc(bc), lmax);
    if (!Buffer{capacity, count}.fits(l.size())) {
      too_small = true;
      return;
    }
    if (!l.empty()) need(lambdas, "lambdas");
    std::copy(l.begin(), l.end(), lambdas);
  });
  if (st == QBT_OK && too_small) {
    last_error = "buffer too small";
    return QBT_E_BUFFER;
  }
  return st;
}

qbt_status qbt_weyl_count(const qbt_domain *d, qbt_bc bc, double lambda, double *count) {
  return guard([&] {
    need(d, "domain");
    need(count, "count");
    *count = spectrum::weyl_count(*d->d, to_bc(bc), lambda);
  });
}

qbt_status qbt_observable_parse(const qbt_domain *d, const char *text, qbt_observable **out) {
  return guard([&] {
    need(d, "domain");
    need(text, "text");
    need(out, "out");
    *out = new qbt_observable{qe::parse_observable(text, *d->d)};
  });
}

void qbt_observable_free(qbt_observable *o) { delete o; }

qbt_status qbt_observable_omega(const qbt_observable *o, const qbt_domain *d, qbt_bc bc, double *omega) {
  return guard([&] {
    need(o, "observable");
    need(d, "domain");
    need(omega, "omega");
    *omega = qe::omega(o->obs, qe::limit_state(*d->d, to_bc(bc)), *d->d);
  });
}

qbt_status qbt_matrix_elements(const qbt_spectrum *sp, const qbt_observable *o, double *lambdas, double *values,
                               size_t capacity, size_t *count, double *omega) {
  bool too_small = false;
  qbt_status st = guard([&] {
    need(sp, "spectrum");
    need(o, "observable");
    const auto s = qe::matrix_elements(sp->store, o->obs);
    if (omega) *omega = s.omega;
    if (!Buffer{capacity, count}.fits(s.values.size())) {
      too_small = true;
      return;
    }
    if (lambdas) std::copy(s.lambdas.begin(), s.lambdas.end(), lambdas);
    if (values) std::copy(s.values.begin(), s.values.end(), values);
  });
  if (st == QBT_OK && too_small) {
    last_error = "buffer too small";
    return QBT_E_BUFFER;
  }
  return st;
}

qbt_status qbt_qe_statistics(const qbt_spectrum *sp, const qbt_observable *o, double lambda, qbt_qe_stats *stats) {
  return guard([&] {
    need(sp, "spectrum");
    need(o, "observable");
    need(stats, "stats");
    const auto q = qe::qe_statistics(qe::matrix_elements(sp->store, o->obs), lambda, {0.05, 0.1, 0.2});
    stats->lambda = q.lambda;
    stats->count = q.count;
    stats->mean = q.mean;
    stats->omega = q.omega;
    stats->variance = q.variance;
    stats->fraction_005 = q.deviation_fraction.at(0.05);
    stats->fraction_01 = q.deviation_fraction.at(0.1);
    stats->fraction_02 = q.deviation_fraction.at(0.2);
  });
}

qbt_status qbt_egorov_check(const qbt_spectrum *sp, size_t index, const qbt_observable *o, qbt_egorov *out) {
  return guard([&] {
    need(o, "observable");
    need(out, "out");
    const auto &t = trace_ref(sp, index);
    const auto F = layer::assemble_F(t.lambda, t.grid, t.bc);
    const auto e = qe::egorov_check(t, o->obs, F);
    *out = {e.invariance, e.egorov, e.undefined_fraction, e.flagged};
  });
}

qbt_status qbt_pointwise_sum(const qbt_spectrum *sp, double s, double lambda, double *sum) {
  return guard([&] {
    need(sp, "spectrum");
    need(sum, "sum");
    *sum = asymptotics::pointwise_spectral_sum(const_cast<qbt_spectrum *>(sp)->get_series(), s, lambda);
  });
}

qbt_status qbt_jump_bound(const qbt_spectrum *sp, double s, double lambda, double *jump) {
  return guard([&] {
    need(sp, "spectrum");
    need(jump, "jump");
    *jump = asymptotics::jump_bound(const_cast<qbt_spectrum *>(sp)->get_series(), s, lambda);
  });
}

qbt_status qbt_exponent_fit(const double *lambdas, const double *values, size_t n, double lo, double hi,
                            uint64_t seed, qbt_fit *fit) {
  return guard([&] {
    need(fit, "fit");
    if (n) need(lambdas, "lambdas"), need(values, "values");
    const auto f = asymptotics::exponent_fit(std::vector<double>(lambdas, lambdas + n),
                                             std::vector<double>(values, values + n), lo, hi, "", seed);
    *fit = {f.exponent, f.ci_lo, f.ci_hi, f.prefactor, f.residual, f.points};
  });
}

qbt_status qbt_weyl_audit_run(const qbt_spectrum *sp, qbt_weyl_audit *audit, double *gap_bounds,
                              size_t gap_capacity) {
  return guard([&] {
    need(sp, "spectrum");
    need(audit, "audit");
    std::vector<double> l;
    for (const auto &t : sp->store.traces) l.push_back(t.lambda);
    const auto domain = geometry::build_domain(sp->store.domain_spec);
    const auto a = asymptotics::weyl_audit(l, sp->store.lmax, domain, sp->store.bc);
    *audit = {a.max_deviation, a.at_lambda, a.mean_deviation, a.gaps.size()};
    if (gap_bounds)
      for (size_t i = 0; i < a.gaps.size() && i < gap_capacity; ++i)
        gap_bounds[2 * i] = a.gaps[i].lo, gap_bounds[2 * i + 1] = a.gaps[i].hi;
  });
}

qbt_status qbt_wave_trace(const qbt_spectrum *sp, double s, const double *t, size_t nt, double sigma_t,
                          double *values) {
  return guard([&] {
    need(sp, "spectrum");
    need(t, "t");
    need(values, "values");
    const auto w = asymptotics::wave_trace(const_cast<qbt_spectrum *>(sp)->get_series(), s,
                                           std::vector<double>(t, t + nt), sigma_t);
    for (size_t i = 0; i < nt; ++i) values[2 * i] = w.value[i].real(), values[2 * i + 1] = w.value[i].imag();
  });
}

qbt_status qbt_wave_peaks(const qbt_spectrum *sp, double s, const double *t, size_t nt, double sigma_t, double t_min,
                          double fraction, qbt_peak *peaks, size_t capacity, size_t *count) {
  bool too_small = false;
  qbt_status st = guard([&] {
    need(sp, "spectrum");
    need(t, "t");
    const auto w = asymptotics::wave_trace(const_cast<qbt_spectrum *>(sp)->get_series(), s,
                                           std::vector<double>(t, t + nt), sigma_t);
    const auto p = w.peaks(t_min, fraction);
    if (!Buffer{capacity, count}.fits(p.size())) {
      too_small = true;
      return;
    }
    for (size_t i = 0; i < p.size(); ++i) peaks[i] = {p[i].t, p[i].value, p[i].prominence};
  });
  if (st == QBT_OK && too_small) {
    last_error = "buffer too small";
    return QBT_E_BUFFER;
  }
  return st;
}

qbt_status qbt_config_normalize(const char *config_json, char **canonical, char **hash) {
  return guard([&] {
    need(config_json, "config_json");
    const auto c = config_from_json(config_json);
    if (canonical) *canonical = dup(config_to_json(c));
    if (hash) *hash = dup(config_hash(c));
  });
}

qbt_status qbt_acceptance_prepare(const char *cache_dir) {
  return guard([&] {
    need(cache_dir, "cache_dir");
    acceptance::prepare({cache_dir, nullptr});
  });
}

qbt_status qbt_acceptance_run(int id, const char *cache_dir, qbt_criterion *result, char **report, char **json) {
  return guard([&] {
    need(cache_dir, "cache_dir");
    const auto r = acceptance::run_criterion(id, {cache_dir, nullptr});
    if (result) *result = {r.id, r.pass, r.seconds};
    if (report) {
      std::string line = acceptance::format_line(r);
      if (!r.pass && !r.analysis.empty()) line += "\n    analysis: " + r.analysis;
      *report = dup(line);
    }
    if (json) {
      const auto arr = nlohmann::json::parse(acceptance::to_json({r}));
      *json = dup(arr.at(0).dump(2));
    }
  });
}

}  // extern "C"
