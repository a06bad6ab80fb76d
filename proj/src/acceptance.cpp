// SPDX-License-Identifier: Apache-2.0
#include "qbt/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "qbt/asymptotics.hpp"
#include "qbt/billiard.hpp"
#include "qbt/error.hpp"
#include "qbt/qe.hpp"
#include "qbt/specfun.hpp"

namespace qbt::acceptance {

namespace asy = qbt::asymptotics;
namespace sp = qbt::spectrum;
using BC = BoundaryCondition;

namespace {

constexpr const char *disc_spec = "disc:R=1";
constexpr const char *stadium_spec = "stadium:a=1,R=1";
constexpr const char *ellipse_spec = "ellipse:a=2,b=1";
constexpr const char *half_disc_spec = "half_disc:R=1";

// tolerances
constexpr double oracle_tol = 1e-7;
constexpr double runtime_budget = 600.0;
constexpr double fixed_point_tol = 1e-5;
constexpr double disc_l2_tol = 1e-3;
constexpr double cesaro_rtol = 0.10;
constexpr double route_rtol = 1e-6, smooth_route_rtol = 1e-12;
constexpr int qe_oversample = 4;
constexpr int neumann_min_count = 300;
constexpr double qe_variance_ratio = 0.5;
constexpr double qe_eps = 0.2;
constexpr double qe_fraction = 0.2;
constexpr double exponent_tol = 0.3;
constexpr double saturating_lo = 0.4, saturating_hi = 0.6, convex_max = 0.35;
constexpr double wave_width_factor = 2.0;
constexpr double invariance_tol = 1e-8;
constexpr double egorov_slope = 1.0, egorov_slope_tol = 0.3;
constexpr double birkhoff_tol = 1e-2;
constexpr double isometry_z = 3.0;
constexpr double disc_loop_max = 0.01, half_disc_loop_min = 0.1;
constexpr double weyl_tol = 3.0;

// a priori choices
constexpr double bump_s0 = 0.0;  // apex of the right cap (stadium), (1, 0) on the disc
constexpr double bump_half_width = 1.2;
constexpr double stadium_flat_centre = 0.5 * pi + 1.0;
constexpr double half_disc_diameter_midpoint = pi + 1.0;

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void say(const Context &ctx, const std::string &msg) {
  if (ctx.log) ctx.log(msg);
}

ExperimentConfig config_for(const std::string &domain, BC bc, const std::string &cache_dir) {
  ExperimentConfig c;
  c.domain = domain;
  c.bc = bc;
  c.lmin = lambda_min;
  c.lmax = lambda_max;
  c.cache_dir = cache_dir;
  return c;
}

class Spectra {
 public:
  explicit Spectra(const Context &ctx) : ctx_(ctx) {}

  const sp::SpectrumStore &bie(const std::string &domain, BC bc) {
    const std::string key = domain + "/" + to_string(bc);
    auto it = stores_.find(key);
    if (it != stores_.end()) return *it->second;
    say(ctx_, "spectrum " + key);
    auto r = cached_spectrum(config_for(domain, bc, ctx_.cache_dir));
    say(ctx_, std::string(r.hit ? "  cache hit, " : "  computed, ") + std::to_string(r.store.traces.size()) +
                  " traces");
    return *stores_.emplace(key, std::make_unique<sp::SpectrumStore>(std::move(r.store))).first->second;
  }

  const asy::SpectralSeries &series(const std::string &domain, BC bc) {
    const std::string key = domain + "/" + to_string(bc);
    auto it = series_.find(key);
    if (it != series_.end()) return *it->second;
    return *series_.emplace(key, std::make_unique<asy::SpectralSeries>(bie(domain, bc))).first->second;
  }

 private:
  const Context &ctx_;
  std::map<std::string, std::unique_ptr<sp::SpectrumStore>> stores_;
  std::map<std::string, std::unique_ptr<asy::SpectralSeries>> series_;
};

struct Builder {
  CriterionResult r;
  void metric(const std::string &k, double v) { r.metrics.emplace_back(k, v); }
};

std::vector<double> lambdas_of(const sp::SpectrumStore &st) {
  std::vector<double> l;
  for (const auto &t : st.traces) l.push_back(t.lambda);
  std::sort(l.begin(), l.end());
  return l;
}

// ---------------------------------------------------------------------------

CriterionResult c01(Spectra &S) {
  Builder b;
  bool ok = true;
  double total_seconds = 0.0;
  std::ostringstream sum;
  for (BC bc : {BC::dirichlet, BC::neumann}) {
    const auto &st = S.bie(disc_spec, bc);
    total_seconds += st.seconds;
    auto bie = lambdas_of(st);
    std::vector<double> oracle;
    for (double l : sp::disc_oracle(1.0, bc, lambda_max))
      if (l >= lambda_min) oracle.push_back(l);
    // greedy matching with multiplicity
    std::size_t i = 0, j = 0, matched = 0, missing = 0, extra = 0;
    double worst = 0.0;
    while (i < oracle.size() || j < bie.size()) {
      if (i < oracle.size() && j < bie.size() && std::abs(oracle[i] - bie[j]) <= 1e-4) {
        worst = std::max(worst, std::abs(oracle[i] - bie[j]));
        ++i, ++j, ++matched;
      } else if (j >= bie.size() || (i < oracle.size() && oracle[i] < bie[j])) {
        ++i, ++missing;
      } else {
        ++j, ++extra;
      }
    }
    const std::string tag = to_string(bc);
    b.metric(tag + ".oracle_count", double(oracle.size()));
    b.metric(tag + ".bie_count", double(bie.size()));
    b.metric(tag + ".missing", double(missing));
    b.metric(tag + ".extra", double(extra));
    b.metric(tag + ".max_abs_error", worst);
    b.metric(tag + ".seconds", st.seconds);
    ok = ok && missing == 0 && extra == 0 && worst <= oracle_tol;
    sum << tag << " " << matched << "/" << oracle.size() << " max|dl| " << fmt(worst, 3) << "; ";
  }
  b.metric("seconds_total", total_seconds);
  ok = ok && total_seconds <= runtime_budget;
  sum << "solve time " << fmt(total_seconds, 3) << " s";
  b.r.pass = ok;
  b.r.summary = sum.str();
  if (!ok) b.r.analysis = "BIE eigenvalues disagree with the Bessel-zero oracle or the solve exceeded the budget.";
  return b.r;
}

CriterionResult c02(Spectra &S) {
  Builder b;
  double worst = 0.0;
  std::size_t count = 0, over = 0;
  std::string worst_where;
  for (const char *d : {disc_spec, stadium_spec, ellipse_spec}) {
    for (BC bc : {BC::dirichlet, BC::neumann}) {
      const auto &st = S.bie(d, bc);
      const double sgn = bc == BC::dirichlet ? -1.0 : 1.0;
      double local = 0.0;
      for (const auto &t : st.traces) {
        // recomputed from a freshly assembled operator, not the stored residual
        const auto F = layer::assemble_F(t.lambda, t.grid, bc);
        const layer::Vector r = t.trace - sgn * layer::apply(F, t.trace);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < t.grid->n; ++i) {
          num += t.grid->weight[i] * std::norm(r[i]);
          den += t.grid->weight[i] * std::norm(t.trace[i]);
        }
        const double rel = std::sqrt(num / den);
        local = std::max(local, rel);
        if (rel > fixed_point_tol) ++over;
        if (rel > worst) worst = rel, worst_where = std::string(d) + " " + to_string(bc) + " lambda=" + fmt(t.lambda, 10);
        ++count;
      }
      b.metric(std::string(d) + "." + to_string(bc) + ".max_residual", local);
    }
  }
  b.metric("traces", double(count));
  b.metric("above_tolerance", double(over));
  b.metric("max_residual", worst);
  b.r.pass = over == 0 && count > 0;
  b.r.summary = std::to_string(count) + " traces, max ||(I-+F)u||/||u|| = " + fmt(worst, 3) + " (" + worst_where + ")";
  if (!b.r.pass) b.r.analysis = "Some accepted traces fail the fixed-point relation on reassembly.";
  return b.r;
}

double boundary_l2_squared(const sp::EigenTrace &t) {
  double s = 0.0;
  for (int i = 0; i < t.grid->n; ++i) s += t.grid->weight[i] * std::norm(t.trace[i]);
  return s;
}

CriterionResult c03(Spectra &S) {
  Builder b;
  const auto &disc = S.bie(disc_spec, BC::dirichlet);
  const auto zeros = specfun::bessel_zeros_below(0, lambda_max, false);
  double worst = 0.0;
  int found = 0;
  for (double z : zeros) {
    for (const auto &t : disc.traces) {
      if (std::abs(t.lambda - z) > 1e-6 || t.cluster_size != 1) continue;
      ++found;
      worst = std::max(worst, std::abs(boundary_l2_squared(t) / (t.lambda * t.lambda) - 2.0));
    }
  }
  b.metric("disc_m0_modes", found);
  b.metric("disc_m0_max_error", worst);
  const bool disc_ok = found == static_cast<int>(zeros.size()) && worst <= disc_l2_tol;

  const auto &st = S.bie(stadium_spec, BC::dirichlet);
  const auto domain = geometry::build_domain(stadium_spec);
  const double target = 2.0 * domain.perimeter() / (2.0 * domain.area());
  double sum = 0.0;
  for (const auto &t : st.traces) sum += boundary_l2_squared(t) / (t.lambda * t.lambda);
  const double mean = st.traces.empty() ? 0.0 : sum / st.traces.size();
  // second route: the quantised identity observable on uniform samples. The
  // stadium trace is only finitely smooth at the curvature jumps, so the
  // uniform trapezoid converges algebraically; 4x the default M reaches 1e-6.
  double qsum = 0.0;
  for (const auto &t : st.traces)
    qsum += qe::matrix_element(t, qe::constant_observable(), qe_oversample * qe::default_grid_size(t)).real();
  const double via_qe = st.traces.empty() ? 0.0 : qsum / st.traces.size();
  // smooth control: on the ellipse both routes are spectrally accurate at the default M
  const auto &el = S.bie(ellipse_spec, BC::dirichlet);
  double smooth_gap = 0.0;
  for (const auto &t : el.traces) {
    const double q = boundary_l2_squared(t) / (t.lambda * t.lambda);
    smooth_gap = std::max(smooth_gap, std::abs(qe::matrix_element(t, qe::constant_observable()).real() - q) / q);
  }
  b.metric("ellipse_route_gap", smooth_gap);
  const double rel = std::abs(mean - target) / target;
  b.metric("stadium_cesaro_mean", mean);
  b.metric("stadium_cesaro_mean_qe", via_qe);
  b.metric("stadium_target", target);
  b.metric("stadium_relative_error", rel);
  const bool routes_agree = std::abs(mean - via_qe) <= route_rtol * target && smooth_gap <= smooth_route_rtol;
  b.r.pass = disc_ok && rel <= cesaro_rtol && routes_agree;
  b.r.summary = "disc m=0 (" + std::to_string(found) + " modes) max|l^-2||u||^2-2| " + fmt(worst, 3) +
                "; stadium mean " + fmt(mean, 5) + " vs " + fmt(target, 5) + " (rel " + fmt(rel, 3) + ")";
  if (!b.r.pass) b.r.analysis = routes_agree ? "Dirichlet boundary L2 constant not reproduced within tolerance."
                                             : "Quadrature and quantised routes to the boundary norm disagree.";
  return b.r;
}

CriterionResult c04(Spectra &S) {
  Builder b;
  const auto &st = S.bie(stadium_spec, BC::neumann);
  const auto domain = geometry::build_domain(stadium_spec);
  const double target = 2.0 * domain.perimeter() / domain.area();
  auto traces = st.traces;
  std::sort(traces.begin(), traces.end(), [](const auto &x, const auto &y) { return x.lambda < y.lambda; });
  double sum = 0.0, worst = 0.0, at300 = 0.0;
  for (std::size_t j = 0; j < traces.size(); ++j) {
    sum += boundary_l2_squared(traces[j]);
    const double mean = sum / double(j + 1);
    if (j + 1 == static_cast<std::size_t>(neumann_min_count)) at300 = mean;
    if (j + 1 >= static_cast<std::size_t>(neumann_min_count)) worst = std::max(worst, std::abs(mean - target) / target);
  }
  const double final_mean = traces.empty() ? 0.0 : sum / traces.size();
  b.metric("count", double(traces.size()));
  b.metric("target", target);
  b.metric("running_mean_at_300", at300);
  b.metric("running_mean_final", final_mean);
  b.metric("max_relative_error_from_300", worst);
  b.r.pass = traces.size() >= static_cast<std::size_t>(neumann_min_count) && worst <= cesaro_rtol;
  b.r.summary = std::to_string(traces.size()) + " eigenvalues; running mean at 300: " + fmt(at300, 5) +
                ", final " + fmt(final_mean, 5) + " vs " + fmt(target, 5) + " (max rel from 300 on " + fmt(worst, 3) + ")";
  if (!b.r.pass) b.r.analysis = "Neumann boundary L2 running mean outside the 10% band or too few eigenvalues.";
  return b.r;
}

// Variance of the deviations over lambda_j in (lo, hi].
double window_variance(const qe::MatrixElementSeries &s, double lo, double hi) {
  double v = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < s.values.size(); ++j)
    if (s.lambdas[j] > lo && s.lambdas[j] <= hi) v += (s.values[j] - s.omega) * (s.values[j] - s.omega), ++n;
  return n ? v / n : 0.0;
}

CriterionResult c05(Spectra &S) {
  Builder b;
  const auto stadium = geometry::build_domain(stadium_spec);
  const auto disc = geometry::build_domain(disc_spec);
  const auto a_st = qe::bump(bump_s0, bump_half_width, stadium.perimeter());
  const auto a_disc = qe::bump(bump_s0, bump_half_width, disc.perimeter());
  const auto s_st = qe::matrix_elements(S.bie(stadium_spec, BC::neumann), a_st);
  const auto s_disc = qe::matrix_elements(S.bie(disc_spec, BC::neumann), a_disc);
  const auto q15 = qe::qe_statistics(s_st, 15.0, {qe_eps});
  const auto q30 = qe::qe_statistics(s_st, 30.0, {qe_eps});
  const auto d15 = qe::qe_statistics(s_disc, 15.0, {qe_eps});
  const auto d30 = qe::qe_statistics(s_disc, 30.0, {qe_eps});
  b.metric("stadium.omega", s_st.omega);
  b.metric("stadium.V15", q15.variance);
  b.metric("stadium.V30", q30.variance);
  b.metric("stadium.fraction_eps0.2_at30", q30.deviation_fraction.at(qe_eps));
  b.metric("disc.omega", s_disc.omega);
  b.metric("disc.V15", d15.variance);
  b.metric("disc.V30", d30.variance);
  // diagnostics only: windowed variances and the Dirichlet series for the same bump
  const double w1 = window_variance(s_st, 5.0, 15.0), w2 = window_variance(s_st, 15.0, 30.0);
  b.metric("stadium.window_V_5_15", w1);
  b.metric("stadium.window_V_15_30", w2);
  const auto s_dir = qe::matrix_elements(S.bie(stadium_spec, BC::dirichlet), a_st);
  const auto p15 = qe::qe_statistics(s_dir, 15.0, {qe_eps});
  const auto p30 = qe::qe_statistics(s_dir, 30.0, {qe_eps});
  b.metric("stadium_dirichlet.V15", p15.variance);
  b.metric("stadium_dirichlet.V30", p30.variance);
  b.metric("stadium_dirichlet.fraction_eps0.2_at30", p30.deviation_fraction.at(qe_eps));
  const double n_ratio = double(q15.count) / q30.count;
  // V(30) < r V(15) needs the new terms to average below this multiple of V(15)
  const double needed = (qe_variance_ratio - n_ratio) / (1.0 - n_ratio);
  b.metric("required_window_ratio", needed);

  const bool decay = q30.variance < qe_variance_ratio * q15.variance;
  const bool fraction = q30.deviation_fraction.at(qe_eps) < qe_fraction;
  const bool control = d30.variance >= qe_variance_ratio * d15.variance;
  b.r.pass = decay && fraction && control;
  b.r.summary = "stadium V(30)/V(15) = " + fmt(q30.variance / q15.variance, 3) + ", frac(|dev|>0.2) = " +
                fmt(q30.deviation_fraction.at(qe_eps), 3) + "; disc V(30)/V(15) = " +
                fmt(d30.variance / d15.variance, 3);
  if (!b.r.pass) {
    std::ostringstream os;
    os << "Trend check failed:";
    if (!decay) os << " stadium variance ratio " << fmt(q30.variance / q15.variance, 3) << " is not below 0.5;";
    if (!fraction) os << " deviation fraction " << fmt(q30.deviation_fraction.at(qe_eps), 3) << " not below 0.2;";
    if (!control) os << " disc control variance fell below half;";
    os << " V is cumulative and N(15)/N(30) = " << fmt(n_ratio, 3) << ", so halving it needs the eigenvalues in (15, 30]"
       << " to average below " << fmt(needed, 3) << " V(15); a local variance decaying like 1/lambda gives 1/3,"
       << " just above that. Measured local variance: " << fmt(w1, 3) << " on (5, 15], " << fmt(w2, 3)
       << " on (15, 30], i.e. flat. A bump in s alone is not cut off near glancing, where Neumann boundary values"
       << " are heavy-tailed (disc: ||u||^2 = 2 lambda^2 / (lambda^2 - m^2)), and bouncing-ball modes, a fraction"
       << " ~ lambda^-1/2 of the stadium spectrum, are small on the caps. The Dirichlet series for the same bump does"
       << " decay (V(30)/V(15) = " << fmt(p30.variance / p15.variance, 3) << ", fraction "
       << fmt(p30.deviation_fraction.at(qe_eps), 3) << "), slowly, as expected for lambda <= 30.";
    b.r.analysis = os.str();
  }
  return b.r;
}

CriterionResult c06(Spectra &S) {
  Builder b;
  const auto disc = geometry::build_domain(disc_spec);
  bool ok = true;
  std::ostringstream sum;
  for (BC bc : {BC::dirichlet, BC::neumann}) {
    const auto &st = S.bie(disc_spec, bc);
    for (const auto &[name, obs] :
         {std::pair<std::string, qe::Observable>{"one", qe::constant_observable()},
          std::pair<std::string, qe::Observable>{"bump", qe::bump(bump_s0, bump_half_width, disc.perimeter())}}) {
      const auto series = qe::matrix_elements(st, obs);
      const double mean = qe::cesaro_weyl(series, lambda_max);
      const double rel = std::abs(mean - series.omega) / std::abs(series.omega);
      const std::string tag = std::string(to_string(bc)) + "." + name;
      b.metric(tag + ".cesaro", mean);
      b.metric(tag + ".omega", series.omega);
      b.metric(tag + ".relative_error", rel);
      ok = ok && rel <= cesaro_rtol;
      sum << tag << " " << fmt(mean, 4) << "/" << fmt(series.omega, 4) << " ";
    }
  }
  b.r.pass = ok;
  b.r.summary = sum.str();
  if (!ok) b.r.analysis = "A disc Cesaro mean is more than 10% from its limit state at lambda=30.";
  return b.r;
}

CriterionResult c07(Spectra &S) {
  Builder b;
  bool ok = true;
  std::ostringstream sum;
  std::vector<double> grid;
  const double lo = 7.5, hi = lambda_max;
  for (int i = 0; i < 60; ++i) grid.push_back(lo * std::pow(hi / lo, i / 59.0));
  for (const char *d : {disc_spec, stadium_spec}) {
    for (BC bc : {BC::dirichlet, BC::neumann}) {
      const auto &series = S.series(d, bc);
      const double L = series.domain().perimeter();
      const double expected = bc == BC::dirichlet ? 4.0 : 2.0;
      for (double frac : {0.1, 0.37, 0.71}) {
        const double s = frac * L;
        std::vector<double> v;
        for (double l : grid) v.push_back(asy::pointwise_spectral_sum(series, s, l));
        const auto f = asy::exponent_fit(grid, v, lo, hi, "pointwise");
        const std::string tag = std::string(d) + "." + to_string(bc) + ".s=" + fmt(s, 4);
        b.metric(tag, f.exponent);
        ok = ok && std::abs(f.exponent - expected) <= exponent_tol;
        sum << fmt(f.exponent, 3) << " ";
      }
      sum << "| ";
    }
  }
  b.r.pass = ok;
  b.r.summary = "exponents [disc D | disc N | stadium D | stadium N]: " + sum.str();
  if (!ok) b.r.analysis = "A pointwise sum grows with an exponent outside the 0.3 band over [7.5, 30].";
  return b.r;
}

double sup_exponent(const std::vector<sp::EigenTrace> &traces, double lo, double hi, bool m0_only,
                    const std::string &tag) {
  std::vector<double> l, v;
  for (const auto &t : traces) {
    if (m0_only && t.mode_m != 0) continue;
    l.push_back(t.lambda);
    v.push_back(asy::trace_norm(t, 0));
  }
  return asy::exponent_fit(l, v, lo, hi, tag).exponent;
}

CriterionResult c08(Spectra &S) {
  Builder b;
  // analytic modes reach the window [18, 90] needed for 20 m=0 points
  const double lo = 18.0, hi = 90.0;
  const auto half = geometry::build_domain(half_disc_spec);
  const auto disc = geometry::build_domain(disc_spec);
  const auto hs = sp::analytic_store(half, BC::neumann, hi);
  const auto ds = sp::analytic_store(disc, BC::neumann, hi);
  const double e_half = sup_exponent(hs.traces, lo, hi, true, "half-disc m=0");
  const double e_disc = sup_exponent(ds.traces, lo, hi, false, "disc full");
  const double e_disc_bie = sup_exponent(S.bie(disc_spec, BC::neumann).traces, 7.5, lambda_max, false, "disc BIE");
  b.metric("half_disc_m0_sup_exponent", e_half);
  b.metric("disc_analytic_sup_exponent", e_disc);
  b.metric("disc_bie_sup_exponent_7.5_30", e_disc_bie);
  b.r.pass = e_half >= saturating_lo && e_half <= saturating_hi && e_disc <= convex_max && e_disc_bie <= convex_max;
  b.r.summary = "half-disc m=0 " + fmt(e_half, 3) + " in [0.4,0.6]; disc " + fmt(e_disc, 3) + " (exact modes, [18,90]), " +
                fmt(e_disc_bie, 3) + " (BIE, [7.5,30]) <= 0.35";
  if (!b.r.pass) b.r.analysis = "Sup-norm growth exponents do not separate the saturating and convex families.";
  return b.r;
}

CriterionResult c09(Spectra &S) {
  Builder b;
  const auto &series = S.series(stadium_spec, BC::neumann);
  const double sigma = 4.0 * pi / lambda_max;
  std::vector<double> t;
  for (int i = -100; i <= 1200; ++i) t.push_back(0.01 * i);
  const auto w = asy::wave_trace(series, stadium_flat_centre, t, sigma);
  const auto peaks = w.peaks(0.5, 0.1);
  const auto loops = asy::loop_lengths(series.domain(), stadium_flat_centre, 6);
  const double tol = wave_width_factor * sigma;
  double near2 = 1e300;
  bool all_match = true;
  std::ostringstream pk;
  for (const auto &p : peaks) {
    near2 = std::min(near2, std::abs(p.t - 2.0));
    double best = 1e300;
    for (double x : loops) best = std::min(best, std::abs(x - p.t));
    all_match = all_match && best <= tol;
    pk << fmt(p.t, 3) << (best <= tol ? "" : "(unmatched)") << " ";
  }
  b.metric("sigma_t", sigma);
  b.metric("peaks", double(peaks.size()));
  b.metric("distance_to_t2", peaks.empty() ? -1.0 : near2);
  b.metric("shortest_loop", loops.empty() ? -1.0 : loops.front());
  for (std::size_t i = 0; i < peaks.size() && i < 6; ++i) b.metric("peak" + std::to_string(i) + ".t", peaks[i].t);
  const bool has2 = !peaks.empty() && near2 <= tol;
  b.r.pass = has2 && all_match && !peaks.empty();
  b.r.summary = "sigma_t " + fmt(sigma, 3) + ", peaks at t = " + pk.str() + "; shortest loop " +
                (loops.empty() ? std::string("none") : fmt(loops.front(), 6));
  if (!b.r.pass) {
    std::ostringstream os;
    if (!has2)
      os << "No prominent peak within 2 sigma_t of t=2. The shortest billiard loop through the flat-side centre is "
            "the vertical bounce there and back, of length "
         << (loops.empty() ? std::string("?") : fmt(loops.front(), 6))
         << " (twice the width 2R); t=2 is the one-way chord, which returns to the opposite side, not to q. ";
    if (all_match)
      os << "Every prominent peak (t = " << pk.str() << ") lies within 2 sigma_t of a loop length through q, so the "
            "peak-loop correspondence holds; only the expected position t=2 does not.";
    else
      os << "Some prominent peaks lie further than 2 sigma_t from every loop length; with sigma_t = 4 pi / 30 the "
            "window e^{-lambda^2 sigma_t^2/2} keeps appreciable weight only below lambda of about 7.";
    b.r.analysis = os.str();
  }
  return b.r;
}

CriterionResult c10(Spectra &S) {
  Builder b;
  double worst = 0.0;
  std::size_t count = 0;
  for (const char *d : {disc_spec, stadium_spec, ellipse_spec}) {
    const auto dom = geometry::build_domain(d);
    const auto obs = qe::bump(bump_s0, bump_half_width, dom.perimeter()) * qe::parse_observable("one+eta", dom) *
                     qe::parse_observable("chi:delta=0.1", dom);
    for (BC bc : {BC::dirichlet, BC::neumann}) {
      double local = 0.0;
      for (const auto &t : S.bie(d, bc).traces) {
        const auto F = layer::assemble_F(t.lambda, t.grid, bc);
        local = std::max(local, qe::invariance_defect(t, obs, F));
        ++count;
      }
      b.metric(std::string(d) + "." + to_string(bc) + ".max_invariance_defect", local);
      worst = std::max(worst, local);
    }
  }
  b.metric("max_invariance_defect", worst);
  const bool inv_ok = worst <= invariance_tol && count > 0;

  // Egorov defect along the disc m=0 family
  const auto dom = geometry::build_domain(disc_spec);
  const auto obs = qe::bump(bump_s0, bump_half_width, dom.perimeter()) * qe::parse_observable("one+eta", dom) *
                   qe::parse_observable("chi:delta=0.1", dom);
  std::vector<double> hs, defects;
  double max_defect = 0.0;
  for (const auto &t : S.bie(disc_spec, BC::dirichlet).traces) {
    if (t.cluster_size != 1) continue;
    const auto F = layer::assemble_F(t.lambda, t.grid, t.bc);
    const auto e = qe::egorov_check(t, obs, F);
    hs.push_back(1.0 / t.lambda);
    defects.push_back(e.egorov);
    max_defect = std::max(max_defect, e.egorov);
  }
  double slope = std::nan("");
  std::string fit_note;
  try {
    // fit in h: exponent_fit works on any positive abscissa
    std::vector<double> x = hs, y = defects;
    const double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
    slope = asy::exponent_fit(x, y, lo, hi, "egorov").exponent;
  } catch (const Error &e) {
    fit_note = e.what();
  }
  b.metric("disc_m0_modes", double(hs.size()));
  b.metric("disc_m0_max_egorov_defect", max_defect);
  b.metric("egorov_slope", slope);
  const bool slope_ok = std::isfinite(slope) && std::abs(slope - egorov_slope) <= egorov_slope_tol;
  b.r.pass = inv_ok && slope_ok;
  b.r.summary = std::to_string(count) + " traces, max invariance defect " + fmt(worst, 3) + "; disc m=0 Egorov defect max " +
                fmt(max_defect, 3) + ", slope " + (std::isfinite(slope) ? fmt(slope, 3) : "undefined");
  if (!b.r.pass) {
    std::ostringstream os;
    if (!inv_ok) os << "Invariance defect above 1e-8. ";
    if (!slope_ok) {
      os << "Egorov slope not measurable as 1: on the disc the billiard map is (s, eta) -> (s + pi - 2 asin eta, eta) "
            "and gamma is conserved, so the transported symbol is a(s + pi - 2 asin eta, eta). An m=0 trace has "
            "constant modulus and no oscillation, so only eta = 0 contributes and both matrix elements equal "
            "|u|^2 times the integral of a(., 0). The defect is zero up to rounding (max "
         << fmt(max_defect, 3) << ") instead of O(h), and its log-log slope against h is noise";
      if (!fit_note.empty()) os << " (" << fit_note << ")";
      os << ".";
    }
    b.r.analysis = os.str();
  }
  return b.r;
}

CriterionResult c11(Spectra &) {
  Builder b;
  const auto stadium = geometry::build_domain(stadium_spec);
  const auto gamma = [](const billiard::PhasePoint &q) { return q.gamma; };
  const auto avg = billiard::birkhoff_average(stadium, billiard::PhasePoint::make(0.3, 0.2137), gamma, 1000000);
  const double birk_err = std::abs(avg.average - pi / 4);
  const auto ks = billiard::measure_preservation_ks(stadium, 200000, 7);
  const auto iso = billiard::transfer_isometry_mc(
      stadium, [](const billiard::PhasePoint &q) { return std::cos(q.s) * (1.0 - q.eta * q.eta); }, 200000, 11);
  const auto disc = geometry::build_domain(disc_spec);
  const auto half = geometry::build_domain(half_disc_spec);
  const auto lp_disc = billiard::loop_profile(disc, 0.0, 20, 20000, 1e-6);
  const auto lp_half = billiard::loop_profile(half, half_disc_diameter_midpoint, 20, 20000, 1e-6);
  b.metric("birkhoff_gamma", avg.average);
  b.metric("birkhoff_error", birk_err);
  b.metric("birkhoff_completed", double(avg.completed));
  b.metric("ks_d_s", ks.d_s);
  b.metric("ks_d_eta", ks.d_eta);
  b.metric("ks_critical", ks.critical);
  b.metric("isometry_z", iso.z());
  b.metric("disc_loop_measure", lp_disc.loop_measure_estimate);
  b.metric("half_disc_loop_measure", lp_half.loop_measure_estimate);
  const bool ok_b = !avg.terminated && birk_err <= birkhoff_tol;
  const bool ok_iso = std::abs(iso.z()) <= isometry_z;
  const bool ok_loop = lp_disc.loop_measure_estimate <= disc_loop_max && lp_half.loop_measure_estimate > half_disc_loop_min;
  b.r.pass = ok_b && ks.pass() && ok_iso && ok_loop;
  b.r.summary = "<gamma> = " + fmt(avg.average, 6) + " (|err| " + fmt(birk_err, 2) + "), KS " + fmt(std::max(ks.d_s, ks.d_eta), 3) +
                "/" + fmt(ks.critical, 3) + ", isometry z " + fmt(iso.z(), 3) + ", loop measure disc " +
                fmt(lp_disc.loop_measure_estimate, 3) + " half-disc " + fmt(lp_half.loop_measure_estimate, 3);
  if (!b.r.pass) b.r.analysis = "A billiard-layer check failed; see metrics.";
  return b.r;
}

CriterionResult c12(Spectra &S) {
  Builder b;
  bool ok = true;
  std::ostringstream sum, bad;
  for (const char *d : {disc_spec, ellipse_spec, stadium_spec}) {
    for (BC bc : {BC::dirichlet, BC::neumann}) {
      const auto &st = S.bie(d, bc);
      const auto dom = geometry::build_domain(d);
      // the store starts at lambda_min; nothing lies below it for these domains
      const auto a = asy::weyl_audit(lambdas_of(st), lambda_max, dom, bc);
      const std::string tag = std::string(d) + "." + to_string(bc);
      b.metric(tag + ".max_deviation", a.max_deviation);
      b.metric(tag + ".at_lambda", a.at_lambda);
      b.metric(tag + ".mean_deviation", a.mean_deviation);
      b.metric(tag + ".gaps", double(a.gaps.size()));
      sum << fmt(a.max_deviation, 3) << " ";
      if (a.max_deviation > weyl_tol) {
        ok = false;
        bad << tag << " reaches " << fmt(a.max_deviation, 3) << " at lambda=" << fmt(a.at_lambda, 5)
            << " (mean deviation " << fmt(a.mean_deviation, 3) << ", " << a.gaps.size() << " suspected gaps); ";
      }
    }
  }
  b.r.pass = ok;
  b.r.summary = "max |N - Weyl| [disc D N, ellipse D N, stadium D N]: " + sum.str();
  if (!ok) {
    b.r.analysis =
        bad.str() +
        "The two-term law leaves a remainder that is not O(1) at lambda=30. On the disc the eigenvalues cluster "
        "along Bessel-zero families, so N(lambda) oscillates about the smooth law with amplitude growing like "
        "lambda^(2/3). The third term (1/6 for smooth simply connected domains) also shifts the mean. A band of +-3 "
        "is then too narrow by lambda=30 even when no eigenvalue is missing, as the oracle match of the disc shows.";
  }
  return b.r;
}

}  // namespace

std::vector<ExperimentConfig> spectrum_configs(const std::string &cache_dir) {
  std::vector<ExperimentConfig> out;
  for (const char *d : {disc_spec, stadium_spec, ellipse_spec})
    for (BC bc : {BC::dirichlet, BC::neumann}) out.push_back(config_for(d, bc, cache_dir));
  return out;
}

void prepare(const Context &ctx) {
  for (const auto &c : spectrum_configs(ctx.cache_dir)) {
    Clock clock;
    const auto r = cached_spectrum(c);
    say(ctx, c.domain + " " + to_string(c.bc) + ": " + std::to_string(r.store.traces.size()) + " traces, " +
                 (r.hit ? "cached" : "computed in " + fmt(clock.seconds(), 4) + " s"));
  }
}

const char *criterion_title(int id) {
  switch (id) {
    case 1: return "disc oracle equivalence";
    case 2: return "fixed-point relation";
    case 3: return "Dirichlet boundary L2 constant";
    case 4: return "Neumann boundary L2 constant";
    case 5: return "quantum ergodicity trend";
    case 6: return "local Weyl law";
    case 7: return "pointwise exponents";
    case 8: return "sup-norm saturation vs convexity";
    case 9: return "wave trace and loops";
    case 10: return "Egorov checks";
    case 11: return "billiard layer";
    case 12: return "Weyl audit";
  }
  return "unknown";
}

CriterionResult run_criterion(int id, const Context &ctx) {
  if (id < 1 || id > criterion_count) fail(ErrorCode::invalid_argument, "criterion id must be 1..12");
  Spectra S(ctx);
  Clock clock;
  CriterionResult r;
  switch (id) {
    case 1: r = c01(S); break;
    case 2: r = c02(S); break;
    case 3: r = c03(S); break;
    case 4: r = c04(S); break;
    case 5: r = c05(S); break;
    case 6: r = c06(S); break;
    case 7: r = c07(S); break;
    case 8: r = c08(S); break;
    case 9: r = c09(S); break;
    case 10: r = c10(S); break;
    case 11: r = c11(S); break;
    case 12: r = c12(S); break;
  }
  r.id = id;
  r.title = criterion_title(id);
  r.seconds = clock.seconds();
  return r;
}

std::string format_line(const CriterionResult &r) {
  char head[64];
  std::snprintf(head, sizeof head, "C%02d %s  ", r.id, r.pass ? "PASS" : "FAIL");
  return std::string(head) + r.title + ": " + r.summary;
}

std::string to_json(const std::vector<CriterionResult> &results) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto &r : results) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto &[k, v] : r.metrics) m[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    j.push_back({{"id", r.id},
                 {"title", r.title},
                 {"pass", r.pass},
                 {"summary", r.summary},
                 {"analysis", r.analysis},
                 {"seconds", r.seconds},
                 {"metrics", m}});
  }
  return j.dump(2);
}

}  // namespace qbt::acceptance
