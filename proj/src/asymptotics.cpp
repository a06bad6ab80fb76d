// SPDX-License-Identifier: Apache-2.0
#include "qbt/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "qbt/billiard.hpp"
#include "qbt/error.hpp"
#include "qbt/parallel.hpp"
#include "qbt/specfun.hpp"

namespace qbt::asymptotics {

double first_eigenvalue_bound(const geometry::Domain &domain, BoundaryCondition bc) {
  if (bc == BoundaryCondition::dirichlet) return specfun::bessel_zero(0, 1, false) * std::sqrt(pi / domain.area());
  if (!domain.convex()) return 0.0;
  const Vec2 diag = domain.box_max() - domain.box_min();
  return pi / diag.norm();
}

SpectralSeries::SpectralSeries(spectrum::SpectrumStore store)
    : store_(std::move(store)), domain_(geometry::build_domain(store_.domain_spec)) {
  const double bound = first_eigenvalue_bound(domain_, store_.bc);
  if (store_.lmin > bound) {
    std::ostringstream os;
    os << "series starts at lambda=" << store_.lmin << ", above the first-eigenvalue bound " << bound;
    fail(ErrorCode::precondition, os.str());
  }
  std::sort(store_.traces.begin(), store_.traces.end(),
            [](const EigenTrace &a, const EigenTrace &b) { return a.lambda < b.lambda; });
  for (const auto &t : store_.traces) lambdas_.push_back(t.lambda);
}

int SpectralSeries::count(double lambda) const {
  const int n = static_cast<int>(std::upper_bound(lambdas_.begin(), lambdas_.end(), lambda) - lambdas_.begin());
  return n + (bc() == BoundaryCondition::neumann && lambda >= 0.0 ? 1 : 0);
}

namespace {

void check_range(const SpectralSeries &series, double lambda) {
  if (lambda > series.lmax() * (1 + 1e-12)) {
    std::ostringstream os;
    os << "lambda=" << lambda << " beyond the series (lmax=" << series.lmax() << ")";
    fail(ErrorCode::precondition, os.str());
  }
}

}  // namespace

double interval_sum(const SpectralSeries &series, double s, double a, double b) {
  check_range(series, b);
  double sum = 0.0;
  for (const auto &t : series.traces()) {
    if (t.lambda < a) continue;
    if (t.lambda > b) break;
    sum += std::norm(spectrum::trace_at(t, s));
  }
  return sum;
}

double pointwise_spectral_sum(const SpectralSeries &series, double s, double lambda) {
  double sum = interval_sum(series, s, 0.0, lambda);
  if (series.bc() == BoundaryCondition::neumann && lambda >= 0.0) sum += 1.0 / series.domain().area();
  return sum;
}

ExponentFit exponent_fit(const std::vector<double> &lambdas, const std::vector<double> &values, double lo,
                         double hi, const std::string &tag, std::uint64_t seed, int resamples) {
  if (lambdas.size() != values.size()) fail(ErrorCode::invalid_argument, "lambda and value counts differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < lo || lambdas[i] > hi || !(values[i] > 0.0)) continue;
    x.push_back(std::log(lambdas[i]));
    y.push_back(std::log(values[i]));
  }
  const int n = static_cast<int>(x.size());
  if (!(lo > 0.0) || hi < 4.0 * lo || n < 20) {
    std::ostringstream os;
    os << "degenerate fit window [" << lo << ", " << hi << "] with " << n << " positive samples";
    fail(ErrorCode::precondition, os.str());
  }
  const auto fit = [&](const std::vector<int> &idx, double &slope, double &icept) {
    double mx = 0, my = 0;
    for (int i : idx) mx += x[i], my += y[i];
    mx /= idx.size();
    my /= idx.size();
    double sxx = 0, sxy = 0;
    for (int i : idx) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    slope = sxx > 0 ? sxy / sxx : 0.0;
    icept = my - slope * mx;
  };
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  ExponentFit r;
  r.tag = tag;
  r.lambda_lo = lo;
  r.lambda_hi = hi;
  r.points = n;
  double icept = 0.0;
  fit(all, r.exponent, icept);
  r.prefactor = std::exp(icept);
  double ss = 0.0;
  for (int i = 0; i < n; ++i) ss += std::pow(y[i] - icept - r.exponent * x[i], 2);
  r.residual = std::sqrt(ss / n);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<int> idx(n);
  for (int b = 0; b < resamples; ++b) {
    for (int &i : idx) i = pick(rng);
    double sl = 0, ic = 0;
    fit(idx, sl, ic);
    slopes.push_back(sl);
  }
  std::sort(slopes.begin(), slopes.end());
  if (slopes.empty()) {
    r.ci_lo = r.ci_hi = r.exponent;
  } else {
    r.ci_lo = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
    r.ci_hi = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
  }
  return r;
}

namespace {

double sup_norm(const EigenTrace &t) {
  const double L = t.grid->domain->perimeter();
  const int K = std::max(8 * t.grid->n, 256);
  double best = -1.0, s_best = 0.0;
  for (int i = 0; i < K; ++i) {
    const double s = (i + 0.5) * L / K;
    const double v = std::abs(spectrum::trace_at(t, s));
    if (v > best) best = v, s_best = s;
  }
  // golden section on |u| around the sampled maximum
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = s_best - L / K, b = s_best + L / K;
  const auto f = [&](double s) { return std::abs(spectrum::trace_at(t, t.grid->domain->wrap(s))); };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 40 && b - a > 1e-12 * L; ++it) {
    if (fc > fd) {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

}  // namespace

double trace_norm(const EigenTrace &t, double p) {
  if (!t.grid) fail(ErrorCode::invalid_argument, "trace without grid");
  if (p == 0.0) return sup_norm(t);
  if (p < 1.0) fail(ErrorCode::invalid_argument, "p must be >= 1 (or 0 for the sup norm)");
  double sum = 0.0;
  for (int i = 0; i < t.grid->n; ++i) sum += t.grid->weight[i] * std::pow(std::abs(t.trace[i]), p);
  return std::pow(sum, 1.0 / p);
}

TraceNorms trace_norms(const EigenTrace &t) {
  return {t.lambda, trace_norm(t, 2), trace_norm(t, 4), trace_norm(t, 8), trace_norm(t, 0)};
}

double tataru_ratio(const EigenTrace &t) {
  if (t.bc != BoundaryCondition::neumann) fail(ErrorCode::wrong_bc, "the Tataru ratio is defined for Neumann traces");
  return trace_norm(t, 2);
}

double tataru_constant(const std::vector<EigenTrace> &traces) {
  double c = 0.0;
  for (const auto &t : traces) c = std::max(c, tataru_ratio(t) / std::cbrt(t.lambda));
  return c;
}

WaveTrace wave_trace(const SpectralSeries &series, double s, const std::vector<double> &t_grid, double sigma_t) {
  const double bound = 4.0 * pi / series.lmax();
  if (sigma_t < bound * (1 - 1e-12)) {
    std::ostringstream os;
    os << "sigma_t=" << sigma_t << " below the resolution bound 4 pi / lmax = " << bound;
    fail(ErrorCode::precondition, os.str());
  }
  WaveTrace w;
  w.t = t_grid;
  w.sigma_t = sigma_t;
  w.window = 1.0 / sigma_t;
  const auto &tr = series.traces();
  std::vector<double> lam, amp;
  for (const auto &t : tr) {
    lam.push_back(t.lambda);
    amp.push_back(std::exp(-0.5 * std::pow(t.lambda * sigma_t, 2)) * std::norm(spectrum::trace_at(t, s)));
  }
  w.value.assign(t_grid.size(), 0.0);
  parallel_for(t_grid.size(), [&](std::size_t i) {
    cdouble v = 0.0;
    for (std::size_t j = 0; j < lam.size(); ++j) v += amp[j] * std::polar(1.0, t_grid[i] * lam[j]);
    w.value[i] = v;
  });
  return w;
}

std::vector<WavePeak> WaveTrace::peaks(double t_min, double fraction) const {
  const std::size_t n = t.size();
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = std::abs(value[i]);
  double ref = 0.0;
  {
    std::size_t i0 = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(t[i]) < std::abs(t[i0])) i0 = i;
    ref = n ? m[i0] : 0.0;
  }
  std::vector<WavePeak> out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (t[i] <= t_min || !(m[i] > m[i - 1] && m[i] >= m[i + 1])) continue;
    // topographic prominence: walk out to a higher sample or the ends
    double left_min = m[i], right_min = m[i];
    std::size_t j = i;
    bool left_higher = false, right_higher = false;
    while (j > 0) {
      --j;
      if (m[j] > m[i]) {
        left_higher = true;
        break;
      }
      left_min = std::min(left_min, m[j]);
    }
    j = i;
    while (j + 1 < n) {
      ++j;
      if (m[j] > m[i]) {
        right_higher = true;
        break;
      }
      right_min = std::min(right_min, m[j]);
    }
    double base;
    if (left_higher && right_higher) base = std::max(left_min, right_min);
    else if (left_higher) base = left_min;
    else if (right_higher) base = right_min;
    else base = std::min(left_min, right_min);
    const double prom = m[i] - base;
    if (prom > fraction * ref) out.push_back({t[i], m[i], prom});
  }
  std::sort(out.begin(), out.end(), [](const WavePeak &a, const WavePeak &b) { return a.prominence > b.prominence; });
  return out;
}

namespace {

struct Orbit {
  double miss = std::numeric_limits<double>::quiet_NaN();
  double length = 0.0;
};

// signed arclength miss of the n-th hit and the flight length up to it
Orbit orbit(const geometry::Domain &domain, double s, double eta, int n) {
  Orbit o;
  billiard::PhasePoint q;
  try {
    q = billiard::PhasePoint::make(s, eta);
    for (int k = 1; k <= n; ++k) {
      const auto r = billiard::step(domain, q);
      o.length += r.flight_length;
      if (k == n) {
        const double L = domain.perimeter();
        double d = std::fmod(r.chord.s2 - s, L);
        if (d > 0.5 * L) d -= L;
        if (d < -0.5 * L) d += L;
        o.miss = d;
      } else if (!r.next) {
        return o;
      } else {
        q = *r.next;
      }
    }
  } catch (const Error &) {
  }
  return o;
}

}  // namespace

std::vector<double> loop_lengths(const geometry::Domain &domain, double s, int n_max, std::size_t samples) {
  const double L = domain.perimeter();
  std::vector<double> out;
  for (int n = 2; n <= n_max; ++n) {
    std::vector<Orbit> g(samples + 1);
    std::vector<double> eta(samples + 1);
    for (std::size_t i = 0; i <= samples; ++i) eta[i] = -1.0 + 1e-6 + (2.0 - 2e-6) * i / samples;
    parallel_for(samples + 1, [&](std::size_t i) { g[i] = orbit(domain, s, eta[i], n); });
    for (std::size_t i = 0; i < samples; ++i) {
      const double m0 = g[i].miss, m1 = g[i + 1].miss;
      if (std::isnan(m0) || std::isnan(m1)) continue;
      // sign changes across the +-L/2 wrap are not roots
      if (std::abs(m0) > 0.25 * L || std::abs(m1) > 0.25 * L) continue;
      if (m0 != 0.0 && (m0 > 0) == (m1 > 0)) continue;
      double a = eta[i], b = eta[i + 1], fa = m0;
      Orbit mid = g[i];
      for (int it = 0; it < 60 && fa != 0.0; ++it) {
        const double c = 0.5 * (a + b);
        mid = orbit(domain, s, c, n);
        if (std::isnan(mid.miss)) break;
        if ((mid.miss > 0) == (fa > 0)) a = c, fa = mid.miss;
        else b = c;
        if (b - a < 1e-14) break;
      }
      if (std::isnan(mid.miss) || std::abs(mid.miss) > 1e-8) continue;
      out.push_back(mid.length);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double x, double y) { return std::abs(x - y) < 1e-6; }),
            out.end());
  return out;
}

WeylAudit weyl_audit(const std::vector<double> &lambdas_in, double lmax, const geometry::Domain &domain,
                     BoundaryCondition bc) {
  std::vector<double> lam;
  for (double l : lambdas_in)
    if (l <= lmax) lam.push_back(l);
  std::sort(lam.begin(), lam.end());
  const int offset = bc == BoundaryCondition::neumann ? 1 : 0;
  WeylAudit a;
  // the deviation is piecewise monotone: extremes sit just before and at each jump
  const auto consider = [&](double l, int count) {
    const double d = count - spectrum::weyl_count(domain, bc, l);
    if (std::abs(d) > a.max_deviation) a.max_deviation = std::abs(d), a.at_lambda = l;
  };
  for (std::size_t j = 0; j < lam.size(); ++j) {
    consider(lam[j], static_cast<int>(j) + offset);
    consider(lam[j], static_cast<int>(j) + 1 + offset);
  }
  consider(lmax, static_cast<int>(lam.size()) + offset);

  // running mean of the deviation on a fine grid
  const int K = std::max(200, static_cast<int>(40 * lmax));
  std::vector<double> grid(K), dev(K);
  double mean = 0.0;
  for (int i = 0; i < K; ++i) {
    grid[i] = lmax * (i + 0.5) / K;
    const int c = static_cast<int>(std::upper_bound(lam.begin(), lam.end(), grid[i]) - lam.begin()) + offset;
    dev[i] = c - spectrum::weyl_count(domain, bc, grid[i]);
    mean += dev[i];
  }
  a.mean_deviation = mean / K;
  const auto window_mean = [&](double from, double to) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < K; ++i)
      if (grid[i] >= from && grid[i] <= to) sum += dev[i], ++n;
    return n ? sum / n : 0.0;
  };
  for (std::size_t j = 0; j + 1 < lam.size(); ++j) {
    const double lo = lam[j], hi = lam[j + 1];
    const double spacing = spectrum::weyl_spacing(domain, bc, hi);
    const double ratio = (hi - lo) / spacing;
    if (ratio < 2.5) continue;
    const double w = std::max(1.0, 15.0 * spacing);
    if (lo - w < lam.front() || hi + w > lmax) continue;
    const double drop = window_mean(lo - w, lo) - window_mean(hi, hi + w);
    if (drop >= 0.7) a.gaps.push_back({lo, hi, ratio, drop});
  }
  return a;
}

WeylAudit weyl_audit(const SpectralSeries &series) {
  return weyl_audit(series.lambdas(), series.lmax(), series.domain(), series.bc());
}

double jump_bound(const SpectralSeries &series, double s, double lambda, double rtol) {
  double sum = 0.0;
  bool found = false;
  for (const auto &t : series.traces()) {
    if (std::abs(t.lambda - lambda) <= rtol * lambda) {
      sum += std::norm(spectrum::trace_at(t, s));
      found = true;
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "lambda=" << lambda << " is not an eigenvalue of the series";
    fail(ErrorCode::invalid_argument, os.str());
  }
  return sum;
}

}  // namespace qbt::asymptotics
