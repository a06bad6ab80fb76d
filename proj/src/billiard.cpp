// SPDX-License-Identifier: Apache-2.0
#include "qbt/billiard.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qbt/error.hpp"
#include "qbt/parallel.hpp"

namespace qbt::billiard {

using geometry::Domain;

PhasePoint PhasePoint::make(double s, double eta) {
  if (!(std::abs(eta) < 1.0)) fail(ErrorCode::grazing, "|eta| must be < 1");
  const double g = std::sqrt((1.0 - eta) * (1.0 + eta));
  if (g < grazing_cutoff) fail(ErrorCode::grazing, "grazing phase point");
  return {s, eta, g};
}

namespace {

struct Located {
  std::size_t arc;
  geometry::BoundaryFrame frame;
};

Located locate(const Domain &d, double s) {
  s = d.wrap(s);
  const std::size_t i = d.arc_index(s);
  const auto &arc = d.arcs()[i];
  return {i, geometry::arc_frame(d, i, std::clamp(s - arc.s_begin, 0.0, arc.length))};
}

// Uniform empirical CDF distance to the uniform law on [0, 1).
double ks_uniform(std::vector<double> &u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  }
  return d;
}

}  // namespace

Vec2 lift(const Domain &domain, const PhasePoint &q) {
  const auto f = locate(domain, q.s).frame;
  return q.eta * f.tangent + q.gamma * f.inward_normal;
}

BilliardStepResult step(const Domain &domain, const PhasePoint &q) {
  if (!(std::abs(q.eta) < 1.0) || q.gamma < grazing_cutoff) {
    fail(ErrorCode::grazing, "grazing phase point");
  }
  const Located here = locate(domain, q.s);
  const Vec2 xi = q.eta * here.frame.tangent + q.gamma * here.frame.inward_normal;
  const auto hit = geometry::boundary_exit(domain, here.frame.position, xi, here.arc);
  BilliardStepResult r;
  r.from = here.frame.position;
  r.to = hit.point;
  r.flight_length = (hit.point - here.frame.position).norm();
  r.chord = {domain.wrap(q.s), hit.s, r.flight_length, geometry::ChordKind::interior};
  if (hit.corner) return r;
  const auto &arc = domain.arcs()[hit.arc];
  const double u = std::clamp(domain.wrap(hit.s - arc.s_begin), 0.0, arc.length);
  const auto f = geometry::arc_frame(domain, hit.arc, u);
  const double eta = std::clamp(dot(xi, f.tangent), -1.0, 1.0);
  r.next = PhasePoint::make(hit.s, eta);
  return r;
}

Trajectory trajectory(const Domain &domain, const PhasePoint &q0, std::size_t bounces) {
  Trajectory t;
  t.steps.reserve(bounces);
  PhasePoint q = q0;
  double total = 0.0;
  for (std::size_t k = 0; k < bounces; ++k) {
    auto r = step(domain, q);
    total += r.flight_length;
    t.cumulative_length.push_back(total);
    t.steps.push_back(r);
    if (!r.next) {
      t.terminated = true;
      break;
    }
    q = *r.next;
  }
  return t;
}

BirkhoffResult birkhoff_average(const Domain &domain, const PhasePoint &q0, const PhaseFunction &a,
                                std::size_t n) {
  BirkhoffResult out;
  PhasePoint q = q0;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += a(q);
    ++out.completed;
    if (k + 1 == n) break;
    auto r = step(domain, q);
    if (!r.next) {
      out.terminated = true;
      break;
    }
    q = *r.next;
  }
  out.average = out.completed ? sum / static_cast<double>(out.completed) : 0.0;
  return out;
}

double transfer_apply(const Domain &domain, const PhaseFunction &f, const PhasePoint &q,
                      bool adjoint) {
  const auto r = step(domain, q);
  if (!r.next) fail(ErrorCode::corner_hit, "billiard map undefined: chord ends at a corner");
  const double w = adjoint ? r.next->gamma / q.gamma : q.gamma / r.next->gamma;
  return w * f(*r.next);
}

LoopProfile loop_profile(const Domain &domain, double s, int n_max, std::size_t n_samples,
                         double tol) {
  if (n_samples == 0) fail(ErrorCode::invalid_argument, "n_samples must be positive");
  LoopProfile p;
  p.basepoint = domain.wrap(s);
  p.n_max = std::max(0, n_max);
  p.tol = tol;
  std::vector<LoopSample> samples(n_samples);
  std::vector<char> valid(n_samples, 1);
  parallel_for(n_samples, [&](std::size_t k) {
    LoopSample &smp = samples[k];
    smp.eta = -1.0 + (2.0 * k + 1.0) / static_cast<double>(n_samples);
    smp.return_distance = std::numeric_limits<double>::infinity();
    PhasePoint q;
    try {
      q = PhasePoint::make(p.basepoint, smp.eta);
    } catch (const Error &) {
      valid[k] = 0;
      return;
    }
    double length = 0.0;
    for (int n = 1; n <= p.n_max; ++n) {
      BilliardStepResult r;
      try {
        r = step(domain, q);
      } catch (const Error &e) {
        if (e.code() != ErrorCode::grazing) throw;
        break;
      }
      length += r.flight_length;
      const double miss = domain.arclength_distance(r.chord.s2, p.basepoint);
      if (miss <= tol) {
        smp.loop_iterate = n;
        smp.return_distance = miss;
        smp.loop_length = length;
        return;
      }
      smp.return_distance = std::min(smp.return_distance, miss);
      if (!r.next) break;
      q = *r.next;
    }
  });
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    if (!valid[k]) {
      ++p.rejected_grazing;
      continue;
    }
    if (samples[k].loop_iterate) ++hits;
    p.samples.push_back(samples[k]);
  }
  const double n = static_cast<double>(p.samples.size());
  if (n > 0) {
    p.loop_measure_estimate = hits / n;
    const double m = p.loop_measure_estimate;
    p.confidence_half_width = 1.96 * std::sqrt(std::max(m * (1 - m), 0.25 / n) / n);
  }
  return p;
}

KsReport measure_preservation_ks(const Domain &domain, std::size_t n, std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x6b73}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> us(0.0, domain.perimeter()), ue(-1.0, 1.0);
  std::vector<double> s_img, e_img;
  s_img.reserve(n);
  e_img.reserve(n);
  while (s_img.size() < n) {
    const double s = us(rng), eta = ue(rng);
    if (std::sqrt(1.0 - eta * eta) < grazing_cutoff) continue;
    const auto r = step(domain, PhasePoint::make(s, eta));
    if (!r.next) continue;
    s_img.push_back(r.next->s / domain.perimeter());
    e_img.push_back(0.5 * (r.next->eta + 1.0));
  }
  KsReport k;
  k.samples = n;
  k.d_s = ks_uniform(s_img);
  k.d_eta = ks_uniform(e_img);
  k.critical = 1.628 / std::sqrt(static_cast<double>(n));
  return k;
}

IsometryReport transfer_isometry_mc(const Domain &domain, const PhaseFunction &f, std::size_t n,
                                    std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x7472}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> us(0.0, domain.perimeter()), ue(-1.0, 1.0);
  const double vol = 2.0 * domain.perimeter();
  double sum_l = 0, sum_r = 0, sum_d = 0, sum_d2 = 0;
  std::size_t used = 0;
  while (used < n) {
    const auto q = PhasePoint::make(us(rng), ue(rng));
    const auto r = step(domain, q);
    if (!r.next) continue;
    const double tf = q.gamma / r.next->gamma * f(*r.next);
    const double g2 = q.gamma * q.gamma;
    const double l = tf * tf / g2;
    const double rr = f(q) * f(q) / g2;
    sum_l += l;
    sum_r += rr;
    sum_d += l - rr;
    sum_d2 += (l - rr) * (l - rr);
    ++used;
  }
  const double m = static_cast<double>(used);
  IsometryReport rep;
  rep.samples = used;
  rep.lhs = vol * sum_l / m;
  rep.rhs = vol * sum_r / m;
  const double mean_d = sum_d / m;
  const double var_d = std::max(0.0, sum_d2 / m - mean_d * mean_d);
  rep.standard_error = vol * std::sqrt(var_d / (m - 1));
  return rep;
}

}  // namespace qbt::billiard
