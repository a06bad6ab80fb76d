// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qbt/asymptotics.hpp"
#include "qbt/error.hpp"
#include "qbt/specfun.hpp"

using namespace qbt;
using namespace qbt::asymptotics;
namespace sp = qbt::spectrum;

namespace {

const geometry::Domain &disc() {
  static const auto d = geometry::build_domain("disc:R=1");
  return d;
}

const SpectralSeries &disc_series(BoundaryCondition bc) {
  static const SpectralSeries d(sp::analytic_store(disc(), BoundaryCondition::dirichlet, 20.0));
  static const SpectralSeries n(sp::analytic_store(disc(), BoundaryCondition::neumann, 20.0));
  return bc == BoundaryCondition::dirichlet ? d : n;
}

}  // namespace

TEST_CASE("pointwise sums: zero below the spectrum, monotone, rotation invariant") {
  const auto &sd = disc_series(BoundaryCondition::dirichlet);
  CHECK(pointwise_spectral_sum(sd, 0.3, 2.0) == 0.0);
  CHECK(pointwise_spectral_sum(disc_series(BoundaryCondition::neumann), 0.3, 1.0) ==
        doctest::Approx(1.0 / pi));
  double prev = 0.0;
  for (double l = 2.0; l <= 20.0; l += 0.25) {
    const double v = pointwise_spectral_sum(sd, 0.3, l);
    CHECK(v >= prev);
    prev = v;
    const double w = pointwise_spectral_sum(sd, 4.1, l);
    CHECK(std::abs(v - w) <= 1e-8 * std::max(1.0, v));
  }
  CHECK_THROWS_AS(pointwise_spectral_sum(sd, 0.0, 25.0), Error);
}

TEST_CASE("m=0 contribution and jumps") {
  const auto &sd = disc_series(BoundaryCondition::dirichlet);
  const double j01 = specfun::bessel_zero(0, 1, false);
  CHECK(jump_bound(sd, 1.0, j01) == doctest::Approx(j01 * j01 / pi).epsilon(1e-10));
  // j_{1,1} is a doubly degenerate level: both members contribute
  const double j11 = specfun::bessel_zero(1, 1, false);
  CHECK(jump_bound(sd, 2.2, j11) == doctest::Approx(2 * j11 * j11 / pi).epsilon(1e-10));
  CHECK_THROWS_AS(jump_bound(sd, 0.0, 3.0), Error);
  for (double l : sd.lambdas()) {
    const double jump = pointwise_spectral_sum(sd, 0.7, l) - pointwise_spectral_sum(sd, 0.7, l * (1 - 1e-9));
    CHECK(jump == doctest::Approx(jump_bound(sd, 0.7, l)).epsilon(1e-9));
  }
}

TEST_CASE("exponent fits") {
  std::vector<double> l, c, p;
  for (int i = 0; i < 40; ++i) {
    l.push_back(2.0 + 0.5 * i);
    c.push_back(3.0);
    p.push_back(0.7 * std::pow(l.back(), 2.5));
  }
  const auto fc = exponent_fit(l, c, 2.0, 21.5, "const");
  CHECK(std::abs(fc.exponent) < 1e-12);
  CHECK(fc.ci_lo <= 0.0);
  CHECK(fc.ci_hi >= 0.0);
  const auto fp = exponent_fit(l, p, 2.0, 21.5);
  CHECK(fp.exponent == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(fp.prefactor == doctest::Approx(0.7).epsilon(1e-10));
  CHECK_THROWS_AS(exponent_fit(l, p, 10.0, 21.5), Error);
  CHECK_THROWS_AS(exponent_fit(l, p, 2.0, 5.0), Error);

  std::vector<double> x, d, n;
  for (double v = 5.0; v <= 20.0; v += 0.25) {
    x.push_back(v);
    d.push_back(pointwise_spectral_sum(disc_series(BoundaryCondition::dirichlet), 0.0, v));
    n.push_back(pointwise_spectral_sum(disc_series(BoundaryCondition::neumann), 0.0, v));
  }
  CHECK(exponent_fit(x, d, 5.0, 20.0).exponent == doctest::Approx(4.0).epsilon(0.05));
  CHECK(exponent_fit(x, n, 5.0, 20.0).exponent == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("trace norms") {
  const auto &sd = disc_series(BoundaryCondition::dirichlet);
  for (const auto &t : sd.traces()) {
    if (t.mode_m != 0) continue;
    CHECK(trace_norm(t, 0) == doctest::Approx(t.lambda / std::sqrt(pi)).epsilon(1e-10));
    CHECK(trace_norm(t, 2) == doctest::Approx(t.lambda * std::sqrt(2.0)).epsilon(1e-10));
  }
  const auto &sn = disc_series(BoundaryCondition::neumann);
  for (const auto &t : sn.traces()) {
    const auto nm = trace_norms(t);
    CHECK(nm.l2 <= nm.l4 * std::pow(two_pi, 0.25) * (1 + 1e-12));
    CHECK(nm.l4 <= nm.l8 * std::pow(two_pi, 0.125) * (1 + 1e-12));
    CHECK(nm.l8 <= nm.sup * std::pow(two_pi, 0.125) * (1 + 1e-12));
    if (t.mode_m == 0) CHECK(tataru_ratio(t) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(tataru_ratio(sd.traces().front()), Error);
  CHECK(tataru_constant(sn.traces()) > 0.0);
}

TEST_CASE("half-disc sup norms saturate, disc sup norms do not") {
  const auto hd = geometry::build_domain("half_disc:R=1");
  const SpectralSeries half(sp::analytic_store(hd, BoundaryCondition::neumann, 90.0));
  std::vector<double> l, v;
  for (const auto &t : half.traces())
    if (t.mode_m == 0) l.push_back(t.lambda), v.push_back(trace_norm(t, 0));
  const auto f = exponent_fit(l, v, 18.0, 90.0, "half-disc m=0 sup");
  CHECK(f.exponent >= 0.4);
  CHECK(f.exponent <= 0.6);
  const SpectralSeries full(sp::analytic_store(disc(), BoundaryCondition::neumann, 90.0));
  l.clear();
  v.clear();
  for (const auto &t : full.traces()) l.push_back(t.lambda), v.push_back(trace_norm(t, 0));
  const auto g = exponent_fit(l, v, 18.0, 90.0, "disc sup");
  CHECK(g.exponent < 0.35);
  MESSAGE("half-disc " << f.exponent << " disc " << g.exponent);
}

TEST_CASE("wave trace") {
  const auto &sn = disc_series(BoundaryCondition::neumann);
  const double sig = 4 * pi / sn.lmax();
  std::vector<double> t;
  for (int i = -100; i <= 800; ++i) t.push_back(0.01 * i);
  const auto w = wave_trace(sn, 0.0, t, sig);
  double at0 = 0.0;
  for (const auto &tr : sn.traces()) at0 += std::exp(-0.5 * std::pow(tr.lambda * sig, 2)) * std::norm(sp::trace_at(tr, 0.0));
  CHECK(w.value[100].real() == doctest::Approx(at0).epsilon(1e-12));
  CHECK(std::abs(w.value[100].imag()) < 1e-12 * at0);
  for (const auto &x : w.value) CHECK(std::abs(x) <= at0 * (1 + 1e-12));
  const auto pk = w.peaks();
  REQUIRE_FALSE(pk.empty());
  CHECK_THROWS_AS(wave_trace(sn, 0.0, t, 0.5 * sig), Error);
  const auto loops = loop_lengths(disc(), 0.0, 3, 4000);
  REQUIRE(loops.size() == 2);
  CHECK(loops[0] == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(loops[1] == doctest::Approx(3 * std::sqrt(3.0)).epsilon(1e-10));
  // every prominent peak sits near a loop length
  const auto all = loop_lengths(disc(), 0.0, 8, 4000);
  for (const auto &p : pk) {
    double best = 1e9;
    for (double x : all) best = std::min(best, std::abs(x - p.t));
    CHECK(best < 2 * sig);
  }
}

TEST_CASE("Weyl audit") {
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    const auto &s = disc_series(bc);
    const auto a = weyl_audit(s);
    CHECK(a.max_deviation < 4.0);
    CHECK(a.gaps.empty());
    // deleting an eigenvalue shifts N by one from there on
    auto lam = s.lambdas();
    std::size_t k = 0;
    for (std::size_t j = 0; j < lam.size(); ++j)
      if (lam[j] > 9.0 && lam[j] < 14.0 && (j == 0 || lam[j] - lam[j - 1] > 1e-6) &&
          (j + 1 == lam.size() || lam[j + 1] - lam[j] > 1e-6)) {
        k = j;
        break;
      }
    REQUIRE(k > 0);
    const double removed = lam[k];
    lam.erase(lam.begin() + static_cast<long>(k));
    const auto g = weyl_audit(lam, s.lmax(), disc(), bc);
    bool flagged = false;
    for (const auto &gi : g.gaps) flagged = flagged || (gi.lo < removed && gi.hi > removed);
    CHECK(flagged);
  }
  // the sign of the perimeter term: Neumann counts more eigenvalues
  CHECK(sp::weyl_count(disc(), BoundaryCondition::neumann, 10.0) -
            sp::weyl_count(disc(), BoundaryCondition::dirichlet, 10.0) ==
        doctest::Approx(2 * two_pi * 10.0 / (4 * pi)));
}

TEST_CASE("incomplete series are refused") {
  auto st = sp::analytic_store(disc(), BoundaryCondition::dirichlet, 10.0);
  st.lmin = 5.0;
  CHECK_THROWS_AS(SpectralSeries{st}, Error);
}
