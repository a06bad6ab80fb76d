#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "qbt/billiard.hpp"
#include "qbt/error.hpp"

using namespace qbt;
using namespace qbt::billiard;
using geometry::build_domain;

TEST_CASE("lift") {
  auto d = build_domain("disc:R=1");
  Vec2 xi = lift(d, PhasePoint::make(0.0, 0.0));
  CHECK(xi.x == doctest::Approx(-1.0));
  auto q = PhasePoint::make(0.0, 0.6);
  CHECK(q.gamma == doctest::Approx(0.8));
  xi = lift(d, q);
  const auto f = geometry::frame_at(d, 0.0);
  CHECK(dot(xi, f.tangent) == doctest::Approx(0.6));
  CHECK(dot(xi, f.inward_normal) == doctest::Approx(0.8));
  CHECK(xi.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(PhasePoint::make(0.0, 1.0), Error);
  CHECK_THROWS_AS(PhasePoint::make(0.0, 1.0 - 1e-17), Error);
}

TEST_CASE("disc closed form") {
  auto d = build_domain("disc:R=1");
  auto r = step(d, PhasePoint::make(0.0, 0.0));
  REQUIRE(r.next);
  CHECK(r.next->s == doctest::Approx(pi));
  CHECK(r.next->eta == doctest::Approx(0.0));
  CHECK(r.flight_length == doctest::Approx(2.0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> us(0.0, two_pi), ue(-0.999, 0.999);
  for (int i = 0; i < 1000; ++i) {
    const double s = us(rng), eta = ue(rng);
    auto st = step(d, PhasePoint::make(s, eta));
    REQUIRE(st.next);
    CHECK(st.next->eta == doctest::Approx(eta).epsilon(1e-12));
    const double expect = d.wrap(s + pi - 2 * std::asin(eta));
    CHECK(d.arclength_distance(st.next->s, expect) < 1e-11);
    CHECK(st.flight_length == doctest::Approx(2 * std::sqrt(1 - eta * eta)));
  }
  auto traj = trajectory(d, PhasePoint::make(0.3, 0.0), 2);
  CHECK(d.arclength_distance(traj.steps[1].next->s, 0.3) < 1e-12);
  CHECK(traj.cumulative_length[1] == doctest::Approx(4.0));
}

TEST_CASE("stadium bouncing ball") {
  auto d = build_domain("stadium:a=1,R=1");
  const double s = 0.5 * pi + 0.7;
  auto r = step(d, PhasePoint::make(s, 0.0));
  REQUIRE(r.next);
  CHECK(r.flight_length == doctest::Approx(2.0));
  CHECK(r.next->eta == doctest::Approx(0.0));
  auto t = trajectory(d, PhasePoint::make(s, 0.0), 2);
  CHECK(d.arclength_distance(t.steps[1].next->s, s) < 1e-12);
}

TEST_CASE("equal-angle law, flight length, time reversal") {
  for (auto spec : {"disc:R=1", "ellipse:a=2,b=1", "stadium:a=1,R=1", "annular_dent"}) {
    auto d = build_domain(spec);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> us(0.0, d.perimeter()), ue(-0.99, 0.99);
    int done = 0;
    for (int i = 0; i < 2000 && done < 1000; ++i) {
      const auto q = PhasePoint::make(us(rng), ue(rng));
      const Vec2 xi = lift(d, q);
      auto r = step(d, q);
      if (!r.next) continue;
      CHECK(std::abs(r.flight_length - (r.to - r.from).norm()) <= 1e-12);
      // incoming and outgoing directions share the tangential component
      const auto f = geometry::arc_frame(d, d.arc_index(r.next->s),
                                         r.next->s - d.arcs()[d.arc_index(r.next->s)].s_begin);
      const Vec2 out = lift(d, *r.next);
      CHECK(std::abs(dot(out, f.tangent) - dot(xi, f.tangent)) <= 1e-10);
      CHECK(std::abs(dot(out, f.inward_normal) + dot(xi, f.inward_normal)) <= 1e-10);
      auto back = step(d, PhasePoint::make(r.next->s, -r.next->eta));
      REQUIRE(back.next);
      CHECK(d.arclength_distance(back.next->s, q.s) <= 1e-8);
      CHECK(std::abs(back.next->eta + q.eta) <= 1e-8);
      ++done;
    }
    CHECK(done > 500);
  }
}

TEST_CASE("transfer operator") {
  auto st = build_domain("stadium:a=1,R=1");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> us(0.0, st.perimeter()), ue(-0.999, 0.999);
  PhaseFunction gam = [](const PhasePoint &q) { return q.gamma; };
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto q = PhasePoint::make(us(rng), ue(rng));
    worst = std::max(worst, std::abs(transfer_apply(st, gam, q) - q.gamma));
  }
  CHECK(worst <= 1e-12);
  auto disc = build_domain("disc:R=1");
  PhaseFunction one = [](const PhasePoint &) { return 1.0; };
  CHECK(transfer_apply(disc, one, PhasePoint::make(1.0, 0.4)) == doctest::Approx(1.0).epsilon(1e-13));
  PhaseFunction f = [&](const PhasePoint &q) {
    const double x = two_pi * q.s / st.perimeter();
    return (1 - q.eta * q.eta) * (1.0 + 0.5 * std::cos(x) - 0.3 * std::sin(2 * x)) * (1 + 0.4 * q.eta);
  };
  auto rep = transfer_isometry_mc(st, f, 200000, 42);
  CHECK(std::abs(rep.z()) < 3.0);
  CHECK(rep.lhs == doctest::Approx(rep.rhs).epsilon(0.02));
}

TEST_CASE("measure preservation") {
  for (auto spec : {"disc:R=1", "stadium:a=1,R=1"}) {
    auto d = build_domain(spec);
    auto ks = measure_preservation_ks(d, 100000, 17);
    CAPTURE(spec);
    CHECK(ks.pass());
  }
}

TEST_CASE("Birkhoff averages") {
  auto st = build_domain("stadium:a=1,R=1");
  PhaseFunction one = [](const PhasePoint &) { return 1.0; };
  CHECK(birkhoff_average(st, PhasePoint::make(0.3, 0.21), one, 1000).average == 1.0);
  PhaseFunction gam = [](const PhasePoint &q) { return q.gamma; };
  auto b = birkhoff_average(st, PhasePoint::make(0.3, 0.21), gam, 200000);
  CHECK(b.average == doctest::Approx(pi / 4).epsilon(0.02));
  // Disc: eta is conserved, so the time average of gamma is gamma(q0).
  auto disc = build_domain("disc:R=1");
  CHECK(birkhoff_average(disc, PhasePoint::make(0.3, 0.21), gam, 1000).average ==
        doctest::Approx(std::sqrt(1 - 0.21 * 0.21)));
  // Stadium orbit spreads over phase space.
  auto tr = trajectory(st, PhasePoint::make(0.3, 0.21), 20000);
  std::set<int> cells;
  for (const auto &r : tr.steps) {
    const int i = static_cast<int>(20 * r.next->s / st.perimeter());
    const int j = static_cast<int>(10 * (r.next->eta + 1));
    cells.insert(20 * j + i);
  }
  CHECK(cells.size() > 190);
  auto hd = build_domain("half_disc:R=1");
  const auto f0 = geometry::frame_at(hd, 0.5);
  const Vec2 aim = Vec2{1.0, 0.0} - f0.position;
  const double eta_corner = dot(aim, f0.tangent) / aim.norm();
  auto term = birkhoff_average(hd, PhasePoint::make(0.5, eta_corner), one, 10);
  CHECK(term.terminated);
  CHECK(term.completed < 10);
}

TEST_CASE("loop profiles") {
  auto disc = build_domain("disc:R=1");
  auto p = loop_profile(disc, 0.4, 20, 4000, 1e-3);
  CHECK(p.loop_measure_estimate < 0.05);
  auto p0 = loop_profile(disc, 0.4, 0, 100, 1e-3);
  CHECK(p0.loop_measure_estimate == 0.0);
  for (const auto &smp : p0.samples) CHECK_FALSE(smp.loop_iterate);
  auto hd = build_domain("half_disc:R=1");
  auto ph = loop_profile(hd, pi + 1.0, 20, 2000, 1e-3);
  CHECK(ph.loop_measure_estimate > 0.5);
  auto st = build_domain("stadium:a=1,R=1");
  auto ps = loop_profile(st, 0.5 * pi + 1.0, 4, 2001, 1e-3);
  bool bouncing = false;
  for (const auto &smp : ps.samples) {
    if (smp.loop_iterate && *smp.loop_iterate == 2 && std::abs(smp.loop_length - 4.0) < 1e-3) bouncing = true;
  }
  CHECK(bouncing);
}
