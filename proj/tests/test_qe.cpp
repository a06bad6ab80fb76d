// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qbt/error.hpp"
#include "qbt/qe.hpp"
#include "qbt/specfun.hpp"

using namespace qbt;
namespace sp = qbt::spectrum;

namespace {

const geometry::Domain &disc() {
  static const auto d = geometry::build_domain("disc:R=1");
  return d;
}

const sp::SpectrumStore &disc_dirichlet() {
  static const auto st = sp::compute_spectrum(disc(), BoundaryCondition::dirichlet, 2.0, 9.0);
  return st;
}

layer::Vector random_vector(int M, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  layer::Vector v(M);
  for (int i = 0; i < M; ++i) v[i] = {nd(rng), nd(rng)};
  return v;
}

}  // namespace

TEST_CASE("quantising 1 gives the identity and a(s) a multiplication") {
  const double L = 2.5;
  const int M = 128;
  const auto f = random_vector(M, 1);
  const auto id = qe::quantize(qe::constant_observable(), 0.1, M, L);
  CHECK((id.apply(f) - f).norm() < 1e-13 * f.norm());
  const auto c3 = qe::fourier_mode(3, L);
  for (double h : {0.5, 0.01}) {
    const auto op = qe::quantize(c3, h, M, L);
    const auto g = op.apply(f);
    for (int i = 0; i < M; ++i) CHECK(std::abs(g[i] - std::cos(two_pi * 3 * i / M) * f[i]) < 1e-12);
  }
}

TEST_CASE("Op(eta) is the Fourier multiplier h xi") {
  const double L = 3.0, h = 0.05;
  const int M = 64;
  const auto op = qe::quantize(qe::momentum(), h, M, L);
  for (int n : {-7, 0, 5, 20}) {
    const double xi = two_pi * n / L;
    layer::Vector e(M);
    for (int i = 0; i < M; ++i) e[i] = std::polar(1.0, xi * i * L / M);
    CHECK((op.apply(e) - h * xi * e).norm() < 1e-12 * e.norm());
  }
}

TEST_CASE("quantisation is linear and the symbol table path agrees") {
  const double L = 2 * pi, h = 0.03;
  const int M = 128;
  const auto a = qe::bump(1.0, 0.8, L) * qe::momentum();
  const auto b = qe::fourier_mode(2, L);
  const auto f = random_vector(M, 2);
  const auto sum = qe::quantize(a + b, h, M, L).apply(f);
  const auto sep = qe::quantize(a, h, M, L).apply(f) + qe::quantize(b, h, M, L).apply(f);
  CHECK((sum - sep).norm() < 1e-12 * sum.norm());
  std::vector<std::vector<double>> table(M, std::vector<double>(M));
  const auto ab = a + b;
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) table[i][k] = ab(i * L / M, h * two_pi * (k < M / 2 ? k : k - M) / L);
  CHECK((qe::apply_symbol_table(table, f) - sum).norm() < 1e-11 * sum.norm());
}

TEST_CASE("observable parsing and cutoff invariants") {
  const auto &d = disc();
  const auto o = qe::parse_observable("bump:s0=0,w=1*chi:delta=0.1+cos:k=2", d);
  CHECK(o.terms.size() == 2);
  CHECK(o(0.0, 0.0) == doctest::Approx(1.0 + 1.0));
  CHECK(o(0.0, 0.95) == doctest::Approx(1.0));
  CHECK_THROWS_AS(qe::parse_observable("chi:delta=0.01", d), Error);
  CHECK_THROWS_AS(qe::parse_observable("wobble", d), Error);
  CHECK_THROWS_AS(qe::parse_observable("one+", d), Error);
  CHECK_THROWS_AS(qe::parse_observable("eta*", d), Error);
  CHECK_THROWS_AS(qe::parse_observable("one++eta", d), Error);
  CHECK(qe::parse_observable("cos:k=1", d).multiplication_only());
  CHECK_FALSE(qe::parse_observable("eta", d).multiplication_only());
  CHECK(qe::smooth_cutoff(0.0, 0.1) == 1.0);
  CHECK(qe::smooth_cutoff(0.95, 0.1) == 0.0);
}

TEST_CASE("limit states reproduce the boundary L2 constants") {
  for (const char *spec : {"disc:R=1", "stadium:a=1,R=1", "ellipse:a=2,b=1"}) {
    const auto d = geometry::build_domain(spec);
    const double Y = d.perimeter(), A = d.area();
    const auto one = qe::constant_observable();
    CHECK(qe::omega(one, qe::limit_state(d, BoundaryCondition::neumann), d) ==
          doctest::Approx(2 * Y / A).epsilon(1e-10));
    CHECK(qe::omega(one, qe::limit_state(d, BoundaryCondition::dirichlet), d) ==
          doctest::Approx(Y / A).epsilon(1e-10));
    // multiplication symbols: the eta integral of 1/gamma is pi
    const auto c = qe::bump(0.3, 0.7, Y);
    double ia = 0.0;
    const int K = 20000;
    for (int i = 0; i < K; ++i) ia += c(Y * (i + 0.5) / K, 0.0) * Y / K;
    CHECK(qe::omega(c, qe::limit_state(d, BoundaryCondition::neumann), d) ==
          doctest::Approx(2 * ia / A).epsilon(1e-8));
    CHECK(qe::omega(c, qe::limit_state(d, BoundaryCondition::neumann), d) >= 0.0);
  }
}

TEST_CASE("matrix elements on disc m=0 traces") {
  const auto &st = disc_dirichlet();
  const auto &t = st.traces.front();
  REQUIRE(t.lambda == doctest::Approx(2.404825558));
  CHECK(qe::matrix_element(t, qe::constant_observable()).real() == doctest::Approx(2.0).epsilon(1e-8));
  const auto a = qe::bump(1.0, 0.9, two_pi);
  double ia = 0.0;
  const int K = 20000;
  for (int i = 0; i < K; ++i) ia += a(two_pi * (i + 0.5) / K, 0.0) * two_pi / K;
  const cdouble me = qe::matrix_element(t, a, 512);
  CHECK(me.real() == doctest::Approx(ia / pi).epsilon(1e-7));
  CHECK(std::abs(me.imag()) < 1e-10);
  for (const auto &s : st.traces) CHECK(std::abs(qe::matrix_element(s, qe::fourier_mode(2, two_pi)).imag()) < 1e-10);
}

TEST_CASE("aliasing is detected") {
  auto t = disc_dirichlet().traces.back();
  CHECK_THROWS_AS(qe::uniform_samples(t, 8), Error);
  CHECK_NOTHROW(qe::uniform_samples(t, qe::default_grid_size(t)));
}

TEST_CASE("Cesaro means and statistics") {
  const auto &st = disc_dirichlet();
  const auto s1 = qe::matrix_elements(st, qe::constant_observable());
  CHECK(s1.omega == doctest::Approx(2.0));
  const auto q = qe::qe_statistics(s1, 9.0);
  CHECK(q.count == static_cast<int>(st.traces.size()));
  double var = 0.0;
  for (double v : s1.values) var += (v - 2.0) * (v - 2.0);
  CHECK(q.variance == doctest::Approx(var / s1.values.size()));
  CHECK(q.mean == doctest::Approx(qe::cesaro_weyl(s1, 9.0)));
  CHECK(q.deviation_fraction.at(0.2) <= q.deviation_fraction.at(0.05));
  CHECK_THROWS_AS(qe::cesaro_weyl(s1, 12.0), Error);
  CHECK_THROWS_AS(qe::cesaro_weyl(s1, 1.0), Error);
  sp::SpectrumStore empty;
  empty.domain_spec = "disc:R=1";
  empty.lmax = 10;
  CHECK_THROWS_AS(qe::cesaro_weyl(empty, qe::constant_observable(), 5.0), Error);
}

TEST_CASE("Egorov defects on disc traces") {
  const auto &st = disc_dirichlet();
  const auto obs = qe::bump(2.0, 1.0, two_pi) * qe::parse_observable("chi:delta=0.1", disc());
  for (std::size_t j = 0; j < st.traces.size(); j += 3) {
    const auto &t = st.traces[j];
    const auto F = layer::assemble_F(t.lambda, t.grid, t.bc);
    const auto d = qe::egorov_check(t, obs, F);
    CHECK(d.invariance < 1e-8);
    CHECK_FALSE(d.flagged);
    CHECK(d.egorov < 0.5);
  }
  // a == 1 inside the cutoff: eta is conserved on the disc, so the transported symbol is unchanged
  const auto chi = qe::parse_observable("chi:delta=0.1", disc());
  const auto &t = st.traces.front();
  const auto d = qe::egorov_check(t, chi, layer::assemble_F(t.lambda, t.grid, t.bc));
  CHECK(d.egorov < 1e-10);
}
