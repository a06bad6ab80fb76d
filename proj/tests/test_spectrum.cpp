// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "qbt/error.hpp"
#include "qbt/specfun.hpp"
#include "qbt/spectrum.hpp"

using namespace qbt;
namespace sp = qbt::spectrum;

namespace {

const geometry::Domain &disc() {
  static const auto d = geometry::build_domain("disc:R=1");
  return d;
}

cdouble inner_w(const layer::NystromGrid &g, const layer::Vector &a, const layer::Vector &b) {
  cdouble s = 0.0;
  for (int i = 0; i < g.n; ++i) s += g.weight[i] * a[i] * std::conj(b[i]);
  return s;
}

// Disc Dirichlet [2, 6] is shared by several cases.
const sp::SpectrumStore &disc_dirichlet() {
  static const auto st = sp::compute_spectrum(disc(), BoundaryCondition::dirichlet, 2.0, 6.0);
  return st;
}

const sp::SpectrumStore &disc_neumann() {
  static const auto st = sp::compute_spectrum(disc(), BoundaryCondition::neumann, 1.0, 4.0);
  return st;
}

const sp::EigenTrace &first_at(const sp::SpectrumStore &st, double lambda) {
  for (const auto &t : st.traces)
    if (std::abs(t.lambda - lambda) < 1e-6) return t;
  FAIL("eigenvalue not found");
  throw;
}

// Rayleigh-Ritz on x^2/a^2 + y^2/b^2 <= 1 with polynomials of total degree
// <= deg; Dirichlet multiplies each monomial by the defining function.
// Monomial moments over the ellipse are closed form.
std::vector<double> ellipse_ritz(double a, double b, BoundaryCondition bc, int deg) {
  const auto disc_moment = [](int p, int q) {
    if (p % 2 || q % 2) return 0.0;
    return std::tgamma(p / 2 + 0.5) * std::tgamma(q / 2 + 0.5) / std::tgamma((p + q) / 2 + 2.0);
  };
  const auto mom = [&](int p, int q) { return std::pow(a, p + 1) * std::pow(b, q + 1) * disc_moment(p, q); };
  struct Term {
    int i, j;
    double c;
  };
  std::vector<std::vector<Term>> basis;
  for (int d = 0; d <= deg; ++d)
    for (int i = 0; i <= d; ++i) {
      if (bc == BoundaryCondition::neumann) basis.push_back({{i, d - i, 1.0}});
      else basis.push_back({{i, d - i, 1.0}, {i + 2, d - i, -1.0 / (a * a)}, {i, d - i + 2, -1.0 / (b * b)}});
    }
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd M(n, n), K(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      double m = 0.0, k = 0.0;
      for (const auto &u : basis[r])
        for (const auto &v : basis[c]) {
          m += u.c * v.c * mom(u.i + v.i, u.j + v.j);
          if (u.i && v.i) k += u.c * v.c * u.i * v.i * mom(u.i + v.i - 2, u.j + v.j);
          if (u.j && v.j) k += u.c * v.c * u.j * v.j * mom(u.i + v.i, u.j + v.j - 2);
        }
      M(r, c) = m;
      K(r, c) = k;
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[i])));
  return out;
}

}  // namespace

TEST_CASE("two-term counting function") {
  const auto &d = disc();
  CHECK(sp::weyl_count(d, BoundaryCondition::dirichlet, 10.0) == doctest::Approx(25.0 - 5.0));
  CHECK(sp::weyl_count(d, BoundaryCondition::neumann, 10.0) == doctest::Approx(25.0 + 5.0));
  CHECK(sp::weyl_spacing(d, BoundaryCondition::neumann, 10.0) == doctest::Approx(1.0 / 5.5));
}

TEST_CASE("block inverse iteration recovers the smallest singular triples") {
  const int n = 60;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  layer::Matrix X(n, n), Y(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = {nd(rng), nd(rng)}, Y(i, j) = {nd(rng), nd(rng)};
  const layer::Matrix U = Eigen::HouseholderQR<layer::Matrix>(X).householderQ();
  const layer::Matrix V = Eigen::HouseholderQR<layer::Matrix>(Y).householderQ();
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = 1.0 + i;
  s[0] = 1e-9, s[1] = 2e-9, s[2] = 0.3;
  const layer::Matrix B = U * s.cast<cdouble>().asDiagonal() * V.adjoint();
  const auto tr = sp::smallest_singular(B, 3, 4, 1);
  CHECK(tr[0].sigma == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(tr[1].sigma == doctest::Approx(2e-9).epsilon(1e-6));
  CHECK(tr[2].sigma == doctest::Approx(0.3).epsilon(1e-6));
  for (const auto &t : tr) CHECK((B * t.v - t.sigma * t.u).norm() < 1e-8 * t.sigma + 1e-12);
}

TEST_CASE("scan brackets on the disc") {
  const auto &d = disc();
  const auto D = sp::scan_spectrum(d, BoundaryCondition::dirichlet, 2.0, 6.0);
  // 2.4048, 3.8317 (x2), 5.1356 (x2), 5.5201: four distinct values
  std::vector<double> want{2.404825558, 3.831705970, 5.135622302, 5.520078110};
  for (double w : want) {
    bool hit = false;
    for (const auto &b : D.brackets) hit = hit || (b.lo <= w && w <= b.hi);
    CHECK_MESSAGE(hit, "no bracket around " << w);
  }
  const auto N = sp::scan_spectrum(d, BoundaryCondition::neumann, 1.0, 4.0);
  for (double w : {1.841183781, 3.054236928, 3.831705970}) {
    bool hit = false;
    for (const auto &b : N.brackets) hit = hit || (b.lo <= w && w <= b.hi);
    CHECK_MESSAGE(hit, "no bracket around " << w);
  }
  const auto E = sp::scan_spectrum(d, BoundaryCondition::dirichlet, 5.3, 5.4);
  CHECK(E.brackets.empty());
  CHECK_FALSE(D.under_resolved);
}

TEST_CASE("coarse scan step warns with a miss estimate") {
  sp::SolverOptions o;
  o.dlambda = 0.5;
  const auto r = sp::scan_spectrum(disc(), BoundaryCondition::dirichlet, 2.0, 6.0, o);
  CHECK(r.under_resolved);
  CHECK(r.predicted_misses > 0.0);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("disc eigenvalues match Bessel zeros with multiplicity") {
  for (const auto *st : {&disc_dirichlet(), &disc_neumann()}) {
    auto oracle = sp::disc_oracle(1.0, st->bc, st->lmax);
    std::erase_if(oracle, [&](double x) { return x < st->lmin; });
    REQUIRE(st->traces.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(st->traces[i].lambda - oracle[i]) < 1e-8);
  }
  CHECK(std::abs(disc_dirichlet().traces[0].lambda - 2.404825558) < 1e-8);
}

TEST_CASE("traces satisfy the fixed-point relation and the Helmholtz equation") {
  for (const auto *st : {&disc_dirichlet(), &disc_neumann()}) {
    for (const auto &t : st->traces) {
      CHECK(t.sigma_min <= 1e-6);
      CHECK(t.fone_residual <= 1e-5);
      CHECK(t.interior_helmholtz_residual < 1e-3);
      CHECK(std::abs(t.normalization.interior_norm_estimate - 1.0) < 1e-10);
      CHECK_FALSE(t.normalization.flagged);
    }
  }
}

TEST_CASE("disc m=0 traces have the closed-form modulus") {
  const auto &t = first_at(disc_dirichlet(), 2.404825558);
  double l2 = 0.0;
  for (int i = 0; i < t.trace.size(); ++i) {
    CHECK(std::abs(t.trace[i]) == doctest::Approx(t.lambda / std::sqrt(pi)).epsilon(1e-8));
    l2 += t.grid->weight[i] * std::norm(t.trace[i]);
  }
  CHECK(l2 / (t.lambda * t.lambda) == doctest::Approx(2.0).epsilon(1e-8));
  const auto &n = first_at(disc_neumann(), 3.831705970);
  for (int i = 0; i < n.trace.size(); ++i) {
    CHECK(std::abs(n.trace[i]) == doctest::Approx(1.0 / std::sqrt(pi)).epsilon(1e-8));
  }
}

TEST_CASE("normalisation is scale invariant and idempotent") {
  const auto &t = first_at(disc_dirichlet(), 5.520078110);
  auto scaled = t;
  scaled.trace *= cdouble(7.0, 0.0);
  const auto a = sp::normalize_trace(scaled);
  const auto b = sp::normalize_trace(a);
  CHECK((a.trace - t.trace).norm() < 1e-10 * t.trace.norm());
  CHECK((b.trace - a.trace).norm() < 1e-12 * a.trace.norm());
  auto rotated = t;
  rotated.trace *= std::polar(3.0, 1.1);
  CHECK((sp::normalize_trace(rotated).trace - t.trace).norm() < 1e-10 * t.trace.norm());
}

TEST_CASE("boundary integral traces agree with closed-form modes") {
  const auto modes = sp::analytic_modes(disc(), BoundaryCondition::dirichlet, 6.0);
  const auto &st = disc_dirichlet();
  for (const auto &m : modes) {
    if (m.lambda < 2.0) continue;
    // project the analytic trace onto the BIE cluster at the same eigenvalue
    std::vector<const sp::EigenTrace *> cl;
    for (const auto &t : st.traces)
      if (std::abs(t.lambda - m.lambda) < 1e-8) cl.push_back(&t);
    REQUIRE_FALSE(cl.empty());
    const auto &g = *cl[0]->grid;
    layer::Vector exact(g.n);
    for (int i = 0; i < g.n; ++i) exact[i] = sp::trace_at(m, g.s[i]);
    const double en = std::real(inner_w(g, exact, exact));
    double captured = 0.0;
    for (const auto *t : cl) {
      const double tn = std::real(inner_w(g, t->trace, t->trace));
      captured += std::norm(inner_w(g, exact, t->trace)) / tn;
    }
    CHECK(captured / en == doctest::Approx(1.0).epsilon(1e-8));
    // boundary norms agree since both are unit interior norm
    for (const auto *t : cl) CHECK(std::real(inner_w(g, t->trace, t->trace)) == doctest::Approx(en).epsilon(1e-7));
  }
}

TEST_CASE("degenerate clusters are interior-orthonormal and boundary-orthogonal") {
  const auto &st = disc_dirichlet();
  std::vector<const sp::EigenTrace *> cl;
  for (const auto &t : st.traces)
    if (std::abs(t.lambda - 3.831705970) < 1e-6) cl.push_back(&t);
  REQUIRE(cl.size() == 2);
  CHECK(cl[0]->cluster_id == cl[1]->cluster_id);
  CHECK(cl[0]->cluster_size == 2);
  const auto &g = *cl[0]->grid;
  CHECK(std::abs(inner_w(g, cl[0]->trace, cl[1]->trace)) < 1e-9);
  const auto G = sp::rellich_gram(g, {cl[0]->trace, cl[1]->trace}, cl[0]->lambda, BoundaryCondition::dirichlet);
  CHECK((G - layer::Matrix::Identity(2, 2)).norm() < 1e-9);
}

TEST_CASE("interior reconstruction reproduces J0 and the Monte Carlo norm") {
  const auto &t = first_at(disc_dirichlet(), 2.404825558);
  const double c = 1.0 / (std::sqrt(pi) * std::abs(specfun::bessel_jy(1, t.lambda).J));
  for (double r : {0.0, 0.3, 0.5, 0.7}) {
    const cdouble u = sp::reconstruct_interior(*t.grid, t.trace, t.lambda, t.bc, {r * 0.6, r * 0.8});
    const double j0 = r == 0.0 ? 1.0 : specfun::bessel_jy(0, t.lambda * r).J;
    CHECK(std::abs(u) == doctest::Approx(c * std::abs(j0)).epsilon(1e-6));
  }
  const auto q = sp::interior_norm_qmc(*t.grid, t.trace, t.lambda, t.bc, 16000, 8, 5);
  CHECK(std::abs(q.norm_squared - 1.0) < 3.0 * q.standard_error + 5e-3);
  CHECK(q.standard_error < 0.02);
}

TEST_CASE("Neumann traces reconstruct through the double layer") {
  const auto &t = first_at(disc_neumann(), 1.841183781);
  const double ratio = specfun::bessel_jy(1, 0.5 * t.lambda).J / specfun::bessel_jy(1, t.lambda).J;
  // the cluster basis mixes e^{+i theta} and e^{-i theta}; check |u|^2 summed over the pair
  double pa = 0.0, pb = 0.0, pbnd = 0.0;
  for (const auto &s : disc_neumann().traces) {
    if (s.cluster_id != t.cluster_id) continue;
    pa += std::norm(sp::reconstruct_interior(*s.grid, s.trace, s.lambda, s.bc, {0.5, 0.0}));
    pb += std::norm(sp::reconstruct_interior(*s.grid, s.trace, s.lambda, s.bc, {0.0, 0.5}));
    pbnd += std::norm(sp::trace_at(s, 0.0));
  }
  CHECK(pa == doctest::Approx(pb).epsilon(1e-6));
  CHECK(std::sqrt(pa / pbnd) == doctest::Approx(std::abs(ratio)).epsilon(1e-6));
}

TEST_CASE("half-disc closed forms satisfy the Rellich identity") {
  const auto hd = geometry::build_domain("half_disc:R=1");
  for (auto bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
    const auto modes = sp::analytic_modes(hd, bc, 12.0);
    REQUIRE(modes.size() > 5);
    for (const auto &m : modes) {
      // only the arc carries x.n != 0
      boost::math::quadrature::gauss_kronrod<double, 61> gk;
      const double l = m.lambda, eps = 1e-6;
      const double rhs = gk.integrate(
          [&](double s) {
            const double u2 = std::norm(sp::trace_at(m, s));
            if (bc == BoundaryCondition::dirichlet) return u2;
            const cdouble du = (sp::trace_at(m, s + eps) - sp::trace_at(m, s - eps)) / (2 * eps);
            return l * l * u2 - std::norm(du);
          },
          eps, pi - eps, 12, 1e-12);
      CHECK(rhs / (2 * l * l) == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
}

TEST_CASE("half-disc Dirichlet traces vanish at the corners from both sides") {
  const auto hd = geometry::build_domain("half_disc:R=1");
  const auto modes = sp::analytic_modes(hd, BoundaryCondition::dirichlet, 10.0);
  for (const auto &m : modes) {
    const double tol = 1e-4 * m.lambda * m.lambda;
    CHECK(std::abs(sp::trace_at(m, 1e-7)) < tol);
    CHECK(std::abs(sp::trace_at(m, pi - 1e-7)) < tol);
    CHECK(std::abs(sp::trace_at(m, pi + 1e-7)) < tol);
    CHECK(std::abs(sp::trace_at(m, pi + 2 - 1e-7)) < tol);
  }
}

TEST_CASE("disc oracle counts") {
  // Dirichlet below 6: 2.405, 3.832 x2, 5.136 x2, 5.520
  CHECK(sp::disc_oracle(1.0, BoundaryCondition::dirichlet, 6.0).size() == 6);
  CHECK(sp::disc_oracle(2.0, BoundaryCondition::dirichlet, 3.0).size() == 6);
  const auto n = sp::disc_oracle(1.0, BoundaryCondition::neumann, 2.0);
  REQUIRE(n.size() == 2);
  CHECK(n[0] == doctest::Approx(1.841183781));
}

TEST_CASE("stadium eigenvalues reach the acceptance floor at 12 points per wavelength") {
  const auto st = geometry::build_domain("stadium:a=1,R=1");
  const auto s = sp::compute_spectrum(st, BoundaryCondition::neumann, 8.0, 8.6);
  REQUIRE_FALSE(s.traces.empty());
  for (const auto &t : s.traces) {
    CHECK(t.sigma_min <= 1e-6);
    CHECK(t.grid->points_per_wavelength(t.lambda) >= 12.0);
    CHECK(t.fone_residual <= 1e-5);
  }
}

TEST_CASE("ellipse eigenvalues match a polynomial Ritz oracle") {
  const auto el = geometry::build_domain("ellipse:a=2,b=1");
  for (auto bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
    CAPTURE(int(bc));
    // degree 20 is converged to 1e-12 for the modes below 4
    std::vector<double> ritz;
    for (double x : ellipse_ritz(2.0, 1.0, bc, 20))
      if (x > 0.5 && x < 4.0) ritz.push_back(x);
    const auto st = sp::compute_spectrum(el, bc, 0.5, 4.0);
    REQUIRE(st.traces.size() == ritz.size());
    for (std::size_t j = 0; j < ritz.size(); ++j) CHECK(std::abs(st.traces[j].lambda - ritz[j]) < 1e-8);
  }
}

TEST_CASE("closely spaced ellipse eigenvalues are all found") {
  // five Neumann eigenvalues in [20.98, 21.03]; on these scan points the pair
  // 21.0171, 21.0277 leaves a monotone shoulder in sigma_min, not a dip
  const auto el = geometry::build_domain("ellipse:a=2,b=1");
  sp::SolverOptions coarse, fine;
  coarse.dlambda = 0.011119;
  fine.dlambda = 0.002;
  const auto a = sp::compute_spectrum(el, BoundaryCondition::neumann, 20.95725, 21.08, coarse);
  const auto b = sp::compute_spectrum(el, BoundaryCondition::neumann, 20.95725, 21.08, fine);
  REQUIRE(b.traces.size() >= 6);
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t j = 0; j < a.traces.size(); ++j)
    CHECK(std::abs(a.traces[j].lambda - b.traces[j].lambda) < 1e-9);
}

TEST_CASE("a near-degenerate ellipse pair keeps two eigenvalues") {
  // Neumann 22.3123534, 22.3123547: closer than merge_rtol, with distinct null vectors
  const auto el = geometry::build_domain("ellipse:a=2,b=1");
  const auto st = sp::compute_spectrum(el, BoundaryCondition::neumann, 22.30, 22.32);
  REQUIRE(st.traces.size() == 2);
  CHECK(st.traces[0].cluster_size == 1);
  CHECK(st.traces[1].cluster_size == 1);
  CHECK(st.traces[1].lambda - st.traces[0].lambda > 1e-6);
  CHECK(st.traces[1].lambda - st.traces[0].lambda < 2e-6);
  for (const auto &t : st.traces) {
    const auto F = layer::assemble_F(t.lambda, t.grid, t.bc, 8.0);
    const double fresh = layer::fixed_point_residual(F, t.trace);
    CHECK(fresh < 1e-12);
    CHECK(std::abs(fresh - t.fone_residual) <= 1e-3 * fresh + 1e-15);
  }
}

TEST_CASE("solver preconditions") {
  sp::SolverOptions o;
  o.ppw = 6.0;
  CHECK_THROWS_AS(sp::compute_spectrum(disc(), BoundaryCondition::dirichlet, 2.0, 3.0, o), Error);
  const auto hd = geometry::build_domain("half_disc:R=1");
  try {
    sp::compute_spectrum(hd, BoundaryCondition::dirichlet, 2.0, 3.0);
    FAIL("expected unsupported_domain");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::unsupported_domain);
  }
  CHECK_THROWS_AS(sp::analytic_modes(geometry::build_domain("ellipse:a=2,b=1"), BoundaryCondition::dirichlet, 5.0),
                  Error);
}

TEST_CASE("stores round trip and detect corruption") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "qbt_test_store";
  fs::remove_all(dir);
  const auto &st = disc_neumann();
  sp::save_store(st, dir.string());
  const auto back = sp::load_store(dir.string());
  REQUIRE(back.traces.size() == st.traces.size());
  for (std::size_t i = 0; i < st.traces.size(); ++i) {
    CHECK(back.traces[i].lambda == st.traces[i].lambda);
    CHECK(back.traces[i].trace == st.traces[i].trace);
    CHECK(back.traces[i].cluster_id == st.traces[i].cluster_id);
    CHECK(back.traces[i].grid->n == st.traces[i].grid->n);
  }
  CHECK(back.domain_spec == st.domain_spec);
  CHECK(back.dlambda == st.dlambda);
  {
    std::fstream f(dir / "traces" / "00000.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(5);
    f.put('\x7f');
  }
  try {
    sp::load_store(dir.string());
    FAIL("expected checksum error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::checksum);
  }
  fs::remove_all(dir);

  const auto hd = geometry::build_domain("half_disc:R=1");
  const auto an = sp::analytic_store(hd, BoundaryCondition::neumann, 8.0);
  sp::save_store(an, dir.string());
  const auto an2 = sp::load_store(dir.string());
  REQUIRE(an2.traces.size() == an.traces.size());
  for (std::size_t i = 0; i < an.traces.size(); ++i) {
    for (double s : {0.1, 1.5, 3.5, 4.9})
      CHECK(std::abs(sp::trace_at(an2.traces[i], s) - sp::trace_at(an.traces[i], s)) < 1e-12);
  }
  fs::remove_all(dir);
}
