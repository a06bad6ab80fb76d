#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "qbt/error.hpp"
#include "qbt/layer_ops.hpp"
#include "qbt/specfun.hpp"

using namespace qbt;
using namespace qbt::layer;
using geometry::build_domain;

namespace {

// Separation of variables on the circle of radius R: both kernels act on
// exp(i m theta) by 1 - i pi x J_m'(x) H_m(x), x = lambda R.
cdouble circle_eigenvalue(int m, double lambda, double R) {
  const double x = lambda * R;
  const auto v = specfun::bessel_jy(std::abs(m), x);
  return 1.0 - cdouble(0.0, pi * x) * v.dJ * v.H1();
}

std::shared_ptr<const NystromGrid> grid_for(const std::string &spec, int n) {
  return std::make_shared<const NystromGrid>(make_grid(build_domain(spec), n));
}

double sigma_min(const Matrix &A) {
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues().minCoeff();
}

}  // namespace

TEST_CASE("green0") {
  const double lambda = 3.0;
  const double a = (green0(lambda, 1e-6).value + std::log(1e-6) / two_pi).real();
  const double b = (green0(lambda, 1e-8).value + std::log(1e-8) / two_pi).real();
  CHECK(std::abs(a - b) < 1e-3);
  const double rr = 100.0 / lambda;
  CHECK(std::abs(green0(lambda, rr).value) ==
        doctest::Approx(0.25 * std::sqrt(2.0 / (pi * lambda * rr))).epsilon(1e-2));
  // radial Helmholtz equation by central differences
  const double r = 1.0, e = 1e-4;
  const cdouble u0 = green0(lambda, r).value;
  const cdouble up = green0(lambda, r + e).value, um = green0(lambda, r - e).value;
  const cdouble res = (up - 2.0 * u0 + um) / (e * e) + (up - um) / (2 * e * r) + lambda * lambda * u0;
  CHECK(std::abs(res) < 1e-6);
  CHECK(std::abs(green0(lambda, r).dr - (up - um) / (2 * e)) < 1e-7);
  CHECK_THROWS_AS(green0(lambda, 0.0), Error);
}

TEST_CASE("grid weights and parametrization") {
  for (auto spec : {"disc:R=1", "ellipse:a=2,b=1", "stadium:a=1,R=1"}) {
    auto d = build_domain(spec);
    for (int n : {64, 256, 510}) {
      auto g = make_grid(d, n);
      double sum = 0.0;
      for (double w : g.weight) sum += w;
      CAPTURE(spec);
      CAPTURE(n);
      if (n >= 256 || std::string(spec) != "stadium:a=1,R=1") CHECK(std::abs(sum - d.perimeter()) < 1e-10);
      for (int i = 0; i < n; ++i) {
        const double t = g.param->tau_of_s(g.s[i]);
        CHECK(d.arclength_distance(g.param->s_of_tau(t), g.s[i]) < 1e-13);
        // tau is ill-conditioned where ds/dtau vanishes
        if (g.speed[i] > 0.1) CHECK(std::abs(t - g.tau[i]) < 1e-12);
      }
    }
  }
  // the shape floor applies whatever the wavelength, and sizes stay even
  const BoundaryParametrization ep(build_domain("ellipse:a=2,b=1"));
  CHECK(ep.shape_nodes() >= 4.0 * 9.68 * 2.0);
  CHECK(grid_size_for(ep, 0.5, 12.0) >= ep.shape_nodes());
  CHECK(grid_size_for(ep, 0.5, 12.0) % 2 == 0);
  auto st = make_grid(build_domain("stadium:a=1,R=1"), 400);
  CHECK(st.grading_ratio < 1e-3);
  CHECK_THROWS_AS(make_grid(build_domain("half_disc"), 64), Error);
}

TEST_CASE("disc matrix is circulant and matches the Bessel-Hankel oracle") {
  const int n = 256;
  auto g = grid_for("disc:R=1", n);
  for (double lambda : {1.0, 7.5, 20.0}) {
    for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
      auto F = assemble_F(lambda, g, bc);
      double circ = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          circ = std::max(circ, std::abs(F.entries(i, j) - F.entries(0, (j - i + n) % n)));
        }
      }
      CHECK(circ < 1e-10);
      double worst = 0.0;
      for (int m = -60; m <= 60; ++m) {
        cdouble ev = 0.0;
        for (int j = 0; j < n; ++j) ev += F.entries(0, j) * std::polar(1.0, m * (g->tau[j] - g->tau[0]));
        const cdouble ref = circle_eigenvalue(m, lambda, 1.0);
        worst = std::max(worst, std::abs(ev - ref) / std::abs(ref));
      }
      CAPTURE(lambda);
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("Laplace limit on the disc") {
  auto g = grid_for("disc:R=1", 64);
  auto F = assemble_F(1e-3, g, BoundaryCondition::dirichlet, 0.0);
  Vector one = Vector::Ones(64);
  // constants map to +1 under this orientation, other modes to 0
  CHECK((layer::apply(F, one) - one).norm() / one.norm() < 1e-4);
  Vector c(64);
  for (int j = 0; j < 64; ++j) c[j] = std::cos(3 * g->tau[j]);
  CHECK(layer::apply(F, c).norm() / c.norm() < 1e-4);
}

TEST_CASE("kernel identities") {
  auto disc = build_domain("disc:R=1");
  // Laplace part -<y - y', nu>/(pi r^2) is constant on circles
  const double lam = 1e-6;
  const cdouble k1 = kernel_F(disc, lam, 0.3, 1.9, BoundaryCondition::dirichlet);
  const cdouble k2 = kernel_F(disc, lam, 2.0, 5.1, BoundaryCondition::dirichlet);
  CHECK(std::abs(k1 - k2) < 1e-9);
  CHECK(k1.real() == doctest::Approx(1.0 / two_pi).epsilon(1e-9));
  auto st = build_domain("stadium:a=1,R=1");
  const double s_a = 0.5 * pi + 0.2, s_b = 0.5 * pi + 1.7;
  CHECK(std::abs(kernel_F(st, 1e-6, s_a, s_b, BoundaryCondition::dirichlet)) < 1e-12);
  auto el = build_domain("ellipse:a=2,b=1");
  for (double lam2 : {0.5, 4.0, 11.0}) {
    const cdouble kd = kernel_F(el, lam2, 0.4, 3.3, BoundaryCondition::dirichlet);
    const cdouble kn = kernel_F(el, lam2, 3.3, 0.4, BoundaryCondition::neumann);
    CHECK(std::abs(kd - kn) < 1e-14 * std::max(1.0, std::abs(kd)));
  }
}

TEST_CASE("rotation equivariance on the disc") {
  const int n = 128;
  auto g = grid_for("disc:R=1", n);
  auto F = assemble_F(9.3, g, BoundaryCondition::neumann);
  const int shift = 17;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      worst = std::max(worst, std::abs(F.entries((i + shift) % n, (j + shift) % n) - F.entries(i, j)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("resolution and domain errors") {
  auto g = grid_for("disc:R=1", 64);
  CHECK_THROWS_AS(assemble_F(20.0, g, BoundaryCondition::dirichlet), Error);
  try {
    assemble_F(20.0, g, BoundaryCondition::dirichlet);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::resolution);
  }
}

TEST_CASE("ellipse self-convergence") {
  const double lambda = 10.0;
  auto a = assemble_F(lambda, grid_for("ellipse:a=2,b=1", 128), BoundaryCondition::dirichlet);
  auto b = assemble_F(lambda, grid_for("ellipse:a=2,b=1", 256), BoundaryCondition::dirichlet);
  auto sym = [](const OperatorMatrix &F) {
    // weighted similarity, so singular values refer to L2(ds)
    const auto &w = F.grid->weight;
    Matrix B = Matrix::Identity(F.entries.rows(), F.entries.cols()) + F.entries;
    for (int i = 0; i < B.rows(); ++i)
      for (int j = 0; j < B.cols(); ++j) B(i, j) *= std::sqrt(w[i] / w[j]);
    return B;
  };
  CHECK(std::abs(sigma_min(sym(a)) - sigma_min(sym(b))) <= 1e-9);
}

TEST_CASE("stadium graded convergence") {
  const double lambda = 8.0;
  std::vector<double> sig;
  for (int n : {160, 320, 640}) {
    auto F = assemble_F(lambda, grid_for("stadium:a=1,R=1", n), BoundaryCondition::neumann);
    const auto &w = F.grid->weight;
    Matrix B = Matrix::Identity(n, n) - F.entries;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) *= std::sqrt(w[i] / w[j]);
    sig.push_back(sigma_min(B));
  }
  MESSAGE("stadium sigma_min: " << sig[0] << " " << sig[1] << " " << sig[2]);
  CHECK(std::abs(sig[1] - sig[2]) < 1e-8);
}

TEST_CASE("matrix dump round trip") {
  auto g = grid_for("disc:R=1", 16);
  auto F = assemble_F(1.0, g, BoundaryCondition::neumann);
  const std::string path = "layer_ops_dump.bin";
  dump_matrix(F, path);
  auto m = load_matrix(path);
  CHECK(m.lambda == 1.0);
  CHECK(m.bc == BoundaryCondition::neumann);
  CHECK((m.entries - F.entries).norm() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("layer potentials") {
  const int n = 256;
  auto g = grid_for("disc:R=1", n);
  Vector zero = Vector::Zero(n);
  CHECK(std::abs(layer_potential_eval(3.0, *g, zero, {0.1, 0.2}, LayerKind::single).value) == 0.0);
  // Dirichlet m=0 mode: u = J0(lambda r), inward normal derivative -lambda J0'(lambda) = lambda J1(lambda)
  const double lambda = specfun::bessel_zero(0, 2, false);
  const double ub = lambda * specfun::bessel_jy(1, lambda).J;
  Vector dens = Vector::Constant(n, ub);
  for (double r : {0.0, 0.3, 0.7}) {
    const cdouble u = -layer_potential_eval(lambda, *g, dens, {r, 0.0}, LayerKind::single).value;
    CHECK(std::abs(u - specfun::bessel_jy(0, std::max(r * lambda, 1e-8)).J) < 1e-6);
  }
  // Neumann m=0: u = J0(lambda r), trace J0(lambda)
  const double mu = specfun::bessel_zero(0, 2, true);
  Vector dn = Vector::Constant(n, specfun::bessel_jy(0, mu).J);
  for (double r : {0.0, 0.3, 0.7}) {
    const cdouble u = layer_potential_eval(mu, *g, dn, {0.0, r}, LayerKind::double_layer).value;
    CHECK(std::abs(u - specfun::bessel_jy(0, std::max(r * mu, 1e-8)).J) < 1e-6);
  }
  // trig interpolation reproduces a band-limited function
  Vector f(n);
  for (int j = 0; j < n; ++j) f[j] = std::cos(5 * g->tau[j]) + cdouble(0, 1) * std::sin(11 * g->tau[j]);
  auto fi = trig_interpolate(*g, f, {0.123, 2.5, 6.0});
  CHECK(std::abs(fi[1] - (std::cos(12.5) + cdouble(0, 1) * std::sin(27.5))) < 1e-12);
}
