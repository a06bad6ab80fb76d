// SPDX-License-Identifier: Apache-2.0
#include "qbt/layer_ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <boost/math/quadrature/gauss.hpp>

#include "fft.hpp"
#include "qbt/error.hpp"
#include "qbt/parallel.hpp"
#include "qbt/specfun.hpp"

namespace qbt::layer {

namespace {

constexpr int table_panels = 512;

double wrap_tau(double t) {
  double w = t - two_pi * std::floor(t / two_pi);
  return w >= two_pi ? 0.0 : w;
}

double periodic_distance(double a, double b) {
  const double d = wrap_tau(a - b);
  return std::min(d, two_pi - d);
}

void refuse_corners(const geometry::Domain &d) {
  if (d.has_corners()) {
    fail(ErrorCode::unsupported_domain,
         "boundary integral solves are not available on domains with corners (" + d.name() + ")");
  }
}

}  // namespace

BoundaryParametrization::BoundaryParametrization(const geometry::Domain &domain, double grading_width)
    : perimeter_(domain.perimeter()), delta_(grading_width) {
  refuse_corners(domain);
  double kmax = 0.0;
  for (int i = 0; i < 2048; ++i)
    kmax = std::max(kmax, std::abs(geometry::frame_at(domain, perimeter_ * i / 2048.0).curvature));
  shape_nodes_ = static_cast<int>(std::ceil(shape_nodes_per_radian * perimeter_ * kmax));
  const auto &js = domain.junctions();
  if (js.empty()) {
    scale_ = perimeter_ / two_pi;
    max_speed_ = scale_;
    return;
  }
  s_offset_ = js.front().s;
  const std::size_t m = js.size();
  std::vector<double> seg(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double next = k + 1 < m ? js[k + 1].s : js[0].s + perimeter_;
    seg[k] = next - js[k].s;
  }
  std::vector<double> dtau(m);
  for (std::size_t k = 0; k < m; ++k) dtau[k] = two_pi * seg[k] / perimeter_;
  tau_junctions_.assign(m, 0.0);
  for (int it = 0; it < 200; ++it) {
    for (std::size_t k = 1; k < m; ++k) tau_junctions_[k] = tau_junctions_[k - 1] + dtau[k - 1];
    const double total = integrate_weight(0.0, two_pi);
    scale_ = perimeter_ / total;
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double a = tau_junctions_[k];
      const double b = k + 1 < m ? tau_junctions_[k + 1] : two_pi;
      const double err = seg[k] / scale_ - integrate_weight(a, b);
      worst = std::max(worst, std::abs(err) * scale_);
      dtau[k] += err;
    }
    double sum = 0.0;
    for (double d : dtau) sum += d;
    for (double &d : dtau) d *= two_pi / sum;
    if (worst < 1e-14 * perimeter_) break;
  }
  cumulative_.assign(table_panels + 1, 0.0);
  const double dp = two_pi / table_panels;
  for (int p = 0; p < table_panels; ++p) {
    cumulative_[p + 1] = cumulative_[p] + scale_ * integrate_weight(p * dp, (p + 1) * dp);
  }
  for (int k = 0; k < 4096; ++k) max_speed_ = std::max(max_speed_, speed(two_pi * k / 4096.0));
}

double BoundaryParametrization::weight(double tau) const {
  double w = 1.0;
  for (double tj : tau_junctions_) {
    const double d = periodic_distance(tau, tj) / delta_;
    const double d2 = d * d;
    w *= -std::expm1(-d2 * d2);
  }
  return w;
}

double BoundaryParametrization::integrate_weight(double t0, double t1) const {
  const int panels = std::max(1, static_cast<int>(std::ceil((t1 - t0) / 0.02)));
  const double h = (t1 - t0) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    sum += boost::math::quadrature::gauss<double, 20>::integrate(
        [this](double t) { return weight(t); }, t0 + p * h, t0 + (p + 1) * h);
  }
  return sum;
}

double BoundaryParametrization::speed(double tau) const {
  return graded() ? scale_ * weight(wrap_tau(tau)) : scale_;
}

double BoundaryParametrization::s_of_tau(double tau) const {
  tau = wrap_tau(tau);
  if (!graded()) {
    const double s = scale_ * tau;
    return s >= perimeter_ ? 0.0 : s;
  }
  const double dp = two_pi / table_panels;
  const int p = std::min(table_panels - 1, static_cast<int>(tau / dp));
  double s = s_offset_ + cumulative_[p];
  if (tau > p * dp) {
    s += scale_ * boost::math::quadrature::gauss<double, 20>::integrate(
                      [this](double t) { return weight(t); }, p * dp, tau);
  }
  s -= perimeter_ * std::floor(s / perimeter_);
  return s >= perimeter_ ? 0.0 : s;
}

double BoundaryParametrization::tau_of_s(double s) const {
  double rel = s - s_offset_;
  rel -= perimeter_ * std::floor(rel / perimeter_);
  if (!graded()) return rel / scale_;
  const double dp = two_pi / table_panels;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), rel);
  const int p = std::clamp(static_cast<int>(it - cumulative_.begin()) - 1, 0, table_panels - 1);
  double a = p * dp, b = (p + 1) * dp;
  auto f = [&](double t) {
    double v = cumulative_[p];
    if (t > a) {
      v += scale_ * boost::math::quadrature::gauss<double, 20>::integrate(
                        [this](double x) { return weight(x); }, p * dp, t);
    }
    return v - rel;
  };
  double t = a + dp * (rel - cumulative_[p]) / std::max(cumulative_[p + 1] - cumulative_[p], 1e-300);
  for (int iter = 0; iter < 100; ++iter) {
    const double ft = f(t);
    if (ft == 0.0) return t;
    if (ft < 0) a = t; else b = t;
    const double sp = speed(t);
    double next = sp > 0 ? t - ft / sp : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - t) < 1e-16 * two_pi) return next;
    t = next;
  }
  return t;
}

NystromGrid make_grid(const geometry::Domain &domain, int n) {
  auto d = std::make_shared<const geometry::Domain>(domain);
  return make_grid(d, std::make_shared<const BoundaryParametrization>(*d), n);
}

NystromGrid make_grid(std::shared_ptr<const geometry::Domain> domain,
                      std::shared_ptr<const BoundaryParametrization> param, int n) {
  refuse_corners(*domain);
  if (n < 8 || n % 2 != 0) fail(ErrorCode::invalid_argument, "grid size must be even and >= 8");
  NystromGrid g;
  g.domain = std::move(domain);
  g.param = std::move(param);
  g.n = n;
  g.h = two_pi / n;
  g.tau.resize(n);
  g.s.resize(n);
  g.speed.resize(n);
  g.weight.resize(n);
  g.curvature.resize(n);
  g.position.resize(n);
  g.tangent.resize(n);
  g.normal.resize(n);
  double wmin = INFINITY, wmax = 0.0;
  for (int i = 0; i < n; ++i) {
    g.tau[i] = (i + 0.5) * g.h;
    g.s[i] = g.param->s_of_tau(g.tau[i]);
    g.speed[i] = g.param->speed(g.tau[i]);
    g.weight[i] = g.h * g.speed[i];
    const auto f = geometry::frame_at(*g.domain, g.s[i], geometry::Side::after);
    g.position[i] = f.position;
    g.tangent[i] = f.tangent;
    g.normal[i] = f.inward_normal;
    g.curvature[i] = f.curvature;
    wmin = std::min(wmin, g.weight[i]);
    wmax = std::max(wmax, g.weight[i]);
  }
  g.max_spacing = std::max(wmax, g.h * g.param->max_speed());
  g.grading_ratio = wmin / wmax;
  return g;
}

int grid_size_for(const BoundaryParametrization &param, double lambda, double ppw) {
  if (!(lambda > 0.0) || !(ppw > 0.0)) fail(ErrorCode::invalid_argument, "lambda and ppw must be positive");
  const int n = static_cast<int>(std::ceil(ppw * lambda * param.max_speed()));
  // the graded map and the shape itself need resolving, whatever the wavelength
  const int graded = param.graded() ? 80 * static_cast<int>(param.tau_junctions().size()) : 0;
  int floor = std::max({32, graded, param.shape_nodes()});
  floor += floor % 2;
  return std::max(floor, n + (n % 2));
}

Green0 green0(double lambda, double r) {
  if (!(r > 0.0)) fail(ErrorCode::domain_error, "green0 needs r > 0");
  if (!(lambda > 0.0)) fail(ErrorCode::domain_error, "green0 needs lambda > 0");
  const auto b = specfun::bessel01(lambda * r);
  const cdouble i(0.0, 1.0);
  return {0.25 * i * cdouble(b.j0, b.y0), -0.25 * i * lambda * cdouble(b.j1, b.y1)};
}

cdouble kernel_F(const geometry::Domain &domain, double lambda, double s, double s2,
                 BoundaryCondition bc) {
  const auto f = geometry::frame_at(domain, s);
  const auto f2 = geometry::frame_at(domain, s2);
  const Vec2 d = f.position - f2.position;
  const double r = d.norm();
  if (r == 0.0) fail(ErrorCode::domain_error, "kernel_F at coincident points");
  const double c = bc == BoundaryCondition::dirichlet ? dot(d, f.inward_normal) : dot(-d, f2.inward_normal);
  return 2.0 * green0(lambda, r).dr * (c / r);
}

OperatorMatrix assemble_F(double lambda, std::shared_ptr<const NystromGrid> grid_ptr,
                          BoundaryCondition bc, double min_ppw, Matrix *derivative) {
  const NystromGrid &g = *grid_ptr;
  refuse_corners(*g.domain);
  if (!(lambda > 0.0)) fail(ErrorCode::invalid_argument, "lambda must be positive");
  const double ppw = g.points_per_wavelength(lambda);
  if (ppw < min_ppw) {
    fail(ErrorCode::resolution, "grid has " + std::to_string(ppw) + " points per wavelength at lambda=" +
                                    std::to_string(lambda) + ", need " + std::to_string(min_ppw));
  }
  const int n = g.n;
  const double h = g.h;
  // Kress weights R_k and the log term L_k = log(4 sin^2(k h / 2)).
  const int half = n / 2;
  std::vector<double> R(n, 0.0), L(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int m = 1; m < half; ++m) sum += std::cos(m * k * h) / m;
    R[k] = -(two_pi / half) * sum - (pi / (double(half) * half)) * std::cos(half * k * h);
    if (k > 0) {
      const double sn = std::sin(0.5 * k * h);
      L[k] = std::log(4.0 * sn * sn);
    }
  }
  OperatorMatrix out;
  out.lambda = lambda;
  out.bc = bc;
  out.grid = grid_ptr;
  out.kernel_variant = g.param->graded() ? "kress-log-split/graded" : "kress-log-split";
  out.entries.resize(n, n);
  Matrix &A = out.entries;
  const bool dir = bc == BoundaryCondition::dirichlet;
  const cdouble mi_half_lambda(0.0, -0.5 * lambda);
  const double k1_scale = lambda / two_pi;
  if (derivative) *derivative = Matrix::Zero(n, n);
  const cdouble d_scale(0.0, -0.5 * lambda * h);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    A(i, i) = h * g.curvature[i] * g.speed[i] / two_pi;
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = g.position[i] - g.position[j];
      const double r = d.norm();
      const auto b = specfun::bessel01(lambda * r);
      const cdouble h1(b.j1, b.y1);
      // c_ij for row i / column j and its mirror c_ji
      const double cij = dir ? dot(d, g.normal[i]) : dot(-d, g.normal[j]);
      const double cji = dir ? dot(-d, g.normal[j]) : dot(d, g.normal[i]);
      const double inv_r = 1.0 / r;
      const int kij = j - i, kji = n - kij;
      {
        const double cr = cij * inv_r * g.speed[j];
        const cdouble K = mi_half_lambda * h1 * cr;
        const double K1 = k1_scale * b.j1 * cr;
        // row i, column j: index difference i - j = -kij = kji (mod n)
        A(i, j) = h * K + K1 * (R[kji] - h * L[kji]);
      }
      {
        const double cr = cji * inv_r * g.speed[i];
        const cdouble K = mi_half_lambda * h1 * cr;
        const double K1 = k1_scale * b.j1 * cr;
        A(j, i) = h * K + K1 * (R[kij] - h * L[kij]);
      }
      if (derivative) {
        const cdouble h0(b.j0, b.y0);
        (*derivative)(i, j) = d_scale * h0 * cij * g.speed[j];
        (*derivative)(j, i) = d_scale * h0 * cji * g.speed[i];
      }
    }
  });
  return out;
}

Matrix assemble_F_derivative(double lambda, const NystromGrid &g, BoundaryCondition bc) {
  const int n = g.n;
  Matrix D = Matrix::Zero(n, n);
  const bool dir = bc == BoundaryCondition::dirichlet;
  const cdouble scale(0.0, -0.5 * lambda * g.h);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = g.position[i] - g.position[j];
      const auto b = specfun::bessel01(lambda * d.norm());
      const cdouble h0(b.j0, b.y0);
      const double cij = dir ? dot(d, g.normal[i]) : dot(-d, g.normal[j]);
      const double cji = dir ? dot(-d, g.normal[j]) : dot(d, g.normal[i]);
      D(i, j) = scale * h0 * cij * g.speed[j];
      D(j, i) = scale * h0 * cji * g.speed[i];
    }
  });
  return D;
}

Vector apply(const OperatorMatrix &F, const Vector &f) {
  if (f.size() != F.entries.cols()) fail(ErrorCode::invalid_argument, "dimension mismatch in apply");
  return F.entries * f;
}

double fixed_point_residual(const OperatorMatrix &F, const Vector &f) {
  const double sign = F.bc == BoundaryCondition::neumann ? 1.0 : -1.0;
  const Vector r = f - sign * apply(F, f);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    num += F.grid->weight[i] * std::norm(r[i]);
    den += F.grid->weight[i] * std::norm(f[i]);
  }
  if (den == 0.0) fail(ErrorCode::invalid_argument, "zero trace");
  return std::sqrt(num / den);
}

LayerValue layer_potential_eval(double lambda, const NystromGrid &g, const Vector &density, Vec2 x,
                                LayerKind kind) {
  if (density.size() != g.n) fail(ErrorCode::invalid_argument, "density size does not match grid");
  LayerValue out;
  double nearest = INFINITY;
  cdouble sum = 0.0;
  const cdouble i4(0.0, 0.25);
  for (int j = 0; j < g.n; ++j) {
    const Vec2 d = g.position[j] - x;
    const double r = d.norm();
    nearest = std::min(nearest, r);
    if (density[j] == 0.0) continue;
    if (r == 0.0) fail(ErrorCode::domain_error, "layer potential evaluated on a node");
    const auto b = specfun::bessel01(lambda * r);
    cdouble k;
    if (kind == LayerKind::single) {
      k = i4 * cdouble(b.j0, b.y0);
    } else {
      k = -i4 * lambda * cdouble(b.j1, b.y1) * (dot(d, g.normal[j]) / r);
    }
    sum += g.weight[j] * k * density[j];
  }
  out.value = sum;
  out.near_boundary = nearest < 2.0 * g.max_spacing;
  return out;
}

void dump_matrix(const OperatorMatrix &F, const std::string &path) {
  static_assert(std::endian::native == std::endian::little, "dump format is little endian");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot open " + path);
  const double lambda = F.lambda;
  const std::uint32_t n = static_cast<std::uint32_t>(F.entries.rows());
  const std::uint8_t bc = F.bc == BoundaryCondition::dirichlet ? 0 : 1;
  os.write(reinterpret_cast<const char *>(&lambda), sizeof lambda);
  os.write(reinterpret_cast<const char *>(&n), sizeof n);
  os.write(reinterpret_cast<const char *>(&bc), sizeof bc);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      const cdouble v = F.entries(i, j);
      const double re = v.real(), im = v.imag();
      os.write(reinterpret_cast<const char *>(&re), sizeof re);
      os.write(reinterpret_cast<const char *>(&im), sizeof im);
    }
  }
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

MatrixDump load_matrix(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open " + path);
  MatrixDump m;
  std::uint32_t n = 0;
  std::uint8_t bc = 0;
  is.read(reinterpret_cast<char *>(&m.lambda), sizeof m.lambda);
  is.read(reinterpret_cast<char *>(&n), sizeof n);
  is.read(reinterpret_cast<char *>(&bc), sizeof bc);
  if (!is || bc > 1) fail(ErrorCode::io, "bad matrix header in " + path);
  m.bc = bc == 0 ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
  m.entries.resize(n, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char *>(&re), sizeof re);
      is.read(reinterpret_cast<char *>(&im), sizeof im);
      m.entries(i, j) = {re, im};
    }
  }
  if (!is) fail(ErrorCode::io, "truncated matrix file " + path);
  return m;
}

Vector trig_interpolate(const NystromGrid &g, const Vector &values, const std::vector<double> &tau) {
  const int n = g.n;
  if (values.size() != n) fail(ErrorCode::invalid_argument, "values size does not match grid");
  std::vector<cdouble> x(values.data(), values.data() + n);
  const auto F = detail::dft(x, true);
  const int half = n / 2;
  // c_k = exp(-i k h/2) F_k / n for |k| < n/2; Nyquist split symmetrically.
  std::vector<cdouble> c(n);
  for (int k = -half + 1; k < half; ++k) {
    c[k + half - 1] = std::polar(1.0 / n, -k * 0.5 * g.h) * F[(k + n) % n];
  }
  const cdouble c_plus = std::polar(0.5 / n, -half * 0.5 * g.h) * F[half];
  const cdouble c_minus = std::polar(0.5 / n, half * 0.5 * g.h) * F[half];
  Vector out(static_cast<Eigen::Index>(tau.size()));
  for (std::size_t p = 0; p < tau.size(); ++p) {
    const double t = tau[p];
    cdouble sum = c_plus * std::polar(1.0, half * t) + c_minus * std::polar(1.0, -half * t);
    const cdouble step = std::polar(1.0, t);
    cdouble e = std::polar(1.0, (-half + 1) * t);
    for (int k = -half + 1; k < half; ++k) {
      if (((k + half) & 63) == 0) e = std::polar(1.0, k * t);
      sum += c[k + half - 1] * e;
      e *= step;
    }
    out[static_cast<Eigen::Index>(p)] = sum;
  }
  return out;
}

}  // namespace qbt::layer
