// SPDX-License-Identifier: Apache-2.0
#include "qbt/specfun.hpp"

#include <array>
#include <cmath>
#include <string>
#include <tuple>

#include "qbt/error.hpp"

namespace qbt::specfun {

namespace {

constexpr double euler_gamma = 0.57721566490153286061;
constexpr double asymptotic_threshold = 20.0;
constexpr double rescale_limit = 1e200;

void check_argument(int m, double x) {
  if (m < 0 || m > max_order)
    fail(ErrorCode::domain_error, "Bessel order out of range: " + std::to_string(m));
  if (!(x >= min_argument && x <= max_argument))
    fail(ErrorCode::domain_error, "Bessel argument out of range: " + std::to_string(x));
}

// Hankel asymptotic expansion for orders 0 and 1.
Bessel01 asymptotic01(double x) {
  double p[2] = {0.0, 0.0};
  double q[2] = {0.0, 0.0};
  for (int nu = 0; nu < 2; ++nu) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;  // a_k / x^k
    double last = 2.0;
    p[nu] = 1.0;
    for (int k = 1; k < 80; ++k) {
      term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
      const double mag = std::abs(term);
      if (mag > last) break;  // divergent tail
      last = mag;
      // a_k enters P with sign (-1)^(k/2) for even k, Q with (-1)^((k-1)/2).
      const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
      if (k % 2 == 0)
        p[nu] += sign * term;
      else
        q[nu] += sign * term;
      if (mag < 1e-18) break;
    }
  }
  const double amp = std::sqrt(2.0 / (pi * x));
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double r = std::numbers::sqrt2 / 2.0;
  // chi0 = x - pi/4, chi1 = x - 3pi/4, expanded so cos(x), sin(x) carry the
  // full argument reduction.
  const double cos0 = r * (c + s), sin0 = r * (s - c);
  const double cos1 = r * (s - c), sin1 = -r * (s + c);
  Bessel01 out;
  out.j0 = amp * (p[0] * cos0 - q[0] * sin0);
  out.y0 = amp * (p[0] * sin0 + q[0] * cos0);
  out.j1 = amp * (p[1] * cos1 - q[1] * sin1);
  out.y1 = amp * (p[1] * sin1 + q[1] * cos1);
  return out;
}

Bessel01 miller01(double x) {
  const int top = 2 * static_cast<int>(std::ceil((1.4 * x + 30.0) / 2.0));
  std::array<double, 96> j{};
  j[top + 1] = 0.0;
  j[top] = 1e-30;
  for (int n = top; n >= 1; --n) {
    j[n - 1] = (2.0 * n / x) * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > rescale_limit) {
      for (int i = n - 1; i <= top + 1; ++i) j[i] /= rescale_limit;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= top; k += 2) norm += 2.0 * j[k];
  const double inv = 1.0 / norm;

  double s0 = 0.0;  // sum (-1)^k J_2k / k
  double s1 = 0.0;  // sum (-1)^k (J_2k-1 - J_2k+1) / k
  for (int k = 1; 2 * k <= top; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    s0 += sign * j[2 * k] / k;
    s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  Bessel01 out;
  out.j0 = j[0] * inv;
  out.j1 = j[1] * inv;
  const double lg = std::log(0.5 * x) + euler_gamma;
  out.y0 = (2.0 / pi) * (lg * out.j0 - 2.0 * s0 * inv);
  out.y1 = -(2.0 / (pi * x)) * out.j0 + (2.0 / pi) * (lg * out.j1 + s1 * inv);
  return out;
}

// J_m(x) and J_{m-1}(x) by Miller recurrence, for m > x.
std::pair<double, double> miller_high(int m, double x) {
  const double start = std::max<double>(m, 1.4 * x + 30.0) + 20.0 + std::sqrt(40.0 * m);
  const int top = 2 * static_cast<int>(std::ceil(start / 2.0));
  double jp1 = 0.0, jn = 1e-30;
  double norm = 0.0;
  double jm = 0.0, jm1 = 0.0;
  for (int n = top; n >= 1; --n) {
    const double jn1 = (2.0 * n / x) * jn - jp1;
    if (n % 2 == 0) norm += 2.0 * jn;
    if (n == m) jm = jn;
    if (n - 1 == m - 1) jm1 = jn1;
    jp1 = jn;
    jn = jn1;
    if (std::abs(jn) > rescale_limit) {
      jn /= rescale_limit;
      jp1 /= rescale_limit;
      norm /= rescale_limit;
      jm /= rescale_limit;
      jm1 /= rescale_limit;
    }
  }
  norm += jn;  // j_0
  return {jm / norm, jm1 / norm};
}

}  // namespace

Bessel01 bessel01(double x) {
  return x >= asymptotic_threshold ? asymptotic01(x) : miller01(x);
}

CylinderFunctionValue bessel_jy(int m, double x) {
  check_argument(m, x);
  const Bessel01 b = bessel01(x);
  CylinderFunctionValue v;
  v.order = m;
  v.x = x;
  if (m == 0) {
    v.J = b.j0;
    v.Y = b.y0;
    v.dJ = -b.j1;
    v.dY = -b.y1;
    return v;
  }
  // Y by forward recurrence (always stable).
  double ym1 = b.y0, y = b.y1;
  for (int n = 1; n < m; ++n) {
    const double next = (2.0 * n / x) * y - ym1;
    ym1 = y;
    y = next;
  }
  double jm1 = b.j0, j = b.j1;
  if (m > 1) {
    if (x >= m) {
      for (int n = 1; n < m; ++n) {
        const double next = (2.0 * n / x) * j - jm1;
        jm1 = j;
        j = next;
      }
    } else {
      std::tie(j, jm1) = miller_high(m, x);
    }
  }
  v.J = j;
  v.Y = y;
  v.dJ = jm1 - (m / x) * j;
  v.dY = ym1 - (m / x) * y;
  return v;
}

cdouble hankel1(int m, double x) {
  if (m != 0 && m != 1) fail(ErrorCode::domain_error, "hankel1 supports orders 0 and 1");
  check_argument(m, x);
  const Bessel01 b = bessel01(x);
  return m == 0 ? cdouble(b.j0, b.y0) : cdouble(b.j1, b.y1);
}

namespace {

struct ZeroTarget {
  int m;
  bool derivative;

  // value and first derivative of the target function
  std::pair<double, double> eval(double x) const {
    const CylinderFunctionValue v = bessel_jy(m, x);
    if (!derivative) return {v.J, v.dJ};
    const double second = -v.dJ / x - (1.0 - double(m) * m / (x * x)) * v.J;
    return {v.dJ, second};
  }
};

double polish(const ZeroTarget &f, double a, double b) {
  double fa = f.eval(a).first;
  double x = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    auto [fx, dfx] = f.eval(x);
    if (fx == 0.0) return x;
    if ((fx < 0) == (fa < 0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
    }
    double next = x - fx / dfx;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 4e-16 * x) return next;
    x = next;
  }
  return x;
}

}  // namespace

std::vector<double> bessel_zeros_below(int m, double xmax, bool derivative) {
  if (m < 0 || m > max_order) fail(ErrorCode::domain_error, "Bessel order out of range");
  const ZeroTarget f{m, derivative};
  std::vector<double> zeros;
  // J_m and J_m' have no positive zeros below m (other than J_0' at 0).
  double a = std::max(0.5, double(m));
  double fa = f.eval(a).first;
  const double step = 0.5;
  while (a < xmax) {
    const double b = a + step;
    const double fb = f.eval(b).first;
    if (fa == 0.0) {
      if (a <= xmax) zeros.push_back(a);
    } else if ((fa < 0) != (fb < 0)) {
      const double z = polish(f, a, b);
      if (z <= xmax) zeros.push_back(z);
    }
    a = b;
    fa = fb;
  }
  return zeros;
}

double bessel_zero(int m, int k, bool derivative) {
  if (k < 1) fail(ErrorCode::invalid_argument, "zero index must be >= 1");
  double xmax = std::max(double(m), 1.0) + 4.0 * (k + 2);
  for (;;) {
    auto zeros = bessel_zeros_below(m, xmax, derivative);
    if (int(zeros.size()) >= k) return zeros[k - 1];
    xmax *= 2.0;
  }
}

}  // namespace qbt::specfun
