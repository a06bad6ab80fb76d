// SPDX-License-Identifier: Apache-2.0
#pragma once

// Integer-order Bessel and Hankel functions of real positive argument.
//
// Small arguments use Miller's backward recurrence normalised by
// 1 = J0 + 2 sum J_2k, with Y0/Y1 from their Neumann series; large
// arguments use the Hankel asymptotic expansion. Higher orders come from
// forward recurrence (Y, and J while m < x) or a dedicated Miller pass.

#include <vector>

#include "qbt/types.hpp"

namespace qbt::specfun {

inline constexpr int max_order = 200;
inline constexpr double min_argument = 1e-8;
inline constexpr double max_argument = 1e6;

struct CylinderFunctionValue {
  int order = 0;
  double x = 0.0;
  double J = 0.0;
  double Y = 0.0;
  double dJ = 0.0;
  double dY = 0.0;

  cdouble H1() const { return {J, Y}; }
  cdouble dH1() const { return {dJ, dY}; }
};

/// J0, Y0, J1, Y1 in one pass; the hot path of kernel assembly.
struct Bessel01 {
  double j0, y0, j1, y1;
};
Bessel01 bessel01(double x);

CylinderFunctionValue bessel_jy(int m, double x);

/// H_m^(1)(x) for m in {0, 1}.
cdouble hankel1(int m, double x);

/// k-th positive zero of J_m, or of J_m' when `derivative` is set
/// (x = 0 is never counted as a zero of J_0').
double bessel_zero(int m, int k, bool derivative);

/// All positive zeros of J_m (or J_m') not exceeding xmax, ascending.
std::vector<double> bessel_zeros_below(int m, double xmax, bool derivative);

}  // namespace qbt::specfun
