// SPDX-License-Identifier: Apache-2.0
#pragma once

// Boundary observables, their semiclassical (left) quantisation on a uniform
// arclength grid, matrix elements against eigentraces, the limit states and
// the averages used to test quantum ergodicity.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qbt/spectrum.hpp"

namespace qbt::qe {

using layer::Vector;

/// One product term a(s) b(eta).
struct SymbolTerm {
  std::function<double(double)> a;
  std::function<double(double)> b;
  /// b is a polynomial (needs no grazing cutoff).
  bool b_polynomial = true;
};

/// Symbol a(s, eta) = sum_k a_k(s) b_k(eta).
struct Observable {
  std::string name;
  std::vector<SymbolTerm> terms;
  /// Grazing cutoff: non-polynomial factors vanish for |eta| > 1 - delta.
  double delta = 0.0;

  double operator()(double s, double eta) const;
  bool multiplication_only() const;
  /// Throws invalid_argument when a non-polynomial factor lacks a cutoff >= 0.05.
  void validate() const;
};

Observable constant_observable(double c = 1.0);
Observable multiplication(std::function<double(double)> a, std::string name);
/// The symbol eta.
Observable momentum();
/// C-infinity bump exp(1 - 1/(1 - x^2)), x = d(s, s0)/half_width, periodic in s.
Observable bump(double s0, double half_width, double perimeter);
/// cos(2 pi k s / |Y|).
Observable fourier_mode(int k, double perimeter);
/// Smooth cutoff in eta, 1 for |eta| <= 1 - 2 delta and 0 for |eta| >= 1 - delta.
double smooth_cutoff(double eta, double delta);
/// Product of two observables (all pairs of terms).
Observable operator*(const Observable &x, const Observable &y);
Observable operator+(const Observable &x, const Observable &y);

/// Text form: terms joined by '+', factors by '*'. Factors: one, eta, eta2,
/// cos:k=K, bump:s0=S,w=W, chi:delta=D (smooth eta cutoff).
Observable parse_observable(const std::string &text, const geometry::Domain &domain);

struct LimitState {
  BoundaryCondition bc = BoundaryCondition::neumann;
  /// 2 / (pi |Omega|).
  double c = 0.0;
  /// 1/gamma (Neumann) or gamma (Dirichlet), gamma = sqrt(1 - eta^2).
  double weight(double eta) const;
};

LimitState limit_state(const geometry::Domain &domain, BoundaryCondition bc);

/// Left quantisation on M uniform arclength samples of a boundary of length L:
/// f -> sum_k a_k(s) IDFT[b_k(h xi_n) DFT f], xi_n = 2 pi n / L.
class QuantizedOperator {
 public:
  QuantizedOperator(Observable obs, double h, int M, double perimeter);
  Vector apply(const Vector &f) const;
  int size() const { return M_; }
  double h() const { return h_; }

 private:
  Observable obs_;
  double h_;
  int M_;
  double perimeter_;
  std::vector<std::vector<double>> a_samples_, b_samples_;
};

/// M must be a power of two.
QuantizedOperator quantize(const Observable &obs, double h, int M, double perimeter);

/// Left quantisation of a tabulated symbol: table(i, n) = a(s_i, h xi_n) for
/// the signed frequencies n in [-M/2, M/2).
Vector apply_symbol_table(const std::vector<std::vector<double>> &table, const Vector &f);

/// Power of two covering the trace grid and four samples per boundary wavelength.
int default_grid_size(const spectrum::EigenTrace &trace);
/// Trace on M uniform arclength samples s_i = i L / M. Throws resolution when
/// more than 1e-6 of the energy sits above 0.8 of the Nyquist frequency.
Vector uniform_samples(const spectrum::EigenTrace &trace, int M);

/// <Op_h(a) u, u> with h = 1/lambda, times lambda^-2 for Dirichlet.
cdouble matrix_element(const spectrum::EigenTrace &trace, const Observable &obs, int M = 0);

/// c int_0^|Y| int_{-1}^{1} a(s, eta) w(eta) d eta ds.
double omega(const Observable &obs, const LimitState &state, const geometry::Domain &domain);

struct MatrixElementSeries {
  std::vector<double> lambdas;
  /// Real parts of the matrix elements.
  std::vector<double> values;
  double omega = 0.0;
  double store_lmax = 0.0;
};

MatrixElementSeries matrix_elements(const spectrum::SpectrumStore &store, const Observable &obs);

/// (1/N(l)) sum over lambda_j <= l of the matrix elements.
double cesaro_weyl(const MatrixElementSeries &series, double lambda);
double cesaro_weyl(const spectrum::SpectrumStore &store, const Observable &obs, double lambda);

struct QeStatistics {
  double lambda = 0.0;
  int count = 0;
  double mean = 0.0;
  double omega = 0.0;
  double variance = 0.0;
  std::map<double, double> deviation_fraction;
};

QeStatistics qe_statistics(const MatrixElementSeries &series, double lambda,
                           const std::vector<double> &eps = {0.05, 0.1, 0.2});

struct EgorovDefects {
  /// |<F* A F u, u> - <A u, u>|.
  double invariance = 0.0;
  /// |<Op(a~) u, u> - <Op(a) u, u>|, a~(q) = gamma(q) / gamma(beta q) a(beta q).
  double egorov = 0.0;
  /// Fraction of symbol-support samples where beta is undefined.
  double undefined_fraction = 0.0;
  bool flagged = false;
};

/// |<A F u, F u> - <A u, u>| alone, Dirichlet values carrying lambda^-2.
double invariance_defect(const spectrum::EigenTrace &trace, const Observable &obs, const layer::OperatorMatrix &F);

/// Both defects, Dirichlet values carrying lambda^-2.
EgorovDefects egorov_check(const spectrum::EigenTrace &trace, const Observable &obs,
                           const layer::OperatorMatrix &F);

}  // namespace qbt::qe
