// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pointwise spectral sums of boundary traces, growth-exponent fits, trace
// L^p norms, the smoothed boundary wave trace and Weyl-count audits.

#include <cstdint>
#include <string>
#include <vector>

#include "qbt/spectrum.hpp"

namespace qbt::asymptotics {

using spectrum::EigenTrace;

/// Eigentraces sorted by lambda, complete on (0, lmax].
class SpectralSeries {
 public:
  /// Throws precondition when the store does not start below a lower bound
  /// for the first eigenvalue (Faber-Krahn, or Payne-Weinberger for Neumann
  /// on convex domains), since partial sums would then be missing terms.
  explicit SpectralSeries(spectrum::SpectrumStore store);

  BoundaryCondition bc() const { return store_.bc; }
  const std::string &provenance() const { return store_.provenance; }
  double lmax() const { return store_.lmax; }
  const geometry::Domain &domain() const { return domain_; }
  const std::vector<EigenTrace> &traces() const { return store_.traces; }
  const std::vector<double> &lambdas() const { return lambdas_; }
  /// Number of eigenvalues <= lambda, the Neumann constant mode included.
  int count(double lambda) const;

 private:
  spectrum::SpectrumStore store_;
  geometry::Domain domain_;
  std::vector<double> lambdas_;
};

/// Lower bound for the first (nonzero) eigenvalue, 0 when none is known.
double first_eigenvalue_bound(const geometry::Domain &domain, BoundaryCondition bc);

/// sum over lambda_j <= lambda of |u_j(s)|^2, unscaled. The Neumann constant
/// mode contributes 1/|Omega|.
double pointwise_spectral_sum(const SpectralSeries &series, double s, double lambda);
/// Same sum over a <= lambda_j <= b (no constant mode).
double interval_sum(const SpectralSeries &series, double s, double a, double b);

struct ExponentFit {
  std::string tag;
  double exponent = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double prefactor = 0.0;
  double lambda_lo = 0.0, lambda_hi = 0.0;
  /// RMS residual of the log-log fit.
  double residual = 0.0;
  int points = 0;
};

/// Least-squares slope of log f against log lambda over [lo, hi] with a 95%
/// pairs-bootstrap interval. The window must span a factor 4 and hold 20
/// positive samples.
ExponentFit exponent_fit(const std::vector<double> &lambdas, const std::vector<double> &values, double lo,
                         double hi, const std::string &tag = "", std::uint64_t seed = 1, int resamples = 2000);

/// Discrete L^p(Y) norm on the trace grid; p = 0 selects the sup norm, refined
/// by trigonometric interpolation around the grid maximum.
double trace_norm(const EigenTrace &trace, double p);

struct TraceNorms {
  double lambda = 0.0;
  double l2 = 0.0, l4 = 0.0, l8 = 0.0, sup = 0.0;
};
TraceNorms trace_norms(const EigenTrace &trace);

/// Boundary L^2 norm of a Neumann trace (the interior norm is 1). Throws
/// wrong_bc for Dirichlet input.
double tataru_ratio(const EigenTrace &trace);

/// max over j of tataru_ratio / lambda_j^(1/3).
double tataru_constant(const std::vector<EigenTrace> &traces);

struct WavePeak {
  double t = 0.0;
  double value = 0.0;
  double prominence = 0.0;
};

struct WaveTrace {
  std::vector<double> t;
  std::vector<cdouble> value;
  double sigma_t = 0.0;
  /// Frequency window width, 1 / sigma_t.
  double window = 0.0;
  /// Local maxima of |value| with t > t_min and prominence above the given
  /// fraction of |value| at t = 0, by decreasing prominence.
  std::vector<WavePeak> peaks(double t_min = 0.5, double fraction = 0.1) const;
};

/// sum_j exp(i t lambda_j) exp(-lambda_j^2 sigma_t^2 / 2) |u_j(s)|^2. Throws
/// precondition when sigma_t < 4 pi / lmax.
WaveTrace wave_trace(const SpectralSeries &series, double s, const std::vector<double> &t_grid, double sigma_t);

/// Flight lengths of billiard loops through s returning at iterates 2..n_max,
/// found as sign changes of the signed arclength miss on an eta grid and
/// bisected to machine precision. Sorted, duplicates removed.
std::vector<double> loop_lengths(const geometry::Domain &domain, double s, int n_max, std::size_t samples = 4000);

struct GapInterval {
  double lo = 0.0, hi = 0.0;
  /// Spacing over the mean two-term spacing.
  double normalized_spacing = 0.0;
  /// Drop of the mean count deviation across the gap.
  double drop = 0.0;
};

struct WeylAudit {
  double max_deviation = 0.0;
  double at_lambda = 0.0;
  double mean_deviation = 0.0;
  std::vector<GapInterval> gaps;
};

/// sup over lambda <= lmax of |N(lambda) - two-term count|. N counts the
/// Neumann constant mode. Gaps are spacings several times the mean across
/// which the running mean deviation drops by at least 0.7.
WeylAudit weyl_audit(const std::vector<double> &lambdas, double lmax, const geometry::Domain &domain,
                     BoundaryCondition bc);
WeylAudit weyl_audit(const SpectralSeries &series);

/// Jump of the pointwise sum at the eigenvalue lambda: the cluster sum of
/// |u_j(s)|^2. Throws invalid_argument when lambda is not in the series.
double jump_bound(const SpectralSeries &series, double s, double lambda, double rtol = 1e-8);

}  // namespace qbt::asymptotics
