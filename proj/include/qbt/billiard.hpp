// SPDX-License-Identifier: Apache-2.0
#pragma once

// Billiard map on the open coball bundle {(s, eta) : |eta| < 1}, with eta the
// tangential component of the inward unit direction.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qbt/geometry.hpp"

namespace qbt::billiard {

inline constexpr double grazing_cutoff = 1e-8;

struct PhasePoint {
  double s = 0.0;
  double eta = 0.0;
  double gamma = 1.0;

  /// Throws grazing when sqrt(1 - eta^2) < grazing_cutoff.
  static PhasePoint make(double s, double eta);
};

using PhaseFunction = std::function<double(const PhasePoint &)>;

/// eta * tangent + gamma * inward_normal at the point's frame.
Vec2 lift(const geometry::Domain &domain, const PhasePoint &q);

struct BilliardStepResult {
  /// Empty when the chord ends at a corner.
  std::optional<PhasePoint> next;
  geometry::ChordClass chord;
  double flight_length = 0.0;
  Vec2 from, to;
};

BilliardStepResult step(const geometry::Domain &domain, const PhasePoint &q);

struct Trajectory {
  std::vector<BilliardStepResult> steps;
  std::vector<double> cumulative_length;
  bool terminated = false;
};

Trajectory trajectory(const geometry::Domain &domain, const PhasePoint &q0, std::size_t bounces);

struct BirkhoffResult {
  double average = 0.0;
  std::size_t completed = 0;
  bool terminated = false;
};

/// (1/N) sum_{k<N} a(beta^k q0); on corner termination the partial average
/// over the completed terms is returned with `terminated` set.
BirkhoffResult birkhoff_average(const geometry::Domain &domain, const PhasePoint &q0,
                                const PhaseFunction &a, std::size_t n);

/// (T f)(q) = gamma(q) / gamma(beta q) * f(beta q), or the adjoint weight
/// gamma(beta q) / gamma(q) when `adjoint` is set. Throws corner_hit when
/// beta(q) is undefined.
double transfer_apply(const geometry::Domain &domain, const PhaseFunction &f, const PhasePoint &q,
                      bool adjoint = false);

struct LoopSample {
  double eta = 0.0;
  /// Smallest return iterate, empty for "infinity".
  std::optional<int> loop_iterate;
  /// Arclength miss at loop_iterate, or the best miss over all iterates.
  double return_distance = 0.0;
  /// Flight length accumulated up to loop_iterate (0 when no loop).
  double loop_length = 0.0;
};

struct LoopProfile {
  double basepoint = 0.0;
  int n_max = 0;
  double tol = 0.0;
  std::vector<LoopSample> samples;
  std::size_t rejected_grazing = 0;
  double loop_measure_estimate = 0.0;
  /// 95% normal-approximation binomial half-width.
  double confidence_half_width = 0.0;
};

/// Stratified eta samples (midpoints of n_samples equal cells of (-1, 1)).
LoopProfile loop_profile(const geometry::Domain &domain, double s, int n_max, std::size_t n_samples,
                         double tol);

struct KsReport {
  double d_s = 0.0;
  double d_eta = 0.0;
  /// Asymptotic 1% critical value 1.628 / sqrt(n).
  double critical = 0.0;
  std::size_t samples = 0;
  bool pass() const { return d_s < critical && d_eta < critical; }
};

/// Pushes uniform (s, eta) samples one step and compares both marginals of the
/// image with the uniform law.
KsReport measure_preservation_ks(const geometry::Domain &domain, std::size_t n, std::uint64_t seed);

struct IsometryReport {
  double lhs = 0.0;  // integral of |T f|^2 gamma^-2
  double rhs = 0.0;  // integral of |f|^2 gamma^-2
  double standard_error = 0.0;
  std::size_t samples = 0;
  double z() const { return standard_error > 0 ? (lhs - rhs) / standard_error : 0.0; }
};

/// Paired Monte Carlo over uniform (s, eta) of both sides of the unitarity
/// identity for T on L^2(gamma^-2 ds deta).
IsometryReport transfer_isometry_mc(const geometry::Domain &domain, const PhaseFunction &f,
                                    std::size_t n, std::uint64_t seed);

}  // namespace qbt::billiard
