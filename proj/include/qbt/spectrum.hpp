// SPDX-License-Identifier: Apache-2.0
#pragma once

// Eigenvalues as the real lambda where I -/+ F(lambda) is singular, boundary
// traces as its null vectors, interior reconstruction and normalisation.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qbt/layer_ops.hpp"

namespace qbt::spectrum {

using layer::Matrix;
using layer::Vector;

/// Two-term count (|Omega|/4pi) l^2 -/+ (|Y|/4pi) l, minus sign for Dirichlet.
double weyl_count(const geometry::Domain &domain, BoundaryCondition bc, double lambda);
/// Reciprocal of the derivative of the two-term count.
double weyl_spacing(const geometry::Domain &domain, BoundaryCondition bc, double lambda);

/// Boundary samples on equispaced nodes of the periodic parameter, for grids
/// without a Nystrom discretisation (domains with corners).
layer::NystromGrid make_sample_grid(const geometry::Domain &domain, int n);
/// tau coordinate of arclength s on a grid (uniform in s when no parametrisation).
double grid_tau(const layer::NystromGrid &grid, double s);

struct NormalizationCertificate {
  double interior_norm_estimate = 0.0;
  std::string method;
  double error_bar = 0.0;
  /// Relative disagreement with the independent route when it was run.
  std::optional<double> cross_check;
  bool flagged = false;
};

struct EigenTrace {
  double lambda = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  Vector trace;
  std::shared_ptr<const layer::NystromGrid> grid;
  double sigma_min = 0.0;
  double fone_residual = 0.0;
  double interior_helmholtz_residual = 0.0;
  NormalizationCertificate normalization;
  int cluster_id = 0;
  int cluster_size = 1;
  /// "bie" or "analytic".
  std::string provenance = "bie";
  /// Closed-form trace for analytic modes; evaluates the normalised trace at s.
  std::function<cdouble(double)> exact;
  int mode_m = 0, mode_k = 0;
};

/// Trace value at arclength s: exact when available, else trigonometric
/// interpolation of the grid samples.
cdouble trace_at(const EigenTrace &t, double s);

struct SolverOptions {
  double ppw = layer::default_points_per_wavelength;
  double scan_ppw = layer::min_points_per_wavelength;
  /// 0 selects a quarter of the two-term mean level spacing.
  double dlambda = 0.0;
  /// Dips must lie below dip_factor times the running median of the scan;
  /// 0 refines every local minimum.
  double dip_factor = 0.0;
  double window = 1.0;
  double accept_sigma = 1e-6;
  double merge_rtol = 1e-7;
  double cluster_floor = 1e-9;
  int block = 6;
  std::uint64_t seed = 1;
  std::function<void(const std::string &)> log;
};

/// Scan points below this fraction of the running median are bracketed,
/// and singular branches below it are followed.
inline constexpr double follow_fraction = 0.5;

struct Bracket {
  double lo = 0.0, hi = 0.0, center = 0.0;
  double sigma = 0.0;
  /// Singular branches at the center below this level are followed
  /// (follow_fraction times the running median of the scan).
  double threshold = 0.0;
};

struct ScanResult {
  std::vector<double> lambdas, sigmas;
  /// Second and third smallest singular values at each scan point.
  std::vector<double> sigmas2, sigmas3;
  std::vector<Bracket> brackets;
  double dlambda = 0.0;
  bool under_resolved = false;
  double predicted_misses = 0.0;
  std::vector<std::string> warnings;
};

ScanResult scan_spectrum(const geometry::Domain &domain, BoundaryCondition bc, double lmin, double lmax,
                         const SolverOptions &opts = {});

struct Root {
  double lambda = 0.0;
  double sigma = 0.0;
  bool accepted = false;
  std::string reason;
};

/// Minimises the small singular values inside the bracket; every small
/// singular branch is followed, so near-degenerate pairs yield two roots.
std::vector<Root> refine_eigenvalue(const geometry::Domain &domain, BoundaryCondition bc,
                                    const Bracket &bracket, const SolverOptions &opts = {});

struct SingularTriple {
  double sigma = 0.0;
  Vector u, v;
};

/// W^(1/2) (I -/+ F) W^(-1/2); its singular values measure the fixed-point
/// defect in the discrete L2(ds) norm.
Matrix weighted_system(const layer::OperatorMatrix &F);

/// The k smallest singular triples by block inverse subspace iteration.
std::vector<SingularTriple> smallest_singular(const Matrix &B, int k, int iterations, std::uint64_t seed,
                                              const Matrix *start = nullptr);

struct TraceCluster {
  double lambda = 0.0;
  std::vector<double> sigmas;
  /// Traces (nodal values) orthonormal in sum_i w_i f_i conj(g_i).
  std::vector<Vector> traces;
  bool flagged = false;
};

/// Null vectors with singular value <= max(10 sigma_min, floor).
TraceCluster extract_traces(const layer::OperatorMatrix &F, double accept_sigma = 1e-6,
                            double cluster_floor = 1e-9, int max_dim = 6);

/// Green representation: Dirichlet u = -S u^b, Neumann u = D u^b.
cdouble reconstruct_interior(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                             BoundaryCondition bc, Vec2 x);

/// Max relative 5-point Helmholtz residual at interior probes.
double helmholtz_residual(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                          BoundaryCondition bc, const std::vector<Vec2> &probes);

/// Interior L2 norm squared from the boundary (Rellich) identity:
///   2 l^2 ||u||^2 = int (x.n) |u^b|^2                     (Dirichlet)
///   2 l^2 ||u||^2 = int (x.n) (l^2 |u|^2 - |d_s u|^2)      (Neumann)
/// with n the outward normal. Returns the Hermitian Gram matrix of a family.
Matrix rellich_gram(const layer::NystromGrid &grid, const std::vector<Vector> &traces, double lambda,
                    BoundaryCondition bc);

struct QmcEstimate {
  double norm_squared = 0.0;
  double standard_error = 0.0;
  std::size_t points = 0;
};

/// Rejection-sampled scrambled-Sobol estimate of ||u||^2 over the bounding box,
/// with `shifts` Cranley-Patterson rotations for the error bar.
QmcEstimate interior_norm_qmc(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                              BoundaryCondition bc, std::size_t points, int shifts, std::uint64_t seed);

/// Rescales so the interior norm is 1 (Rellich identity) and fixes the phase
/// so the max-modulus node is real positive. Idempotent and scale invariant.
EigenTrace normalize_trace(EigenTrace trace, bool qmc_cross_check = false, std::size_t qmc_points = 200000,
                           std::uint64_t seed = 1);

/// Joint normalisation of a degenerate cluster: interior-orthonormal and
/// boundary-orthogonal.
std::vector<EigenTrace> normalize_cluster(std::vector<EigenTrace> cluster);

/// Closed-form modes of disc (J_m(l r) e^{i m theta}) or half_disc
/// (cos / sin sector modes), lambda <= lambda_max, sampled on n nodes
/// (0 picks 12 points per wavelength at lambda_max).
std::vector<EigenTrace> analytic_modes(const geometry::Domain &domain, BoundaryCondition bc,
                                       double lambda_max, int n = 0);

/// Eigenvalues of disc (with multiplicity) below lambda_max from Bessel zeros.
std::vector<double> disc_oracle(double radius, BoundaryCondition bc, double lambda_max);

struct RejectedDip {
  double lambda = 0.0;
  double sigma = 0.0;
  std::string reason;
};

struct SpectrumStore {
  static constexpr int format_version = 1;
  std::string domain_spec;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::string provenance = "bie";
  double lmin = 0.0, lmax = 0.0;
  SolverOptions options;
  double dlambda = 0.0;
  std::vector<EigenTrace> traces;
  std::vector<RejectedDip> rejected;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

/// Full pipeline: scan, refine, extract, normalise.
SpectrumStore compute_spectrum(const geometry::Domain &domain, BoundaryCondition bc, double lmin, double lmax,
                               const SolverOptions &opts = {});

/// Store from analytic modes, in the same layout as BIE stores.
SpectrumStore analytic_store(const geometry::Domain &domain, BoundaryCondition bc, double lambda_max, int n = 0);

/// Directory layout: manifest.json, index.csv, traces/NNNNN.bin (float64 re/im pairs).
void save_store(const SpectrumStore &store, const std::string &dir);
SpectrumStore load_store(const std::string &dir);

}  // namespace qbt::spectrum
