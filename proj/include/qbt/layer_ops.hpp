// SPDX-License-Identifier: Apache-2.0
#pragma once

// Free-space Green's function, boundary kernels and Nystrom discretisation of
// the boundary operator F on a periodic parameter tau in [0, 2 pi).
//
// Kernels (nu = inward unit normal, Phi = (i/4) H0(lambda |y - y'|)):
//   Dirichlet  F(y, y') = 2 d/dnu_y  Phi      (traces satisfy F u = -u)
//   Neumann    F(y, y') = 2 d/dnu_y' Phi      (traces satisfy F u = +u)

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "qbt/geometry.hpp"

namespace qbt::layer {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double min_points_per_wavelength = 8.0;
inline constexpr double default_points_per_wavelength = 12.0;

/// Smooth monotone map tau -> s. Uniform in arclength on boundaries without
/// junctions; on boundaries with curvature junctions the speed ds/dtau
/// vanishes to fourth order at every junction, so that s - s_J ~ (tau - tau_J)^5.
inline constexpr double shape_nodes_per_radian = 4.0;

class BoundaryParametrization {
 public:
  explicit BoundaryParametrization(const geometry::Domain &domain, double grading_width = 0.15);

  double s_of_tau(double tau) const;
  double speed(double tau) const;
  double tau_of_s(double s) const;
  bool graded() const { return !tau_junctions_.empty(); }
  const std::vector<double> &tau_junctions() const { return tau_junctions_; }
  double max_speed() const { return max_speed_; }
  /// Nodes needed to resolve the curve at any wavelength: perimeter times
  /// largest curvature, times shape_nodes_per_radian.
  int shape_nodes() const { return shape_nodes_; }

 private:
  double weight(double tau) const;
  double integrate_weight(double t0, double t1) const;

  double perimeter_;
  double s_offset_ = 0.0;
  double delta_;
  double scale_ = 1.0;
  std::vector<double> tau_junctions_;
  std::vector<double> cumulative_;  // s - s_offset at uniform panel ends
  double max_speed_ = 0.0;
  int shape_nodes_ = 0;
};

struct NystromGrid {
  std::shared_ptr<const geometry::Domain> domain;
  std::shared_ptr<const BoundaryParametrization> param;
  int n = 0;
  double h = 0.0;
  std::vector<double> tau, s, speed, weight, curvature;
  std::vector<Vec2> position, tangent, normal;
  /// Smallest / largest node spacing (ratio < 1 on graded grids).
  double grading_ratio = 1.0;
  double max_spacing = 0.0;

  double points_per_wavelength(double lambda) const { return two_pi / lambda / max_spacing; }
};

/// Nodes tau_i = (i + 1/2) 2pi/n, n even. Corner domains are refused.
NystromGrid make_grid(const geometry::Domain &domain, int n);
NystromGrid make_grid(std::shared_ptr<const geometry::Domain> domain,
                      std::shared_ptr<const BoundaryParametrization> param, int n);

/// Smallest even n giving at least `ppw` nodes per wavelength at lambda, and
/// at least 40 nodes per junction on graded parametrisations.
int grid_size_for(const BoundaryParametrization &param, double lambda, double ppw);

struct Green0 {
  cdouble value;
  cdouble dr;
};
/// (i/4) H0(lambda r) and its r-derivative -(i lambda/4) H1(lambda r).
Green0 green0(double lambda, double r);

/// Off-diagonal kernel value at arclengths s, s'.
cdouble kernel_F(const geometry::Domain &domain, double lambda, double s, double s2,
                 BoundaryCondition bc);

struct OperatorMatrix {
  double lambda = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  Matrix entries;
  std::shared_ptr<const NystromGrid> grid;
  std::string kernel_variant;
};

/// Log-split (Kress) Nystrom matrix of F. Throws resolution below
/// `min_ppw` nodes per wavelength and unsupported_domain on corner domains.
/// When `derivative` is given it receives assemble_F_derivative from the
/// same Bessel evaluations.
OperatorMatrix assemble_F(double lambda, std::shared_ptr<const NystromGrid> grid,
                          BoundaryCondition bc, double min_ppw = min_points_per_wavelength,
                          Matrix *derivative = nullptr);

/// d/dlambda of the Nystrom matrix (trapezoidal rule on the continuous
/// derivative kernel; accurate enough for Newton steps).
Matrix assemble_F_derivative(double lambda, const NystromGrid &grid, BoundaryCondition bc);

Vector apply(const OperatorMatrix &F, const Vector &f);

/// ||(I - sign F) f||_w / ||f||_w in the discrete L2(ds) norm, sign = +1
/// (Neumann) or -1 (Dirichlet).
double fixed_point_residual(const OperatorMatrix &F, const Vector &f);

enum class LayerKind { single, double_layer };

struct LayerValue {
  cdouble value;
  /// x is closer than two node spacings to the boundary.
  bool near_boundary = false;
};

/// Single: sum_j w_j G0(x, y_j) f_j. Double: sum_j w_j dG0/dnu_{y_j} f_j.
LayerValue layer_potential_eval(double lambda, const NystromGrid &grid, const Vector &density, Vec2 x,
                                LayerKind kind);

/// Header {lambda f64, n u32, bc u8} then row-major complex128, little endian.
void dump_matrix(const OperatorMatrix &F, const std::string &path);
struct MatrixDump {
  double lambda;
  BoundaryCondition bc;
  Matrix entries;
};
MatrixDump load_matrix(const std::string &path);

/// Trigonometric interpolant of nodal values evaluated at arbitrary tau.
Vector trig_interpolate(const NystromGrid &grid, const Vector &values, const std::vector<double> &tau);

}  // namespace qbt::layer
