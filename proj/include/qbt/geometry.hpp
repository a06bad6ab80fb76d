// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bounded planar domains whose boundary is a finite chain of analytic arcs
// (circle arcs, segments, a full ellipse), oriented counter-clockwise and
// parametrised by arclength s in [0, perimeter).

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qbt/types.hpp"

namespace qbt::geometry {

struct BoundaryFrame {
  double s = 0.0;
  Vec2 position;
  Vec2 tangent;
  Vec2 inward_normal;
  /// Signed curvature, positive where the boundary bulges outward.
  double curvature = 0.0;
};

/// One-sided selector for frames at junctions.
enum class Side { none, before, after };

struct CircleArc {
  Vec2 center;
  double radius = 1.0;
  double angle0 = 0.0;
  /// +1 counter-clockwise around `center` (convex), -1 clockwise (concave).
  int orientation = 1;
};

struct Segment {
  Vec2 p0, p1;
};

class EllipseArclength;

struct EllipseBoundary {
  double a = 1.0, b = 1.0;
  std::shared_ptr<const EllipseArclength> table;
};

using ArcShape = std::variant<CircleArc, Segment, EllipseBoundary>;

struct Arc {
  ArcShape shape;
  double s_begin = 0.0;
  double length = 0.0;
};

struct Junction {
  double s = 0.0;
  /// Tangent discontinuity. Curvature-only jumps (stadium) are not corners.
  bool corner = false;
};

enum class Shape { disc, ellipse, stadium, half_disc, annular_dent };

struct DomainSpec {
  Shape shape = Shape::disc;
  std::map<std::string, double> params;
};

/// Parses "stadium:a=1,R=1" style strings.
DomainSpec parse_domain_spec(const std::string &text);

class Domain {
 public:
  Domain(DomainSpec spec, std::vector<Arc> arcs, std::vector<Junction> junctions, double area,
         bool convex);

  const DomainSpec &spec() const { return spec_; }
  Shape shape() const { return spec_.shape; }
  double param(const std::string &key) const { return spec_.params.at(key); }
  /// Canonical spec string, stable across runs (used in cache keys).
  const std::string &name() const { return name_; }
  const std::vector<Arc> &arcs() const { return arcs_; }
  const std::vector<Junction> &junctions() const { return junctions_; }
  double perimeter() const { return perimeter_; }
  double area() const { return area_; }
  bool convex() const { return convex_; }
  bool has_corners() const;
  Vec2 box_min() const { return box_min_; }
  Vec2 box_max() const { return box_max_; }

  /// Wraps s into [0, perimeter).
  double wrap(double s) const;
  /// Periodic arclength distance.
  double arclength_distance(double s1, double s2) const;
  std::size_t arc_index(double s) const;

 private:
  DomainSpec spec_;
  std::string name_;
  std::vector<Arc> arcs_;
  std::vector<Junction> junctions_;
  double perimeter_ = 0.0;
  double area_ = 0.0;
  bool convex_ = true;
  Vec2 box_min_, box_max_;
};

Domain build_domain(const DomainSpec &spec);
Domain build_domain(const std::string &spec);

/// Frame of the arc containing s. At a junction `side` picks the arc ending
/// (before) or starting (after) there; Side::none raises ambiguous_frame.
BoundaryFrame frame_at(const Domain &domain, double s, Side side = Side::none);
/// Frame on a given arc at local arclength u (no junction checks).
BoundaryFrame arc_frame(const Domain &domain, std::size_t arc, double u);

inline constexpr double junction_tolerance = 1e-10;

struct BoundaryHit {
  double s = 0.0;
  double t = 0.0;
  Vec2 point;
  std::size_t arc = 0;
  std::optional<std::size_t> junction;
  /// The hit is at a corner junction; billiard trajectories stop here.
  bool corner = false;
};

/// First boundary point along x + t v, t > 0, for x strictly inside.
BoundaryHit first_boundary_hit(const Domain &domain, Vec2 x, Vec2 v);
/// Same, for a ray leaving the boundary from `origin_arc` (the starting point
/// itself is excluded).
BoundaryHit boundary_exit(const Domain &domain, Vec2 x, Vec2 v, std::size_t origin_arc);

enum class ChordKind { interior, ghost, tangent };
const char *to_string(ChordKind kind) noexcept;

struct ChordClass {
  double s = 0.0, s2 = 0.0;
  double length = 0.0;
  ChordKind kind = ChordKind::interior;
};

/// Sampling-based: ghost when some sample of the open chord lies outside the
/// closed domain.
ChordClass classify_chord(const Domain &domain, double s, double s2);

inline constexpr double boundary_collar = 1e-12;

/// Points within `boundary_collar` of the boundary count as inside.
bool contains(const Domain &domain, Vec2 x);

struct NearestBoundary {
  double distance = 0.0;
  double s = 0.0;
};
NearestBoundary nearest_boundary(const Domain &domain, Vec2 x);

/// Area from the boundary parametrisation by Green's theorem.
double green_area(const Domain &domain);

}  // namespace qbt::geometry
