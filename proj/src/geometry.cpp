// SPDX-License-Identifier: Apache-2.0
#include "qbt/geometry.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "qbt/error.hpp"

namespace qbt::geometry {

// Cumulative arclength of (a cos t, b sin t) on fixed Gauss panels, with
// Newton inversion s -> t.
class EllipseArclength {
 public:
  EllipseArclength(double a, double b) : a_(a), b_(b) {
    cum_[0] = 0.0;
    for (int k = 0; k < panels; ++k) {
      cum_[k + 1] = cum_[k] + integrate(k * dt(), (k + 1) * dt());
    }
  }
  double perimeter() const { return cum_[panels]; }
  double speed(double t) const {
    const double st = std::sin(t), ct = std::cos(t);
    return std::sqrt(a_ * a_ * st * st + b_ * b_ * ct * ct);
  }
  double s_of_t(double t) const {
    t = t - two_pi * std::floor(t / two_pi);
    int k = std::min(panels - 1, static_cast<int>(t / dt()));
    return cum_[k] + integrate(k * dt(), t);
  }
  double t_of_s(double s) const {
    const double L = perimeter();
    s = s - L * std::floor(s / L);
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    int k = std::clamp(static_cast<int>(it - cum_.begin()) - 1, 0, panels - 1);
    double t = (k + (s - cum_[k]) / (cum_[k + 1] - cum_[k])) * dt();
    for (int it_n = 0; it_n < 8; ++it_n) {
      const double f = cum_[k] + integrate(k * dt(), t) - s;
      const double step = f / speed(t);
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return t;
  }

 private:
  static constexpr int panels = 64;
  static double dt() { return two_pi / panels; }
  double integrate(double t0, double t1) const {
    if (t1 == t0) return 0.0;
    return boost::math::quadrature::gauss<double, 20>::integrate(
        [this](double t) { return speed(t); }, t0, t1);
  }
  double a_, b_;
  std::array<double, panels + 1> cum_{};
};

namespace {

double wrap_angle(double a) { return a - two_pi * std::floor(a / two_pi); }

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

const char *shape_name(Shape s) {
  switch (s) {
    case Shape::disc: return "disc";
    case Shape::ellipse: return "ellipse";
    case Shape::stadium: return "stadium";
    case Shape::half_disc: return "half_disc";
    case Shape::annular_dent: return "annular_dent";
  }
  return "?";
}

struct ShapeInfo {
  Shape shape;
  const char *name;
  std::vector<std::pair<std::string, double>> defaults;
};

const std::vector<ShapeInfo> &shape_table() {
  static const std::vector<ShapeInfo> table = {
      {Shape::disc, "disc", {{"R", 1.0}}},
      {Shape::ellipse, "ellipse", {{"a", 2.0}, {"b", 1.0}}},
      {Shape::stadium, "stadium", {{"a", 1.0}, {"R", 1.0}}},
      {Shape::half_disc, "half_disc", {{"R", 1.0}}},
      {Shape::annular_dent, "annular_dent", {{"R", 1.0}, {"r", 0.5}, {"offset", 1.0}}},
  };
  return table;
}

// Positive roots of t^2 + 2 b t + c = 0, cancellation-free.
int quadratic_roots(double b, double c, double out[2]) {
  const double disc = b * b - c;
  if (disc < 0.0) return 0;
  const double q = -(b + std::copysign(std::sqrt(disc), b));
  if (q == 0.0) {
    out[0] = 0.0;
    return 1;
  }
  out[0] = q;
  out[1] = c / q;
  if (out[0] > out[1]) std::swap(out[0], out[1]);
  return 2;
}

Vec2 arc_position(const Arc &arc, double u) {
  return std::visit(
      [u](const auto &sh) -> Vec2 {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, CircleArc>) {
          const double th = sh.angle0 + sh.orientation * u / sh.radius;
          return sh.center + sh.radius * Vec2{std::cos(th), std::sin(th)};
        } else if constexpr (std::is_same_v<T, Segment>) {
          const Vec2 d = sh.p1 - sh.p0;
          return sh.p0 + (u / d.norm()) * d;
        } else {
          const double t = sh.table->t_of_s(u);
          return {sh.a * std::cos(t), sh.b * std::sin(t)};
        }
      },
      arc.shape);
}

// Local arclength of a point known to lie on the arc's carrier curve.
// Returns a value in [0, carrier length).
double local_u(const Arc &arc, Vec2 p) {
  return std::visit(
      [&](const auto &sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, CircleArc>) {
          const Vec2 d = p - sh.center;
          const double phi = std::atan2(d.y, d.x);
          const double delta =
              wrap_angle(sh.orientation > 0 ? phi - sh.angle0 : sh.angle0 - phi);
          return sh.radius * delta;
        } else if constexpr (std::is_same_v<T, Segment>) {
          const Vec2 d = sh.p1 - sh.p0;
          return dot(p - sh.p0, d) / d.norm();
        } else {
          const double t = std::atan2(p.y / sh.b, p.x / sh.a);
          return sh.table->s_of_t(t);
        }
      },
      arc.shape);
}

double carrier_length(const Arc &arc) {
  return std::visit(
      [&](const auto &sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, CircleArc>) {
          return two_pi * sh.radius;
        } else if constexpr (std::is_same_v<T, Segment>) {
          return std::numeric_limits<double>::infinity();
        } else {
          return sh.table->perimeter();
        }
      },
      arc.shape);
}

struct RayRoot {
  double t;
  double u;
};

// Intersections of x + t v with the arc. `tol` widens the arc's parameter
// range; with tol < 0 the range is the half-open [0, length).
int ray_arc_roots(const Arc &arc, Vec2 x, Vec2 v, double tol, RayRoot out[2]) {
  double ts[2];
  int n = 0;
  if (const auto *seg = std::get_if<Segment>(&arc.shape)) {
    const Vec2 d = seg->p1 - seg->p0;
    const double len = d.norm();
    const Vec2 dh = d * (1.0 / len);
    const double denom = cross(v, dh);
    if (std::abs(denom) < 1e-300) return 0;
    const Vec2 w = seg->p0 - x;
    const double t = cross(w, dh) / denom;
    const double u = cross(w, v) / denom;
    const bool ok = tol < 0 ? (u >= 0.0 && u < len) : (u >= -tol && u <= len + tol);
    if (!ok) return 0;
    out[0] = {t, std::clamp(u, 0.0, len)};
    return 1;
  }
  if (const auto *c = std::get_if<CircleArc>(&arc.shape)) {
    const Vec2 d = x - c->center;
    const double vv = dot(v, v);
    n = quadratic_roots(dot(v, d) / vv, (dot(d, d) - c->radius * c->radius) / vv, ts);
  } else {
    const auto &e = std::get<EllipseBoundary>(arc.shape);
    const double A = (v.x * v.x) / (e.a * e.a) + (v.y * v.y) / (e.b * e.b);
    const double B = (x.x * v.x) / (e.a * e.a) + (x.y * v.y) / (e.b * e.b);
    const double C = (x.x * x.x) / (e.a * e.a) + (x.y * x.y) / (e.b * e.b) - 1.0;
    n = quadratic_roots(B / A, C / A, ts);
  }
  int m = 0;
  const double full = carrier_length(arc);
  for (int i = 0; i < n; ++i) {
    const Vec2 p = x + ts[i] * v;
    double u = local_u(arc, p);
    bool ok;
    if (tol < 0) {
      ok = u < arc.length;
    } else if (u <= arc.length + tol) {
      ok = true;
    } else if (u >= full - tol) {
      u = 0.0;
      ok = true;
    } else {
      ok = false;
    }
    if (ok) out[m++] = {ts[i], std::min(u, arc.length)};
  }
  return m;
}

Domain make(const DomainSpec &spec, std::vector<Arc> arcs, std::vector<Junction> junctions,
            double area, bool convex) {
  double s = 0.0;
  for (auto &a : arcs) {
    a.s_begin = s;
    s += a.length;
  }
  return Domain(spec, std::move(arcs), std::move(junctions), area, convex);
}

}  // namespace

DomainSpec parse_domain_spec(const std::string &text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const ShapeInfo *info = nullptr;
  for (const auto &s : shape_table()) {
    if (name == s.name) info = &s;
  }
  if (!info) fail(ErrorCode::invalid_spec, "unknown domain shape '" + name + "'");
  DomainSpec spec;
  spec.shape = info->shape;
  for (const auto &[k, v] : info->defaults) spec.params[k] = v;
  if (colon == std::string::npos) return spec;
  std::string rest = text.substr(colon + 1);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    std::size_t end = rest.find(',', pos);
    if (end == std::string::npos) end = rest.size();
    const std::string item = rest.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorCode::invalid_spec, "expected key=value in '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (!spec.params.count(key)) {
      fail(ErrorCode::invalid_spec, "unknown parameter '" + key + "' for " + name);
    }
    double value = 0.0;
    const char *b = item.data() + eq + 1;
    const char *e = item.data() + item.size();
    auto r = std::from_chars(b, e, value);
    if (r.ec != std::errc() || r.ptr != e) {
      fail(ErrorCode::invalid_spec, "bad number in '" + item + "'");
    }
    spec.params[key] = value;
  }
  return spec;
}

Domain::Domain(DomainSpec spec, std::vector<Arc> arcs, std::vector<Junction> junctions,
               double area, bool convex)
    : spec_(std::move(spec)),
      arcs_(std::move(arcs)),
      junctions_(std::move(junctions)),
      area_(area),
      convex_(convex) {
  name_ = shape_name(spec_.shape);
  char sep = ':';
  for (const auto &[k, v] : spec_.params) {
    name_ += sep + k + "=" + format_double(v);
    sep = ',';
  }
  perimeter_ = 0.0;
  for (const auto &a : arcs_) perimeter_ += a.length;
  box_min_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  box_max_ = -1.0 * box_min_;
  for (std::size_t i = 0; i < arcs_.size(); ++i) {
    const int n = 256;
    for (int k = 0; k <= n; ++k) {
      const Vec2 p = arc_position(arcs_[i], arcs_[i].length * k / n);
      box_min_ = {std::min(box_min_.x, p.x), std::min(box_min_.y, p.y)};
      box_max_ = {std::max(box_max_.x, p.x), std::max(box_max_.y, p.y)};
    }
  }
  // Sampled extremes can sit inside the true box by O(h^2); pad generously.
  const double pad = 1e-3 * perimeter_;
  box_min_ = box_min_ - Vec2{pad, pad};
  box_max_ = box_max_ + Vec2{pad, pad};
}

bool Domain::has_corners() const {
  return std::any_of(junctions_.begin(), junctions_.end(), [](const Junction &j) { return j.corner; });
}

double Domain::wrap(double s) const {
  double w = s - perimeter_ * std::floor(s / perimeter_);
  if (w >= perimeter_) w = 0.0;
  return w;
}

double Domain::arclength_distance(double s1, double s2) const {
  const double d = wrap(s1 - s2);
  return std::min(d, perimeter_ - d);
}

std::size_t Domain::arc_index(double s) const {
  s = wrap(s);
  auto it = std::upper_bound(arcs_.begin(), arcs_.end(), s,
                             [](double v, const Arc &a) { return v < a.s_begin; });
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - arcs_.begin()) - 1));
}

Domain build_domain(const std::string &spec) { return build_domain(parse_domain_spec(spec)); }

Domain build_domain(const DomainSpec &spec) {
  for (const auto &[k, v] : spec.params) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::invalid_spec, "parameter " + k + " must be positive");
    }
  }
  const auto &p = spec.params;
  switch (spec.shape) {
    case Shape::disc: {
      const double R = p.at("R");
      return make(spec, {Arc{CircleArc{{0, 0}, R, 0.0, 1}, 0.0, two_pi * R}}, {}, pi * R * R, true);
    }
    case Shape::ellipse: {
      const double a = p.at("a"), b = p.at("b");
      auto table = std::make_shared<const EllipseArclength>(a, b);
      const double L = table->perimeter();
      return make(spec, {Arc{EllipseBoundary{a, b, std::move(table)}, 0.0, L}}, {}, pi * a * b, true);
    }
    case Shape::stadium: {
      const double a = p.at("a"), R = p.at("R");
      std::vector<Arc> arcs = {
          {CircleArc{{a, 0}, R, 0.0, 1}, 0.0, 0.5 * pi * R},
          {Segment{{a, R}, {-a, R}}, 0.0, 2 * a},
          {CircleArc{{-a, 0}, R, 0.5 * pi, 1}, 0.0, pi * R},
          {Segment{{-a, -R}, {a, -R}}, 0.0, 2 * a},
          {CircleArc{{a, 0}, R, -0.5 * pi, 1}, 0.0, 0.5 * pi * R},
      };
      std::vector<Junction> js = {{0.5 * pi * R, false},
                                  {0.5 * pi * R + 2 * a, false},
                                  {1.5 * pi * R + 2 * a, false},
                                  {1.5 * pi * R + 4 * a, false}};
      return make(spec, std::move(arcs), std::move(js), pi * R * R + 4 * a * R, true);
    }
    case Shape::half_disc: {
      const double R = p.at("R");
      std::vector<Arc> arcs = {{CircleArc{{0, 0}, R, 0.0, 1}, 0.0, pi * R},
                               {Segment{{-R, 0}, {R, 0}}, 0.0, 2 * R}};
      return make(spec, std::move(arcs), {{0.0, true}, {pi * R, true}}, 0.5 * pi * R * R, true);
    }
    case Shape::annular_dent: {
      const double R = p.at("R"), r = p.at("r"), d = p.at("offset");
      if (!(d > R - r && d < R + r) || !(r < R)) {
        fail(ErrorCode::invalid_spec, "annular_dent needs r < R and R - r < offset < R + r");
      }
      const double xs = (R * R - r * r + d * d) / (2 * d);
      const double ys = std::sqrt(R * R - xs * xs);
      const double phi = std::atan2(ys, xs);
      const double psi = std::atan2(ys, xs - d);
      std::vector<Arc> arcs = {{CircleArc{{0, 0}, R, phi, 1}, 0.0, R * (two_pi - 2 * phi)},
                               {CircleArc{{d, 0}, r, -psi, -1}, 0.0, r * (two_pi - 2 * psi)}};
      const double d1 = xs, d2 = d - xs;
      const double lens = R * R * std::acos(d1 / R) - d1 * ys + r * r * std::acos(d2 / r) - d2 * ys;
      const double s1 = arcs[0].length;
      return make(spec, std::move(arcs), {{0.0, true}, {s1, true}}, pi * R * R - lens, false);
    }
  }
  fail(ErrorCode::invalid_spec, "unhandled shape");
}

BoundaryFrame arc_frame(const Domain &domain, std::size_t arc_idx, double u) {
  const Arc &arc = domain.arcs().at(arc_idx);
  BoundaryFrame f;
  f.s = domain.wrap(arc.s_begin + u);
  std::visit(
      [&](const auto &sh) {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, CircleArc>) {
          const double th = sh.angle0 + sh.orientation * u / sh.radius;
          const Vec2 e{std::cos(th), std::sin(th)};
          f.position = sh.center + sh.radius * e;
          f.tangent = static_cast<double>(sh.orientation) * Vec2{-e.y, e.x};
          f.curvature = sh.orientation / sh.radius;
        } else if constexpr (std::is_same_v<T, Segment>) {
          const Vec2 d = sh.p1 - sh.p0;
          const double len = d.norm();
          f.tangent = d * (1.0 / len);
          f.position = sh.p0 + u * f.tangent;
          f.curvature = 0.0;
        } else {
          const double t = sh.table->t_of_s(u);
          const double sp = sh.table->speed(t);
          f.position = {sh.a * std::cos(t), sh.b * std::sin(t)};
          f.tangent = Vec2{-sh.a * std::sin(t), sh.b * std::cos(t)} * (1.0 / sp);
          f.curvature = sh.a * sh.b / (sp * sp * sp);
        }
      },
      arc.shape);
  f.inward_normal = perp(f.tangent);
  return f;
}

BoundaryFrame frame_at(const Domain &domain, double s, Side side) {
  if (!std::isfinite(s)) fail(ErrorCode::invalid_argument, "non-finite arclength");
  s = domain.wrap(s);
  const double tol = 1e-13 * std::max(1.0, domain.perimeter());
  for (const auto &j : domain.junctions()) {
    if (domain.arclength_distance(s, j.s) > tol) continue;
    if (side == Side::none) fail(ErrorCode::ambiguous_frame, "frame requested at a junction");
    const std::size_t after = domain.arc_index(j.s);
    if (side == Side::after) return arc_frame(domain, after, 0.0);
    const std::size_t before = (after + domain.arcs().size() - 1) % domain.arcs().size();
    return arc_frame(domain, before, domain.arcs()[before].length);
  }
  const std::size_t i = domain.arc_index(s);
  const Arc &arc = domain.arcs()[i];
  return arc_frame(domain, i, std::clamp(s - arc.s_begin, 0.0, arc.length));
}

namespace {

BoundaryHit trace_ray(const Domain &domain, Vec2 x, Vec2 v, std::optional<std::size_t> origin) {
  const double scale = std::max(1.0, domain.perimeter());
  const double t_eps = 1e-11 * scale;
  const double u_tol = 1e-12 * scale;
  BoundaryHit best;
  best.t = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < domain.arcs().size(); ++i) {
    const Arc &arc = domain.arcs()[i];
    if (origin && *origin == i && std::holds_alternative<Segment>(arc.shape)) continue;
    RayRoot roots[2];
    const int n = ray_arc_roots(arc, x, v, u_tol, roots);
    int drop = -1;
    if (origin && *origin == i && n > 0) {
      drop = 0;
      for (int k = 1; k < n; ++k) {
        if (std::abs(roots[k].t) < std::abs(roots[drop].t)) drop = k;
      }
    }
    for (int k = 0; k < n; ++k) {
      if (k == drop || roots[k].t <= t_eps) continue;
      if (roots[k].t < best.t) {
        best.t = roots[k].t;
        best.arc = i;
        best.s = roots[k].u;
        found = true;
      }
    }
  }
  if (!found) fail(ErrorCode::numerical, "ray does not meet the boundary");
  const Arc &arc = domain.arcs()[best.arc];
  const double u = best.s;
  best.point = arc_position(arc, u);
  best.s = domain.wrap(arc.s_begin + u);
  const double jt = junction_tolerance * scale;
  for (std::size_t k = 0; k < domain.junctions().size(); ++k) {
    const Junction &j = domain.junctions()[k];
    if (domain.arclength_distance(best.s, j.s) <= jt) {
      best.junction = k;
      best.corner = j.corner;
    }
  }
  // Keep the local parameter on the hit arc even when wrapping moved s.
  best.s = domain.wrap(arc.s_begin + u);
  return best;
}

}  // namespace

BoundaryHit first_boundary_hit(const Domain &domain, Vec2 x, Vec2 v) {
  const double nv = v.norm();
  if (!(std::abs(nv - 1.0) < 1e-9)) fail(ErrorCode::invalid_argument, "direction must be a unit vector");
  return trace_ray(domain, x, v, std::nullopt);
}

BoundaryHit boundary_exit(const Domain &domain, Vec2 x, Vec2 v, std::size_t origin_arc) {
  return trace_ray(domain, x, v, origin_arc);
}

const char *to_string(ChordKind kind) noexcept {
  switch (kind) {
    case ChordKind::interior: return "interior";
    case ChordKind::ghost: return "ghost";
    case ChordKind::tangent: return "tangent";
  }
  return "?";
}

NearestBoundary nearest_boundary(const Domain &domain, Vec2 x) {
  NearestBoundary best{std::numeric_limits<double>::infinity(), 0.0};
  auto consider = [&](double dist, double s) {
    if (dist < best.distance) best = {dist, domain.wrap(s)};
  };
  for (const Arc &arc : domain.arcs()) {
    const Vec2 p0 = arc_position(arc, 0.0);
    const Vec2 p1 = arc_position(arc, arc.length);
    consider((x - p0).norm(), arc.s_begin);
    consider((x - p1).norm(), arc.s_begin + arc.length);
    if (const auto *c = std::get_if<CircleArc>(&arc.shape)) {
      const Vec2 d = x - c->center;
      const double r = d.norm();
      if (r == 0.0) {
        consider(c->radius, arc.s_begin);
        continue;
      }
      const double u = local_u(arc, c->center + (c->radius / r) * d);
      if (u <= arc.length) consider(std::abs(r - c->radius), arc.s_begin + u);
    } else if (const auto *seg = std::get_if<Segment>(&arc.shape)) {
      const Vec2 d = seg->p1 - seg->p0;
      const double u = dot(x - seg->p0, d) / d.norm();
      if (u >= 0.0 && u <= arc.length) {
        consider(std::abs(cross(d, x - seg->p0)) / d.norm(), arc.s_begin + u);
      }
    } else {
      const auto &e = std::get<EllipseBoundary>(arc.shape);
      double tb = 0.0, db = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 64; ++k) {
        const double t = two_pi * k / 64;
        const double dd = (Vec2{e.a * std::cos(t), e.b * std::sin(t)} - x).norm();
        if (dd < db) db = dd, tb = t;
      }
      double t = tb;
      for (int it = 0; it < 30; ++it) {
        const double c = std::cos(t), s = std::sin(t);
        const Vec2 P{e.a * c, e.b * s}, dP{-e.a * s, e.b * c}, ddP{-e.a * c, -e.b * s};
        const double f = dot(P - x, dP);
        const double df = dot(dP, dP) + dot(P - x, ddP);
        if (df <= 0.0) break;
        const double step = f / df;
        t -= std::clamp(step, -0.2, 0.2);
        if (std::abs(step) < 1e-15) break;
      }
      const Vec2 P{e.a * std::cos(t), e.b * std::sin(t)};
      consider((P - x).norm(), e.table->s_of_t(t));
    }
  }
  return best;
}

bool contains(const Domain &domain, Vec2 x) {
  if (!std::isfinite(x.x) || !std::isfinite(x.y)) return false;
  const Vec2 lo = domain.box_min(), hi = domain.box_max();
  if (x.x < lo.x || x.y < lo.y || x.x > hi.x || x.y > hi.y) return false;
  if (nearest_boundary(domain, x).distance <= boundary_collar) return true;
  const Vec2 v{std::cos(0.7853981 * 1.1235), std::sin(0.7853981 * 1.1235)};
  int crossings = 0;
  for (const Arc &arc : domain.arcs()) {
    RayRoot roots[2];
    const int n = ray_arc_roots(arc, x, v, -1.0, roots);
    for (int k = 0; k < n; ++k) {
      if (roots[k].t > 0.0) ++crossings;
    }
  }
  return crossings % 2 == 1;
}

ChordClass classify_chord(const Domain &domain, double s, double s2) {
  ChordClass c;
  c.s = domain.wrap(s);
  c.s2 = domain.wrap(s2);
  const Vec2 p = frame_at(domain, c.s, Side::after).position;
  const Vec2 q = frame_at(domain, c.s2, Side::after).position;
  c.length = (q - p).norm();
  if (c.length <= 1e-8 * domain.perimeter()) {
    c.kind = ChordKind::tangent;
    return c;
  }
  if (domain.convex()) return c;
  // Chebyshev-clustered interior samples plus a uniform layer.
  constexpr int n_cheb = 64, n_uni = 64;
  for (int k = 1; k <= n_cheb + n_uni; ++k) {
    double f;
    if (k <= n_cheb) {
      f = 0.5 - 0.5 * std::cos(pi * k / (n_cheb + 1));
    } else {
      f = (k - n_cheb - 0.5) / n_uni;
    }
    if (!contains(domain, p + f * (q - p))) {
      c.kind = ChordKind::ghost;
      return c;
    }
  }
  return c;
}

double green_area(const Domain &domain) {
  double area = 0.0;
  for (std::size_t i = 0; i < domain.arcs().size(); ++i) {
    const Arc &arc = domain.arcs()[i];
    const int panels = 16;
    const double h = arc.length / panels;
    for (int k = 0; k < panels; ++k) {
      area += boost::math::quadrature::gauss<double, 30>::integrate(
          [&](double u) {
            const BoundaryFrame f = arc_frame(domain, i, u);
            return 0.5 * cross(f.position, f.tangent);
          },
          k * h, (k + 1) * h);
    }
  }
  return area;
}

}  // namespace qbt::geometry
