// SPDX-License-Identifier: Apache-2.0
#include "qbt/spectrum.hpp"

#include <algorithm>
#include <boost/random/sobol.hpp>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "qbt/error.hpp"
#include "qbt/parallel.hpp"
#include "qbt/specfun.hpp"

namespace qbt::spectrum {

namespace {

double bc_sign(BoundaryCondition bc) { return bc == BoundaryCondition::dirichlet ? -1.0 : 1.0; }

void log_line(const SolverOptions &o, const std::string &msg) {
  if (o.log) o.log(msg);
}

Matrix orthonormal_columns(const Matrix &M) {
  Eigen::HouseholderQR<Matrix> qr(M);
  return qr.householderQ() * Matrix::Identity(M.rows(), M.cols());
}

std::vector<double> sqrt_weights(const layer::NystromGrid &g) {
  std::vector<double> r(g.n);
  for (int i = 0; i < g.n; ++i) r[i] = std::sqrt(g.weight[i]);
  return r;
}

// W^(1/2) M W^(-1/2) in place.
void weight_similarity(Matrix &M, const std::vector<double> &rw) {
  const int n = static_cast<int>(rw.size());
  for (int j = 0; j < n; ++j) {
    const double inv = 1.0 / rw[j];
    for (int i = 0; i < n; ++i) M(i, j) *= rw[i] * inv;
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Spectral tau-derivative of nodal values on tau_i = (i + 1/2) h.
Vector tau_derivative(const Vector &f) {
  const int n = static_cast<int>(f.size());
  std::vector<cdouble> x(f.data(), f.data() + n);
  auto F = detail::dft(x, true);
  for (int k = 0; k < n; ++k) {
    const int kk = k <= n / 2 ? k : k - n;
    F[k] *= (2 * kk == n) ? cdouble(0.0) : cdouble(0.0, double(kk) / n);
  }
  const auto d = detail::dft(F, false);
  return Eigen::Map<const Vector>(d.data(), n);
}

// Values of the trigonometric interpolant on a grid of twice the size
// (nodes (i + 1/2) h / 2), by zero padding.
Vector upsample2(const Vector &f) {
  const int n = static_cast<int>(f.size());
  std::vector<cdouble> x(f.data(), f.data() + n);
  const auto F = detail::dft(x, true);
  const int half = n / 2;
  const double h = two_pi / n;
  // coefficients c_k of f(tau) = sum c_k e^{ik tau}
  std::vector<cdouble> G(2 * n, 0.0);
  const double h2 = h / 2;
  for (int k = -half; k <= half; ++k) {
    cdouble c = std::polar(1.0 / n, -k * 0.5 * h) * F[(k + n) % n];
    if (std::abs(k) == half) c *= 0.5;
    // new nodes tau'_j = (j + 1/2) h2: g_j = sum c_k e^{ik h2/2} e^{i k j h2}
    G[(k + 2 * n) % (2 * n)] += c * std::polar(1.0, k * 0.5 * h2);
  }
  const auto g = detail::dft(G, false);
  return Eigen::Map<const Vector>(g.data(), 2 * n);
}

void fix_phase(Vector &f, cdouble *factor_out = nullptr) {
  Eigen::Index imax = 0;
  f.cwiseAbs().maxCoeff(&imax);
  const cdouble v = f[imax];
  const cdouble factor = std::abs(v) > 0.0 ? std::conj(v) / std::abs(v) : cdouble(1.0);
  f *= factor;
  f[imax] = std::abs(f[imax]);
  if (factor_out) *factor_out = factor;
}

std::vector<Vec2> interior_probes(const geometry::Domain &domain, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vec2 lo = domain.box_min(), hi = domain.box_max();
  const double scale = std::min(hi.x - lo.x, hi.y - lo.y);
  std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y);
  std::vector<Vec2> out;
  for (int tries = 0; tries < 100000 && static_cast<int>(out.size()) < count; ++tries) {
    const Vec2 x{ux(rng), uy(rng)};
    if (!geometry::contains(domain, x)) continue;
    if (geometry::nearest_boundary(domain, x).distance < 0.1 * scale) continue;
    out.push_back(x);
  }
  return out;
}

}  // namespace

double weyl_count(const geometry::Domain &domain, BoundaryCondition bc, double lambda) {
  return domain.area() / (4 * pi) * lambda * lambda + bc_sign(bc) * domain.perimeter() / (4 * pi) * lambda;
}

double weyl_spacing(const geometry::Domain &domain, BoundaryCondition bc, double lambda) {
  const double d = domain.area() / (2 * pi) * lambda + bc_sign(bc) * domain.perimeter() / (4 * pi);
  // the two-term derivative can vanish at small lambda; fall back to the area term
  return 1.0 / std::max(d, domain.area() / (4 * pi) * lambda);
}

layer::NystromGrid make_sample_grid(const geometry::Domain &domain, int n) {
  if (n < 8 || n % 2 != 0) fail(ErrorCode::invalid_argument, "grid size must be even and >= 8");
  layer::NystromGrid g;
  g.domain = std::make_shared<const geometry::Domain>(domain);
  g.n = n;
  g.h = two_pi / n;
  const double L = domain.perimeter();
  g.tau.resize(n);
  g.s.resize(n);
  g.speed.assign(n, L / two_pi);
  g.weight.assign(n, L / n);
  g.curvature.resize(n);
  g.position.resize(n);
  g.tangent.resize(n);
  g.normal.resize(n);
  for (int i = 0; i < n; ++i) {
    g.tau[i] = (i + 0.5) * g.h;
    g.s[i] = (i + 0.5) * L / n;
    const auto f = geometry::frame_at(domain, g.s[i], geometry::Side::after);
    g.position[i] = f.position;
    g.tangent[i] = f.tangent;
    g.normal[i] = f.inward_normal;
    g.curvature[i] = f.curvature;
  }
  g.max_spacing = L / n;
  return g;
}

double grid_tau(const layer::NystromGrid &grid, double s) {
  if (grid.param) return grid.param->tau_of_s(s);
  return two_pi * grid.domain->wrap(s) / grid.domain->perimeter();
}

cdouble trace_at(const EigenTrace &t, double s) {
  if (t.exact) return t.exact(s);
  if (!t.grid) fail(ErrorCode::invalid_argument, "trace without grid");
  return layer::trig_interpolate(*t.grid, t.trace, {grid_tau(*t.grid, s)})[0];
}

Matrix weighted_system(const layer::OperatorMatrix &F) {
  Matrix B = -bc_sign(F.bc) * F.entries;
  B.diagonal().array() += 1.0;
  weight_similarity(B, sqrt_weights(*F.grid));
  return B;
}

std::vector<SingularTriple> smallest_singular(const Matrix &B, int k, int iterations, std::uint64_t seed,
                                              const Matrix *start) {
  const Eigen::Index n = B.rows();
  if (B.cols() != n || n == 0) fail(ErrorCode::invalid_argument, "smallest_singular needs a square matrix");
  k = std::clamp<int>(k, 1, static_cast<int>(n));
  Eigen::PartialPivLU<Matrix> lu(B);
  Matrix V(n, k);
  if (start && start->rows() == n && start->cols() >= k) {
    V = start->leftCols(k);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < n; ++i) V(i, j) = cdouble(nd(rng), nd(rng));
  }
  V = orthonormal_columns(V);
  for (int it = 0; it < iterations; ++it) {
    const Matrix P = orthonormal_columns(lu.solve(V));
    V = orthonormal_columns(lu.adjoint().solve(P));
  }
  const Matrix Y = lu.solve(V);
  Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &s = svd.singularValues();
  std::vector<SingularTriple> out;
  for (int j = 0; j < k; ++j) {
    SingularTriple t;
    t.sigma = s[j] > 0.0 ? 1.0 / s[j] : INFINITY;
    t.v = svd.matrixU().col(j);
    t.u = V * svd.matrixV().col(j);
    out.push_back(std::move(t));
  }
  return out;
}

ScanResult scan_spectrum(const geometry::Domain &domain, BoundaryCondition bc, double lmin, double lmax,
                         const SolverOptions &opts) {
  if (!(lmin > 0.0) || !(lmax > lmin)) fail(ErrorCode::invalid_argument, "need 0 < lmin < lmax");
  if (opts.scan_ppw < layer::min_points_per_wavelength) {
    fail(ErrorCode::resolution, "scan needs at least 8 points per wavelength");
  }
  auto dom = std::make_shared<const geometry::Domain>(domain);
  auto param = std::make_shared<const layer::BoundaryParametrization>(*dom);
  ScanResult res;
  const double auto_dl = std::min(0.05, weyl_spacing(domain, bc, lmax) / 4.0);
  res.dlambda = opts.dlambda > 0.0 ? opts.dlambda : auto_dl;
  if (opts.dlambda > auto_dl) {
    res.under_resolved = true;
    // Poisson level statistics: chance that a neighbour lies within one step
    const double expected = weyl_count(domain, bc, lmax) - weyl_count(domain, bc, lmin);
    res.predicted_misses = std::max(0.0, expected) * (1.0 - std::exp(-opts.dlambda / (4.0 * auto_dl)));
    std::ostringstream os;
    os << "scan step " << opts.dlambda << " exceeds a quarter of the mean level spacing (" << auto_dl
       << "); about " << res.predicted_misses << " eigenvalues may be missed";
    res.warnings.push_back(os.str());
  }
  double lam = lmin;
  std::shared_ptr<const layer::NystromGrid> grid;
  while (lam <= lmax + 1e-12) {
    const double whi = std::min(lmax, lam + opts.window);
    const int n = layer::grid_size_for(*param, whi, opts.scan_ppw);
    if (!grid || grid->n != n) grid = std::make_shared<const layer::NystromGrid>(layer::make_grid(dom, param, n));
    const double dl = opts.dlambda > 0.0 ? opts.dlambda : std::min(0.05, weyl_spacing(domain, bc, whi) / 4.0);
    for (; lam <= whi + 1e-12; lam += dl) {
      const auto F = layer::assemble_F(lam, grid, bc, opts.scan_ppw * (1.0 - 1e-9));
      // fresh random block each step: warm starts can be exactly orthogonal
      // to the next null vector on symmetric domains
      const auto tr = smallest_singular(weighted_system(F), 4, 3, opts.seed, nullptr);
      res.lambdas.push_back(lam);
      res.sigmas.push_back(tr[0].sigma);
      res.sigmas2.push_back(tr[1].sigma);
      res.sigmas3.push_back(tr[2].sigma);
    }
    log_line(opts, "scan window up to " + std::to_string(whi) + " (n=" + std::to_string(n) + ")");
    if (whi >= lmax) break;
  }
  const std::size_t K = res.lambdas.size();
  // threshold against a running median, robust to the slow drift of the sigma level
  constexpr std::size_t half_width = 25;
  for (std::size_t k = 1; k + 1 < K; ++k) {
    const double s = res.sigmas[k];
    const std::size_t a = k > half_width ? k - half_width : 0;
    const std::size_t b = std::min(K, k + half_width + 1);
    const double level = median(std::vector<double>(res.sigmas.begin() + a, res.sigmas.begin() + b));
    // Closely spaced roots leave a monotone shoulder instead of a dip, so
    // every point below the follow threshold gets a bracket too.
    const bool dip = s <= res.sigmas[k - 1] && s < res.sigmas[k + 1];
    const bool shoulder = s < follow_fraction * level;
    if (!dip && !shoulder) continue;
    if (dip && !shoulder && opts.dip_factor > 0.0 && s >= opts.dip_factor * level) continue;
    Bracket br;
    br.center = res.lambdas[k];
    br.lo = res.lambdas[k - 1];
    br.hi = res.lambdas[k + 1];
    br.sigma = s;
    br.threshold = follow_fraction * level;
    res.brackets.push_back(br);
  }
  return res;
}

namespace {

struct Evaluation {
  double lambda = 0.0;
  layer::OperatorMatrix F;
  std::vector<SingularTriple> triples;
  std::vector<double> slopes;
};

class Refiner {
 public:
  Refiner(std::shared_ptr<const layer::NystromGrid> grid, BoundaryCondition bc, const SolverOptions &opts)
      : grid_(std::move(grid)), bc_(bc), opts_(opts), rw_(sqrt_weights(*grid_)) {}

  Evaluation eval(double lambda, const Matrix *start, int iterations) const {
    Evaluation e;
    e.lambda = lambda;
    Matrix dF;
    e.F = layer::assemble_F(lambda, grid_, bc_, layer::min_points_per_wavelength, &dF);
    const Matrix B = weighted_system(e.F);
    dF *= -bc_sign(bc_);
    weight_similarity(dF, rw_);
    e.triples = smallest_singular(B, opts_.block, iterations, opts_.seed, start);
    for (const auto &t : e.triples) e.slopes.push_back((t.u.adjoint() * dF * t.v)(0, 0).real());
    return e;
  }

  static Matrix basis(const Evaluation &e) {
    Matrix V(e.triples[0].v.size(), static_cast<Eigen::Index>(e.triples.size()));
    for (std::size_t j = 0; j < e.triples.size(); ++j) V.col(static_cast<Eigen::Index>(j)) = e.triples[j].v;
    return V;
  }

  static std::size_t track(const Evaluation &e, const Vector &prev) {
    std::size_t best = 0;
    double overlap = -1.0;
    for (std::size_t j = 0; j < e.triples.size(); ++j) {
      const double o = std::abs(prev.dot(e.triples[j].v));
      if (o > overlap) overlap = o, best = j;
    }
    return best;
  }

  struct Branch {
    double lambda = 0.0;
    double sigma = 0.0;
    std::shared_ptr<Evaluation> at;
    std::size_t index = 0;
  };

  Branch follow(const Evaluation &e0, std::size_t j0, double lo, double hi) const {
    const double width = std::max(hi - lo, 1e-9 * e0.lambda);
    const double lo_lim = lo - width, hi_lim = hi + width;
    double la = e0.lambda;
    double sa = e0.triples[j0].sigma, pa = e0.slopes[j0];
    double ga = sa * pa;
    Vector v = e0.triples[j0].v;
    Matrix start = basis(e0);
    double lb = std::abs(pa) > 0.0 ? la - sa / pa : la + 1e-6 * width;
    Branch best{la, sa, std::make_shared<Evaluation>(e0), j0};
    for (int it = 0; it < 14; ++it) {
      if (!(lb > lo_lim && lb < hi_lim) || !std::isfinite(lb)) break;
      auto e = std::make_shared<Evaluation>(eval(lb, &start, 2));
      const std::size_t j = track(*e, v);
      const double sb = e->triples[j].sigma, pb = e->slopes[j];
      const double gb = sb * pb;
      if (sb < best.sigma) best = {lb, sb, e, j};
      v = e->triples[j].v;
      start = basis(*e);
      double lc;
      if (gb != ga) {
        lc = lb - gb * (lb - la) / (gb - ga);
      } else if (pb != 0.0) {
        lc = lb - sb / pb;
      } else {
        break;
      }
      la = lb, ga = gb;
      const double step = std::abs(lc - lb);
      lb = lc;
      if (step < 1e-13 * lb) break;
    }
    return best;
  }

  // Golden-section fallback on the smallest singular value.
  Branch golden(double lo, double hi) const {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    auto fc = std::make_shared<Evaluation>(eval(c, nullptr, 3));
    auto fd = std::make_shared<Evaluation>(eval(d, nullptr, 3));
    for (int it = 0; it < 60 && (b - a) > 1e-12 * b; ++it) {
      if (fc->triples[0].sigma < fd->triples[0].sigma) {
        b = d, d = c, fd = fc;
        c = b - r * (b - a);
        fc = std::make_shared<Evaluation>(eval(c, nullptr, 3));
      } else {
        a = c, c = d, fc = fd;
        d = a + r * (b - a);
        fd = std::make_shared<Evaluation>(eval(d, nullptr, 3));
      }
    }
    const auto &best = fc->triples[0].sigma < fd->triples[0].sigma ? fc : fd;
    return {best->lambda, best->triples[0].sigma, best, 0};
  }

  const layer::NystromGrid &grid() const { return *grid_; }

 private:
  std::shared_ptr<const layer::NystromGrid> grid_;
  BoundaryCondition bc_;
  SolverOptions opts_;
  std::vector<double> rw_;
};

struct RefinedRoot {
  Root root;
  std::shared_ptr<Evaluation> at;
  std::size_t index = 0;
};

// Unit boundary-weighted null vector of a refined root, sampled on grid g.
Vector weighted_on(const RefinedRoot &r, const layer::NystromGrid &g) {
  const Vector &v = r.at->triples[r.index].v;
  const auto &src = *r.at->F.grid;
  if (&src == &g) return v;
  const auto rs = sqrt_weights(src);
  const auto rg = sqrt_weights(g);
  Vector u = v;
  for (int i = 0; i < u.size(); ++i) u[i] /= rs[i];
  Vector w = layer::trig_interpolate(src, u, g.tau);
  for (int i = 0; i < w.size(); ++i) w[i] *= rg[i];
  return w / w.norm();
}

// Close roots are one root only when their null vectors agree.
bool same_root(const RefinedRoot &a, const RefinedRoot &b, double rtol) {
  if (std::abs(a.root.lambda - b.root.lambda) > rtol * a.root.lambda) return false;
  const auto &g = *a.at->F.grid;
  return std::abs(a.at->triples[a.index].v.dot(weighted_on(b, g))) > 0.5;
}

void add_root(std::vector<RefinedRoot> &roots, RefinedRoot r, double rtol) {
  for (auto &o : roots) {
    if (same_root(o, r, rtol)) {
      if (r.root.sigma < o.root.sigma) o = std::move(r);
      return;
    }
  }
  roots.push_back(std::move(r));
}

std::vector<RefinedRoot> refine_with(const Refiner &ref, const Bracket &br, const SolverOptions &opts) {
  const Evaluation e0 = ref.eval(br.center, nullptr, 4);
  const double cut = std::max(br.threshold, e0.triples[0].sigma);
  std::vector<RefinedRoot> roots;
  const double width = br.hi - br.lo;
  for (std::size_t j = 0; j < e0.triples.size(); ++j) {
    // follow branches that are small or predicted to vanish inside the bracket
    const double reach = std::abs(e0.triples[j].sigma / e0.slopes[j]);
    if (e0.triples[j].sigma > cut && !(reach <= 1.5 * width)) continue;
    auto b = ref.follow(e0, j, br.lo, br.hi);
    if (j == 0 && b.sigma > opts.accept_sigma && b.sigma < 1e-3) {
      auto g = ref.golden(br.lo, br.hi);
      if (g.sigma < b.sigma) b = g;
    }
    RefinedRoot rr;
    rr.root.lambda = b.lambda;
    rr.root.sigma = b.sigma;
    rr.root.accepted = b.sigma <= opts.accept_sigma;
    if (!rr.root.accepted) {
      std::ostringstream os;
      os << "sigma_min " << b.sigma << " above acceptance " << opts.accept_sigma;
      rr.root.reason = os.str();
    }
    rr.at = b.at;
    rr.index = b.index;
    add_root(roots, std::move(rr), opts.merge_rtol);
  }
  return roots;
}

}  // namespace

std::vector<Root> refine_eigenvalue(const geometry::Domain &domain, BoundaryCondition bc, const Bracket &bracket,
                                    const SolverOptions &opts) {
  auto dom = std::make_shared<const geometry::Domain>(domain);
  auto param = std::make_shared<const layer::BoundaryParametrization>(*dom);
  const int n = layer::grid_size_for(*param, std::max(bracket.hi, bracket.center), opts.ppw);
  auto grid = std::make_shared<const layer::NystromGrid>(layer::make_grid(dom, param, n));
  Refiner ref(grid, bc, opts);
  std::vector<Root> out;
  for (auto &r : refine_with(ref, bracket, opts)) out.push_back(r.root);
  return out;
}

TraceCluster extract_traces(const layer::OperatorMatrix &F, double accept_sigma, double cluster_floor,
                            int max_dim) {
  const Matrix B = weighted_system(F);
  const auto tr = smallest_singular(B, max_dim, 6, 1, nullptr);
  if (tr[0].sigma > accept_sigma) {
    std::ostringstream os;
    os << "no null vector: sigma_min " << tr[0].sigma << " at lambda " << F.lambda;
    fail(ErrorCode::precondition, os.str());
  }
  TraceCluster c;
  c.lambda = F.lambda;
  const double cut = std::max(10.0 * tr[0].sigma, cluster_floor);
  const auto rw = sqrt_weights(*F.grid);
  for (const auto &t : tr) {
    if (t.sigma > cut) break;
    Vector f = t.v;
    for (int i = 0; i < f.size(); ++i) f[i] /= rw[i];
    c.sigmas.push_back(t.sigma);
    c.traces.push_back(std::move(f));
  }
  c.flagged = static_cast<int>(c.traces.size()) == max_dim || c.traces.size() > 4;
  return c;
}

cdouble reconstruct_interior(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                             BoundaryCondition bc, Vec2 x) {
  if (bc == BoundaryCondition::dirichlet) {
    return -layer::layer_potential_eval(lambda, grid, trace, x, layer::LayerKind::single).value;
  }
  return layer::layer_potential_eval(lambda, grid, trace, x, layer::LayerKind::double_layer).value;
}

double helmholtz_residual(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                          BoundaryCondition bc, const std::vector<Vec2> &probes) {
  const double h = 0.005 / lambda;
  double scale = 0.0, worst = 0.0;
  std::vector<double> defects;
  for (const Vec2 &p : probes) {
    const cdouble c = reconstruct_interior(grid, trace, lambda, bc, p);
    const cdouble e = reconstruct_interior(grid, trace, lambda, bc, p + Vec2{h, 0});
    const cdouble w = reconstruct_interior(grid, trace, lambda, bc, p - Vec2{h, 0});
    const cdouble nn = reconstruct_interior(grid, trace, lambda, bc, p + Vec2{0, h});
    const cdouble s = reconstruct_interior(grid, trace, lambda, bc, p - Vec2{0, h});
    const cdouble lap = (e + w + nn + s - 4.0 * c) / (h * h);
    defects.push_back(std::abs(lap + lambda * lambda * c));
    scale = std::max(scale, std::abs(c));
  }
  if (scale == 0.0) return probes.empty() ? 0.0 : INFINITY;
  for (double d : defects) worst = std::max(worst, d / (lambda * lambda * scale));
  return worst;
}

Matrix rellich_gram(const layer::NystromGrid &grid, const std::vector<Vector> &traces, double lambda,
                    BoundaryCondition bc) {
  const int n = grid.n;
  const int d = static_cast<int>(traces.size());
  std::vector<double> xn(n);
  for (int i = 0; i < n; ++i) xn[i] = -dot(grid.position[i], grid.normal[i]);
  std::vector<Vector> ds;
  if (bc == BoundaryCondition::neumann) {
    for (const auto &f : traces) ds.push_back(tau_derivative(f));
  }
  Matrix G = Matrix::Zero(d, d);
  const double l2 = lambda * lambda;
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      cdouble sum = 0.0;
      for (int i = 0; i < n; ++i) {
        cdouble term = traces[a][i] * std::conj(traces[b][i]);
        if (bc == BoundaryCondition::neumann) {
          term *= l2;
          // |d_s u|^2 ds = |d_tau u|^2 dtau / speed; nodes with vanishing speed carry nothing
          if (grid.speed[i] > 1e-12) {
            term -= ds[a][i] * std::conj(ds[b][i]) / (grid.speed[i] * grid.speed[i]);
          }
        }
        sum += grid.weight[i] * xn[i] * term;
      }
      G(a, b) = sum / (2.0 * l2);
      G(b, a) = std::conj(G(a, b));
    }
  }
  return G;
}

QmcEstimate interior_norm_qmc(const layer::NystromGrid &grid, const Vector &trace, double lambda,
                              BoundaryCondition bc, std::size_t points, int shifts, std::uint64_t seed) {
  if (shifts < 2) fail(ErrorCode::invalid_argument, "need at least two shifts");
  if (!grid.param) fail(ErrorCode::unsupported_domain, "quadrature check needs a Nystrom grid");
  const auto &domain = *grid.domain;
  // densities upsampled by 8 so the representation stays accurate close to the boundary
  auto fine = std::make_shared<layer::NystromGrid>(layer::make_grid(grid.domain, grid.param, 8 * grid.n));
  const Vector dense = layer::trig_interpolate(grid, trace, fine->tau);
  const double collar = 3.0 * fine->max_spacing;
  const Vec2 lo = domain.box_min(), hi = domain.box_max();
  const double box = (hi.x - lo.x) * (hi.y - lo.y);
  const std::size_t per = std::max<std::size_t>(1, points / static_cast<std::size_t>(shifts));
  std::vector<Vec2> base(per);
  {
    boost::random::sobol gen(2);
    const double span = double(gen.max()) - double(gen.min()) + 1.0;
    for (auto &p : base) {
      p.x = (double(gen()) - double(gen.min())) / span;
      p.y = (double(gen()) - double(gen.min())) / span;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01;
  std::vector<double> est(shifts);
  for (int sh = 0; sh < shifts; ++sh) {
    const double ox = u01(rng), oy = u01(rng);
    std::vector<double> acc(per, 0.0);
    parallel_for(per, [&](std::size_t k) {
      double fx = base[k].x + ox, fy = base[k].y + oy;
      fx -= std::floor(fx), fy -= std::floor(fy);
      const Vec2 x{lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y)};
      if (!geometry::contains(domain, x)) return;
      const auto nb = geometry::nearest_boundary(domain, x);
      cdouble u;
      if (nb.distance < collar) {
        // first-order Taylor from the boundary: u ~ dist * u^b (Dirichlet), u^b (Neumann)
        const cdouble ub = layer::trig_interpolate(grid, trace, {grid_tau(grid, nb.s)})[0];
        u = bc == BoundaryCondition::dirichlet ? nb.distance * ub : ub;
      } else {
        u = reconstruct_interior(*fine, dense, lambda, bc, x);
      }
      acc[k] = std::norm(u);
    });
    est[sh] = box * std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(per);
  }
  QmcEstimate q;
  q.points = per * static_cast<std::size_t>(shifts);
  q.norm_squared = std::accumulate(est.begin(), est.end(), 0.0) / shifts;
  double var = 0.0;
  for (double e : est) var += (e - q.norm_squared) * (e - q.norm_squared);
  q.standard_error = std::sqrt(var / (shifts - 1) / shifts);
  return q;
}

namespace {

// Rellich norm on the grid and its aliasing estimate from the doubled grid.
std::pair<double, double> rellich_norm(const EigenTrace &t) {
  const double G = rellich_gram(*t.grid, {t.trace}, t.lambda, t.bc)(0, 0).real();
  const auto fine = layer::make_grid(t.grid->domain, t.grid->param, 2 * t.grid->n);
  const double G2 = rellich_gram(fine, {upsample2(t.trace)}, t.lambda, t.bc)(0, 0).real();
  return {G, std::abs(G2 - G) / std::abs(G)};
}

}  // namespace

EigenTrace normalize_trace(EigenTrace t, bool qmc_cross_check, std::size_t qmc_points, std::uint64_t seed) {
  if (t.provenance == "analytic" || !t.grid || !t.grid->param) {
    // closed-form modes are normalised at construction; only the phase is fixed
    cdouble factor;
    fix_phase(t.trace, &factor);
    if (t.exact) {
      auto f = t.exact;
      t.exact = [f, factor](double s) { return factor * f(s); };
    }
    return t;
  }
  const auto [G, alias] = rellich_norm(t);
  if (!(G > 0.0)) fail(ErrorCode::numerical, "non-positive Rellich norm");
  t.trace /= std::sqrt(G);
  fix_phase(t.trace);
  auto &c = t.normalization;
  c.method = "rellich";
  c.interior_norm_estimate = rellich_gram(*t.grid, {t.trace}, t.lambda, t.bc)(0, 0).real();
  c.error_bar = std::max(alias, t.fone_residual);
  c.cross_check.reset();
  if (qmc_cross_check) {
    const auto q = interior_norm_qmc(*t.grid, t.trace, t.lambda, t.bc, qmc_points, 8, seed);
    c.cross_check = std::abs(q.norm_squared - 1.0);
  }
  c.flagged = c.error_bar > 1e-2 || (c.cross_check && *c.cross_check > 1e-2);
  return t;
}

std::vector<EigenTrace> normalize_cluster(std::vector<EigenTrace> cl) {
  if (cl.size() <= 1) {
    for (auto &t : cl) t = normalize_trace(std::move(t));
    return cl;
  }
  for (const auto &t : cl) {
    if (t.grid != cl[0].grid || t.provenance != "bie") {
      fail(ErrorCode::invalid_argument, "cluster traces must share one Nystrom grid");
    }
  }
  const auto &g = *cl[0].grid;
  const int d = static_cast<int>(cl.size());
  const int n = g.n;
  Matrix X(n, d);
  for (int a = 0; a < d; ++a) X.col(a) = cl[a].trace;
  // boundary-orthonormal basis
  Vector rw(n);
  for (int i = 0; i < n; ++i) rw[i] = std::sqrt(g.weight[i]);
  const Matrix Q = orthonormal_columns(rw.asDiagonal() * X);
  Matrix Y = rw.cwiseInverse().asDiagonal() * Q;
  std::vector<Vector> basis;
  for (int a = 0; a < d; ++a) basis.push_back(Y.col(a));
  const Matrix G = rellich_gram(g, basis, cl[0].lambda, cl[0].bc);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  if (es.eigenvalues().minCoeff() <= 0.0) fail(ErrorCode::numerical, "cluster Gram matrix not positive");
  const Matrix C = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix Z = Y * C;
  double alias = 0.0;
  for (int a = 0; a < d; ++a) {
    cl[a].trace = Z.col(a);
    fix_phase(cl[a].trace);
    alias = std::max(alias, rellich_norm(cl[a]).second);
  }
  std::vector<Vector> fin;
  for (auto &t : cl) fin.push_back(t.trace);
  const Matrix G2 = rellich_gram(g, fin, cl[0].lambda, cl[0].bc);
  for (int a = 0; a < d; ++a) {
    auto &c = cl[a].normalization;
    c.method = "rellich-gram";
    c.interior_norm_estimate = G2(a, a).real();
    double off = 0.0;
    for (int b = 0; b < d; ++b)
      if (b != a) off = std::max(off, std::abs(G2(a, b)));
    c.error_bar = std::max({alias, cl[a].fone_residual, off});
    c.cross_check.reset();
    c.flagged = c.error_bar > 1e-2;
  }
  return cl;
}

std::vector<double> disc_oracle(double radius, BoundaryCondition bc, double lambda_max) {
  if (!(radius > 0.0)) fail(ErrorCode::invalid_argument, "radius must be positive");
  const bool der = bc == BoundaryCondition::neumann;
  std::vector<double> out;
  for (int m = 0; m <= specfun::max_order; ++m) {
    const auto z = specfun::bessel_zeros_below(m, lambda_max * radius, der);
    if (z.empty()) {
      if (m > lambda_max * radius + 2) break;
      continue;
    }
    for (double x : z) {
      out.push_back(x / radius);
      if (m > 0) out.push_back(x / radius);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// J_m(z) / z, finite at z = 0.
double j_over_z(int m, double z) {
  if (z < specfun::min_argument) return m == 1 ? 0.5 : 0.0;
  return specfun::bessel_jy(m, z).J / z;
}

double j_at(int m, double z) {
  if (z < specfun::min_argument) return m == 0 ? 1.0 : 0.0;
  return specfun::bessel_jy(m, z).J;
}

// Unit-norm closed-form trace of a disc or half-disc mode (before phase fixing).
std::function<cdouble(double)> closed_form(const geometry::Domain &domain, BoundaryCondition bc, int m,
                                           double lambda) {
  const double R = domain.param("R");
  const int am = std::abs(m);
  const auto v = specfun::bessel_jy(am, lambda * R);
  const double ratio = double(am) / (lambda * R);
  const double radial2 = 0.5 * R * R * (v.dJ * v.dJ + (1.0 - ratio * ratio) * v.J * v.J);
  const bool dir = bc == BoundaryCondition::dirichlet;
  if (domain.shape() == geometry::Shape::disc) {
    const double c = 1.0 / std::sqrt(two_pi * radial2);
    const double amp = dir ? -lambda * v.dJ : v.J;
    return [=](double s) { return c * amp * std::polar(1.0, m * s / R); };
  }
  const double angular = (!dir && m == 0) ? pi : 0.5 * pi;
  const double c = 1.0 / std::sqrt(angular * radial2);
  const double arc = pi * R;
  const double sign_m = (am % 2 == 0) ? 1.0 : -1.0;
  return [=](double s) -> cdouble {
    s = std::fmod(s, arc + 2 * R);
    if (s < 0) s += arc + 2 * R;
    if (s < arc) {
      const double th = s / R;
      return dir ? c * (-lambda * v.dJ) * std::sin(am * th) : c * v.J * std::cos(am * th);
    }
    const double x = -R + (s - arc);
    const double ax = std::abs(x);
    if (dir) {
      const double val = am * lambda * j_over_z(am, lambda * ax);
      return c * (x > 0 ? val : -val * sign_m);
    }
    const double val = j_at(am, lambda * ax);
    return c * (x > 0 ? val : val * sign_m);
  };
}

}  // namespace

std::vector<EigenTrace> analytic_modes(const geometry::Domain &domain, BoundaryCondition bc, double lambda_max,
                                       int n) {
  const auto shape = domain.shape();
  if (shape != geometry::Shape::disc && shape != geometry::Shape::half_disc) {
    fail(ErrorCode::unsupported_domain, "closed-form modes exist only for disc and half_disc");
  }
  const double R = domain.param("R");
  const bool der = bc == BoundaryCondition::neumann;
  const bool disc = shape == geometry::Shape::disc;
  if (n <= 0) {
    n = static_cast<int>(std::ceil(12.0 * lambda_max * domain.perimeter() / two_pi));
    n = std::max(16, n + n % 2);
  }
  std::shared_ptr<const layer::NystromGrid> grid =
      disc ? std::make_shared<const layer::NystromGrid>(layer::make_grid(domain, n))
           : std::make_shared<const layer::NystromGrid>(make_sample_grid(domain, n));
  std::vector<EigenTrace> out;
  for (int m = 0; m <= specfun::max_order; ++m) {
    if (!disc && !der && m == 0) continue;
    const auto z = specfun::bessel_zeros_below(m, lambda_max * R, der);
    if (z.empty() && m > lambda_max * R + 2) break;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double lam = z[k] / R;
      std::vector<int> orders{m};
      if (disc && m > 0) orders.push_back(-m);
      for (int mm : orders) {
        EigenTrace t;
        t.lambda = lam;
        t.bc = bc;
        t.grid = grid;
        t.provenance = "analytic";
        t.mode_m = mm;
        t.mode_k = static_cast<int>(k) + 1;
        t.exact = closed_form(domain, bc, mm, lam);
        t.trace.resize(n);
        for (int i = 0; i < n; ++i) t.trace[i] = t.exact(grid->s[i]);
        t.normalization.method = "closed-form";
        t.normalization.interior_norm_estimate = 1.0;
        t.normalization.error_bar = 1e-13;
        out.push_back(normalize_trace(std::move(t)));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const EigenTrace &a, const EigenTrace &b) {
    return a.lambda < b.lambda;
  });
  int cid = -1;
  double last = -1.0;
  for (auto &t : out) {
    if (t.lambda != last) ++cid, last = t.lambda;
    t.cluster_id = cid;
  }
  for (auto &t : out) {
    t.cluster_size = static_cast<int>(std::count_if(out.begin(), out.end(), [&](const EigenTrace &o) {
      return o.cluster_id == t.cluster_id;
    }));
  }
  return out;
}

SpectrumStore analytic_store(const geometry::Domain &domain, BoundaryCondition bc, double lambda_max, int n) {
  SpectrumStore st;
  st.domain_spec = domain.name();
  st.bc = bc;
  st.provenance = "analytic";
  st.lmin = 0.0;
  st.lmax = lambda_max;
  st.traces = analytic_modes(domain, bc, lambda_max, n);
  return st;
}

SpectrumStore compute_spectrum(const geometry::Domain &domain, BoundaryCondition bc, double lmin, double lmax,
                               const SolverOptions &opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (domain.has_corners()) fail(ErrorCode::unsupported_domain, "boundary integral solver needs a smooth boundary");
  if (opts.ppw < layer::min_points_per_wavelength) {
    fail(ErrorCode::resolution, "refinement needs at least 8 points per wavelength");
  }
  SpectrumStore st;
  st.domain_spec = domain.name();
  st.bc = bc;
  st.lmin = lmin;
  st.lmax = lmax;
  st.options = opts;
  st.options.log = nullptr;
  // the scan overshoots the range so that eigenvalues at its ends sit inside a bracket
  const double pad = 3.0 * (opts.dlambda > 0.0 ? opts.dlambda : std::min(0.05, weyl_spacing(domain, bc, lmax) / 4.0));
  const auto scan = scan_spectrum(domain, bc, std::max(0.5 * lmin, lmin - pad), lmax + pad, opts);
  st.dlambda = scan.dlambda;
  st.warnings = scan.warnings;
  log_line(opts, std::to_string(scan.brackets.size()) + " dips");

  auto dom = std::make_shared<const geometry::Domain>(domain);
  auto param = std::make_shared<const layer::BoundaryParametrization>(*dom);
  std::map<int, std::shared_ptr<Refiner>> refiners;
  auto refiner_for = [&](double lam) -> Refiner & {
    // grids in steps of the scan window so neighbouring eigenvalues share one
    const double top = lmin + opts.window * std::ceil((lam - lmin) / opts.window + 1e-12);
    const int n = layer::grid_size_for(*param, std::max(top, lam) * 1.0001, opts.ppw);
    auto &r = refiners[n];
    if (!r) {
      auto g = std::make_shared<const layer::NystromGrid>(layer::make_grid(dom, param, n));
      r = std::make_shared<Refiner>(g, bc, opts);
    }
    return *r;
  };

  std::vector<RefinedRoot> roots;
  for (const auto &br : scan.brackets) {
    for (auto &r : refine_with(refiner_for(br.hi), br, opts)) {
      {
        std::ostringstream os;
        os.precision(12);
        os << "bracket " << br.center << " -> " << r.root.lambda << " sigma " << r.root.sigma;
        log_line(opts, os.str());
      }
      if (!r.root.accepted) {
        st.rejected.push_back({r.root.lambda, r.root.sigma, r.root.reason});
        continue;
      }
      if (r.root.lambda < lmin || r.root.lambda > lmax) continue;
      add_root(roots, std::move(r), opts.merge_rtol);
    }
  }
  log_line(opts, std::to_string(roots.size()) + " distinct roots");

  // best-resolved roots first; each cluster keeps only directions no nearby cluster holds
  std::vector<std::size_t> order(roots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return roots[a].root.sigma < roots[b].root.sigma; });
  const auto probes = interior_probes(domain, 5, opts.seed);
  std::vector<std::vector<EigenTrace>> clusters;
  for (const std::size_t k : order) {
    const auto &r = roots[k];
    const Evaluation &e = *r.at;
    const auto &g = *e.F.grid;
    const double s1 = e.triples[0].sigma;
    const double cut = std::max(10.0 * s1, opts.cluster_floor);
    int dim = 0;
    while (dim < static_cast<int>(e.triples.size()) && e.triples[dim].sigma <= cut) ++dim;
    dim = std::max(dim, static_cast<int>(r.index) + 1);
    Matrix X(g.n, dim);
    for (int j = 0; j < dim; ++j) X.col(j) = e.triples[j].v;
    const auto rw = sqrt_weights(g);
    std::vector<Vector> held;
    for (const auto &c : clusters) {
      if (std::abs(c[0].lambda - e.lambda) > opts.merge_rtol * e.lambda) continue;
      for (const auto &t : c) {
        Vector w = t.grid.get() == &g ? t.trace : layer::trig_interpolate(*t.grid, t.trace, g.tau);
        for (int i = 0; i < w.size(); ++i) w[i] *= rw[i];
        held.push_back(w);
      }
    }
    if (!held.empty()) {
      Matrix A(g.n, static_cast<Eigen::Index>(held.size()));
      for (std::size_t j = 0; j < held.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = held[j];
      const Matrix QA = orthonormal_columns(A);
      const Matrix P = X - QA * (QA.adjoint() * X);
      Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeThinV);
      int keep = 0;
      while (keep < dim && svd.singularValues()[keep] > 0.7) ++keep;
      if (keep == 0) continue;
      X = X * svd.matrixV().leftCols(keep);
    }
    const int kept = static_cast<int>(X.cols());
    std::vector<EigenTrace> cl;
    for (int j = 0; j < kept; ++j) {
      EigenTrace t;
      t.lambda = e.lambda;
      t.bc = bc;
      t.grid = e.F.grid;
      t.trace = X.col(j);
      for (int i = 0; i < t.trace.size(); ++i) t.trace[i] /= rw[i];
      t.sigma_min = e.triples[dim - 1].sigma;
      t.fone_residual = layer::fixed_point_residual(e.F, t.trace);
      cl.push_back(std::move(t));
    }
    cl = normalize_cluster(std::move(cl));
    bool ok = true;
    for (auto &t : cl) {
      t.fone_residual = layer::fixed_point_residual(e.F, t.trace);
      t.normalization.error_bar = std::max(t.normalization.error_bar, t.fone_residual);
      t.interior_helmholtz_residual = helmholtz_residual(*t.grid, t.trace, t.lambda, bc, probes);
      t.cluster_size = kept;
      if (t.fone_residual > 1e-5 || t.interior_helmholtz_residual > 1e-3) ok = false;
    }
    if (!ok) {
      std::ostringstream os;
      os << "residual check failed (fixed point " << cl[0].fone_residual << ", Helmholtz "
         << cl[0].interior_helmholtz_residual << ")";
      st.rejected.push_back({e.lambda, s1, os.str()});
      continue;
    }
    clusters.push_back(std::move(cl));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto &a, const auto &b) { return a[0].lambda < b[0].lambda; });
  log_line(opts, std::to_string(clusters.size()) + " distinct eigenvalues");
  int cid = 0;
  for (auto &c : clusters) {
    for (auto &t : c) {
      t.cluster_id = cid;
      st.traces.push_back(std::move(t));
    }
    ++cid;
  }
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return st;
}

}  // namespace qbt::spectrum
