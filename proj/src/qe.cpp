// SPDX-License-Identifier: Apache-2.0
#include "qbt/qe.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "fft.hpp"
#include "qbt/billiard.hpp"
#include "qbt/error.hpp"
#include "qbt/parallel.hpp"

namespace qbt::qe {

namespace {

bool is_pow2(int M) { return M > 0 && (M & (M - 1)) == 0; }

int signed_freq(int k, int M) { return k < M / 2 ? k : k - M; }

double smooth_step(double x) {
  // 0 for x <= 0, 1 for x >= 1, C-infinity in between
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / x), g = std::exp(-1.0 / (1.0 - x));
  return f / (f + g);
}

std::map<std::string, double> parse_params(const std::string &text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::invalid_spec, "observable parameter needs key=value: " + kv);
    try {
      out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception &) {
      fail(ErrorCode::invalid_spec, "bad observable parameter value: " + kv);
    }
  }
  return out;
}

double take(const std::map<std::string, double> &p, const std::string &k) {
  auto it = p.find(k);
  if (it == p.end()) fail(ErrorCode::invalid_spec, "observable parameter missing: " + k);
  return it->second;
}

}  // namespace

double Observable::operator()(double s, double eta) const {
  double v = 0.0;
  for (const auto &t : terms) {
    if (!t.b_polynomial && std::abs(eta) > 1.0 - delta) continue;
    v += t.a(s) * t.b(eta);
  }
  return v;
}

bool Observable::multiplication_only() const {
  for (const auto &t : terms) {
    for (double e : {-0.9, -0.3, 0.0, 0.4, 0.8})
      if (!t.b_polynomial || t.b(e) != t.b(0.0)) return false;
  }
  return true;
}

void Observable::validate() const {
  for (const auto &t : terms) {
    if (!t.b_polynomial && delta < 0.05) {
      fail(ErrorCode::invalid_argument, "non-polynomial eta factor needs a grazing cutoff delta >= 0.05");
    }
  }
}

Observable constant_observable(double c) {
  return {"const", {{[c](double) { return c; }, [](double) { return 1.0; }, true}}, 0.0};
}

Observable multiplication(std::function<double(double)> a, std::string name) {
  return {std::move(name), {{std::move(a), [](double) { return 1.0; }, true}}, 0.0};
}

Observable momentum() {
  return {"eta", {{[](double) { return 1.0; }, [](double e) { return e; }, true}}, 0.0};
}

Observable bump(double s0, double half_width, double perimeter) {
  if (!(half_width > 0.0) || 2 * half_width > perimeter) fail(ErrorCode::invalid_argument, "bad bump width");
  auto a = [=](double s) {
    double d = std::fmod(s - s0, perimeter);
    if (d < 0) d += perimeter;
    d = std::min(d, perimeter - d);
    const double x = d / half_width;
    return x >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - x * x));
  };
  std::ostringstream os;
  os << "bump(s0=" << s0 << ",w=" << half_width << ")";
  return multiplication(a, os.str());
}

Observable fourier_mode(int k, double perimeter) {
  return multiplication([=](double s) { return std::cos(two_pi * k * s / perimeter); },
                        "cos(k=" + std::to_string(k) + ")");
}

double smooth_cutoff(double eta, double delta) {
  return smooth_step(((1.0 - delta) - std::abs(eta)) / delta);
}

Observable operator*(const Observable &x, const Observable &y) {
  Observable r;
  r.name = x.name + "*" + y.name;
  r.delta = std::max(x.delta, y.delta);
  for (const auto &p : x.terms) {
    for (const auto &q : y.terms) {
      auto pa = p.a, qa = q.a, pb = p.b, qb = q.b;
      r.terms.push_back({[pa, qa](double s) { return pa(s) * qa(s); },
                         [pb, qb](double e) { return pb(e) * qb(e); }, p.b_polynomial && q.b_polynomial});
    }
  }
  return r;
}

Observable operator+(const Observable &x, const Observable &y) {
  Observable r = x;
  r.name = x.name + "+" + y.name;
  r.delta = std::max(x.delta, y.delta);
  r.terms.insert(r.terms.end(), y.terms.begin(), y.terms.end());
  return r;
}

Observable parse_observable(const std::string &text, const geometry::Domain &domain) {
  const double L = domain.perimeter();
  auto factor = [&](const std::string &f) -> Observable {
    const auto colon = f.find(':');
    const std::string head = f.substr(0, colon);
    const auto p = colon == std::string::npos ? std::map<std::string, double>{} : parse_params(f.substr(colon + 1));
    if (head == "one") return constant_observable(1.0);
    if (head == "eta") return momentum();
    if (head == "eta2") return {"eta2", {{[](double) { return 1.0; }, [](double e) { return e * e; }, true}}, 0.0};
    if (head == "cos") return fourier_mode(static_cast<int>(take(p, "k")), L);
    if (head == "bump") return bump(take(p, "s0"), take(p, "w"), L);
    if (head == "chi") {
      const double d = take(p, "delta");
      Observable o{"chi", {{[](double) { return 1.0; }, [d](double e) { return smooth_cutoff(e, d); }, false}}, d};
      return o;
    }
    fail(ErrorCode::invalid_spec, "unknown observable factor: " + head);
  };
  if (!text.empty() && (text.back() == '+' || text.back() == '*'))
    fail(ErrorCode::invalid_spec, "observable ends with an operator: " + text);
  std::optional<Observable> sum;
  std::stringstream terms(text);
  std::string term;
  while (std::getline(terms, term, '+')) {
    std::optional<Observable> prod;
    std::stringstream fs(term);
    std::string f;
    while (std::getline(fs, f, '*')) prod = prod ? *prod * factor(f) : factor(f);
    if (!prod) fail(ErrorCode::invalid_spec, "empty observable term");
    sum = sum ? *sum + *prod : *prod;
  }
  if (!sum) fail(ErrorCode::invalid_spec, "empty observable");
  sum->name = text;
  sum->validate();
  return *sum;
}

double LimitState::weight(double eta) const {
  const double g = std::sqrt(std::max(0.0, 1.0 - eta * eta));
  return bc == BoundaryCondition::neumann ? 1.0 / g : g;
}

LimitState limit_state(const geometry::Domain &domain, BoundaryCondition bc) {
  return {bc, 2.0 / (pi * domain.area())};
}

QuantizedOperator::QuantizedOperator(Observable obs, double h, int M, double perimeter)
    : obs_(std::move(obs)), h_(h), M_(M), perimeter_(perimeter) {
  if (!(h > 0.0)) fail(ErrorCode::invalid_argument, "h must be positive");
  if (!is_pow2(M)) fail(ErrorCode::invalid_argument, "grid size must be a power of two");
  obs_.validate();
  for (const auto &t : obs_.terms) {
    std::vector<double> as(M), bs(M);
    for (int i = 0; i < M; ++i) as[i] = t.a(i * perimeter / M);
    for (int k = 0; k < M; ++k) {
      const double eta = h * two_pi * signed_freq(k, M) / perimeter;
      bs[k] = (!t.b_polynomial && std::abs(eta) > 1.0 - obs_.delta) ? 0.0 : t.b(eta);
    }
    a_samples_.push_back(std::move(as));
    b_samples_.push_back(std::move(bs));
  }
}

Vector QuantizedOperator::apply(const Vector &f) const {
  if (f.size() != M_) fail(ErrorCode::invalid_argument, "sample count does not match the operator");
  std::vector<cdouble> x(f.data(), f.data() + M_);
  const auto F = detail::dft(x, true);
  Vector out = Vector::Zero(M_);
  for (std::size_t t = 0; t < a_samples_.size(); ++t) {
    std::vector<cdouble> G(M_);
    for (int k = 0; k < M_; ++k) G[k] = F[k] * b_samples_[t][k] / double(M_);
    const auto g = detail::dft(G, false);
    for (int i = 0; i < M_; ++i) out[i] += a_samples_[t][i] * g[i];
  }
  return out;
}

QuantizedOperator quantize(const Observable &obs, double h, int M, double perimeter) {
  return QuantizedOperator(obs, h, M, perimeter);
}

Vector apply_symbol_table(const std::vector<std::vector<double>> &table, const Vector &f) {
  const int M = static_cast<int>(f.size());
  if (static_cast<int>(table.size()) != M) fail(ErrorCode::invalid_argument, "symbol table size mismatch");
  std::vector<cdouble> x(f.data(), f.data() + M);
  const auto F = detail::dft(x, true);
  // only frequencies with a nonzero column contribute
  std::vector<int> active;
  for (int k = 0; k < M; ++k) {
    bool any = false;
    for (int i = 0; i < M && !any; ++i) any = table[i][k] != 0.0;
    if (any && F[k] != 0.0) active.push_back(k);
  }
  Vector out = Vector::Zero(M);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    cdouble sum = 0.0;
    for (int k : active) sum += table[i][k] * F[k] * std::polar(1.0, two_pi * double(k) * i / M);
    out[i] = sum / double(M);
  });
  return out;
}

int default_grid_size(const spectrum::EigenTrace &t) {
  const double L = t.grid->domain->perimeter();
  const double need = std::max<double>(t.grid->n, 4.0 * t.lambda * L / two_pi);
  int M = 64;
  while (M < need) M *= 2;
  return M;
}

Vector uniform_samples(const spectrum::EigenTrace &t, int M) {
  if (!is_pow2(M)) fail(ErrorCode::invalid_argument, "grid size must be a power of two");
  const double L = t.grid->domain->perimeter();
  // sample on 2M points so content beyond M/2 shows up instead of folding back
  const int M2 = 2 * M;
  Vector f2(M2);
  if (t.exact) {
    for (int i = 0; i < M2; ++i) f2[i] = t.exact(i * L / M2);
  } else {
    std::vector<double> tau(M2);
    for (int i = 0; i < M2; ++i) tau[i] = spectrum::grid_tau(*t.grid, i * L / M2);
    f2 = layer::trig_interpolate(*t.grid, t.trace, tau);
  }
  std::vector<cdouble> x(f2.data(), f2.data() + M2);
  const auto F = detail::dft(x, true);
  double total = 0.0, high = 0.0;
  for (int k = 0; k < M2; ++k) {
    const double e = std::norm(F[k]);
    total += e;
    if (std::abs(signed_freq(k, M2)) > 0.4 * M) high += e;
  }
  if (total > 0.0 && high > 1e-6 * total) {
    std::ostringstream os;
    os << "trace at lambda=" << t.lambda << " aliased on " << M << " samples (energy fraction " << high / total
       << " above 0.8 Nyquist)";
    fail(ErrorCode::resolution, os.str());
  }
  Vector f(M);
  for (int i = 0; i < M; ++i) f[i] = f2[2 * i];
  return f;
}

namespace {

double bc_scale(const spectrum::EigenTrace &t) {
  return t.bc == BoundaryCondition::dirichlet ? 1.0 / (t.lambda * t.lambda) : 1.0;
}

cdouble uniform_inner(const Vector &a, const Vector &b, double L) {
  return (L / static_cast<double>(a.size())) * b.dot(a);
}

}  // namespace

cdouble matrix_element(const spectrum::EigenTrace &t, const Observable &obs, int M) {
  if (M == 0) M = default_grid_size(t);
  const double L = t.grid->domain->perimeter();
  const Vector u = uniform_samples(t, M);
  const auto op = quantize(obs, 1.0 / t.lambda, M, L);
  return bc_scale(t) * uniform_inner(op.apply(u), u, L);
}

double omega(const Observable &obs, const LimitState &state, const geometry::Domain &domain) {
  obs.validate();
  const double L = domain.perimeter();
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (const auto &t : obs.terms) {
    // eta = sin(theta): d eta = gamma d theta, so the Neumann weight 1/gamma disappears
    const auto eta_integrand = [&](double th) {
      const double e = std::sin(th), g = std::cos(th);
      if (!t.b_polynomial && std::abs(e) > 1.0 - obs.delta) return 0.0;
      return t.b(e) * (state.bc == BoundaryCondition::neumann ? 1.0 : g * g);
    };
    double lim = 0.5 * pi;
    if (!t.b_polynomial) lim = std::asin(1.0 - obs.delta);
    const double bi = GK::integrate(eta_integrand, -lim, lim, 15, 1e-13);
    double ai = 0.0;
    const int panels = 64;
    for (int p = 0; p < panels; ++p) {
      ai += GK::integrate(t.a, p * L / panels, (p + 1) * L / panels, 10, 1e-14);
    }
    total += ai * bi;
  }
  return state.c * total;
}

MatrixElementSeries matrix_elements(const spectrum::SpectrumStore &store, const Observable &obs) {
  MatrixElementSeries s;
  const auto domain = geometry::build_domain(store.domain_spec);
  s.omega = omega(obs, limit_state(domain, store.bc), domain);
  s.store_lmax = store.lmax;
  s.lambdas.resize(store.traces.size());
  s.values.resize(store.traces.size());
  for (std::size_t j = 0; j < store.traces.size(); ++j) {
    s.lambdas[j] = store.traces[j].lambda;
    s.values[j] = matrix_element(store.traces[j], obs).real();
  }
  return s;
}

namespace {

std::size_t count_upto(const MatrixElementSeries &s, double lambda) {
  if (s.lambdas.empty()) fail(ErrorCode::precondition, "empty spectrum store");
  if (lambda > s.store_lmax * (1 + 1e-12)) {
    std::ostringstream os;
    os << "store covers lambda <= " << s.store_lmax << ", requested " << lambda;
    fail(ErrorCode::precondition, os.str());
  }
  const auto n = static_cast<std::size_t>(
      std::upper_bound(s.lambdas.begin(), s.lambdas.end(), lambda) - s.lambdas.begin());
  if (n == 0) fail(ErrorCode::precondition, "no eigenvalues below the requested lambda");
  return n;
}

}  // namespace

double cesaro_weyl(const MatrixElementSeries &s, double lambda) {
  const auto n = count_upto(s, lambda);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += s.values[j];
  return sum / static_cast<double>(n);
}

double cesaro_weyl(const spectrum::SpectrumStore &store, const Observable &obs, double lambda) {
  return cesaro_weyl(matrix_elements(store, obs), lambda);
}

QeStatistics qe_statistics(const MatrixElementSeries &s, double lambda, const std::vector<double> &eps) {
  const auto n = count_upto(s, lambda);
  QeStatistics q;
  q.lambda = lambda;
  q.count = static_cast<int>(n);
  q.omega = s.omega;
  double sum = 0.0, var = 0.0;
  std::vector<std::size_t> above(eps.size(), 0);
  for (std::size_t j = 0; j < n; ++j) {
    const double d = s.values[j] - s.omega;
    sum += s.values[j];
    var += d * d;
    for (std::size_t e = 0; e < eps.size(); ++e)
      if (std::abs(d) > eps[e]) ++above[e];
  }
  q.mean = sum / n;
  q.variance = var / n;
  for (std::size_t e = 0; e < eps.size(); ++e) q.deviation_fraction[eps[e]] = double(above[e]) / n;
  return q;
}

double invariance_defect(const spectrum::EigenTrace &t, const Observable &obs, const layer::OperatorMatrix &F) {
  if (F.grid != t.grid && (!F.grid || F.grid->n != t.grid->n)) {
    fail(ErrorCode::invalid_argument, "operator and trace live on different grids");
  }
  const double L = t.grid->domain->perimeter();
  const int M = default_grid_size(t);
  // F u = -+ u, so <A F u, F u> reproduces <A u, u>
  spectrum::EigenTrace Fu = t;
  Fu.exact = nullptr;
  Fu.trace = layer::apply(F, t.trace);
  if (t.bc == BoundaryCondition::dirichlet) Fu.trace = -Fu.trace;
  const auto op = quantize(obs, 1.0 / t.lambda, M, L);
  spectrum::EigenTrace tu = t;
  tu.exact = nullptr;
  const Vector u = uniform_samples(tu, M);
  const Vector fu = uniform_samples(Fu, M);
  return bc_scale(t) * std::abs(uniform_inner(op.apply(fu), fu, L) - uniform_inner(op.apply(u), u, L));
}

EgorovDefects egorov_check(const spectrum::EigenTrace &t, const Observable &obs, const layer::OperatorMatrix &F) {
  obs.validate();
  const auto &domain = *t.grid->domain;
  const double L = domain.perimeter();
  const int M = default_grid_size(t);
  const double h = 1.0 / t.lambda;
  const double scale = bc_scale(t);
  EgorovDefects d;

  d.invariance = invariance_defect(t, obs, F);
  const auto op = quantize(obs, h, M, L);
  spectrum::EigenTrace tu = t;
  tu.exact = nullptr;
  const Vector u = uniform_samples(tu, M);
  const cdouble base = scale * uniform_inner(op.apply(u), u, L);

  // (ii) transported symbol on the (s_i, h xi_n) lattice
  std::vector<std::vector<double>> table(M, std::vector<double>(M, 0.0));
  std::size_t support = 0, undefined = 0;
  std::vector<int> ks;
  for (int k = 0; k < M; ++k) {
    const double eta = h * two_pi * signed_freq(k, M) / L;
    if (std::abs(eta) < 1.0 - std::max(obs.delta, 1e-6)) ks.push_back(k);
  }
  std::vector<std::size_t> sup_i(M, 0), und_i(M, 0);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    const double s = i * L / M;
    for (int k : ks) {
      const double eta = h * two_pi * signed_freq(k, M) / L;
      const auto q = billiard::PhasePoint::make(s, eta);
      if (obs(s, eta) != 0.0) ++sup_i[i];
      try {
        table[i][k] = billiard::transfer_apply(
            domain, [&](const billiard::PhasePoint &p) { return obs(p.s, p.eta); }, q);
      } catch (const Error &e) {
        if (e.code() != ErrorCode::corner_hit) throw;
        ++und_i[i];
      }
    }
  });
  for (int i = 0; i < M; ++i) support += sup_i[i], undefined += und_i[i];
  const cdouble moved = scale * uniform_inner(apply_symbol_table(table, u), u, L);
  d.egorov = std::abs(moved - base);
  d.undefined_fraction = support ? double(undefined) / double(support) : 0.0;
  d.flagged = d.undefined_fraction > 1e-3;
  return d;
}

}  // namespace qbt::qe
