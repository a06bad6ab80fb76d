// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the C interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qbtrace/qbtrace.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, resolution_error = 3, acceptance_failure = 4 };

struct Failure {
  int code;
  std::string message;
};

int exit_for(qbt_status s) {
  switch (s) {
    case QBT_E_CONFIG:
    case QBT_E_INVALID_SPEC:
    case QBT_E_INVALID_ARGUMENT: return config_error;
    default: return resolution_error;
  }
}

void check(qbt_status s) {
  if (s != QBT_OK) throw Failure{exit_for(s), std::string(qbt_status_name(s)) + ": " + qbt_last_error()};
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string take(char *s) {
  std::string out = s ? s : "";
  qbt_string_free(s);
  return out;
}

template <class T, void (*Free)(T *)>
struct Handle {
  T *p = nullptr;
  Handle() = default;
  Handle(const Handle &) = delete;
  Handle &operator=(const Handle &) = delete;
  ~Handle() { Free(p); }
  T *get() const { return p; }
  T **out() { return &p; }
};
using Domain = Handle<qbt_domain, qbt_domain_free>;
using Spectrum = Handle<qbt_spectrum, qbt_spectrum_free>;
using Observable = Handle<qbt_observable, qbt_observable_free>;

qbt_bc parse_bc(const std::string &s) {
  if (s == "dirichlet" || s == "D") return QBT_DIRICHLET;
  if (s == "neumann" || s == "N") return QBT_NEUMANN;
  throw Failure{config_error, "unknown boundary condition: " + s};
}

const char *bc_name(qbt_bc bc) { return bc == QBT_DIRICHLET ? "dirichlet" : "neumann"; }

// Options shared by the commands that need a configuration.
struct Common {
  std::string config_file;
  std::string out = "out";
  std::optional<std::string> bc, cache;
  std::optional<double> lmin, lmax, dlambda, ppw;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App *app, bool spectral) {
    app->add_option("--config", config_file, "JSON configuration file (flags override it)");
    app->add_option("--out", out, "output directory");
    app->add_option("--seed", seed, "global seed");
    if (!spectral) return;
    app->add_option("--bc", bc, "dirichlet or neumann");
    app->add_option("--lmin", lmin, "lower end of the lambda range");
    app->add_option("--lmax", lmax, "upper end of the lambda range");
    app->add_option("--dlambda", dlambda, "scan step (0: a quarter of the mean spacing)");
    app->add_option("--ppw", ppw, "nodes per wavelength");
    app->add_option("--cache", cache, "spectrum cache directory");
  }

  json config(const std::optional<std::string> &domain) const {
    json j = json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw Failure{config_error, "cannot read " + config_file};
      try {
        in >> j;
      } catch (const json::exception &e) {
        throw Failure{config_error, std::string("malformed configuration: ") + e.what()};
      }
    }
    if (domain) j["domain"] = *domain;
    if (bc) j["bc"] = bc_name(parse_bc(*bc));
    if (lmin) j["lmin"] = *lmin;
    if (lmax) j["lmax"] = *lmax;
    if (dlambda) j["dlambda"] = *dlambda;
    if (ppw) j["ppw"] = *ppw;
    if (seed) j["seed"] = *seed;
    if (cache) j["cache_dir"] = *cache;
    j["output_dir"] = out;
    // validation and canonical form come from the library
    char *canon = nullptr, *hash = nullptr;
    check(qbt_config_normalize(j.dump().c_str(), &canon, &hash));
    json c = json::parse(take(canon));
    c["_hash"] = take(hash);
    return c;
  }
};

class Output {
 public:
  Output(const std::string &dir, std::string command, const json &config)
      : dir_(dir), command_(std::move(command)), config_(config) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure{resolution_error, "cannot create " + dir_.string()};
  }

  std::ofstream open(const std::string &name, const std::string &quantity) {
    artifacts_.push_back({{"file", name}, {"quantity", quantity}});
    std::ofstream f(dir_ / name);
    if (!f) throw Failure{resolution_error, "cannot write " + (dir_ / name).string()};
    return f;
  }

  void write_json(const std::string &name, const std::string &quantity, const json &j) {
    auto f = open(name, quantity);
    f << j.dump(2) << "\n";
  }

  ~Output() {
    json m{{"command", command_}, {"version", qbt_version()}, {"artifacts", artifacts_}};
    if (!config_.is_null()) {
      json c = config_;
      m["config_hash"] = c["_hash"];
      c.erase("_hash");
      m["config"] = c;
    }
    std::ofstream f(dir_ / "manifest.json");
    f << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string command_;
  json config_;
  json artifacts_ = json::array();
};

void load_domain(Domain &d, const std::string &spec) { check(qbt_domain_create(spec.c_str(), d.out())); }

// --store DIR wins; otherwise the configuration decides (and may hit the cache)
void load_spectrum(Spectrum &sp, const std::string &store, const json &cfg, bool quiet = false) {
  if (!store.empty()) {
    check(qbt_spectrum_load(store.c_str(), sp.out()));
    return;
  }
  int hit = 0;
  json c = cfg;
  c.erase("_hash");
  check(qbt_spectrum_from_config(c.dump().c_str(), sp.out(), &hit));
  if (!quiet) std::cerr << (hit ? "spectrum from cache" : "spectrum computed") << std::endl;
}

size_t spectrum_size(const Spectrum &sp) {
  size_t n = 0;
  check(qbt_spectrum_size(sp.get(), &n));
  return n;
}

// ---------------------------------------------------------------------------

int cmd_domain_info(const std::string &spec, const Common &co) {
  Domain d;
  load_domain(d, spec);
  qbt_domain_info info;
  check(qbt_domain_get_info(d.get(), &info));
  char *name = nullptr;
  check(qbt_domain_name(d.get(), &name));
  const json j{{"domain", take(name)},
               {"area", info.area},
               {"perimeter", info.perimeter},
               {"convex", bool(info.convex)},
               {"corners", bool(info.has_corners)},
               {"arcs", info.arc_count},
               {"box", {info.box_min[0], info.box_min[1], info.box_max[0], info.box_max[1]}}};
  Output out(co.out, "domain-info", json());
  out.write_json("domain.json", "domain geometry", j);
  std::cout << j.dump(2) << std::endl;
  return ok;
}

int cmd_billiard_sim(const std::string &spec, double s, double eta, size_t bounces, const Common &co) {
  Domain d;
  load_domain(d, spec);
  std::vector<qbt_bounce> orbit(bounces);
  size_t n = 0;
  check(qbt_billiard_orbit(d.get(), s, eta, bounces, orbit.data(), &n));
  Output out(co.out, "billiard-sim", json());
  auto f = out.open("orbit.csv", "billiard orbit");
  f << "k,s,eta,flight_length,terminated\n";
  double gsum = 0.0;
  size_t counted = 0;
  for (size_t k = 0; k < n; ++k) {
    f << k + 1 << "," << num(orbit[k].s) << "," << num(orbit[k].eta) << "," << num(orbit[k].flight_length) << ","
      << orbit[k].terminated << "\n";
    if (!orbit[k].terminated) gsum += std::sqrt(1 - orbit[k].eta * orbit[k].eta), ++counted;
  }
  const json j{{"bounces", n},
               {"terminated", n > 0 && orbit[n - 1].terminated},
               {"mean_gamma", counted ? gsum / counted : 0.0},
               {"invariant_mean_gamma", M_PI / 4}};
  out.write_json("summary.json", "Birkhoff average of gamma", j);
  std::cout << j.dump(2) << std::endl;
  return ok;
}

int cmd_loop_profile(const std::string &spec, double s, int n_max, size_t samples, double tol, const Common &co) {
  Domain d;
  load_domain(d, spec);
  qbt_loop_profile p;
  check(qbt_loop_profile_at(d.get(), s, n_max, samples, tol, &p));
  size_t n = 0;
  qbt_status st = qbt_loop_lengths(d.get(), s, n_max, nullptr, 0, &n);
  if (st != QBT_OK && st != QBT_E_BUFFER) check(st);
  std::vector<double> lengths(n);
  if (n) check(qbt_loop_lengths(d.get(), s, n_max, lengths.data(), n, &n));
  Output out(co.out, "loop-profile", json());
  auto f = out.open("loop_lengths.csv", "loop lengths through s");
  f << "length\n";
  for (double x : lengths) f << num(x) << "\n";
  const json j{{"s", s},
               {"n_max", n_max},
               {"loop_measure", p.loop_measure},
               {"confidence_half_width", p.confidence_half_width},
               {"samples", p.samples},
               {"rejected_grazing", p.rejected_grazing},
               {"loop_lengths", lengths}};
  out.write_json("loop_profile.json", "loop-direction measure", j);
  std::cout << j.dump(2) << std::endl;
  return ok;
}

void write_index(std::ostream &f, const Spectrum &sp) {
  f << "j,lambda,sigma_min,fone_residual,helmholtz_residual,norm_estimate,norm_error,flagged,cluster_id,cluster_size\n";
  const size_t n = spectrum_size(sp);
  for (size_t j = 0; j < n; ++j) {
    qbt_trace_info t;
    check(qbt_trace_get_info(sp.get(), j, &t));
    f << j << "," << num(t.lambda) << "," << num(t.sigma_min) << "," << num(t.fone_residual) << ","
      << num(t.helmholtz_residual) << "," << num(t.norm_estimate) << "," << num(t.norm_error) << "," << t.flagged
      << "," << t.cluster_id << "," << t.cluster_size << "\n";
  }
}

int cmd_spectrum_scan(const std::string &spec, const Common &co) {
  const json cfg = co.config(spec);
  Spectrum sp;
  load_spectrum(sp, "", cfg);
  Output out(co.out, "spectrum-scan", cfg);
  {
    auto f = out.open("index.csv", "eigenvalues and trace certificates");
    write_index(f, sp);
  }
  const std::string store = (fs::path(co.out) / "store").string();
  check(qbt_spectrum_save(sp.get(), store.c_str()));
  char *warn = nullptr;
  check(qbt_spectrum_warnings(sp.get(), &warn));
  const std::string w = take(warn);
  if (!w.empty()) std::cerr << w;
  write_index(std::cout, sp);
  return ok;
}

int cmd_trace_export(const std::string &store, const std::optional<std::string> &spec, long index, const Common &co) {
  const json cfg = store.empty() ? co.config(spec) : json();
  Spectrum sp;
  load_spectrum(sp, store, cfg);
  const size_t n = spectrum_size(sp);
  Output out(co.out, "trace-export", cfg);
  {
    auto f = out.open("norms.csv", "boundary trace Lp norms");
    f << "j,lambda,l2,l4,l8,linf,sup_over_l2\n";
    for (size_t j = 0; j < n; ++j) {
      qbt_trace_info t;
      qbt_trace_norms nm;
      check(qbt_trace_get_info(sp.get(), j, &t));
      check(qbt_trace_get_norms(sp.get(), j, &nm));
      f << j << "," << num(t.lambda) << "," << num(nm.l2) << "," << num(nm.l4) << "," << num(nm.l8) << ","
        << num(nm.sup) << "," << num(nm.sup / nm.l2) << "\n";
    }
  }
  const auto dump_one = [&](size_t j) {
    size_t m = 0;
    qbt_status st = qbt_trace_samples(sp.get(), j, nullptr, nullptr, 0, &m);
    if (st != QBT_OK && st != QBT_E_BUFFER) check(st);
    std::vector<double> s(m), v(2 * m);
    check(qbt_trace_samples(sp.get(), j, s.data(), v.data(), m, &m));
    char name[32];
    std::snprintf(name, sizeof name, "trace_%05zu.csv", j);
    auto f = out.open(name, "boundary trace samples");
    f << "s,re,im,abs\n";
    for (size_t i = 0; i < m; ++i)
      f << num(s[i]) << "," << num(v[2 * i]) << "," << num(v[2 * i + 1]) << "," << num(std::hypot(v[2 * i], v[2 * i + 1]))
        << "\n";
  };
  if (index >= 0) {
    if (static_cast<size_t>(index) >= n) throw Failure{config_error, "trace index out of range"};
    dump_one(static_cast<size_t>(index));
  } else {
    for (size_t j = 0; j < n; ++j) dump_one(j);
  }
  std::cout << "exported " << (index >= 0 ? 1 : n) << " of " << n << " traces to " << co.out << std::endl;
  return ok;
}

int cmd_qe_report(const std::string &store, const std::optional<std::string> &spec, const std::string &obs_text,
                  std::optional<double> lambda, const Common &co) {
  json cfg = store.empty() ? co.config(spec) : json();
  Spectrum sp;
  load_spectrum(sp, store, cfg);
  char *dspec = nullptr;
  qbt_bc bc;
  double lmin = 0, lmax = 0, secs = 0;
  check(qbt_spectrum_describe(sp.get(), &dspec, &bc, &lmin, &lmax, &secs));
  Domain d;
  load_domain(d, take(dspec));
  Observable obs;
  check(qbt_observable_parse(d.get(), obs_text.c_str(), obs.out()));
  const size_t n = spectrum_size(sp);
  std::vector<double> l(n), v(n);
  double omega = 0.0;
  size_t count = 0;
  check(qbt_matrix_elements(sp.get(), obs.get(), l.data(), v.data(), n, &count, &omega));
  Output out(co.out, "qe-report", cfg);
  {
    auto f = out.open("matrix_elements.csv", "boundary matrix elements");
    f << "lambda,value,deviation,cesaro\n";
    double sum = 0.0;
    for (size_t j = 0; j < count; ++j) {
      sum += v[j];
      f << num(l[j]) << "," << num(v[j]) << "," << num(v[j] - omega) << "," << num(sum / double(j + 1)) << "\n";
    }
  }
  json rep{{"observable", obs_text}, {"omega", omega}, {"count", count}};
  json stats = json::array();
  std::vector<double> at;
  if (lambda) at.push_back(*lambda);
  else at = {0.5 * lmax, lmax};
  for (double x : at) {
    qbt_qe_stats q;
    check(qbt_qe_statistics(sp.get(), obs.get(), x, &q));
    stats.push_back({{"lambda", q.lambda},
                     {"count", q.count},
                     {"cesaro_mean", q.mean},
                     {"variance", q.variance},
                     {"fraction_above_0.05", q.fraction_005},
                     {"fraction_above_0.1", q.fraction_01},
                     {"fraction_above_0.2", q.fraction_02}});
  }
  rep["statistics"] = stats;
  out.write_json("qe_report.json", "quantum ergodicity statistics", rep);
  std::cout << rep.dump(2) << std::endl;
  return ok;
}

int cmd_weyl_fit(const std::string &store, const std::optional<std::string> &spec, std::optional<double> fit_lo,
                 const Common &co) {
  json cfg = store.empty() ? co.config(spec) : json();
  Spectrum sp;
  load_spectrum(sp, store, cfg);
  char *dspec = nullptr;
  qbt_bc bc;
  double lmin = 0, lmax = 0, secs = 0;
  check(qbt_spectrum_describe(sp.get(), &dspec, &bc, &lmin, &lmax, &secs));
  Domain d;
  load_domain(d, take(dspec));
  qbt_domain_info info;
  check(qbt_domain_get_info(d.get(), &info));
  const std::vector<double> probes{0.1 * info.perimeter, 0.37 * info.perimeter, 0.71 * info.perimeter};
  qbt_weyl_audit audit;
  std::vector<double> gaps(64);
  check(qbt_weyl_audit_run(sp.get(), &audit, gaps.data(), 32));
  Output out(co.out, "weyl-fit", cfg);
  std::vector<double> grid;
  const int K = 200;
  for (int i = 1; i <= K; ++i) grid.push_back(lmax * i / K);
  std::vector<std::vector<double>> sums(probes.size());
  {
    auto f = out.open("counting.csv", "counting function and pointwise spectral sums");
    f << "lambda,N,weyl";
    for (size_t p = 0; p < probes.size(); ++p) f << ",sum_s" << p;
    f << "\n";
    const size_t n = spectrum_size(sp);
    std::vector<double> lam(n);
    for (size_t j = 0; j < n; ++j) {
      qbt_trace_info t;
      check(qbt_trace_get_info(sp.get(), j, &t));
      lam[j] = t.lambda;
    }
    std::sort(lam.begin(), lam.end());
    for (double x : grid) {
      double w = 0.0;
      check(qbt_weyl_count(d.get(), bc, x, &w));
      const auto N = std::upper_bound(lam.begin(), lam.end(), x) - lam.begin() + (bc == QBT_NEUMANN ? 1 : 0);
      f << num(x) << "," << N << "," << num(w);
      for (size_t p = 0; p < probes.size(); ++p) {
        double v = 0.0;
        check(qbt_pointwise_sum(sp.get(), probes[p], x, &v));
        sums[p].push_back(v);
        f << "," << num(v);
      }
      f << "\n";
    }
  }
  json fits = json::array();
  for (size_t p = 0; p < probes.size(); ++p) {
    qbt_fit fit;
    const std::uint64_t seed = co.seed.value_or(1);
    check(qbt_exponent_fit(grid.data(), sums[p].data(), grid.size(), fit_lo.value_or(lmax / 4), lmax, seed, &fit));
    fits.push_back({{"s", probes[p]},
                    {"exponent", fit.exponent},
                    {"ci", {fit.ci_lo, fit.ci_hi}},
                    {"prefactor", fit.prefactor},
                    {"residual", fit.residual},
                    {"points", fit.points}});
  }
  json g = json::array();
  for (size_t i = 0; i < audit.gaps && i < 32; ++i) g.push_back({gaps[2 * i], gaps[2 * i + 1]});
  const json rep{{"bc", bc_name(bc)},
                 {"lmax", lmax},
                 {"weyl_max_deviation", audit.max_deviation},
                 {"weyl_at_lambda", audit.at_lambda},
                 {"weyl_mean_deviation", audit.mean_deviation},
                 {"suspected_gaps", g},
                 {"pointwise_exponents", fits}};
  out.write_json("weyl_fit.json", "Weyl audit and pointwise growth exponents", rep);
  std::cout << rep.dump(2) << std::endl;
  return ok;
}

int cmd_wave_trace(const std::string &store, const std::optional<std::string> &spec, double s,
                   std::optional<double> sigma, double tmax, double dt, const Common &co) {
  json cfg = store.empty() ? co.config(spec) : json();
  Spectrum sp;
  load_spectrum(sp, store, cfg);
  double lmin = 0, lmax = 0;
  check(qbt_spectrum_describe(sp.get(), nullptr, nullptr, &lmin, &lmax, nullptr));
  const double sig = sigma.value_or(4 * M_PI / lmax);
  std::vector<double> t;
  for (double x = -1.0; x <= tmax + 1e-12; x += dt) t.push_back(x);
  std::vector<double> v(2 * t.size());
  check(qbt_wave_trace(sp.get(), s, t.data(), t.size(), sig, v.data()));
  std::vector<qbt_peak> peaks(256);
  size_t np = 0;
  check(qbt_wave_peaks(sp.get(), s, t.data(), t.size(), sig, 0.5, 0.1, peaks.data(), peaks.size(), &np));
  Output out(co.out, "wave-trace", cfg);
  {
    auto f = out.open("wave_trace.csv", "smoothed boundary wave trace");
    f << "t,re,im,abs\n";
    for (size_t i = 0; i < t.size(); ++i)
      f << num(t[i]) << "," << num(v[2 * i]) << "," << num(v[2 * i + 1]) << "," << num(std::hypot(v[2 * i], v[2 * i + 1]))
        << "\n";
  }
  char *dspec = nullptr;
  check(qbt_spectrum_describe(sp.get(), &dspec, nullptr, nullptr, nullptr, nullptr));
  Domain d;
  load_domain(d, take(dspec));
  size_t nl = 0;
  qbt_status st = qbt_loop_lengths(d.get(), s, 6, nullptr, 0, &nl);
  if (st != QBT_OK && st != QBT_E_BUFFER) check(st);
  std::vector<double> loops(nl);
  if (nl) check(qbt_loop_lengths(d.get(), s, 6, loops.data(), nl, &nl));
  json pk = json::array();
  for (size_t i = 0; i < np; ++i) {
    double best = INFINITY;
    for (double x : loops) best = std::min(best, std::abs(x - peaks[i].t));
    pk.push_back({{"t", peaks[i].t},
                  {"value", peaks[i].value},
                  {"prominence", peaks[i].prominence},
                  {"nearest_loop_distance", std::isfinite(best) ? json(best) : json(nullptr)}});
  }
  const json rep{{"s", s}, {"sigma_t", sig}, {"peaks", pk}, {"loop_lengths", loops}};
  out.write_json("wave_peaks.json", "wave trace peaks and loop lengths", rep);
  std::cout << rep.dump(2) << std::endl;
  return ok;
}

int cmd_oracle_disc(double radius, const std::string &bc, double lmax, const Common &co) {
  const qbt_bc b = parse_bc(bc);
  size_t n = 0;
  qbt_status st = qbt_disc_oracle(radius, b, lmax, nullptr, 0, &n);
  if (st != QBT_OK && st != QBT_E_BUFFER) check(st);
  std::vector<double> l(n);
  if (n) check(qbt_disc_oracle(radius, b, lmax, l.data(), n, &n));
  Output out(co.out, "oracle-disc", json());
  auto f = out.open("oracle.csv", "disc eigenvalues from Bessel zeros");
  f << "j,lambda\n";
  std::cout << "j,lambda\n";
  for (size_t j = 0; j < n; ++j) {
    f << j << "," << num(l[j]) << "\n";
    std::cout << j << "," << num(l[j]) << "\n";
  }
  return ok;
}

int cmd_acceptance(const std::string &cache_dir, const std::vector<int> &only, bool prepare, const Common &co) {
  if (prepare) {
    check(qbt_acceptance_prepare(cache_dir.c_str()));
    return ok;
  }
  std::vector<int> ids = only;
  if (ids.empty())
    for (int i = 1; i <= 12; ++i) ids.push_back(i);
  Output out(co.out, "acceptance", json());
  json all = json::array();
  bool pass = true;
  for (int id : ids) {
    qbt_criterion c;
    char *line = nullptr, *js = nullptr;
    check(qbt_acceptance_run(id, cache_dir.c_str(), &c, &line, &js));
    std::cout << take(line) << std::endl;
    all.push_back(json::parse(take(js)));
    pass = pass && c.pass;
  }
  out.write_json("acceptance.json", "acceptance report", all);
  return pass ? ok : acceptance_failure;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"qbt: boundary traces of Laplace eigenfunctions, billiards and quantum ergodicity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qbt_version()));

  Common co;
  std::string spec, store, bc = "dirichlet", obs = "one", cache_dir = "acceptance-cache";
  std::optional<std::string> spec_opt;
  double s = 0.0, eta = 0.0, tol = 1e-6, radius = 1.0, lmax_oracle = 30.0, tmax = 12.0, dt = 0.01;
  std::optional<double> sigma, lambda, fit_lo;
  size_t bounces = 1000, samples = 20000;
  int n_max = 10;
  long index = -1;
  std::vector<int> only;
  bool prepare = false;

  auto *di = app.add_subcommand("domain-info", "area, perimeter and shape data");
  di->add_option("domain", spec, "domain spec, e.g. stadium:a=1,R=1")->required();
  di->add_option("--out", co.out, "output directory");

  auto *bs = app.add_subcommand("billiard-sim", "billiard orbit and Birkhoff average of gamma");
  bs->add_option("domain", spec)->required();
  bs->add_option("--s", s, "start arclength");
  bs->add_option("--eta", eta, "start tangential momentum");
  bs->add_option("--bounces", bounces, "number of bounces");
  bs->add_option("--out", co.out, "output directory");

  auto *lp = app.add_subcommand("loop-profile", "loop directions and loop lengths at a boundary point");
  lp->add_option("domain", spec)->required();
  lp->add_option("--s", s, "base point arclength");
  lp->add_option("--nmax", n_max, "largest return iterate");
  lp->add_option("--samples", samples, "eta samples");
  lp->add_option("--tol", tol, "return tolerance in arclength");
  lp->add_option("--out", co.out, "output directory");

  auto *ss = app.add_subcommand("spectrum-scan", "eigenvalues and boundary traces in a lambda range");
  ss->add_option("domain", spec_opt, "domain spec (or from --config)");
  co.attach(ss, true);

  auto *te = app.add_subcommand("trace-export", "trace samples and Lp norms");
  te->add_option("domain", spec_opt);
  te->add_option("--store", store, "spectrum store directory");
  te->add_option("--index", index, "single trace (default: all)");
  co.attach(te, true);

  auto *qr = app.add_subcommand("qe-report", "matrix elements, Cesaro means and variances");
  qr->add_option("domain", spec_opt);
  qr->add_option("--store", store, "spectrum store directory");
  qr->add_option("--obs", obs, "observable, e.g. 'bump:s0=0,w=1.2' or 'cos:k=2*chi:delta=0.1'");
  qr->add_option("--lambda", lambda, "statistics at this lambda (default: lmax/2 and lmax)");
  co.attach(qr, true);

  auto *wf = app.add_subcommand("weyl-fit", "counting function audit and pointwise growth exponents");
  wf->add_option("domain", spec_opt);
  wf->add_option("--store", store, "spectrum store directory");
  wf->add_option("--fit-from", fit_lo, "lower end of the exponent fit window (default lmax/4)");
  co.attach(wf, true);

  auto *wt = app.add_subcommand("wave-trace", "Gaussian-smoothed boundary wave trace at a point");
  wt->add_option("domain", spec_opt);
  wt->add_option("--store", store, "spectrum store directory");
  wt->add_option("--s", s, "boundary point");
  wt->add_option("--sigma", sigma, "time resolution (default 4 pi / lmax)");
  wt->add_option("--tmax", tmax, "largest t");
  wt->add_option("--dt", dt, "t step");
  co.attach(wt, true);

  auto *od = app.add_subcommand("oracle-disc", "disc eigenvalues from Bessel zeros");
  od->add_option("--radius", radius, "disc radius");
  od->add_option("--bc", bc, "dirichlet or neumann");
  od->add_option("--lmax", lmax_oracle, "largest eigenvalue");
  od->add_option("--out", co.out, "output directory");

  auto *ac = app.add_subcommand("acceptance", "run the acceptance criteria");
  ac->add_option("--cache", cache_dir, "spectrum cache directory");
  ac->add_option("--only", only, "criteria to run")->check(CLI::Range(1, 12));
  ac->add_flag("--prepare", prepare, "only compute the cached spectra");
  ac->add_option("--out", co.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  try {
    if (*di) return cmd_domain_info(spec, co);
    if (*bs) return cmd_billiard_sim(spec, s, eta, bounces, co);
    if (*lp) return cmd_loop_profile(spec, s, n_max, samples, tol, co);
    if (*ss) return cmd_spectrum_scan(spec_opt.value_or(""), co);
    if (*te) return cmd_trace_export(store, spec_opt, index, co);
    if (*qr) return cmd_qe_report(store, spec_opt, obs, lambda, co);
    if (*wf) return cmd_weyl_fit(store, spec_opt, fit_lo, co);
    if (*wt) return cmd_wave_trace(store, spec_opt, s, sigma, tmax, dt, co);
    if (*od) return cmd_oracle_disc(radius, bc, lmax_oracle, co);
    if (*ac) return cmd_acceptance(cache_dir, only, prepare, co);
  } catch (const Failure &f) {
    std::cerr << "error: " << f.message << std::endl;
    return f.code;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << std::endl;
    return resolution_error;
  }
  return ok;
}
