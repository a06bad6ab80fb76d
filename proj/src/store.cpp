// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "qbt/error.hpp"
#include "qbt/hash.hpp"
#include "qbt/spectrum.hpp"

namespace qbt {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace qbt

namespace qbt::spectrum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trace_file(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traces/%05zu.bin", id);
  return buf;
}

json options_json(const SolverOptions &o) {
  return {{"ppw", o.ppw},
          {"scan_ppw", o.scan_ppw},
          {"dlambda", o.dlambda},
          {"dip_factor", o.dip_factor},
          {"window", o.window},
          {"accept_sigma", o.accept_sigma},
          {"merge_rtol", o.merge_rtol},
          {"cluster_floor", o.cluster_floor},
          {"block", o.block},
          {"seed", o.seed}};
}

SolverOptions options_from(const json &j) {
  SolverOptions o;
  o.ppw = j.at("ppw");
  o.scan_ppw = j.at("scan_ppw");
  o.dlambda = j.at("dlambda");
  o.dip_factor = j.at("dip_factor");
  o.window = j.at("window");
  o.accept_sigma = j.at("accept_sigma");
  o.merge_rtol = j.at("merge_rtol");
  o.cluster_floor = j.at("cluster_floor");
  o.block = j.at("block");
  o.seed = j.at("seed");
  return o;
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char *index_header =
    "id,lambda,n,grid,sigma_min,fone_residual,helmholtz_residual,norm_estimate,norm_method,norm_error,"
    "cross_check,flagged,cluster_id,cluster_size,provenance,mode_m,mode_k,checksum";

}  // namespace

void save_store(const SpectrumStore &st, const std::string &dir) {
  static_assert(std::endian::native == std::endian::little, "trace files are little endian");
  fs::create_directories(fs::path(dir) / "traces");
  std::ofstream idx(fs::path(dir) / "index.csv");
  if (!idx) fail(ErrorCode::io, "cannot write index in " + dir);
  idx << index_header << "\n";
  for (std::size_t id = 0; id < st.traces.size(); ++id) {
    const auto &t = st.traces[id];
    const auto bytes = static_cast<std::size_t>(t.trace.size()) * sizeof(cdouble);
    {
      std::ofstream os(fs::path(dir) / trace_file(id), std::ios::binary);
      os.write(reinterpret_cast<const char *>(t.trace.data()), static_cast<std::streamsize>(bytes));
      if (!os) fail(ErrorCode::io, "cannot write " + trace_file(id));
    }
    const bool sample = t.grid && !t.grid->param;
    const auto &c = t.normalization;
    idx << id << ',' << fmt(t.lambda) << ',' << t.trace.size() << ',' << (sample ? "sample" : "nystrom") << ','
        << fmt(t.sigma_min) << ',' << fmt(t.fone_residual) << ',' << fmt(t.interior_helmholtz_residual) << ','
        << fmt(c.interior_norm_estimate) << ',' << c.method << ',' << fmt(c.error_bar) << ','
        << (c.cross_check ? fmt(*c.cross_check) : std::string()) << ',' << int(c.flagged) << ','
        << t.cluster_id << ',' << t.cluster_size << ',' << t.provenance << ',' << t.mode_m << ',' << t.mode_k
        << ',' << hex64(fnv1a64(t.trace.data(), bytes)) << "\n";
  }
  json m;
  m["format_version"] = SpectrumStore::format_version;
  m["domain"] = st.domain_spec;
  m["bc"] = to_string(st.bc);
  m["provenance"] = st.provenance;
  m["lmin"] = st.lmin;
  m["lmax"] = st.lmax;
  m["options"] = options_json(st.options);
  m["dlambda"] = st.dlambda;
  m["trace_count"] = st.traces.size();
  m["warnings"] = st.warnings;
  m["seconds"] = st.seconds;
  json rej = json::array();
  for (const auto &r : st.rejected) rej.push_back({{"lambda", r.lambda}, {"sigma", r.sigma}, {"reason", r.reason}});
  m["rejected"] = rej;
  std::ofstream ms(fs::path(dir) / "manifest.json");
  ms << m.dump(2) << "\n";
  if (!ms) fail(ErrorCode::io, "cannot write manifest in " + dir);
}

SpectrumStore load_store(const std::string &dir) {
  std::ifstream ms(fs::path(dir) / "manifest.json");
  if (!ms) fail(ErrorCode::io, "no manifest in " + dir);
  json m;
  try {
    ms >> m;
  } catch (const std::exception &e) {
    fail(ErrorCode::io, std::string("bad manifest: ") + e.what());
  }
  if (m.value("format_version", -1) != SpectrumStore::format_version) {
    fail(ErrorCode::io, "unsupported store format version");
  }
  SpectrumStore st;
  st.domain_spec = m.at("domain");
  st.bc = parse_bc(m.at("bc").get<std::string>().c_str());
  st.provenance = m.at("provenance");
  st.lmin = m.at("lmin");
  st.lmax = m.at("lmax");
  st.options = options_from(m.at("options"));
  st.dlambda = m.at("dlambda");
  st.warnings = m.at("warnings").get<std::vector<std::string>>();
  st.seconds = m.at("seconds");
  for (const auto &r : m.at("rejected")) st.rejected.push_back({r.at("lambda"), r.at("sigma"), r.at("reason")});

  const auto domain = std::make_shared<const geometry::Domain>(geometry::build_domain(st.domain_spec));
  std::shared_ptr<const layer::BoundaryParametrization> param;
  std::map<std::pair<int, bool>, std::shared_ptr<const layer::NystromGrid>> grids;
  auto grid_for = [&](int n, bool sample) {
    auto &g = grids[{n, sample}];
    if (!g) {
      if (sample) {
        g = std::make_shared<const layer::NystromGrid>(make_sample_grid(*domain, n));
      } else {
        if (!param) param = std::make_shared<const layer::BoundaryParametrization>(*domain);
        g = std::make_shared<const layer::NystromGrid>(layer::make_grid(domain, param, n));
      }
    }
    return g;
  };
  // closed forms are rebuilt for analytic modes and matched to the stored phase
  std::map<std::pair<int, int>, EigenTrace> closed;
  if (st.provenance == "analytic") {
    for (auto &t : analytic_modes(*domain, st.bc, st.lmax, 16)) closed[{t.mode_m, t.mode_k}] = std::move(t);
  }

  std::ifstream idx(fs::path(dir) / "index.csv");
  if (!idx) fail(ErrorCode::io, "no index in " + dir);
  std::string line;
  std::getline(idx, line);
  if (line != index_header) fail(ErrorCode::io, "unexpected index header");
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 18) fail(ErrorCode::io, "malformed index row: " + line);
    const std::size_t id = std::stoul(c[0]);
    EigenTrace t;
    t.lambda = std::stod(c[1]);
    t.bc = st.bc;
    const int n = std::stoi(c[2]);
    t.grid = grid_for(n, c[3] == "sample");
    t.sigma_min = std::stod(c[4]);
    t.fone_residual = std::stod(c[5]);
    t.interior_helmholtz_residual = std::stod(c[6]);
    t.normalization.interior_norm_estimate = std::stod(c[7]);
    t.normalization.method = c[8];
    t.normalization.error_bar = std::stod(c[9]);
    if (!c[10].empty()) t.normalization.cross_check = std::stod(c[10]);
    t.normalization.flagged = c[11] == "1";
    t.cluster_id = std::stoi(c[12]);
    t.cluster_size = std::stoi(c[13]);
    t.provenance = c[14];
    t.mode_m = std::stoi(c[15]);
    t.mode_k = std::stoi(c[16]);
    t.trace.resize(n);
    const auto bytes = static_cast<std::size_t>(n) * sizeof(cdouble);
    std::ifstream is(fs::path(dir) / trace_file(id), std::ios::binary);
    is.read(reinterpret_cast<char *>(t.trace.data()), static_cast<std::streamsize>(bytes));
    if (!is || is.peek() != std::char_traits<char>::eof()) fail(ErrorCode::io, "truncated " + trace_file(id));
    if (hex64(fnv1a64(t.trace.data(), bytes)) != c[17]) {
      fail(ErrorCode::checksum, "checksum mismatch in " + trace_file(id));
    }
    if (t.provenance == "analytic") {
      auto it = closed.find({t.mode_m, t.mode_k});
      if (it == closed.end()) fail(ErrorCode::io, "unknown analytic mode in index");
      auto f = it->second.exact;
      Eigen::Index imax = 0;
      t.trace.cwiseAbs().maxCoeff(&imax);
      const cdouble ref = f(t.grid->s[imax]);
      const cdouble factor = t.trace[imax] / ref;
      t.exact = [f, factor](double s) { return factor * f(s); };
    }
    st.traces.push_back(std::move(t));
  }
  if (st.traces.size() != m.at("trace_count").get<std::size_t>()) fail(ErrorCode::io, "trace count mismatch");
  return st;
}

}  // namespace qbt::spectrum
