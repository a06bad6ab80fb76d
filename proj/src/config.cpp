// SPDX-License-Identifier: Apache-2.0
#include "qbt/config.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qbt/error.hpp"
#include "qbt/hash.hpp"

namespace qbt {

namespace fs = std::filesystem;
using nlohmann::json;

const char *version() noexcept { return QBT_VERSION; }

namespace {

json to_json_value(const ExperimentConfig &c) {
  return json{{"domain", c.domain},
              {"bc", to_string(c.bc)},
              {"lmin", c.lmin},
              {"lmax", c.lmax},
              {"dlambda", c.dlambda},
              {"ppw", c.ppw},
              {"scan_ppw", c.scan_ppw},
              {"accept_sigma", c.accept_sigma},
              {"observables", c.observables},
              {"output_dir", c.output_dir},
              {"cache_dir", c.cache_dir},
              {"seed", c.seed}};
}

}  // namespace

ExperimentConfig config_from_json(const std::string &text) {
  static const std::set<std::string> keys = {"domain", "bc",           "lmin",        "lmax",
                                             "dlambda", "ppw",         "scan_ppw",    "accept_sigma",
                                             "observables", "output_dir", "cache_dir", "seed"};
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::config, "configuration must be a JSON object");
    for (const auto &[k, v] : j.items()) {
      if (!keys.count(k)) fail(ErrorCode::config, "unknown configuration key: " + k);
    }
    if (j.contains("domain")) c.domain = j.at("domain").get<std::string>();
    if (j.contains("bc")) c.bc = parse_bc(j.at("bc").get<std::string>().c_str());
    if (j.contains("lmin")) c.lmin = j.at("lmin").get<double>();
    if (j.contains("lmax")) c.lmax = j.at("lmax").get<double>();
    if (j.contains("dlambda")) c.dlambda = j.at("dlambda").get<double>();
    if (j.contains("ppw")) c.ppw = j.at("ppw").get<double>();
    if (j.contains("scan_ppw")) c.scan_ppw = j.at("scan_ppw").get<double>();
    if (j.contains("accept_sigma")) c.accept_sigma = j.at("accept_sigma").get<double>();
    if (j.contains("observables")) c.observables = j.at("observables").get<std::vector<std::string>>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception &e) {
    fail(ErrorCode::config, std::string("malformed configuration: ") + e.what());
  }
  if (!(c.lmin > 0.0) || !(c.lmax > c.lmin)) fail(ErrorCode::config, "need 0 < lmin < lmax");
  if (c.dlambda < 0.0) fail(ErrorCode::config, "dlambda must be >= 0");
  return c;
}

std::string config_to_json(const ExperimentConfig &c) { return to_json_value(c).dump(2); }

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read configuration " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const ExperimentConfig &c) { return hex64(fnv1a64(to_json_value(c).dump())); }

spectrum::SolverOptions solver_options(const ExperimentConfig &c) {
  spectrum::SolverOptions o;
  o.ppw = c.ppw;
  o.scan_ppw = c.scan_ppw;
  o.dlambda = c.dlambda;
  o.accept_sigma = c.accept_sigma;
  o.seed = c.seed;
  return o;
}

std::string cache_key(const ExperimentConfig &c) {
  const auto domain = geometry::build_domain(c.domain);
  const json j{{"domain", domain.name()}, {"bc", to_string(c.bc)},   {"lmin", c.lmin},
               {"lmax", c.lmax},          {"dlambda", c.dlambda},    {"ppw", c.ppw},
               {"scan_ppw", c.scan_ppw},  {"accept_sigma", c.accept_sigma}, {"seed", c.seed},
               {"version", version()},    {"format", spectrum::SpectrumStore::format_version}};
  return hex64(fnv1a64(j.dump()));
}

std::optional<spectrum::SpectrumStore> cache_lookup(const std::string &cache_dir, const std::string &key) {
  const fs::path dir = fs::path(cache_dir) / key;
  if (!fs::exists(dir / "manifest.json")) return std::nullopt;
  return spectrum::load_store(dir.string());
}

void cache_insert(const std::string &cache_dir, const std::string &key, const spectrum::SpectrumStore &store) {
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create cache directory " + cache_dir);
  const fs::path target = fs::path(cache_dir) / key;
  const fs::path tmp = fs::path(cache_dir) / (".tmp-" + key + "-" + std::to_string(::getpid()));
  fs::remove_all(tmp, ec);
  spectrum::save_store(store, tmp.string());
  fs::rename(tmp, target, ec);
  if (ec) {
    // another writer got there first; keep theirs
    fs::remove_all(tmp, ec);
    if (!fs::exists(target / "manifest.json")) fail(ErrorCode::io, "cannot move cache entry into " + target.string());
  }
}

CachedSpectrum cached_spectrum(const ExperimentConfig &c) {
  CachedSpectrum r;
  std::string key;
  if (!c.cache_dir.empty()) {
    key = cache_key(c);
    if (auto hit = cache_lookup(c.cache_dir, key)) {
      r.store = std::move(*hit);
      r.hit = true;
      return r;
    }
  }
  const auto domain = geometry::build_domain(c.domain);
  r.store = spectrum::compute_spectrum(domain, c.bc, c.lmin, c.lmax, solver_options(c));
  if (!c.cache_dir.empty()) cache_insert(c.cache_dir, key, r.store);
  return r;
}

}  // namespace qbt
