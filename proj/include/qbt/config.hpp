// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration (JSON) and the persistent spectrum cache.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qbt/spectrum.hpp"

namespace qbt {

/// Library version, also part of every cache key.
const char *version() noexcept;

struct ExperimentConfig {
  std::string domain = "disc:R=1";
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  double lmin = 0.5;
  double lmax = 10.0;
  /// 0 selects a quarter of the mean level spacing.
  double dlambda = 0.0;
  double ppw = layer::default_points_per_wavelength;
  double scan_ppw = layer::min_points_per_wavelength;
  double accept_sigma = 1e-6;
  std::vector<std::string> observables;
  std::string output_dir = "out";
  /// Empty disables the spectrum cache.
  std::string cache_dir;
  std::uint64_t seed = 1;

  bool operator==(const ExperimentConfig &) const = default;
};

/// Throws config on malformed input or unknown keys.
ExperimentConfig config_from_json(const std::string &text);
std::string config_to_json(const ExperimentConfig &config);
ExperimentConfig load_config(const std::string &path);
/// FNV-1a of the canonical JSON form.
std::string config_hash(const ExperimentConfig &config);
spectrum::SolverOptions solver_options(const ExperimentConfig &config);

/// Key over the canonical domain, bc, grid policy, range, scan step, acceptance
/// threshold, seed and library version.
std::string cache_key(const ExperimentConfig &config);

/// Returns the cached store, or nothing on a miss. A corrupt entry throws
/// checksum (recompute by removing the entry).
std::optional<spectrum::SpectrumStore> cache_lookup(const std::string &cache_dir, const std::string &key);
/// Writes into a temporary directory and renames it into place.
void cache_insert(const std::string &cache_dir, const std::string &key, const spectrum::SpectrumStore &store);

struct CachedSpectrum {
  spectrum::SpectrumStore store;
  bool hit = false;
};
/// Lookup, else compute and insert. Without a cache_dir this always computes.
CachedSpectrum cached_spectrum(const ExperimentConfig &config);

}  // namespace qbt
