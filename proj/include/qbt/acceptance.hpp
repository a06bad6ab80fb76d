// SPDX-License-Identifier: Apache-2.0
#pragma once

// The twelve acceptance criteria. Tolerances are fixed in acceptance.cpp;
// spectra come from the persistent cache so the criteria can run separately.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qbt/config.hpp"

namespace qbt::acceptance {

inline constexpr int criterion_count = 12;
/// Largest eigenvalue of every BIE spectrum used by the criteria.
inline constexpr double lambda_max = 30.0;
inline constexpr double lambda_min = 0.5;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// One-line summary of the decisive numbers.
  std::string summary;
  std::vector<std::pair<std::string, double>> metrics;
  /// For failing criteria: what the numbers show and why.
  std::string analysis;
  double seconds = 0.0;
};

struct Context {
  std::string cache_dir;
  std::function<void(const std::string &)> log;
};

/// The BIE spectra the criteria read: disc, stadium and ellipse, both
/// conditions, lambda in [lambda_min, lambda_max].
std::vector<ExperimentConfig> spectrum_configs(const std::string &cache_dir);

/// Computes (or finds) every spectrum in the cache.
void prepare(const Context &ctx);

const char *criterion_title(int id);
CriterionResult run_criterion(int id, const Context &ctx);

/// One line: "C07 PASS  title  summary".
std::string format_line(const CriterionResult &r);
std::string to_json(const std::vector<CriterionResult> &results);

}  // namespace qbt::acceptance
