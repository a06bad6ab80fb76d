// SPDX-License-Identifier: Apache-2.0
// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "qbt/acceptance.hpp"
#include "qbt/error.hpp"

int main(int argc, char **argv) {
  CLI::App app{"qbtrace acceptance suite"};
  std::string cache_dir = "acceptance-cache";
  std::vector<int> only;
  std::string json_out;
  bool prepare_only = false, verbose = false;
  app.add_option("--cache", cache_dir, "spectrum cache directory");
  app.add_option("--only", only, "run these criteria (1-12)")->check(CLI::Range(1, 12));
  app.add_option("--json", json_out, "write the report as JSON");
  app.add_flag("--prepare", prepare_only, "compute the cached spectra and exit");
  app.add_flag("-v,--verbose", verbose, "progress messages on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  qbt::acceptance::Context ctx;
  ctx.cache_dir = cache_dir;
  if (verbose || prepare_only) ctx.log = [](const std::string &m) { std::cerr << m << std::endl; };
  try {
    if (prepare_only) {
      qbt::acceptance::prepare(ctx);
      return 0;
    }
    if (only.empty())
      for (int i = 1; i <= qbt::acceptance::criterion_count; ++i) only.push_back(i);
    std::vector<qbt::acceptance::CriterionResult> results;
    bool all = true;
    for (int id : only) {
      auto r = qbt::acceptance::run_criterion(id, ctx);
      std::cout << qbt::acceptance::format_line(r) << std::endl;
      if (!r.pass && !r.analysis.empty()) std::cout << "    analysis: " << r.analysis << std::endl;
      all = all && r.pass;
      results.push_back(std::move(r));
    }
    if (!json_out.empty()) {
      std::ofstream out(json_out);
      out << qbt::acceptance::to_json(results) << "\n";
    }
    return all ? 0 : 4;
  } catch (const qbt::Error &e) {
    std::cerr << "error (" << qbt::error_code_name(e.code()) << "): " << e.what() << std::endl;
    return e.code() == qbt::ErrorCode::config ? 2 : 3;
  }
}
