// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "qbt/config.hpp"
#include "qbt/error.hpp"

using namespace qbt;
namespace fs = std::filesystem;

TEST_CASE("configuration round trip") {
  ExperimentConfig c;
  c.domain = "stadium:a=1,R=1";
  c.bc = BoundaryCondition::neumann;
  c.lmin = 0.1 + 0.2;
  c.lmax = 30.0 / 7.0;
  c.dlambda = 1e-3 / 3;
  c.observables = {"bump:s0=0,w=1.2", "one"};
  c.seed = 18446744073709551557ull;
  const auto back = config_from_json(config_to_json(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  auto d = c;
  d.seed = 2;
  CHECK(config_hash(d) != config_hash(c));
  CHECK(config_from_json("{}") == ExperimentConfig{});
}

TEST_CASE("configuration errors") {
  const auto code = [](const std::string &text) {
    try {
      config_from_json(text);
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::internal;
  };
  CHECK(code("{\"lmaxx\": 3}") == ErrorCode::config);
  CHECK(code("{\"lmax\": \"x\"}") == ErrorCode::config);
  CHECK(code("[1]") == ErrorCode::config);
  CHECK(code("{\"bc\": \"robin\"}") == ErrorCode::config);
  CHECK(code("{\"lmin\": 5, \"lmax\": 2}") == ErrorCode::config);
  CHECK(code("{") == ErrorCode::config);
  CHECK_THROWS_AS(load_config("/nonexistent/qbt.json"), Error);
}

TEST_CASE("cache keys") {
  ExperimentConfig c;
  c.lmin = 2.0;
  c.lmax = 4.0;
  CHECK(cache_key(c) == cache_key(c));
  auto d = c;
  d.dlambda = 0.01;
  CHECK(cache_key(d) != cache_key(c));
  d = c;
  d.output_dir = "elsewhere";
  CHECK(cache_key(d) == cache_key(c));
  d = c;
  d.domain = "disc:R=1.0";
  CHECK(cache_key(d) == cache_key(c));
  d.bc = BoundaryCondition::neumann;
  CHECK(cache_key(d) != cache_key(c));
}

TEST_CASE("cache hit, miss and corruption") {
  const fs::path dir = fs::temp_directory_path() / ("qbt_cache_test_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  ExperimentConfig c;
  c.lmin = 2.0;
  c.lmax = 4.0;
  c.cache_dir = dir.string();
  const auto first = cached_spectrum(c);
  CHECK_FALSE(first.hit);
  REQUIRE(first.store.traces.size() == 3);
  const auto second = cached_spectrum(c);
  CHECK(second.hit);
  REQUIRE(second.store.traces.size() == first.store.traces.size());
  for (std::size_t j = 0; j < first.store.traces.size(); ++j) {
    CHECK(second.store.traces[j].lambda == first.store.traces[j].lambda);
    CHECK((second.store.traces[j].trace - first.store.traces[j].trace).norm() == 0.0);
  }
  auto d = c;
  d.dlambda = 0.02;
  CHECK_FALSE(cache_lookup(d.cache_dir, cache_key(d)).has_value());
  // flip a byte in one trace file
  const fs::path tfile = dir / cache_key(c) / "traces" / "00001.bin";
  REQUIRE(fs::exists(tfile));
  {
    std::fstream f(tfile, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put('\x55');
  }
  try {
    cache_lookup(c.cache_dir, cache_key(c));
    FAIL("corruption not detected");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::checksum);
  }
  for (const auto &e : fs::directory_iterator(dir)) CHECK(e.path().filename().string().rfind(".tmp", 0) != 0);
  fs::remove_all(dir);
}
