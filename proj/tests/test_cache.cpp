#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "weylscope/cache.hpp"
#include "weylscope/geometry.hpp"
#include "weylscope/spectrum.hpp"

using namespace weylscope;

namespace {

struct CacheEnvGuard {
  std::string dir;
  explicit CacheEnvGuard(const std::string& d) : dir(d) {
    setenv("WEYLSCOPE_CACHE", dir.c_str(), 1);
  }
  ~CacheEnvGuard() { unsetenv("WEYLSCOPE_CACHE"); }
};

std::string fresh_dir(const char* tag) {
  std::string d = std::string("/tmp/wscache-") + tag + "-" + std::to_string(getpid());
  std::string cmd = "rm -rf " + d;
  if (std::system(cmd.c_str()) != 0) {}
  return d;
}

bool tables_identical(const spectrum::SpectrumTable& a, const spectrum::SpectrumTable& b) {
  if (a.model_id != b.model_id || a.lambda_max != b.lambda_max ||
      a.entries.size() != b.entries.size())
    return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].lambda != b.entries[i].lambda || a.entries[i].mult != b.entries[i].mult)
      return false;
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("cache");

TEST_CASE("write then read returns the bit-identical table") {
  auto m = geometry::ManifoldModel::preset("torus-2pi");
  auto t = spectrum::torus_spectrum(m, 40.0);
  std::string path = "/tmp/wscache-roundtrip-" + std::to_string(getpid()) + ".tbl";
  cache::write_spectrum_cache(path, t);
  auto back = cache::read_spectrum_cache(path);
  CHECK(tables_identical(t, back));
  std::remove(path.c_str());
}

TEST_CASE("environment variable redirects the cache directory") {
  std::string d = fresh_dir("env");
  CacheEnvGuard guard(d);
  CHECK(cache::cache_directory() == d);

  auto m = geometry::ManifoldModel::preset("torus-2pi");
  auto t = cache::load_or_compute(m, 25.0);
  std::string path = cache::spectrum_cache_path(t.model_id, 25.0);
  CHECK(path.rfind(d, 0) == 0);
  CHECK(std::ifstream(path).good());

  auto again = cache::load_or_compute(m, 25.0);
  CHECK(tables_identical(t, again));
}

TEST_CASE("a corrupted file is recomputed and replaced") {
  std::string d = fresh_dir("corrupt");
  CacheEnvGuard guard(d);

  auto m = geometry::ManifoldModel::preset("sphere");
  auto t = cache::load_or_compute(m, 30.0);
  std::string path = cache::spectrum_cache_path(t.model_id, 30.0);

  {
    std::ofstream f(path, std::ios::trunc);
    f << "not a spectrum file\n";
  }
  auto healed = cache::load_or_compute(m, 30.0);
  CHECK(tables_identical(t, healed));
  auto reread = cache::read_spectrum_cache(path);
  CHECK(tables_identical(t, reread));
}

TEST_CASE("reader rejects malformed files as io errors") {
  std::string base = "/tmp/wscache-bad-" + std::to_string(getpid());
  auto expect_io = [](const std::string& path) {
    try {
      cache::read_spectrum_cache(path);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
  };

  {
    std::ofstream f(base + "-magic");
    f << "WEYLSCOPE-SPECTRUM v9\n{}\n10\n1,1\n";
  }
  expect_io(base + "-magic");

  {
    std::ofstream f(base + "-order");
    f << "WEYLSCOPE-SPECTRUM v1\n{}\n10\n2,1\n1,1\n";
  }
  expect_io(base + "-order");

  {
    std::ofstream f(base + "-mult");
    f << "WEYLSCOPE-SPECTRUM v1\n{}\n10\n1,0\n";
  }
  expect_io(base + "-mult");

  expect_io(base + "-missing");

  for (const char* suffix : {"-magic", "-order", "-mult"})
    std::remove((base + suffix).c_str());
}

TEST_CASE("paths separate models and cutoffs") {
  auto torus = geometry::ManifoldModel::preset("torus-2pi");
  auto sphere = geometry::ManifoldModel::preset("sphere");
  std::string a = cache::spectrum_cache_path(torus.descriptor(), 50.0);
  std::string b = cache::spectrum_cache_path(sphere.descriptor(), 50.0);
  std::string c = cache::spectrum_cache_path(torus.descriptor(), 60.0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(b != c);
}

TEST_SUITE_END();
