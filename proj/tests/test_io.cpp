#include "wkam/cache.hpp"
#include "wkam/config.hpp"
#include "wkam/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace wkam;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("wkam-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_SUITE("io") {
  TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("grid file round trip") {
    auto dir = scratch_dir("grid");
    TorusGeometry g(2, 16);
    auto u = ScalarField::sample(g, [](const Vec& x) { return x[0] + 10 * x[1]; });
    write_field(dir / "u.grid", u, 0.25, 42, "u");
    double param = 0;
    auto v = read_field(dir / "u.grid", &param);
    CHECK(param == 0.25);
    CHECK(v.geometry() == g);
    CHECK(v.sup_distance(u) == 0.0);
    CHECK(fs::file_size(dir / "u.grid") == 64 + 8 * g.size());
    auto raw = read_grid(dir / "u.grid");
    CHECK(raw.header.key == 42);
    CHECK(raw.header.tag == "u");
  }

  TEST_CASE("truncated grid file is rejected") {
    auto dir = scratch_dir("trunc");
    std::ofstream(dir / "bad.grid") << "WKAMGRID";
    CHECK_THROWS(read_grid(dir / "bad.grid"));
  }

  TEST_CASE("csv quoting") {
    auto dir = scratch_dir("csv");
    {
      CsvWriter w(dir / "t.csv", {"a", "b"}, "config_hash=x");
      w << std::string("x,y") << std::string("say \"hi\"");
      w.end_row();
      w << 1.5 << 2L;
      w.end_row();
    }
    CHECK(read_text(dir / "t.csv") == "# config_hash=x\na,b\n\"x,y\",\"say \"\"hi\"\"\"\n1.5,2\n");
  }

  TEST_CASE("config round trip and validation") {
    RunConfig c;
    c.system = "pendulum2d";
    c.c = {0.5, 0.25};
    c.grid = 64;
    c.start = {0.1, 0.2};
    CHECK(RunConfig::parse(c.serialize()) == c);
    CHECK(c.solution_hash() == RunConfig::parse(c.serialize()).solution_hash());
    RunConfig d = c;
    d.horizon = 3;
    CHECK(d.solution_hash() == c.solution_hash());
    CHECK(d.full_hash() != c.full_hash());
    CHECK_THROWS_AS(RunConfig::parse("[system]\nsystem = pendulum\nbogus = 1\n"), ConfigError);
    RunConfig bad;
    bad.system = "nope";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("cache fills an entry once") {
    auto dir = scratch_dir("cache");
    Cache cache(dir);
    int fills = 0;
    auto fill = [&](const fs::path& p) {
      ++fills;
      std::ofstream(p / "x.txt") << "1";
    };
    auto e1 = cache.get_or_create("k", fill);
    auto e2 = cache.get_or_create("k", fill);
    CHECK(fills == 1);
    CHECK(e1 == e2);
    CHECK(read_text(e1 / "x.txt") == "1");
    CHECK(cache.contains("k"));
  }
}
