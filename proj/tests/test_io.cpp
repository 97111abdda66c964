#include <filesystem>
#include <random>

#include "doctest.h"
#include "hetlayer/io.hpp"

using namespace hetlayer;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hetlayer_test_io";
  fs::create_directories(dir);
  return dir / name;
}

Field2D random_field(int order) {
  Field2D u(Grid2D{Grid1D(1.5, 5), Grid1D(3.0, 7)}, 2);
  u.order = order;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  for (double& v : u.values) v = d(rng);
  return u;
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(12.0) == "12");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("FNV-1a reference values") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(fnv1a("bar", fnv1a("foo")) == fnv1a("foobar"));
}

TEST_CASE("profile round trip") {
  Path1D e(Grid1D(2.0, 9), 2);
  for (std::size_t j = 0; j < e.size(); ++j) {
    e.at(j)[0] = std::tanh(e.grid.node(j));
    e.at(j)[1] = 0.1 * j;
  }
  write_profile_csv(scratch("p.csv"), e);
  const std::string text = read_file(scratch("p.csv"));
  CHECK(text.rfind("x,u1,u2\n-2,", 0) == 0);
  Path1D back = read_profile_csv(scratch("p.csv"));
  CHECK(back.grid == e.grid);
  CHECK(back.values == e.values);
}

TEST_CASE("profile errors name the line") {
  write_file(scratch("bad.csv"), "x,u1,u2\n-1,0,0\n0,0\n1,0,0\n");
  try {
    read_profile_csv(scratch("bad.csv"));
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_file(scratch("bad2.csv"), "t,u1\n-1,0\n0,0\n1,0\n");
  CHECK_THROWS_AS(read_profile_csv(scratch("bad2.csv")), FormatError);
}

TEST_CASE("orbit export uses t in place of x") {
  std::vector<double> a{0.0, 0.0, 0.0}, b{1.0, 1.0, 1.0};
  auto V = segment_orbit(a, b, {-1.0, 2.0});
  write_orbit_csv(scratch("o.csv"), V);
  const std::string text = read_file(scratch("o.csv"));
  CHECK(text.rfind("t,u1,u2,u3\n-1,0,0,0\n0,0,0,0\n1,1,1,1\n", 0) == 0);
}

TEST_CASE("field round trip in both formats") {
  for (int order : {2, 4}) {
    Field2D u = random_field(order);
    write_field_csv(scratch("f.csv"), u);
    write_field_binary(scratch("f.bin"), u);
    const std::string head = order == 4 ? "2 5 7 1.5 3 order=4\n" : "2 5 7 1.5 3\n";
    CHECK(read_file(scratch("f.csv")).rfind(head + "-1.5,-3,", 0) == 0);
    CHECK(read_file(scratch("f.bin")).rfind(head, 0) == 0);
    for (const char* name : {"f.csv", "f.bin"}) {
      Field2D back = read_field(scratch(name));
      CHECK(back.grid == u.grid);
      CHECK(back.order == order);
      CHECK(back.values == u.values);
    }
  }
}

TEST_CASE("malformed fields are rejected") {
  Field2D u = random_field(2);
  write_field_csv(scratch("f.csv"), u);
  std::string text = read_file(scratch("f.csv"));

  write_file(scratch("short.csv"), text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  CHECK_THROWS_AS(read_field(scratch("short.csv")), FormatError);
  write_file(scratch("tag.csv"), "2 5 7 1.5 3 order=3\n");
  CHECK_THROWS_AS(read_field(scratch("tag.csv")), FormatError);
  write_file(scratch("head.csv"), "2 5 7\n");
  CHECK_THROWS_AS(read_field(scratch("head.csv")), FormatError);
  write_file(scratch("grid.csv"), "2 5 7 1.5 3\n0,0,1,1\n");
  CHECK_THROWS_AS(read_field(scratch("grid.csv")), FormatError);

  write_field_binary(scratch("f.bin"), u);
  std::string bin = read_file(scratch("f.bin"));
  write_file(scratch("trunc.bin"), bin.substr(0, bin.size() - 8));
  CHECK_THROWS_AS(read_field(scratch("trunc.bin")), FormatError);
  CHECK_THROWS_AS(read_field(scratch("missing.csv")), FormatError);
}
