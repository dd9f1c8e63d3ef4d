#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "wxscale/error.hpp"
#include "wxscale/tensor_io.hpp"

using namespace wxscale;

namespace {

std::size_t parse_line_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_tensor(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("tensor files") {
  TEST_CASE("bit-exact round trip") {
    std::mt19937_64 rng(12);
    FieldBatch f(2, 3, 4, {"2t", "z500", "msl"});
    for (double& v : f.values()) {
      std::uint64_t bits = rng();
      std::memcpy(&v, &bits, sizeof v);
      if (!std::isfinite(v)) v = 1.0 / 3.0;
    }
    f.values()[0] = -0.0;
    f.values()[1] = std::numeric_limits<double>::denorm_min();
    std::stringstream io;
    write_tensor(io, f);
    const FieldBatch back = read_tensor(io);
    CHECK(back.columns() == f.columns());
    CHECK(std::memcmp(back.values().data(), f.values().data(), f.values().size() * sizeof(double)) == 0);
  }

  TEST_CASE("diagnostics carry line numbers") {
    const std::string head = "wxtensor 1\nlat_count 1\nlon_count 2\nbatch 1\ncolumns a,b\nvalues\n";
    CHECK(parse_line_of("wxtensor 2\n") == 1);
    CHECK(parse_line_of("wxtensor 1\nlat_count x\n") == 2);
    CHECK(parse_line_of(head + "1,2\n3\n") == 8);
    CHECK(parse_line_of(head + "1,2\n3,nan\n") == 8);
    CHECK(parse_line_of(head + "1,2\n3,abc\n") == 8);
    CHECK(parse_line_of(head + "1,2\n") == 8);
    CHECK(parse_line_of(head + "1,2\n3,4\n5,6\n") == 9);
  }

  TEST_CASE("double formatting") {
    for (double v : {0.1, 1e-300, 123456789.125, -2.5}) CHECK(parse_double(format_double(v)) == v);
    CHECK_THROWS_AS(parse_double("1.5x"), Error);
  }

  TEST_CASE("variables document") {
    const auto cfg = eval_config_from_json(nlohmann::json::parse(R"({
      "variables": [
        {"name": "10u", "kind": "surface"},
        {"name": "t", "kind": "upper_air", "levels": [500, 850], "weight": 1.0, "sigma": 2.0}
      ]})"));
    REQUIRE(cfg.variables.size() == 2);
    CHECK(cfg.variables[0].weight == 0.1);
    CHECK(cfg.variables[1].inv_variance == 0.25);
    CHECK(cfg.variables[1].column_names() == std::vector<std::string>{"t500", "t850"});
    CHECK_THROWS_AS(eval_config_from_json(nlohmann::json::parse(R"({"variables": [{"name": "x", "kind": "deep"}]})")),
                    Error);
  }
}
