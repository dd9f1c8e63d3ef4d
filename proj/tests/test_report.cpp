#include <doctest.h>

#include <random>
#include <sstream>

#include "wxscale/error.hpp"
#include "wxscale/report.hpp"
#include "wxscale/tensor_io.hpp"

using namespace wxscale;

TEST_SUITE("csv") {
  TEST_CASE("round trip with quoting and full-precision numbers") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1e9, 1e9);
    Table t{{"name", "x", "note"}, {}};
    for (int i = 0; i < 50; ++i) {
      t.rows.push_back({"row" + std::to_string(i), format_double(u(rng) / 3.0), i % 2 ? "a,\"b\"" : ""});
    }
    std::stringstream io;
    write_csv(io, t);
    const Table back = read_csv(io);
    CHECK(back == t);
    for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(parse_double(back.rows[i][1]) == parse_double(t.rows[i][1]));
  }

  TEST_CASE("ragged rows carry their line") {
    std::istringstream in("a,b\n1,2\n3\n");
    try {
      read_csv(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

TEST_SUITE("rendering") {
  TEST_CASE("digests") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    nlohmann::ordered_json a{{"x", 1}, {"y", "z"}};
    CHECK(digest_inputs(a) == digest_inputs(nlohmann::ordered_json::parse(a.dump())));
    CHECK(digest_inputs(a).rfind("sha256:", 0) == 0);
    a["x"] = 2;
    CHECK(digest_inputs(a) != digest_inputs(nlohmann::ordered_json{{"x", 1}, {"y", "z"}}));
  }

  TEST_CASE("json and text contain the header fields") {
    Report r;
    r.kind = "params";
    r.inputs_digest = "sha256:00";
    r.tool_version = tool_version();
    r.body = {{"params", 5}, {"rows", nlohmann::ordered_json::array({{{"a", 1}, {"b", "x"}}})}};
    const auto j = nlohmann::json::parse(render_json(r));
    CHECK(j["kind"] == "params");
    CHECK(j["inputs_digest"] == "sha256:00");
    CHECK(j["body"]["params"] == 5);
    const std::string text = render_text(r);
    CHECK(text.find("params") != std::string::npos);
    CHECK(text.find("sha256:00") != std::string::npos);
    CHECK(render_text(r) == text);
  }
}
