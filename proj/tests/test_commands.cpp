#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "wxscale/commands.hpp"
#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"
#include "wxscale/synth.hpp"
#include "wxscale/tensor_io.hpp"

using namespace wxscale;
namespace fs = std::filesystem;

namespace {

const std::string fixtures = WXSCALE_FIXTURES;
const std::string data = WXSCALE_TEST_DATA;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wxscale_test_commands";
  fs::create_directories(dir);
  return dir / name;
}

ModelShape graphcast(std::uint64_t w, std::uint64_t d) { return ModelShape{Arch::GraphCast, w, {d}}; }

FitRequest fit_request(const fs::path& log, FitMode mode) {
  FitRequest req;
  req.runlog = log;
  req.mode = mode;
  req.bootstrap.resamples = 300;
  req.registry = data + "/shape_registry.jsonl";
  return req;
}

}  // namespace

TEST_SUITE("params and flops") {
  TEST_CASE("params") {
    auto rep = cmd_params({graphcast(512, 16), data + "/shape_registry.jsonl"});
    CHECK(rep.kind == "params");
    CHECK(rep.body["params"] == 34156544);
    CHECK(rep.body["params_millions"] == "34.2M");
    rep = cmd_params({graphcast(128, 4), data + "/shape_registry.jsonl"});
    CHECK(rep.body["params_millions"] == "0.8M");
    rep = cmd_params({ModelShape{Arch::SFNO, 512, {8}}, data + "/shape_registry.jsonl"});
    CHECK(rep.body["params"] == 514500000);
    CHECK(rep.body["source"] == "registry");
    CHECK_THROWS_AS(cmd_params({ModelShape{Arch::SFNO, 7, {8}}, data + "/shape_registry.jsonl"}), Error);
  }

  TEST_CASE("flops tiny graphs") {
    CostConfig c = default_cost_config(Arch::GraphCast);
    c.grid.n_grid = 2;
    c.grid.n_mesh = c.grid.e_mesh = 1;
    auto rep = cmd_flops({graphcast(1, 1), c, 10});
    CHECK(rep.body["forward_total"] == "156");
    CHECK(rep.body["train_total"] == "468");
    CHECK(rep.body["compute_total"] == "4680");
    REQUIRE(rep.table);
    REQUIRE(rep.table->rows.size() == 5);
    CHECK(rep.table->rows[3] == std::vector<std::string>{"forward_total", "156"});
    CHECK(rep.table->rows[4] == std::vector<std::string>{"train_total", "468"});

    CostConfig a = default_cost_config(Arch::AIFS);
    a.grid.channels_in = a.grid.channels_out = a.grid.edge_dim = 1;
    a.grid.n_grid = 2;
    a.grid.n_mesh = 4;
    a.grid.e_enc = a.grid.e_dec = 1;
    rep = cmd_flops({ModelShape{Arch::AIFS, 1, {1}}, a, std::nullopt});
    CHECK(rep.body["forward_total"] == "410");
    CHECK(rep.body["train_total"] == "1230");
    CHECK_FALSE(rep.body.contains("layout_source"));

    rep = cmd_flops({ModelShape{Arch::Pangu, 192, {2, 6}}, default_cost_config(Arch::Pangu), std::nullopt});
    CHECK(rep.body["layout_source"] == "configured convention");
  }
}

TEST_SUITE("fit") {
  TEST_CASE("exact power law echoes the exponent") {
    const auto log = scratch("power.jsonl");
    save_runlog(log, synth_power_data({}));
    auto req = fit_request(log, FitMode::PowerD);
    req.unit = DataUnit::Samples;
    const auto rep = cmd_fit(req);
    CHECK(rep.kind == "fit_power");
    CHECK(std::fabs(rep.body["fits"][0]["exponent"].get<double>() - 0.51) < 1e-10);
    CHECK(rep.table->rows.size() == 20);
  }

  TEST_CASE("isoflop on the chinchilla log") {
    const auto log = scratch("chinchilla.jsonl");
    save_runlog(log, synth_chinchilla({}));
    auto req = fit_request(log, FitMode::IsoFlop);
    req.unit = DataUnit::Samples;
    const auto rep = cmd_fit(req);
    CHECK(rep.kind == "fit_isoflop");
    CHECK_FALSE(rep.insufficient_data);
    CHECK(std::fabs(rep.body["exponents"]["a"].get<double>() - 0.5) < 0.05);
    CHECK(std::fabs(rep.body["exponents"]["sum_ab"].get<double>() - 1.0) < 0.05);
  }

  TEST_CASE("single monotone budget is flagged, not fitted") {
    const auto log = scratch("monotone.jsonl");
    save_runlog(log, synth_monotone({}));
    auto req = fit_request(log, FitMode::IsoFlop);
    req.unit = DataUnit::Samples;
    const auto rep = cmd_fit(req);
    CHECK(rep.insufficient_data);
    CHECK(rep.body["exponents"].is_null());
    CHECK(rep.body["curves"][0]["shape_flag"] == "left_half_only");
  }

  TEST_CASE("too few points names the filter") {
    const auto log = scratch("power_small.jsonl");
    save_runlog(log, synth_power_data({}));
    auto req = fit_request(log, FitMode::PowerD);
    req.filters.models = {"nobody"};
    try {
      cmd_fit(req);
      FAIL("expected TooFewPoints");
    } catch (const Error& e) {
      CHECK(is_insufficient_data(e.code()));
      CHECK(std::string(e.what()).find("nobody") != std::string::npos);
    }
  }

  TEST_CASE("thread count does not change the report") {
    const auto log = scratch("noisy.jsonl");
    ChinchillaSpec spec;
    spec.noise = 0.02;
    save_runlog(log, synth_chinchilla(spec));
    auto one = fit_request(log, FitMode::IsoFlop);
    auto many = one;
    many.bootstrap.threads = 8;
    CHECK(render_json(cmd_fit(one)) == render_json(cmd_fit(many)));
  }
}

TEST_SUITE("metrics and utilization") {
  TEST_CASE("hand-computed fixture") {
    MetricsRequest req;
    req.pred = fixtures + "/pred_5.wxt";
    req.truth = fixtures + "/truth_5.wxt";
    const auto rep = cmd_metrics(req);
    CHECK(rep.body["weighted_loss"] == 5.0);
    req.pred = req.truth;
    CHECK(cmd_metrics(req).body["weighted_loss"] == 0.0);
  }

  TEST_CASE("crps with members and thread independence") {
    FieldBatch truth(1, 3, 2, {"2t"}, {0, 1, 2, 3, 4, 5});
    FieldBatch m1 = truth, m2 = truth;
    for (double& v : m1.values()) v -= 1;
    for (double& v : m2.values()) v += 1;
    write_tensor_file(scratch("truth.wxt"), truth);
    write_tensor_file(scratch("m1.wxt"), m1);
    write_tensor_file(scratch("m2.wxt"), m2);
    MetricsRequest req;
    req.pred = scratch("m1.wxt");
    req.truth = scratch("truth.wxt");
    req.members = {scratch("m1.wxt"), scratch("m2.wxt")};
    const auto rep = cmd_metrics(req);
    // members {x-1, x+1} vs x: 1 - 4/8 = 0.5 in every cell
    CHECK(rep.body["crps"][0]["crps"] == 0.5);
    req.threads = 8;
    CHECK(render_json(cmd_metrics(req)) == render_json(rep));
  }

  TEST_CASE("mismatched tensors") {
    write_tensor_file(scratch("wide.wxt"), FieldBatch(1, 2, 2, {"2t"}));
    MetricsRequest req;
    req.pred = scratch("wide.wxt");
    req.truth = fixtures + "/truth_5.wxt";
    try {
      cmd_metrics(req);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
  }

  TEST_CASE("bundled preset") {
    UtilizationRequest req;
    req.preset = data + "/utilization_h100.json";
    const auto rep = cmd_utilization(req);
    const char* expected[] = {"37.2", "1.70", "0.33", "0.022", "0.017"};
    REQUIRE(rep.body["rows"].size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(rep.body["rows"][i]["display_pct"] == expected[i]);
      CHECK(std::fabs(rep.body["rows"][i]["delta_pp"].get<double>()) <= 0.05);
    }
  }

  TEST_CASE("single rows") {
    UtilizationRequest req;
    req.achieved_tflops = 0.215;
    CHECK(cmd_utilization(req).body["rows"][0]["display_pct"] == "0.022");
    req.achieved_tflops = 989;
    CHECK(cmd_utilization(req).body["rows"][0]["utilization_pct"] == 100.0);
    req.achieved_tflops = 2000;
    CHECK_THROWS_AS(cmd_utilization(req), Error);
  }
}

TEST_SUITE("determinism") {
  TEST_CASE("digest and rendering are stable") {
    const auto a = cmd_params({graphcast(256, 1), data + "/shape_registry.jsonl"});
    const auto b = cmd_params({graphcast(256, 1), data + "/shape_registry.jsonl"});
    CHECK(a.inputs_digest == b.inputs_digest);
    CHECK(render_json(a) == render_json(b));
    CHECK(render_text(a) == render_text(b));
    const auto c = cmd_params({graphcast(256, 2), data + "/shape_registry.jsonl"});
    CHECK(c.inputs_digest != a.inputs_digest);
  }

  TEST_CASE("report tables round trip through csv") {
    const auto log = scratch("csv.jsonl");
    ChinchillaSpec spec;
    spec.noise = 0.02;
    save_runlog(log, synth_chinchilla(spec));
    auto req = fit_request(log, FitMode::IsoFlop);
    const auto rep = cmd_fit(req);
    std::stringstream io;
    write_csv(io, *rep.table);
    CHECK(read_csv(io) == *rep.table);
  }
}
