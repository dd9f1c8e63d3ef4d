#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "config_gen.hpp"
#include "flop_oracle.hpp"
#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"

using namespace wxscale;

namespace {

oracle::Int to_int(Exact e) { return oracle::Int(e.to_string()); }

ModelShape shape(Arch arch, std::uint64_t width, std::vector<std::uint64_t> depth) {
  ModelShape s;
  s.arch = arch;
  s.width = width;
  s.depth = std::move(depth);
  return s;
}

GridSpec graphcast_tiny() {
  GridSpec g;
  g.n_grid = 2;
  g.n_mesh = 1;
  g.e_mesh = 1;
  return g;
}

}  // namespace

TEST_SUITE("graphcast params") {
  TEST_CASE("published table rows round to the printed size") {
    std::ifstream in(std::string(WXSCALE_TEST_DATA) + "/graphcast_table.jsonl");
    REQUIRE(in);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto j = nlohmann::json::parse(line);
      const std::uint64_t w = j["width"], d = j["depth"], printed = j["params"];
      CAPTURE(w);
      CAPTURE(d);
      const std::uint64_t n = param_count_graphcast(w, d);
      CHECK((n + 50000) / 100000 * 100000 == printed);
      ++rows;
    }
    CHECK(rows == 16);
  }

  TEST_CASE("anchors") {
    CHECK(param_count_graphcast(512, 16) == 34156544);
    CHECK(format_millions(param_count_graphcast(512, 16)) == "34.2M");
    CHECK(param_count_graphcast(256, 1) == 1646592);
    CHECK(format_millions(1646592) == "1.6M");
    CHECK(param_count_graphcast(128, 1) == 413696);
    // 56*128 + 46*128^2
    CHECK(param_count_graphcast(128, 4) == 760832);
    CHECK(format_millions(760832) == "0.8M");
    for (std::uint64_t d : {0, 1, 7, 100}) CHECK(param_count_graphcast(0, d) == 0);
  }

  TEST_CASE("discrete derivative in depth is 8w + 7w^2") {
    testgen::Gen g(11);
    for (int i = 0; i < 500; ++i) {
      const std::uint64_t w = g.range(0, 100000), d = g.range(1, 1000);
      CHECK(param_count_graphcast(w, d) - param_count_graphcast(w, d - 1) == 8 * w + 7 * w * w);
    }
  }
}

TEST_SUITE("hand anchors") {
  TEST_CASE("graphcast tiny graph") {
    const auto b = flops_graphcast(shape(Arch::GraphCast, 1, {1}), graphcast_tiny());
    CHECK(b.component("G2M") == Exact(54));
    CHECK(b.component("Mesh") == Exact(30));
    CHECK(b.component("M2G") == Exact(72));
    CHECK(b.forward_total() == Exact(156));
    CHECK(b.train_total() == Exact(468));
  }

  TEST_CASE("graphcast without message passing") {
    const auto b = flops_graphcast(shape(Arch::GraphCast, 1, {0}), graphcast_tiny());
    CHECK(b.component("Mesh") == Exact(0));
    CHECK(b.forward_total() == Exact(54 + 72));
  }

  TEST_CASE("aifs tiny graph") {
    ModelShape s = shape(Arch::AIFS, 1, {1});
    GridSpec g;
    g.channels_in = g.channels_out = 1;
    g.edge_dim = 1;
    g.n_grid = 2;
    g.n_mesh = 4;
    g.e_enc = g.e_dec = 1;
    const auto b = flops_aifs(s, g);
    CHECK(b.component("encoder") == Exact(208));
    // processor 2[16 + 1 + 32 + 16], sparse term W*Nh^2/16 = 1
    CHECK(b.component("processor") == Exact(130));
    // decoder 2[2 + 1 + 8 + 6 + 1 + 16 + 2], 3*W^2*Ng = 6
    CHECK(b.component("decoder") == Exact(72));
    CHECK(b.forward_total() == Exact(410));
    CHECK(b.train_total() == Exact(1230));
    s.depth = {0};
    CHECK(flops_aifs(s, g).component("processor") == Exact(0));
  }

  TEST_CASE("sfno unit grid") {
    GridSpec g;
    g.channels_in = 1;
    const auto b = flops_sfno(shape(Arch::SFNO, 1, {0}), g, 5.0);
    CHECK(b.component("encoder") == Exact(10));
    CHECK(b.component("decoder") == Exact(10));
    CHECK(b.forward_total() == Exact(20));
    CHECK(b.train_total() == Exact(60));
  }

  TEST_CASE("sfno single block on a 2x2 grid") {
    GridSpec g;
    g.h_lo = g.w_lo = 2;
    g.l_max = g.m_max = 1;
    // 5*2*4 + 5*2*4*1 + 4 + 5*2*4*1 + (2*2*4*4 + 6*4*4 + 2*4*2*4)
    const auto blk = sfno_block_flops(2, g, 5.0);
    CHECK(blk.rounded() == Exact(40 + 40 + 4 + 40 + 64 + 96 + 64));
  }

  TEST_CASE("swin degenerate block") {
    const auto b = swin_block_flops(1, 1, 1, 1, 4);
    CHECK(b.attention == Exact(17));
    CHECK(b.mlp == Exact(40));
    CHECK(b.norm == Exact(10));
  }

  TEST_CASE("aurora and pangu with nothing to do") {
    CostConfig cfg = default_cost_config(Arch::Aurora);
    cfg.swin.include_projections = false;
    CHECK(flops_aurora(shape(Arch::Aurora, 256, {0, 0, 0}), cfg).forward_total() == Exact(0));
    cfg = default_cost_config(Arch::Pangu);
    cfg.swin.include_projections = false;
    CHECK(flops_pangu(shape(Arch::Pangu, 192, {0, 0}), cfg).forward_total() == Exact(0));
  }

  TEST_CASE("pangu single stage degenerate block matches aurora") {
    CostConfig cfg = default_cost_config(Arch::Pangu);
    cfg.swin.include_projections = false;
    cfg.swin.stage_width_multipliers = {1, 1, 1, 1};
    cfg.grid.lat_cells = cfg.grid.lon_cells = cfg.grid.patch = cfg.grid.channels_in = 1;
    cfg.head_dim = 1;
    ModelShape s = shape(Arch::Pangu, 1, {1, 0});
    s.window = 1;
    CHECK(flops_pangu(s, cfg).forward_total() == Exact(2 * (17 + 40 + 10)));
  }
}

TEST_SUITE("oracle equivalence") {
  TEST_CASE("random configs per architecture") {
    for (Arch arch : kAllArchs) {
      testgen::Gen gen(1000 + static_cast<int>(arch));
      for (int i = 0; i < 150; ++i) {
        const auto c = gen.make(arch);
        CAPTURE(to_string(arch));
        CAPTURE(i);
        const FlopBreakdown b = flops(c.shape, c.cost);
        const oracle::Count ref = oracle::forward(c.shape, c.cost);
        CHECK(to_int(b.forward_total()) == ref.rounded);
        if (ref.real == 0) {
          CHECK(b.forward_unrounded() == 0);
        } else {
          const oracle::Real rel = abs(oracle::Real(b.forward_unrounded()) - ref.real) / ref.real;
          CHECK(rel <= oracle::Real(1e-12));
        }
      }
    }
  }

  TEST_CASE("default-sized configs") {
    ModelShape s = shape(Arch::GraphCast, 512, {16});
    CostConfig c = default_cost_config(Arch::GraphCast);
    CHECK(to_int(flops(s, c).forward_total()) == oracle::forward(s, c).rounded);

    s = shape(Arch::Aurora, 256, {3, 5, 4});
    c = default_cost_config(Arch::Aurora);
    CHECK(to_int(flops(s, c).forward_total()) == oracle::forward(s, c).rounded);

    s = shape(Arch::Pangu, 288, {2, 6});
    c = default_cost_config(Arch::Pangu);
    CHECK(to_int(flops(s, c).forward_total()) == oracle::forward(s, c).rounded);

    s = shape(Arch::AIFS, 256, {16});
    c = default_cost_config(Arch::AIFS);
    CHECK(to_int(flops(s, c).forward_total()) == oracle::forward(s, c).rounded);

    s = shape(Arch::SFNO, 512, {8});
    c = default_cost_config(Arch::SFNO);
    CHECK(to_int(flops(s, c).forward_total()) == oracle::forward(s, c).rounded);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("train is three forward and forward is the component sum") {
    for (Arch arch : kAllArchs) {
      testgen::Gen gen(77 + static_cast<int>(arch));
      for (int i = 0; i < 200; ++i) {
        const auto c = gen.make(arch);
        const FlopBreakdown b = flops(c.shape, c.cost);
        CHECK(b.train_total() == Exact(3) * b.forward_total());
        Exact sum = 0;
        for (const auto& comp : b.components()) sum += comp.flops;
        CHECK(sum == b.forward_total());
      }
    }
  }

  TEST_CASE("graphcast forward is affine in message-passing steps") {
    testgen::Gen gen(5);
    for (int i = 0; i < 200; ++i) {
      auto c = gen.make(Arch::GraphCast);
      const auto& g = c.cost.grid;
      const Exact w(c.shape.width);
      const Exact slope = Exact(2) * ((Exact(4) * w + Exact(3) * w * w) * Exact(g.n_mesh) +
                                      (Exact(4) * w + Exact(4) * w * w) * Exact(g.e_mesh));
      const Exact f0 = flops(c.shape, c.cost).forward_total();
      c.shape.depth[0] += 1;
      CHECK(flops(c.shape, c.cost).forward_total() - f0 == slope);
    }
  }

  TEST_CASE("monotone in width, depth and grid sizes") {
    for (Arch arch : {Arch::GraphCast, Arch::SFNO, Arch::AIFS}) {
      testgen::Gen gen(300 + static_cast<int>(arch));
      for (int i = 0; i < 100; ++i) {
        const auto base = gen.make(arch);
        const Exact f0 = flops(base.shape, base.cost).forward_total();
        auto grown = base;
        grown.shape.width += gen.range(1, 64);
        CHECK(flops(grown.shape, grown.cost).forward_total() >= f0);
        grown = base;
        grown.shape.depth[0] += 1;
        CHECK(flops(grown.shape, grown.cost).forward_total() >= f0);
        for (std::uint64_t GridSpec::*field : {&GridSpec::n_grid, &GridSpec::n_mesh, &GridSpec::e_mesh,
                                               &GridSpec::e_enc, &GridSpec::e_dec, &GridSpec::h_hi, &GridSpec::w_hi,
                                               &GridSpec::h_lo, &GridSpec::w_lo, &GridSpec::channels_in}) {
          grown = base;
          grown.cost.grid.*field += gen.range(1, 100);
          CHECK(flops(grown.shape, grown.cost).forward_total() >= f0);
        }
      }
    }
    for (Arch arch : {Arch::Aurora, Arch::Pangu}) {
      testgen::Gen gen(400 + static_cast<int>(arch));
      for (int i = 0; i < 100; ++i) {
        const auto base = gen.make(arch);
        const Exact f0 = flops(base.shape, base.cost).forward_total();
        auto grown = base;
        grown.shape.depth[gen.range(0, grown.shape.depth.size() - 1)] += 1;
        CHECK(flops(grown.shape, grown.cost).forward_total() >= f0);
        grown = base;
        grown.cost.grid.channels_in += 1;
        CHECK(flops(grown.shape, grown.cost).forward_total() >= f0);
      }
    }
  }
}

TEST_SUITE("compute and utilization") {
  TEST_CASE("training compute") {
    CHECK(training_compute(468, 1).total == Exact(468));
    CHECK(training_compute(1000000000000ULL, 25000).total == Exact(25000000000000000ULL));
    CHECK(training_compute(156, 1000).total == Exact(156000));
    CHECK_THROWS_AS(training_compute(0, 5), Error);
    CHECK_THROWS_AS(training_compute(Exact::from_raw(~uint128_t(0)), 2), Error);
  }

  TEST_CASE("utilization") {
    CHECK(format_significant(utilization(368, 989).utilization_pct, 3) == "37.2");
    CHECK(format_significant(utilization(33.7, 1979).utilization_pct, 3) == "1.70");
    CHECK(utilization(5, 5).utilization_pct == 100.0);
    CHECK_THROWS_AS(utilization(10, 5), Error);
    CHECK_THROWS_AS(utilization(0, 5), Error);
    CHECK(h100_peak_tflops(32) == 989);
    CHECK(h100_peak_tflops(16) == 1979);
  }
}

TEST_SUITE("validation") {
  TEST_CASE("width must divide by heads") {
    ModelShape s = shape(Arch::Aurora, 100, {1, 1, 1});
    s.heads = 3;
    CHECK_THROWS_AS(flops(s, default_cost_config(Arch::Aurora)), Error);
    CHECK_THROWS_AS(swin_block_flops(4, 10, 3, 1, 4), Error);
  }

  TEST_CASE("wrong depth layout") {
    CHECK_THROWS_AS(flops(shape(Arch::Pangu, 192, {1, 2, 3}), default_cost_config(Arch::Pangu)), Error);
    CHECK_THROWS_AS(flops(shape(Arch::GraphCast, 16, {1, 2}), default_cost_config(Arch::GraphCast)), Error);
  }

  TEST_CASE("sfno alpha must be positive") {
    CHECK_THROWS_AS(flops_sfno(shape(Arch::SFNO, 4, {1}), GridSpec{}, 0.0), Error);
  }

  TEST_CASE("overflow is reported") {
    ModelShape s = shape(Arch::GraphCast, UINT32_MAX, {UINT32_MAX});
    GridSpec g;
    g.n_grid = g.n_mesh = g.e_mesh = UINT64_MAX;
    try {
      flops_graphcast(s, g);
      FAIL("expected overflow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Overflow);
    }
  }
}
