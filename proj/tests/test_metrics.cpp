#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "crps_oracle.hpp"
#include "wxscale/error.hpp"
#include "wxscale/metrics.hpp"

using namespace wxscale;

namespace {

EvalConfig mixed_config() {
  EvalConfig cfg;
  cfg.variables.push_back({"2t", VariableKind::Surface, {}, 1.0, 0.7});
  cfg.variables.push_back({"msl", VariableKind::Surface, {}, 0.1, 1.3});
  cfg.variables.push_back({"z", VariableKind::UpperAir, {50, 500, 850}, 1.0, 2.0});
  return cfg;
}

std::vector<std::string> columns_of(const EvalConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& v : cfg.variables) {
    for (auto& c : v.column_names()) out.push_back(c);
  }
  return out;
}

FieldBatch random_field(std::mt19937_64& rng, std::size_t batch, std::size_t lat, std::size_t lon,
                        std::vector<std::string> cols) {
  std::normal_distribution<double> z(0.0, 3.0);
  FieldBatch f(batch, lat, lon, std::move(cols));
  for (double& v : f.values()) v = z(rng);
  return f;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("area weights") {
  TEST_CASE("mean one and non-negative") {
    for (auto [lat, lon] : {std::pair{2, 1}, {3, 1}, {721, 4}, {32, 64}, {181, 360}}) {
      const auto a = area_weights(lat, lon);
      CHECK(a.cells() == static_cast<std::size_t>(lat * lon));
      CHECK(std::fabs(mean(a.values) - 1.0) < 1e-12);
      CHECK(std::all_of(a.values.begin(), a.values.end(), [](double v) { return v >= 0; }));
    }
  }

  TEST_CASE("poles and equator") {
    const auto a = area_weights(3, 1);
    CHECK(a.values == std::vector<double>{0.0, 3.0, 0.0});
    const double eq[] = {0.0, 0.0, 0.0};
    const auto flat = area_weights_from_latitudes(eq, 2);
    for (double v : flat.values) CHECK(v == 1.0);
  }

  TEST_CASE("invalid grids") {
    CHECK_THROWS_AS(area_weights(1, 4), Error);
    const double poles[] = {90.0, -90.0};
    CHECK_THROWS_AS(area_weights_from_latitudes(poles, 1), Error);
  }
}

TEST_SUITE("weighted loss") {
  TEST_CASE("hand cases") {
    EvalConfig cfg;
    cfg.variables.push_back({"2t", VariableKind::Surface, {}, 1.0, 1.0});
    AreaWeights a{1, 2, {1.0, 1.0}};
    FieldBatch truth(1, 1, 2, {"2t"}, {0.0, 0.0});
    FieldBatch pred(1, 1, 2, {"2t"}, {1.0, 3.0});
    CHECK(weighted_mse(pred, truth, a, cfg) == 5.0);

    AreaWeights b{1, 2, {0.5, 1.5}};
    FieldBatch p2(1, 1, 2, {"2t"}, {2.0, 0.0});
    CHECK(per_variable_mse(p2, truth, b, "2t") == 1.0);
  }

  TEST_CASE("identical fields give zero and a uniform offset gives its square") {
    std::mt19937_64 rng(1);
    const auto cfg = mixed_config();
    const auto truth = random_field(rng, 3, 9, 8, columns_of(cfg));
    const auto a = area_weights(9, 8);
    CHECK(weighted_mse(truth, truth, a, cfg) == 0.0);
    EvalConfig unit = cfg;
    for (auto& v : unit.variables) v.inv_variance = 1.0;
    for (double delta : {0.5, 1.0, 3.25, 1e-3}) {
      FieldBatch pred = truth;
      for (double& v : pred.values()) v += delta;
      // the offset is applied in floating point, so compare to the realized errors
      CHECK(std::fabs(weighted_mse(pred, truth, a, unit) - delta * delta) <= 1e-12 * std::max(1.0, delta * delta) + 1e-14);
      for (std::size_t j = 0; j < truth.columns().size(); ++j) {
        CHECK(per_variable_mse(pred, truth, a, j) == doctest::Approx(delta * delta).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("level weights sum to one") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> p(1.0, 1000.0);
    for (int t = 0; t < 200; ++t) {
      VariableSpec v{"q", VariableKind::UpperAir, {}, 1.0, 1.0};
      for (std::size_t k = 0, n = 1 + rng() % 13; k < n; ++k) v.levels.push_back(p(rng));
      const auto w = v.level_weights();
      CHECK(std::fabs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("permutation invariance on random tensors") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const auto cfg = mixed_config();
      const auto cols = columns_of(cfg);
      const std::size_t lat = 3 + rng() % 6, lon = 1 + rng() % 7, batch = 1 + rng() % 3;
      const auto pred = random_field(rng, batch, lat, lon, cols);
      const auto truth = random_field(rng, batch, lat, lon, cols);
      const auto a = area_weights(lat, lon);
      const double base = weighted_mse(pred, truth, a, cfg);

      // variables in another order, with the columns stored in another order too
      EvalConfig shuffled = cfg;
      std::shuffle(shuffled.variables.begin(), shuffled.variables.end(), rng);
      std::vector<std::size_t> col_perm(cols.size());
      std::iota(col_perm.begin(), col_perm.end(), 0);
      std::shuffle(col_perm.begin(), col_perm.end(), rng);
      std::vector<std::string> new_cols;
      for (std::size_t j : col_perm) new_cols.push_back(cols[j]);
      FieldBatch p2(batch, lat, lon, new_cols), t2(batch, lat, lon, new_cols);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < lat * lon; ++i) {
          for (std::size_t j = 0; j < cols.size(); ++j) {
            p2.at(b, i, j) = pred.at(b, i, col_perm[j]);
            t2.at(b, i, j) = truth.at(b, i, col_perm[j]);
          }
        }
      }
      CHECK(weighted_mse(p2, t2, a, shuffled) == base);

      // cells permuted together with their weights
      std::vector<std::size_t> cell_perm(lat * lon);
      std::iota(cell_perm.begin(), cell_perm.end(), 0);
      std::shuffle(cell_perm.begin(), cell_perm.end(), rng);
      FieldBatch p3(batch, lat, lon, cols), t3(batch, lat, lon, cols);
      AreaWeights a3 = a;
      for (std::size_t i = 0; i < cell_perm.size(); ++i) {
        a3.values[i] = a.values[cell_perm[i]];
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < cols.size(); ++j) {
            p3.at(b, i, j) = pred.at(b, cell_perm[i], j);
            t3.at(b, i, j) = truth.at(b, cell_perm[i], j);
          }
        }
      }
      CHECK(weighted_mse(p3, t3, a3, cfg) == base);
    }
  }

  TEST_CASE("errors scaled by k scale the loss by k^2") {
    std::mt19937_64 rng(3);
    const auto cfg = mixed_config();
    for (int trial = 0; trial < 20; ++trial) {
      const auto truth = random_field(rng, 2, 5, 4, columns_of(cfg));
      const auto pred = random_field(rng, 2, 5, 4, columns_of(cfg));
      const auto a = area_weights(5, 4);
      const double base = weighted_mse(pred, truth, a, cfg);
      for (double k : {0.5, 2.0, 8.0, 0.1}) {
        FieldBatch scaled = truth;
        for (std::size_t i = 0; i < scaled.values().size(); ++i) {
          scaled.values()[i] += k * (pred.values()[i] - truth.values()[i]);
        }
        CHECK(weighted_mse(scaled, truth, a, cfg) == doctest::Approx(k * k * base).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("thread count does not change the result") {
    std::mt19937_64 rng(8);
    const auto cfg = mixed_config();
    const auto truth = random_field(rng, 9, 7, 5, columns_of(cfg));
    const auto pred = random_field(rng, 9, 7, 5, columns_of(cfg));
    const auto a = area_weights(7, 5);
    const double one = weighted_mse(pred, truth, a, cfg, 1);
    for (unsigned t : {2u, 3u, 8u}) CHECK(weighted_mse(pred, truth, a, cfg, t) == one);
  }

  TEST_CASE("validation") {
    const auto cfg = mixed_config();
    const auto cols = columns_of(cfg);
    FieldBatch a(1, 2, 2, cols), b(1, 2, 3, cols);
    CHECK_THROWS_AS(weighted_mse(a, b, area_weights(2, 2), cfg), Error);
    FieldBatch c = a;
    c.values()[0] = std::nan("");
    CHECK_THROWS_AS(weighted_mse(c, a, area_weights(2, 2), cfg), Error);
    CHECK_THROWS_AS(per_variable_mse(a, a, area_weights(2, 2), "tp"), Error);
    EvalConfig zero = cfg;
    for (auto& v : zero.variables) v.weight = 0;
    CHECK_THROWS_AS(zero.validate(), Error);
  }
}

TEST_SUITE("crps") {
  TEST_CASE("hand cases") {
    CHECK(crps_ensemble({{3.0}, 1.0}) == 2.0);
    CHECK(crps_ensemble({{0.0, 2.0}, 1.0}) == 0.5);
    CHECK(crps_ensemble({{4.0, 4.0, 4.0}, 4.0}) == 0.0);
    CHECK(std::fabs(crps_integral_oracle({{0.0, 2.0}, 1.0}, 1e-4) - 0.5) <= 1e-3);
    CHECK(crps_integral_oracle({{7.0}, 7.0}, 1e-3) == 0.0);
    CHECK_THROWS_AS(crps_ensemble({{}, 1.0}), Error);
  }

  TEST_CASE("single member equals absolute error") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0, 10);
    for (int i = 0; i < 1000; ++i) {
      const double x = z(rng), y = z(rng);
      CHECK(crps_ensemble({{x}, y}) == std::fabs(x - y));
    }
  }

  TEST_CASE("estimator equals the piecewise-exact integral") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 500; ++i) {
      EnsembleSample s;
      for (std::size_t k = 0, n = 1 + rng() % 60; k < n; ++k) s.members.push_back(z(rng));
      s.observation = z(rng);
      CHECK(static_cast<long double>(crps_ensemble(s)) ==
            doctest::Approx(static_cast<double>(oracle::crps_piecewise(s.members, s.observation))).epsilon(1e-12));
    }
  }

  TEST_CASE("quadrature oracle agrees with the estimator") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 30; ++i) {
      EnsembleSample s;
      for (int k = 0; k < 10; ++k) s.members.push_back(z(rng));
      s.observation = z(rng);
      CHECK(std::fabs(crps_integral_oracle(s, 1e-5) - crps_ensemble(s)) <= 1e-6);
    }
  }

  TEST_CASE("non-negative, translation invariant, degree-one homogeneous") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z(0, 2);
    for (int i = 0; i < 300; ++i) {
      EnsembleSample s;
      for (std::size_t k = 0, n = 1 + rng() % 20; k < n; ++k) s.members.push_back(z(rng));
      s.observation = z(rng);
      const double base = crps_ensemble(s);
      CHECK(base >= 0);
      const double c = z(rng) * 10, k = 0.1 + std::fabs(z(rng));
      EnsembleSample shifted = s, scaled = s;
      for (double& m : shifted.members) m += c;
      shifted.observation += c;
      for (double& m : scaled.members) m *= k;
      scaled.observation *= k;
      CHECK(crps_ensemble(shifted) == doctest::Approx(base).epsilon(1e-9));
      CHECK(crps_ensemble(scaled) == doctest::Approx(k * base).epsilon(1e-12));
    }
  }

  TEST_CASE("fair variant") {
    // {0, 2} vs 1: 1 - 4 / (2 * 2 * 1) = 0
    CHECK(crps_ensemble({{0.0, 2.0}, 1.0}, true) == 0.0);
    CHECK_THROWS_AS(crps_ensemble({{1.0}, 1.0}, true), Error);
  }
}
