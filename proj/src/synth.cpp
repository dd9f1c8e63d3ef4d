#include "wxscale/synth.hpp"

#include <cmath>
#include <random>

#include "wxscale/error.hpp"

namespace wxscale {

namespace {

// Box-Muller on mt19937_64 draws, so streams match across standard libraries
// (std::normal_distribution is implementation-defined).
class Noise {
 public:
  Noise(double sigma, std::uint64_t seed) : sigma_(sigma), rng_(seed) {}

  double factor() {
    if (sigma_ == 0) return 1.0;
    return std::exp(sigma_ * normal());
  }

 private:
  double uniform() {
    // (0, 1]: 53 random bits
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  }
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  double sigma_;
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0;
};

std::vector<std::uint64_t> log_spaced(std::uint64_t lo, std::uint64_t hi, std::size_t n) {
  if (lo == 0 || hi < lo || n < 2) throw Error(ErrorCode::InvalidInput, "need 0 < min <= max and >= 2 points");
  std::vector<std::uint64_t> out;
  const double l0 = std::log(static_cast<double>(lo)), l1 = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.push_back(static_cast<std::uint64_t>(std::llround(v)));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

void require_noise(double sigma) {
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidInput, "noise must be finite and >= 0");
}

RunRecord base_record(std::string run_id, std::string model_id, std::uint64_t step, std::uint64_t samples) {
  RunRecord r;
  r.run_id = std::move(run_id);
  r.model_id = std::move(model_id);
  r.step = step;
  r.samples_seen = samples;
  r.batch_size = 1;
  r.data_tb = samples_to_tb(samples, SampleSizeConfig{});
  return r;
}

struct GridPoint {
  std::uint64_t n;
  std::uint64_t d;
};

std::vector<GridPoint> budget_grid(double budget, int span, int per_decade) {
  if (!(budget > 0) || span < 1 || per_decade < 1) {
    throw Error(ErrorCode::InvalidInput, "budgets must be > 0 and span/per_decade >= 1");
  }
  const double centre = std::sqrt(budget / 6.0);
  std::vector<GridPoint> out;
  for (int k = -span; k <= span; ++k) {
    const double n = std::round(centre * std::pow(10.0, static_cast<double>(k) / per_decade));
    const double d = std::round(budget / (6.0 * n));
    if (n < 1 || d < 1) throw Error(ErrorCode::InvalidInput, "budget too small for the requested grid");
    out.push_back({static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d)});
  }
  return out;
}

}  // namespace

RunLog synth_power_data(const PowerDataSpec& spec) {
  require_noise(spec.noise);
  if (!(spec.prefactor > 0)) throw Error(ErrorCode::InvalidInput, "prefactor must be > 0");
  Noise noise(spec.noise, spec.seed);
  RunLog log;
  log.sample_size = SampleSizeConfig{};
  std::uint64_t step = 0;
  for (std::uint64_t x : log_spaced(spec.x_min, spec.x_max, spec.points)) {
    RunRecord r = base_record("power-data", "synthetic", ++step, x);
    r.val_loss = spec.prefactor * std::pow(static_cast<double>(x), -spec.exponent) * noise.factor();
    r.params = spec.params;
    r.compute_flops = Exact(6) * Exact(spec.params) * Exact(x);
    log.records.push_back(std::move(r));
  }
  return log;
}

RunLog synth_power_params(const PowerParamsSpec& spec) {
  require_noise(spec.noise);
  if (!(spec.prefactor > 0) || spec.samples.empty()) {
    throw Error(ErrorCode::InvalidInput, "prefactor must be > 0 and at least one sample level given");
  }
  Noise noise(spec.noise, spec.seed);
  RunLog log;
  log.sample_size = SampleSizeConfig{};
  const auto sizes = log_spaced(spec.n_min, spec.n_max, spec.points);
  double prefactor = spec.prefactor;
  for (std::size_t g = 0; g < spec.samples.size(); ++g) {
    const std::uint64_t d = spec.samples[g];
    for (std::uint64_t n : sizes) {
      const std::string id = "n" + std::to_string(n);
      RunRecord r = base_record(id + "-d" + std::to_string(d), id, 1, d);
      r.val_loss = prefactor * std::pow(static_cast<double>(n), -spec.exponent) * noise.factor();
      r.params = n;
      r.compute_flops = Exact(6) * Exact(n) * Exact(d);
      log.records.push_back(std::move(r));
    }
    prefactor *= spec.shift;
  }
  return log;
}

RunLog synth_chinchilla(const ChinchillaSpec& spec) {
  require_noise(spec.noise);
  Noise noise(spec.noise, spec.seed);
  RunLog log;
  log.sample_size = SampleSizeConfig{};
  for (std::size_t bi = 0; bi < spec.budgets.size(); ++bi) {
    int k = -spec.span;
    for (const auto& p : budget_grid(spec.budgets[bi], spec.span, spec.per_decade)) {
      const std::string id = "c" + std::to_string(bi) + "-k" + std::to_string(k++);
      RunRecord r = base_record(id, "n" + std::to_string(p.n), 1, p.d);
      const double n = static_cast<double>(p.n), d = static_cast<double>(p.d);
      r.val_loss = (spec.e + spec.a * std::pow(n, -spec.alpha) + spec.b * std::pow(d, -spec.beta)) * noise.factor();
      r.params = p.n;
      r.compute_flops = Exact(6) * Exact(p.n) * Exact(p.d);
      log.records.push_back(std::move(r));
    }
  }
  return log;
}

RunLog synth_monotone(const MonotoneSpec& spec) {
  RunLog log;
  log.sample_size = SampleSizeConfig{};
  for (std::size_t bi = 0; bi < spec.budgets.size(); ++bi) {
    int k = -spec.span;
    for (const auto& p : budget_grid(spec.budgets[bi], spec.span, spec.per_decade)) {
      const std::string id = "m" + std::to_string(bi) + "-k" + std::to_string(k++);
      RunRecord r = base_record(id, "n" + std::to_string(p.n), 1, p.d);
      r.val_loss = spec.e + spec.b * std::pow(static_cast<double>(p.d), -spec.beta);
      r.params = p.n;
      r.compute_flops = Exact(6) * Exact(p.n) * Exact(p.d);
      log.records.push_back(std::move(r));
    }
  }
  return log;
}

}  // namespace wxscale
