#pragma once

#include <cstdint>
#include <vector>

#include "wxscale/runstore.hpp"

namespace wxscale {

/// Seeded synthetic run logs. Noise is multiplicative lognormal,
/// loss * exp(sigma * z), z standard normal; sigma = 0 gives exact curves.

// One run; loss = prefactor * samples^(-exponent) at `points` log-spaced
// integer sample counts in [x_min, x_max].
struct PowerDataSpec {
  double prefactor = 2.0;
  double exponent = 0.51;
  std::uint64_t x_min = 1000;
  std::uint64_t x_max = 1000000;
  std::size_t points = 20;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t params = 1000000;
};
RunLog synth_power_data(const PowerDataSpec& spec);

// One run per model size; loss = prefactor_g * N^(-exponent) where group g
// trains on samples[g] and prefactor_g = prefactor * shift^g.
struct PowerParamsSpec {
  double prefactor = 1.0;
  double exponent = 0.3;
  std::uint64_t n_min = 100000;
  std::uint64_t n_max = 100000000;
  std::size_t points = 8;
  std::vector<std::uint64_t> samples = {100000};
  double shift = 0.8;
  double noise = 0.0;
  std::uint64_t seed = 1;
};
RunLog synth_power_params(const PowerParamsSpec& spec);

// loss = e + a N^-alpha + b D^-beta with C = 6 N D (D in samples). Each budget
// gets one run per grid point N = sqrt(C/6) * 10^(k / per_decade),
// k = -span..span, with D = round(C / (6N)) and C recomputed exactly.
struct ChinchillaSpec {
  double e = 0.2, a = 5.0, alpha = 0.5, b = 3.0, beta = 0.5;
  std::vector<double> budgets = {6e9, 6e10, 6e11};
  int span = 8;
  int per_decade = 8;
  double noise = 0.0;
  std::uint64_t seed = 1;
};
RunLog synth_chinchilla(const ChinchillaSpec& spec);

// Losses that only decrease with D at each budget: loss = e + b D^-beta,
// so no curve has an interior minimum.
struct MonotoneSpec {
  double e = 0.2, b = 3.0, beta = 0.2;
  std::vector<double> budgets = {6e10};
  int span = 8;
  int per_decade = 8;
};
RunLog synth_monotone(const MonotoneSpec& spec);

}  // namespace wxscale
