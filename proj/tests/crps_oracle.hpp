#pragma once

// CRPS as the integral of (F(y) - 1{y >= x})^2 with the empirical CDF, which
// is piecewise constant between sorted breakpoints and so integrates exactly.

#include <algorithm>
#include <vector>

namespace oracle {

inline long double crps_piecewise(std::vector<double> members, double obs) {
  std::sort(members.begin(), members.end());
  std::vector<double> breaks(members);
  breaks.push_back(obs);
  std::sort(breaks.begin(), breaks.end());
  const long double n = members.size();
  long double total = 0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const long double a = breaks[k], b = breaks[k + 1];
    if (!(b > a)) continue;
    const long double mid = (a + b) / 2;
    std::size_t below = 0;
    for (double m : members) below += m <= mid;
    const long double f = below / n - (mid >= obs ? 1.0L : 0.0L);
    total += f * f * (b - a);
  }
  return total;
}

}  // namespace oracle
