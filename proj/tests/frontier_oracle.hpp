#pragma once

// Ground-truth compute-optimal exponents for L = e + A N^-alpha + B D^-beta
// under C = 6 N D, by direct minimisation over N at each budget.

#include <cmath>
#include <vector>

namespace oracle {

struct Surface {
  double e = 0.2, a = 5.0, alpha = 0.5, b = 3.0, beta = 0.5;
  double loss(double n, double d) const { return e + a * std::pow(n, -alpha) + b * std::pow(d, -beta); }
};

// N minimising the loss at budget c: coarse log grid, then golden section.
inline double optimal_params(const Surface& s, double c) {
  auto f = [&](double ln_n) {
    const double n = std::exp(ln_n);
    return s.loss(n, c / (6.0 * n));
  };
  const double lo = std::log(1.0), hi = std::log(c / 6.0);
  double best = lo, best_v = f(lo);
  const int steps = 20000;
  for (int i = 1; i <= steps; ++i) {
    const double x = lo + (hi - lo) * i / steps;
    const double v = f(x);
    if (v < best_v) best_v = v, best = x;
  }
  const double h = (hi - lo) / steps;
  double l = best - h, r = best + h;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double m1 = r - g * (r - l), m2 = l + g * (r - l);
    if (f(m1) < f(m2)) r = m2; else l = m1;
  }
  return std::exp((l + r) / 2);
}

struct Exponents {
  double a = 0, b = 0;
};

// Least-squares slopes of ln N_opt and ln D_opt against ln C.
inline Exponents frontier_exponents(const Surface& s, const std::vector<double>& budgets) {
  std::vector<double> x, yn, yd;
  for (double c : budgets) {
    const double n = optimal_params(s, c);
    x.push_back(std::log(c));
    yn.push_back(std::log(n));
    yd.push_back(std::log(c / (6.0 * n)));
  }
  auto slope = [&](const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size(), my /= x.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
  };
  return {slope(yn), slope(yd)};
}

}  // namespace oracle
