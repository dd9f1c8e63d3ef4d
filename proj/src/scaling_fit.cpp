#include "wxscale/scaling_fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "wxscale/error.hpp"
#include "wxscale/parallel.hpp"

namespace wxscale {

namespace {

struct Line {
  double slope = 0;
  double intercept = 0;
  double ssr = 0;
  double sst = 0;
};

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Line ols(std::span<const double> u, std::span<const double> v) {
  const double ub = mean_of(u), vb = mean_of(v);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - ub, dv = v[i] - vb;
    sxx += du * du;
    sxy += du * dv;
    syy += dv * dv;
  }
  Line out;
  out.slope = sxy / sxx;
  out.intercept = vb - out.slope * ub;
  out.sst = syy;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = v[i] - (out.intercept + out.slope * u[i]);
    out.ssr += r * r;
  }
  return out;
}

double r_squared(const Line& line) {
  if (line.sst == 0) return line.ssr == 0 ? 1.0 : 0.0;
  return std::clamp(1.0 - line.ssr / line.sst, 0.0, 1.0);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  // rejection sampling; identical on every standard library
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

std::mt19937_64 resample_rng(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return std::mt19937_64(seq);
}

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval percentile_interval(const std::vector<double>& samples, double confidence) {
  const double tail = (1.0 - confidence) / 2.0;
  return {percentile(samples, tail), percentile(samples, 1.0 - tail)};
}

/// Shared-index residual bootstrap of several responses against one regressor.
/// Returns one vector of slope replicates per response (empty when the design
/// leaves no residual degrees of freedom).
std::vector<std::vector<double>> bootstrap_slopes(std::span<const double> u,
                                                  const std::vector<std::vector<double>>& responses,
                                                  const std::vector<Line>& lines, const BootstrapOptions& boot) {
  const std::size_t n = u.size();
  std::vector<std::vector<double>> out(responses.size());
  if (n <= 2 || boot.resamples == 0) return out;

  const double ub = mean_of(u);
  double sxx = 0;
  for (double x : u) sxx += (x - ub) * (x - ub);

  std::vector<std::vector<double>> resid(responses.size(), std::vector<double>(n));
  for (std::size_t r = 0; r < responses.size(); ++r) {
    double centre = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1.0 / static_cast<double>(n) + (u[i] - ub) * (u[i] - ub) / sxx;
      const double e = responses[r][i] - (lines[r].intercept + lines[r].slope * u[i]);
      resid[r][i] = h < 1.0 ? e / std::sqrt(1.0 - h) : 0.0;
      centre += resid[r][i];
    }
    centre /= static_cast<double>(n);
    for (double& e : resid[r]) e -= centre;
  }

  for (auto& v : out) v.assign(boot.resamples, 0.0);
  parallel_for(boot.resamples, boot.threads, [&](std::size_t k) {
    auto rng = resample_rng(boot.seed, k);
    std::vector<std::size_t> draw(n);
    for (auto& d : draw) d = static_cast<std::size_t>(uniform_index(rng, n));
    for (std::size_t r = 0; r < responses.size(); ++r) {
      // slope(fitted + e*) = slope + sum (u - ub) e* / sxx
      double sxy = 0;
      for (std::size_t i = 0; i < n; ++i) sxy += (u[i] - ub) * resid[r][draw[i]];
      out[r][k] = lines[r].slope + sxy / sxx;
    }
  });
  return out;
}

void validate_positive(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains NaN/Inf");
    if (!(v > 0)) throw Error(ErrorCode::InvalidInput, std::string(what) + " must be strictly positive");
  }
}

struct LogLogSetup {
  std::vector<double> u;
  std::vector<std::vector<double>> responses;
  std::vector<Line> lines;
};

LogLogSetup prepare_loglog(std::span<const double> x, const std::vector<std::span<const double>>& ys,
                           std::size_t min_points) {
  if (x.size() < std::max<std::size_t>(min_points, 2)) {
    throw Error(ErrorCode::TooFewPoints, "need at least " + std::to_string(std::max<std::size_t>(min_points, 2)) +
                                             " points, got " + std::to_string(x.size()));
  }
  validate_positive(x, "x");
  LogLogSetup s;
  for (double v : x) s.u.push_back(std::log(v));
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw Error(ErrorCode::DegenerateX, "all x values are equal");
  }
  for (const auto& y : ys) {
    if (y.size() != x.size()) throw Error(ErrorCode::InvalidInput, "x and y lengths differ");
    validate_positive(y, "y");
    std::vector<double> v;
    for (double val : y) v.push_back(std::log(val));
    s.lines.push_back(ols(s.u, v));
    s.responses.push_back(std::move(v));
  }
  return s;
}

LogLogFit to_fit(const Line& line, std::size_t n, const std::vector<double>& samples, double confidence) {
  LogLogFit f;
  f.slope = line.slope;
  f.intercept = line.intercept;
  f.r_squared = r_squared(line);
  f.n_points = n;
  f.slope_ci = samples.empty() ? Interval{line.slope, line.slope} : percentile_interval(samples, confidence);
  return f;
}

std::size_t distinct_count(std::span<const double> v) {
  return std::set<double>(v.begin(), v.end()).size();
}

double geometric_mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += std::log(x);
  return std::exp(s / static_cast<double>(v.size()));
}

}  // namespace

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y, std::size_t min_points,
                     const BootstrapOptions& boot) {
  LogLogSetup s = prepare_loglog(x, {y}, min_points);
  auto samples = bootstrap_slopes(s.u, s.responses, s.lines, boot);
  return to_fit(s.lines[0], x.size(), samples[0], boot.confidence);
}

double PowerLawFit::predict(double x) const { return prefactor * std::pow(x, -exponent); }

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points, const PowerLawOptions& opts) {
  std::vector<double> x, y;
  for (const auto& [px, py] : points) {
    x.push_back(px);
    y.push_back(py);
  }
  const LogLogFit f = fit_loglog(x, y, opts.min_points, opts.bootstrap);
  PowerLawFit out;
  out.prefactor = std::exp(f.intercept);
  out.exponent = -f.slope;
  out.r_squared = f.r_squared;
  out.n_points = f.n_points;
  out.exponent_ci = {-f.slope_ci.hi, -f.slope_ci.lo};
  return out;
}

double Quadratic::operator()(double x) const {
  const double t = x - center;
  return (c2 * t + c1) * t + c0;
}

double Quadratic::vertex() const { return center - c1 / (2.0 * c2); }

Quadratic fit_quadratic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidInput, "x and y lengths differ");
  if (distinct_count(x) < 3) throw Error(ErrorCode::TooFewPoints, "quadratic fit needs at least 3 distinct x");
  const double center = mean_of(x);
  double scale = 0;
  for (double v : x) scale = std::max(scale, std::fabs(v - center));

  // Normal equations in t = (x - center) / scale for (c0, c1, c2).
  std::array<double, 5> s{};  // sum t^k
  std::array<double, 3> r{};  // sum t^k y
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - center) / scale;
    double p = 1;
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) r[k] += p * y[i];
      p *= t;
    }
  }
  double a[3][4] = {{s[0], s[1], s[2], r[0]}, {s[1], s[2], s[3], r[1]}, {s[2], s[3], s[4], r[2]}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
    }
    for (int k = 0; k < 4; ++k) std::swap(a[col][k], a[pivot][k]);
    for (int row = 0; row < 3; ++row) {
      if (row == col) continue;
      const double f = a[row][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[row][k] -= f * a[col][k];
    }
  }
  const double c0 = a[0][3] / a[0][0];
  const double c1s = a[1][3] / a[1][1];
  const double c2s = a[2][3] / a[2][2];

  Quadratic q;
  q.center = center;
  q.c0 = c0;
  q.c1 = c1s / scale;
  q.c2 = c2s / (scale * scale);
  q.q2 = q.c2;
  q.q1 = q.c1 - 2.0 * q.c2 * center;
  q.q0 = q.c0 - q.c1 * center + q.c2 * center * center;
  return q;
}

double ComputeLaw::effective_data(double data) const {
  if (kind == LawKind::Graph) return data;
  const double p = static_cast<double>(patch);
  return data / (p * p);
}

double ComputeLaw::params_for(double compute, double data) const { return compute / (kappa * effective_data(data)); }

double ComputeLaw::implied_kappa(double compute, double params, double data) const {
  return compute / (params * effective_data(data));
}

std::string_view to_string(LawKind kind) { return kind == LawKind::Patched ? "patched" : "graph"; }

LawKind parse_law_kind(std::string_view text) {
  if (text == "patched") return LawKind::Patched;
  if (text == "graph") return LawKind::Graph;
  throw Error(ErrorCode::UnregisteredLaw, "unknown compute law '" + std::string(text) + "'");
}

ComputeLawTable ComputeLawTable::defaults() {
  ComputeLawTable t;
  t.set(Arch::Aurora, {LawKind::Patched, 4, 6.0});
  t.set(Arch::Pangu, {LawKind::Patched, 4, 6.0});
  t.set(Arch::SFNO, {LawKind::Patched, 1, 6.0});
  t.set(Arch::GraphCast, {LawKind::Graph, 1, 6.0});
  t.set(Arch::AIFS, {LawKind::Graph, 1, 6.0});
  return t;
}

const ComputeLaw& ComputeLawTable::at(Arch arch) const {
  auto it = laws_.find(arch);
  if (it == laws_.end()) {
    throw Error(ErrorCode::UnregisteredLaw, "no compute law registered for " + std::string(to_string(arch)));
  }
  return it->second;
}

const ComputeLaw& compute_law(Arch arch, const ComputeLawTable& table) { return table.at(arch); }

std::string_view to_string(ShapeFlag flag) {
  switch (flag) {
    case ShapeFlag::FullParabola: return "full_parabola";
    case ShapeFlag::LeftHalfOnly: return "left_half_only";
    case ShapeFlag::RightHalfOnly: return "right_half_only";
    case ShapeFlag::NonConvex: return "non_convex";
  }
  return "?";
}

std::string_view to_string(FrontierStatus status) {
  switch (status) {
    case FrontierStatus::Ok: return "ok";
    case FrontierStatus::SingleMinimum: return "single_minimum";
    case FrontierStatus::NoValidMinima: return "no_valid_minima";
  }
  return "?";
}

const FrontierExponents& IsoFlopFrontier::require_exponents() const {
  if (!exponents) {
    throw Error(ErrorCode::NoValidMinima,
                "fewer than two budgets have an interior minimum (status " + std::string(to_string(status)) + ")");
  }
  return *exponents;
}

std::vector<std::vector<std::size_t>> bucket_by_value(std::span<const double> values, double tolerance) {
  if (!(tolerance >= 0)) throw Error(ErrorCode::InvalidInput, "bucket tolerance must be >= 0");
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::vector<std::size_t>> buckets;
  double anchor = 0;
  for (std::size_t idx : order) {
    if (buckets.empty() || (values[idx] - anchor) > tolerance * anchor) {
      buckets.emplace_back();
      anchor = values[idx];
    }
    buckets.back().push_back(idx);
  }
  return buckets;
}

IsoFlopFrontier fit_isoflop(std::span<const Observation> observations, const IsoFlopOptions& opts) {
  if (observations.empty()) throw Error(ErrorCode::TooFewPoints, "no observations");
  std::vector<double> budgets;
  for (const auto& o : observations) {
    const double fields[] = {o.params, o.data, o.compute, o.loss};
    validate_positive(fields, ("observation '" + o.model_id + "'").c_str());
    budgets.push_back(o.compute);
  }

  IsoFlopFrontier frontier;
  for (const auto& bucket : bucket_by_value(budgets, opts.budget_tolerance)) {
    std::vector<Observation> pts;
    std::vector<double> cs;
    for (std::size_t i : bucket) {
      pts.push_back(observations[i]);
      cs.push_back(observations[i].compute);
    }
    std::stable_sort(pts.begin(), pts.end(), [](const Observation& a, const Observation& b) { return a.data < b.data; });
    const double budget = geometric_mean(cs);

    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(std::log10(p.data));
      y.push_back(p.loss);
    }
    if (distinct_count(x) < std::max<std::size_t>(opts.min_points, 3)) {
      frontier.skipped.push_back({budget, pts.size(), "fewer than " +
                                                          std::to_string(std::max<std::size_t>(opts.min_points, 3)) +
                                                          " distinct D values"});
      continue;
    }

    IsoFlopCurve curve;
    curve.budget = budget;
    curve.fit = fit_quadratic(x, y);
    if (opts.calibrate_kappa) {
      std::vector<double> kappas;
      for (const auto& p : pts) kappas.push_back(opts.law.implied_kappa(p.compute, p.params, p.data));
      curve.kappa = geometric_mean(kappas);
    } else {
      curve.kappa = opts.law.kappa;
    }
    const double xmin = x.front(), xmax = x.back();
    if (!(curve.fit.c2 > 0)) {
      curve.flag = ShapeFlag::NonConvex;
    } else {
      const double xv = curve.fit.vertex();
      if (xv > xmax) {
        curve.flag = ShapeFlag::LeftHalfOnly;
      } else if (xv < xmin) {
        curve.flag = ShapeFlag::RightHalfOnly;
      } else {
        curve.flag = ShapeFlag::FullParabola;
        ComputeLaw law = opts.law;
        law.kappa = curve.kappa;
        IsoFlopMinimum m;
        m.data = std::pow(10.0, xv);
        m.loss = curve.fit(xv);
        m.params = law.params_for(budget, m.data);
        curve.minimum = m;
      }
    }
    curve.points = std::move(pts);
    frontier.curves.push_back(std::move(curve));
  }

  std::vector<double> c, n_opt, d_opt;
  for (const auto& curve : frontier.curves) {
    if (!curve.minimum) continue;
    c.push_back(curve.budget);
    n_opt.push_back(curve.minimum->params);
    d_opt.push_back(curve.minimum->data);
  }
  if (c.size() >= 2 && distinct_count(c) >= 2) {
    LogLogSetup s = prepare_loglog(c, {std::span<const double>(n_opt), std::span<const double>(d_opt)}, 2);
    auto samples = bootstrap_slopes(s.u, s.responses, s.lines, opts.bootstrap);
    FrontierExponents e;
    e.n_fit = to_fit(s.lines[0], c.size(), samples[0], opts.bootstrap.confidence);
    e.d_fit = to_fit(s.lines[1], c.size(), samples[1], opts.bootstrap.confidence);
    e.a = e.n_fit.slope;
    e.b = e.d_fit.slope;
    e.sum_ab = e.a + e.b;
    e.a_ci = e.n_fit.slope_ci;
    e.b_ci = e.d_fit.slope_ci;
    if (samples[0].empty()) {
      e.sum_ci = {e.sum_ab, e.sum_ab};
    } else {
      std::vector<double> sums(samples[0].size());
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] = samples[0][k] + samples[1][k];
      e.sum_ci = percentile_interval(sums, opts.bootstrap.confidence);
    }
    frontier.exponents = e;
    frontier.status = FrontierStatus::Ok;
  } else {
    frontier.status = c.empty() ? FrontierStatus::NoValidMinima : FrontierStatus::SingleMinimum;
  }
  return frontier;
}

ModelScalingResult fit_model_scaling(std::span<const Observation> observations, double data_tolerance,
                                     const PowerLawOptions& opts) {
  std::vector<double> ds;
  for (const auto& o : observations) {
    const double fields[] = {o.params, o.data, o.loss};
    validate_positive(fields, ("observation '" + o.model_id + "'").c_str());
    ds.push_back(o.data);
  }
  ModelScalingResult result;
  for (const auto& bucket : bucket_by_value(ds, data_tolerance)) {
    ModelScalingGroup group;
    std::vector<double> group_d, ns;
    for (std::size_t i : bucket) {
      group.points.push_back(observations[i]);
      group_d.push_back(observations[i].data);
      ns.push_back(observations[i].params);
    }
    std::stable_sort(group.points.begin(), group.points.end(),
                     [](const Observation& a, const Observation& b) { return a.params < b.params; });
    group.data = geometric_mean(group_d);
    if (distinct_count(ns) < std::max<std::size_t>(opts.min_points, 2)) {
      result.skipped.push_back({group.data, group.points.size(),
                                "fewer than " + std::to_string(opts.min_points) + " distinct N values"});
      continue;
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : group.points) pts.emplace_back(p.params, p.loss);
    group.fit = fit_power_law(pts, opts);
    result.groups.push_back(std::move(group));
  }
  if (result.groups.empty()) {
    throw Error(ErrorCode::TooFewPoints, "no D group has " + std::to_string(opts.min_points) + " distinct N values");
  }
  return result;
}

}  // namespace wxscale
