#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wxscale/arch.hpp"

namespace wxscale {

struct BootstrapOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 20240601;
  double confidence = 0.95;
  unsigned threads = 1;
};

struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// OLS line through (ln x, ln y) with a residual-bootstrap interval on the
/// slope. Resampling keeps the x values fixed and redraws leverage-adjusted,
/// centred residuals; resample k uses its own generator seeded from
/// (seed, k), so results do not depend on the thread count.
struct LogLogFit {
  double slope = 0;
  double intercept = 0;  // natural-log space
  double r_squared = 0;
  std::size_t n_points = 0;
  Interval slope_ci;
};

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y, std::size_t min_points,
                     const BootstrapOptions& boot = {});

/// loss = prefactor * x^(-exponent)
struct PowerLawFit {
  double prefactor = 0;
  double exponent = 0;
  double r_squared = 0;
  std::size_t n_points = 0;
  Interval exponent_ci;

  double predict(double x) const;
};

struct PowerLawOptions {
  std::size_t min_points = 3;
  BootstrapOptions bootstrap;
};

// Throws TooFewPoints, DegenerateX (all x equal), InvalidInput (non-positive),
// NonFiniteInput.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points, const PowerLawOptions& opts = {});

/// y = q2 x^2 + q1 x + q0, fitted in centred coordinates.
struct Quadratic {
  double q2 = 0, q1 = 0, q0 = 0;
  // Centred form y = c2 (x - center)^2 + c1 (x - center) + c0, kept for an
  // accurate vertex.
  double center = 0, c2 = 0, c1 = 0, c0 = 0;

  double operator()(double x) const;
  // -q1 / (2 q2); only meaningful when q2 != 0.
  double vertex() const;
};

// Least squares; needs >= 3 distinct x.
Quadratic fit_quadratic(std::span<const double> x, std::span<const double> y);

struct Observation {
  std::string model_id;
  double params = 0;   // N
  double data = 0;     // D, in the unit given by the caller
  double compute = 0;  // C, FLOPs
  double loss = 0;
};

enum class LawKind { Patched, Graph };

/// C = kappa * N * D / patch^2 (patched transformers; patch 1 is the dense
/// C ~ 6ND case) or C = kappa * N * D with D counted in samples (graph models).
struct ComputeLaw {
  LawKind kind = LawKind::Patched;
  std::uint64_t patch = 1;
  double kappa = 6.0;

  double effective_data(double data) const;
  // Inverse map: N = C / (kappa * D_eff).
  double params_for(double compute, double data) const;
  // kappa implied by one observation.
  double implied_kappa(double compute, double params, double data) const;
};

std::string_view to_string(LawKind kind);
LawKind parse_law_kind(std::string_view text);

class ComputeLawTable {
 public:
  // Aurora, Pangu: patched p = 4; SFNO: patched p = 1; GraphCast, AIFS: graph.
  static ComputeLawTable defaults();

  void set(Arch arch, ComputeLaw law) { laws_[arch] = law; }
  void erase(Arch arch) { laws_.erase(arch); }
  // Throws UnregisteredLaw.
  const ComputeLaw& at(Arch arch) const;

 private:
  std::map<Arch, ComputeLaw> laws_;
};

const ComputeLaw& compute_law(Arch arch, const ComputeLawTable& table);

enum class ShapeFlag { FullParabola, LeftHalfOnly, RightHalfOnly, NonConvex };
std::string_view to_string(ShapeFlag flag);

struct IsoFlopMinimum {
  double data = 0;    // D_opt
  double loss = 0;    // loss at the vertex
  double params = 0;  // N_opt from the compute law
};

struct IsoFlopCurve {
  double budget = 0;  // geometric mean of the bucket's C
  std::vector<Observation> points;  // sorted by D
  Quadratic fit;                    // loss vs log10 D
  double kappa = 0;                 // compute-law constant used for N_opt
  ShapeFlag flag = ShapeFlag::NonConvex;
  std::optional<IsoFlopMinimum> minimum;
};

struct SkippedBudget {
  double budget = 0;
  std::size_t points = 0;
  std::string reason;
};

enum class FrontierStatus { Ok, SingleMinimum, NoValidMinima };
std::string_view to_string(FrontierStatus status);

struct FrontierExponents {
  double a = 0;  // N_opt ~ C^a
  double b = 0;  // D_opt ~ C^b
  double sum_ab = 0;
  Interval a_ci, b_ci, sum_ci;
  LogLogFit n_fit, d_fit;
};

struct IsoFlopFrontier {
  std::vector<IsoFlopCurve> curves;
  std::vector<SkippedBudget> skipped;
  FrontierStatus status = FrontierStatus::NoValidMinima;
  std::optional<FrontierExponents> exponents;

  // Throws NoValidMinima when exponents are absent.
  const FrontierExponents& require_exponents() const;
};

struct IsoFlopOptions {
  double budget_tolerance = 0.05;  // relative, against the bucket's smallest C
  std::size_t min_points = 3;
  ComputeLaw law;
  bool calibrate_kappa = true;  // kappa from each bucket's observations
  BootstrapOptions bootstrap;
};

// Groups values whose relative distance to the group's first (smallest)
// member is within `tolerance`. Returns index groups in ascending order.
std::vector<std::vector<std::size_t>> bucket_by_value(std::span<const double> values, double tolerance);

// Throws TooFewPoints when there are no observations.
IsoFlopFrontier fit_isoflop(std::span<const Observation> observations, const IsoFlopOptions& opts = {});

struct ModelScalingGroup {
  double data = 0;  // geometric mean D of the group
  std::vector<Observation> points;
  PowerLawFit fit;  // loss vs N
};

struct ModelScalingResult {
  std::vector<ModelScalingGroup> groups;
  std::vector<SkippedBudget> skipped;  // `budget` holds the group D here
};

// Groups by D within `data_tolerance`, fits loss vs N per group with >= 3
// distinct N. Throws TooFewPoints when no group qualifies.
ModelScalingResult fit_model_scaling(std::span<const Observation> observations, double data_tolerance = 0.05,
                                     const PowerLawOptions& opts = {});

}  // namespace wxscale
