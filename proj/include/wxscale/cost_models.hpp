#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wxscale/arch.hpp"
#include "wxscale/exact.hpp"

namespace wxscale {

struct FlopComponent {
  FlopComponent() = default;
  FlopComponent(std::string label_, Exact flops_, std::optional<long double> unrounded_ = std::nullopt)
      : label(std::move(label_)), flops(flops_), unrounded(unrounded_) {}

  std::string label;
  Exact flops;
  // Value before rounding, for components with real-valued terms (SFNO
  // transforms, AIFS sparse attention). Absent: equal to `flops`.
  std::optional<long double> unrounded;

  long double real_value() const { return unrounded ? *unrounded : flops.to_long_double(); }
};

/// Per-component forward FLOPs with the derived totals. The totals are
/// computed on construction, so `train_total() == 3 * forward_total()` and
/// `forward_total()` is the component sum by construction.
class FlopBreakdown {
 public:
  FlopBreakdown() = default;
  explicit FlopBreakdown(std::vector<FlopComponent> components);

  const std::vector<FlopComponent>& components() const { return components_; }
  Exact forward_total() const { return forward_; }
  Exact train_total() const { return train_; }
  // Component sum before rounding real-valued terms to whole FLOPs.
  long double forward_unrounded() const { return forward_real_; }

  // Component by label; throws InvalidInput if absent.
  Exact component(const std::string& label) const;

 private:
  std::vector<FlopComponent> components_;
  Exact forward_;
  Exact train_;
  long double forward_real_ = 0;
};

// N = (24 + 8d) w + (18 + 7d) w^2, exact.
std::uint64_t param_count_graphcast(std::uint64_t width, std::uint64_t depth);

// "34.2M": exact count rounded half-up to 0.1M.
std::string format_millions(std::uint64_t params);

FlopBreakdown flops_graphcast(const ModelShape& shape, const GridSpec& grid);

struct SwinBlockFlops {
  Exact attention;
  Exact mlp;
  Exact norm;
  Exact total() const { return attention + mlp + norm; }
};

// One windowed-attention block on `tokens` tokens of width `width` with
// `heads` heads, `window` tokens per window and MLP ratio `mlp_ratio`.
SwinBlockFlops swin_block_flops(Exact tokens, std::uint64_t width, std::uint64_t heads,
                                std::uint64_t window, std::uint64_t mlp_ratio);

// Linear projection: 2 n W_in W_out + 5 n W_in.
Exact projection_flops(Exact tokens, std::uint64_t w_in, std::uint64_t w_out);

/// One entry of a Swin stage plan: either a stack of blocks or a projection.
struct SwinItem {
  enum class Kind { Blocks, Projection };
  Kind kind = Kind::Blocks;
  std::string label;
  Exact tokens;
  std::uint64_t width = 0;  // block width, or projection input width
  std::uint64_t width_out = 0;  // projection only
  std::uint64_t heads = 0;  // blocks only
  std::uint64_t blocks = 0;  // blocks only
};

// Encoder stages (one per depth entry), the mirrored decoder, transitions and
// patch embedding/recovery, in execution order.
std::vector<SwinItem> aurora_plan(const ModelShape& shape, const CostConfig& cfg);

// Four stages with depths (d1, d2, d2, d1), one down and one up transition,
// patch embedding/recovery, in execution order.
std::vector<SwinItem> pangu_plan(const ModelShape& shape, const CostConfig& cfg);

FlopBreakdown flops_from_plan(const std::vector<SwinItem>& plan, std::uint64_t window,
                              std::uint64_t mlp_ratio);

FlopBreakdown flops_aurora(const ModelShape& shape, const CostConfig& cfg);
FlopBreakdown flops_pangu(const ModelShape& shape, const CostConfig& cfg);

// One Fourier block. `integer_part` holds every term without the alpha log2
// factor; `transforms` the two spherical-transform terms.
struct SfnoBlockFlops {
  Exact integer_part;
  long double transforms = 0;
  // Transform terms rounded half-up to whole FLOPs.
  Exact rounded() const;
};
SfnoBlockFlops sfno_block_flops(std::uint64_t width, const GridSpec& grid, double alpha);

FlopBreakdown flops_sfno(const ModelShape& shape, const GridSpec& grid, double alpha, bool skip = false);

// n_mesh is the hidden-graph node count N_h.
FlopBreakdown flops_aifs(const ModelShape& shape, const GridSpec& grid);

// Dispatch on shape.arch.
FlopBreakdown flops(const ModelShape& shape, const CostConfig& cfg);

struct ComputeBudget {
  Exact flops_per_step;
  Exact steps;
  Exact total;
};

ComputeBudget training_compute(Exact flops_per_step, Exact steps);

struct UtilizationRecord {
  double achieved_tflops = 0;
  double peak_tflops = 0;
  int precision_bits = 32;
  double utilization_pct = 0;
};

// Throws InvalidInput for non-positive inputs or achieved > peak.
UtilizationRecord utilization(double achieved_tflops, double peak_tflops, int precision_bits = 32);

// H100 dense peak used for the bundled preset: 989 (32-bit) / 1979 (16-bit).
double h100_peak_tflops(int precision_bits);

// Format with `digits` significant figures ("37.2", "1.70", "0.0217").
std::string format_significant(double value, int digits);

}  // namespace wxscale
