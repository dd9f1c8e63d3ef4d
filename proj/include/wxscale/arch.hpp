#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wxscale {

enum class Arch { GraphCast, Aurora, Pangu, SFNO, AIFS };

inline constexpr Arch kAllArchs[] = {Arch::GraphCast, Arch::Aurora, Arch::Pangu, Arch::SFNO, Arch::AIFS};

std::string_view to_string(Arch arch);

// Case-insensitive. Throws Error(InvalidShape) for anything else.
Arch parse_arch(std::string_view name);

/// Width/depth description of one model variant.
///
/// `depth` holds a single entry for GraphCast (message-passing steps), SFNO
/// (Fourier blocks) and AIFS (processor layers); Aurora stores one entry per
/// encoder stage and Pangu the two-stage pair. `heads == 0` means "derive from
/// the architecture's default head dimension".
struct ModelShape {
  Arch arch = Arch::GraphCast;
  std::uint64_t width = 0;
  std::vector<std::uint64_t> depth;
  std::uint64_t heads = 0;
  std::uint64_t mlp_ratio = 4;
  std::uint64_t window = 144;

  // Single depth value; throws InvalidShape if `depth` is a tuple.
  std::uint64_t depth_scalar() const;

  std::string depth_string() const;  // "16" or "(3, 5, 4)"

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Grid and graph sizes consumed by the FLOP formulas. Fields irrelevant to an
/// architecture are ignored. `l_max`/`m_max` of 0 select the truncation
/// default (l_max = h_lo, m_max = w_lo / 2 + 1).
struct GridSpec {
  std::uint64_t n_grid = 1;
  std::uint64_t n_mesh = 1;
  std::uint64_t e_mesh = 1;
  std::uint64_t e_enc = 1;
  std::uint64_t e_dec = 1;
  std::uint64_t edge_dim = 1;
  std::uint64_t h_hi = 1, w_hi = 1;
  std::uint64_t h_lo = 1, w_lo = 1;
  std::uint64_t l_max = 0, m_max = 0;
  std::uint64_t lat_cells = 1, lon_cells = 1;
  std::uint64_t patch = 1;
  std::uint64_t channels_in = 1;
  std::uint64_t channels_out = 1;

  std::uint64_t resolved_l_max() const { return l_max != 0 ? l_max : h_lo; }
  std::uint64_t resolved_m_max() const { return m_max != 0 ? m_max : w_lo / 2 + 1; }
};

/// Stage layout for the Swin-style backbones (Aurora, Pangu). None of these
/// numbers are fixed by the published accounting; they are conventions.
struct SwinLayout {
  // Width of stage s is width * multiplier[s].
  std::vector<std::uint64_t> stage_width_multipliers;
  // Spatial reduction per down transition along each axis.
  std::uint64_t downsample = 2;
  // Patch embedding/recovery and stage transitions.
  bool include_projections = true;
  // Input features per token for patch embedding; 0 means patch * patch.
  std::uint64_t patch_in_features = 0;
};

SwinLayout default_swin_layout(Arch arch);

/// Everything besides the shape that a FLOP evaluation needs.
struct CostConfig {
  GridSpec grid;
  SwinLayout swin;
  double sfno_alpha = 5.0;
  bool sfno_skip = false;
  std::uint64_t head_dim = 0;  // 0: architecture default (Aurora 64, Pangu 32)
};

std::uint64_t default_head_dim(Arch arch);

// Built-in defaults per architecture; the bundled arch_defaults.json mirrors these.
CostConfig default_cost_config(Arch arch);

}  // namespace wxscale
