#include "wxscale/arch.hpp"

#include <algorithm>
#include <cctype>

#include "wxscale/error.hpp"

namespace wxscale {

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::GraphCast: return "GraphCast";
    case Arch::Aurora: return "Aurora";
    case Arch::Pangu: return "Pangu";
    case Arch::SFNO: return "SFNO";
    case Arch::AIFS: return "AIFS";
  }
  return "?";
}

Arch parse_arch(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Arch a : kAllArchs) {
    std::string candidate(to_string(a));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return a;
  }
  throw Error(ErrorCode::InvalidShape, "unknown architecture '" + std::string(name) + "'");
}

std::uint64_t ModelShape::depth_scalar() const {
  if (depth.size() != 1) {
    throw Error(ErrorCode::InvalidShape,
                std::string(to_string(arch)) + " expects a scalar depth, got " + depth_string());
  }
  return depth.front();
}

std::string ModelShape::depth_string() const {
  if (depth.size() == 1) return std::to_string(depth.front());
  std::string out = "(";
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(depth[i]);
  }
  return out + ")";
}

SwinLayout default_swin_layout(Arch arch) {
  SwinLayout layout;
  if (arch == Arch::Pangu) {
    layout.stage_width_multipliers = {1, 2, 2, 1};
  } else {
    layout.stage_width_multipliers = {1, 2, 4};
  }
  return layout;
}

std::uint64_t default_head_dim(Arch arch) {
  switch (arch) {
    case Arch::Aurora: return 64;
    case Arch::Pangu: return 32;
    default: return 0;
  }
}

CostConfig default_cost_config(Arch arch) {
  CostConfig cfg;
  cfg.swin = default_swin_layout(arch);
  cfg.head_dim = default_head_dim(arch);
  GridSpec& g = cfg.grid;
  switch (arch) {
    case Arch::GraphCast:
      // 0.25 degree lat-lon grid; icosahedral multimesh sizes are configuration.
      g.n_grid = 721ULL * 1440ULL;
      g.n_mesh = 40962;
      g.e_mesh = 327660;
      break;
    case Arch::Aurora:
      g.lat_cells = 721;
      g.lon_cells = 1440;
      g.patch = 4;
      g.channels_in = 4;
      break;
    case Arch::Pangu:
      g.lat_cells = 721;
      g.lon_cells = 1440;
      g.patch = 4;
      g.channels_in = 8;
      break;
    case Arch::SFNO:
      g.h_hi = 721;
      g.w_hi = 1440;
      g.h_lo = 360;
      g.w_lo = 720;
      g.channels_in = 73;
      g.channels_out = 73;
      break;
    case Arch::AIFS:
      g.n_grid = 542080;
      g.n_mesh = 10944;
      g.e_enc = 542080ULL * 4ULL;
      g.e_dec = 542080ULL * 3ULL;
      g.edge_dim = 8;
      g.channels_in = 101;
      g.channels_out = 88;
      break;
  }
  return cfg;
}

}  // namespace wxscale
