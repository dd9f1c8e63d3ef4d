#include "wxscale/cost_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "wxscale/error.hpp"

namespace wxscale {

namespace {

using E = Exact;

void require_positive(std::uint64_t v, const char* what) {
  if (v == 0) throw Error(ErrorCode::InvalidShape, std::string(what) + " must be >= 1");
}

void require_positive_grid(std::uint64_t v, const char* what) {
  if (v == 0) throw Error(ErrorCode::InvalidGrid, std::string(what) + " must be >= 1");
}

void require_arch(const ModelShape& shape, Arch expected) {
  if (shape.arch != expected) {
    throw Error(ErrorCode::InvalidShape, "expected a " + std::string(to_string(expected)) + " shape, got " +
                                             std::string(to_string(shape.arch)));
  }
}

// Head dimension of stage 0; every stage width must be a multiple of it.
std::uint64_t resolve_head_dim(const ModelShape& shape, const CostConfig& cfg) {
  if (shape.heads != 0) {
    if (shape.width % shape.heads != 0) {
      throw Error(ErrorCode::InvalidShape, "width " + std::to_string(shape.width) +
                                               " is not divisible by heads " + std::to_string(shape.heads));
    }
    return shape.width / shape.heads;
  }
  std::uint64_t hd = cfg.head_dim != 0 ? cfg.head_dim : default_head_dim(shape.arch);
  if (hd == 0) throw Error(ErrorCode::InvalidConfig, "head dimension must be >= 1");
  return hd;
}

std::uint64_t stage_heads(std::uint64_t stage_width, std::uint64_t head_dim) {
  if (stage_width % head_dim != 0) {
    throw Error(ErrorCode::InvalidShape, "stage width " + std::to_string(stage_width) +
                                             " is not divisible by head dimension " + std::to_string(head_dim));
  }
  return stage_width / head_dim;
}

struct SwinGeometry {
  std::uint64_t patched_h = 0;
  std::uint64_t patched_l = 0;
  std::uint64_t channels = 0;
  std::uint64_t patch_features = 0;
};

SwinGeometry swin_geometry(const ModelShape& shape, const CostConfig& cfg) {
  const GridSpec& g = cfg.grid;
  require_positive(shape.width, "width");
  require_positive(shape.window, "window");
  require_positive(shape.mlp_ratio, "mlp_ratio");
  require_positive_grid(g.lat_cells, "lat_cells");
  require_positive_grid(g.lon_cells, "lon_cells");
  require_positive_grid(g.patch, "patch");
  require_positive_grid(g.channels_in, "channels_in");
  if (cfg.swin.downsample == 0) throw Error(ErrorCode::InvalidConfig, "downsample must be >= 1");
  SwinGeometry geo;
  geo.patched_h = g.lat_cells / g.patch;
  geo.patched_l = g.lon_cells / g.patch;
  geo.channels = g.channels_in;
  geo.patch_features = cfg.swin.patch_in_features != 0 ? cfg.swin.patch_in_features : g.patch * g.patch;
  return geo;
}

// Token count after `level` down transitions; floor division at every step.
E tokens_at(const SwinGeometry& geo, std::uint64_t downsample, std::size_t level) {
  std::uint64_t h = geo.patched_h;
  std::uint64_t l = geo.patched_l;
  for (std::size_t i = 0; i < level; ++i) {
    h /= downsample;
    l /= downsample;
  }
  return E(geo.channels) * E(h) * E(l);
}

SwinItem blocks_item(std::string label, E tokens, std::uint64_t width, std::uint64_t heads, std::uint64_t blocks) {
  if (blocks > 0 && tokens == E(0)) {
    throw Error(ErrorCode::InvalidShape, label + " has blocks but zero tokens");
  }
  SwinItem item;
  item.kind = SwinItem::Kind::Blocks;
  item.label = std::move(label);
  item.tokens = tokens;
  item.width = width;
  item.heads = heads;
  item.blocks = blocks;
  return item;
}

SwinItem projection_item(std::string label, E tokens, std::uint64_t w_in, std::uint64_t w_out) {
  SwinItem item;
  item.kind = SwinItem::Kind::Projection;
  item.label = std::move(label);
  item.tokens = tokens;
  item.width = w_in;
  item.width_out = w_out;
  return item;
}

std::uint64_t checked_width(std::uint64_t width, std::uint64_t mult) {
  return (E(width) * E(mult)).to_u64();
}

}  // namespace

FlopBreakdown::FlopBreakdown(std::vector<FlopComponent> components) : components_(std::move(components)) {
  for (const auto& c : components_) {
    forward_ += c.flops;
    forward_real_ += c.real_value();
  }
  train_ = E(3) * forward_;
}

Exact FlopBreakdown::component(const std::string& label) const {
  for (const auto& c : components_) {
    if (c.label == label) return c.flops;
  }
  throw Error(ErrorCode::InvalidInput, "no component '" + label + "'");
}

std::uint64_t param_count_graphcast(std::uint64_t width, std::uint64_t depth) {
  E w(width), d(depth);
  return ((E(24) + E(8) * d) * w + (E(18) + E(7) * d) * w * w).to_u64();
}

std::string format_millions(std::uint64_t params) {
  // tenths of a million, half-up
  std::uint64_t tenths = (params + 50000) / 100000;
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "M";
}

FlopBreakdown flops_graphcast(const ModelShape& shape, const GridSpec& grid) {
  require_arch(shape, Arch::GraphCast);
  require_positive(shape.width, "width");
  require_positive_grid(grid.n_grid, "n_grid");
  require_positive_grid(grid.n_mesh, "n_mesh");
  require_positive_grid(grid.e_mesh, "e_mesh");
  const E w(shape.width), s(shape.depth_scalar());
  const E ng(grid.n_grid), nm(grid.n_mesh), em(grid.e_mesh);
  const E w2 = w * w;

  E g2m = E(2) * ((E(4) * w + E(2) * w2) * ng + (E(4) * w + E(3) * w2) * nm + (E(4) * w + E(4) * w2) * em);
  E mesh = E(2) * s * ((E(4) * w + E(3) * w2) * nm + (E(4) * w + E(4) * w2) * em);
  E m2g = E(2) * ((E(4) * w + E(2) * w2) * nm + (E(4) * w + E(3) * w2) * ng + (E(12) * w + E(4) * w2) * em);
  return FlopBreakdown({{"G2M", g2m}, {"Mesh", mesh}, {"M2G", m2g}});
}

SwinBlockFlops swin_block_flops(Exact tokens, std::uint64_t width, std::uint64_t heads, std::uint64_t window,
                                std::uint64_t mlp_ratio) {
  require_positive(heads, "heads");
  require_positive(window, "window");
  if (width % heads != 0) {
    throw Error(ErrorCode::InvalidShape,
                "width " + std::to_string(width) + " is not divisible by heads " + std::to_string(heads));
  }
  const E n = tokens, W(width), h(heads), w(window), r(mlp_ratio);
  const E head_width(width / heads);
  const E windows = ceil_div(n, w);

  SwinBlockFlops out;
  out.attention = E(2) * n * W * (E(3) * W)                 // QKV
                  + E(2) * windows * h * (w * head_width * w)  // QK^T
                  + E(5) * windows * h * w * w                 // softmax
                  + E(2) * windows * h * (w * w * head_width)  // AV
                  + E(2) * n * W * W;                          // output projection
  out.mlp = E(2) * n * W * (r * W) + E(6) * n * (r * W) + E(2) * n * (r * W) * W;
  out.norm = E(10) * n * W;
  return out;
}

Exact projection_flops(Exact tokens, std::uint64_t w_in, std::uint64_t w_out) {
  return E(2) * tokens * E(w_in) * E(w_out) + E(5) * tokens * E(w_in);
}

std::vector<SwinItem> aurora_plan(const ModelShape& shape, const CostConfig& cfg) {
  require_arch(shape, Arch::Aurora);
  if (shape.depth.empty()) throw Error(ErrorCode::InvalidShape, "Aurora depth tuple is empty");
  const auto& mult = cfg.swin.stage_width_multipliers;
  const std::size_t stages = shape.depth.size();
  if (mult.size() < stages) {
    throw Error(ErrorCode::InvalidConfig, "Aurora needs " + std::to_string(stages) + " stage width multipliers, got " +
                                              std::to_string(mult.size()));
  }
  const SwinGeometry geo = swin_geometry(shape, cfg);
  const std::uint64_t head_dim = resolve_head_dim(shape, cfg);
  const std::uint64_t ds = cfg.swin.downsample;
  const std::uint64_t merge = ds * ds;
  const bool proj = cfg.swin.include_projections;

  std::vector<std::uint64_t> widths(stages);
  std::vector<E> tokens(stages);
  for (std::size_t s = 0; s < stages; ++s) {
    widths[s] = checked_width(shape.width, mult[s]);
    tokens[s] = tokens_at(geo, ds, s);
  }

  std::vector<SwinItem> plan;
  if (proj) plan.push_back(projection_item("patch_embed", tokens[0], geo.patch_features, widths[0]));
  for (std::size_t s = 0; s < stages; ++s) {
    plan.push_back(blocks_item("encoder.stage" + std::to_string(s), tokens[s], widths[s],
                               stage_heads(widths[s], head_dim), shape.depth[s]));
    if (proj && s + 1 < stages) {
      plan.push_back(projection_item("encoder.down" + std::to_string(s), tokens[s + 1],
                                     checked_width(widths[s], merge), widths[s + 1]));
    }
  }
  for (std::size_t k = 0; k < stages; ++k) {
    const std::size_t s = stages - 1 - k;
    plan.push_back(blocks_item("decoder.stage" + std::to_string(s), tokens[s], widths[s],
                               stage_heads(widths[s], head_dim), shape.depth[s]));
    if (proj && s > 0) {
      plan.push_back(projection_item("decoder.up" + std::to_string(s - 1), tokens[s], widths[s],
                                     checked_width(widths[s - 1], merge)));
    }
  }
  if (proj) plan.push_back(projection_item("patch_recovery", tokens[0], widths[0], geo.patch_features));
  return plan;
}

std::vector<SwinItem> pangu_plan(const ModelShape& shape, const CostConfig& cfg) {
  require_arch(shape, Arch::Pangu);
  if (shape.depth.size() != 2) {
    throw Error(ErrorCode::InvalidShape, "Pangu expects a depth pair, got " + shape.depth_string());
  }
  const auto& mult = cfg.swin.stage_width_multipliers;
  if (mult.size() != 4) throw Error(ErrorCode::InvalidConfig, "Pangu needs exactly 4 stage width multipliers");
  const SwinGeometry geo = swin_geometry(shape, cfg);
  const std::uint64_t head_dim = resolve_head_dim(shape, cfg);
  const std::uint64_t ds = cfg.swin.downsample;
  const std::uint64_t merge = ds * ds;
  const bool proj = cfg.swin.include_projections;

  const std::uint64_t depths[4] = {shape.depth[0], shape.depth[1], shape.depth[1], shape.depth[0]};
  const E fine = tokens_at(geo, ds, 0);
  const E coarse = tokens_at(geo, ds, 1);
  const E stage_tokens[4] = {fine, coarse, coarse, fine};
  std::uint64_t widths[4];
  for (int s = 0; s < 4; ++s) widths[s] = checked_width(shape.width, mult[s]);

  std::vector<SwinItem> plan;
  if (proj) plan.push_back(projection_item("patch_embed", fine, geo.patch_features, widths[0]));
  for (int s = 0; s < 4; ++s) {
    plan.push_back(blocks_item("stage" + std::to_string(s), stage_tokens[s], widths[s],
                               stage_heads(widths[s], head_dim), depths[s]));
    if (proj && s == 0) plan.push_back(projection_item("down", coarse, checked_width(widths[0], merge), widths[1]));
    if (proj && s == 2) plan.push_back(projection_item("up", coarse, widths[2], checked_width(widths[3], merge)));
  }
  if (proj) plan.push_back(projection_item("patch_recovery", fine, widths[3], geo.patch_features));
  return plan;
}

FlopBreakdown flops_from_plan(const std::vector<SwinItem>& plan, std::uint64_t window, std::uint64_t mlp_ratio) {
  std::vector<FlopComponent> components;
  components.reserve(plan.size());
  for (const SwinItem& item : plan) {
    if (item.kind == SwinItem::Kind::Projection) {
      components.push_back({item.label, projection_flops(item.tokens, item.width, item.width_out)});
    } else if (item.blocks == 0) {
      components.push_back({item.label, E(0)});
    } else {
      const SwinBlockFlops b = swin_block_flops(item.tokens, item.width, item.heads, window, mlp_ratio);
      components.push_back({item.label, E(item.blocks) * b.total()});
    }
  }
  return FlopBreakdown(std::move(components));
}

FlopBreakdown flops_aurora(const ModelShape& shape, const CostConfig& cfg) {
  return flops_from_plan(aurora_plan(shape, cfg), shape.window, shape.mlp_ratio);
}

FlopBreakdown flops_pangu(const ModelShape& shape, const CostConfig& cfg) {
  return flops_from_plan(pangu_plan(shape, cfg), shape.window, shape.mlp_ratio);
}

Exact SfnoBlockFlops::rounded() const { return integer_part + round_to_exact(transforms); }

SfnoBlockFlops sfno_block_flops(std::uint64_t width, const GridSpec& grid, double alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidConfig, "SFNO alpha must be > 0");
  require_positive_grid(grid.h_lo, "h_lo");
  require_positive_grid(grid.w_lo, "w_lo");
  const E W(width), lo = E(grid.h_lo) * E(grid.w_lo);
  const E twoW = E(2) * W;
  E integer_part = E(5) * W * lo + W * W * E(grid.resolved_l_max()) * E(grid.resolved_m_max()) +
                   E(2) * W * twoW * lo + E(6) * twoW * lo + E(2) * twoW * W * lo;
  // forward and inverse spherical transforms
  const long double log_term = std::log2(static_cast<long double>(std::max(grid.h_lo, grid.w_lo)));
  return {integer_part, 2.0L * static_cast<long double>(alpha) * (W * lo).to_long_double() * log_term};
}

FlopBreakdown flops_sfno(const ModelShape& shape, const GridSpec& grid, double alpha, bool skip) {
  require_arch(shape, Arch::SFNO);
  require_positive(shape.width, "width");
  require_positive_grid(grid.h_hi, "h_hi");
  require_positive_grid(grid.w_hi, "w_hi");
  require_positive_grid(grid.channels_in, "channels_in");
  const std::uint64_t depth = shape.depth_scalar();
  const E W(shape.width), C(grid.channels_in), hi = E(grid.h_hi) * E(grid.w_hi);

  E enc = E(2) * C * W * hi + E(6) * W * hi + E(2) * W * W * hi;
  const SfnoBlockFlops block = sfno_block_flops(shape.width, grid, alpha);
  E blocks = E(depth) * block.rounded();
  const long double blocks_real =
      static_cast<long double>(depth) * (block.integer_part.to_long_double() + block.transforms);
  E dec = E(2) * W * W * hi + E(6) * W * hi + E(2) * W * C * hi;
  std::vector<FlopComponent> components{{"encoder", enc, std::nullopt},
                                        {"fourier_blocks", blocks, blocks_real},
                                        {"decoder", dec, std::nullopt}};
  if (skip) components.push_back({"skip", E(2) * C * C * hi, std::nullopt});
  return FlopBreakdown(std::move(components));
}

FlopBreakdown flops_aifs(const ModelShape& shape, const GridSpec& grid) {
  require_arch(shape, Arch::AIFS);
  require_positive(shape.width, "width");
  require_positive_grid(grid.n_grid, "n_grid");
  require_positive_grid(grid.n_mesh, "n_mesh");
  require_positive_grid(grid.e_enc, "e_enc");
  require_positive_grid(grid.e_dec, "e_dec");
  require_positive_grid(grid.edge_dim, "edge_dim");
  require_positive_grid(grid.channels_in, "channels_in");
  require_positive_grid(grid.channels_out, "channels_out");
  const E W(shape.width), D(shape.depth_scalar()), r(shape.mlp_ratio);
  const E C(grid.channels_in), Cout(grid.channels_out), de(grid.edge_dim);
  const E ng(grid.n_grid), nh(grid.n_mesh), e_enc(grid.e_enc), e_dec(grid.e_dec);
  const E W2 = W * W;

  E enc = E(2) * (C * W * ng + E(12) * W * nh + de * W * e_enc + E(4) * W2 * ng + E(3) * W2 * nh + W * e_enc +
                  E(2) * r * W2 * nh);
  // 2D * W * N_h^2 / 16 == D * W * N_h^2 / 8, rounded half-up
  const E sparse_numerator = D * W * nh * nh;
  E sparse_attention = (sparse_numerator + E(4)) / E(8);
  const E proc_dense = E(2) * D * (E(4) * W2 * nh + E(2) * r * W2 * nh + E(4) * W * nh);
  E proc = proc_dense + sparse_attention;
  const long double proc_real = proc_dense.to_long_double() + sparse_numerator.to_long_double() / 8.0L;
  E dec = E(2) * (C * W * ng + de * W * e_dec + E(2) * W2 * nh + E(3) * W2 * ng + W * e_dec + E(2) * r * W2 * ng +
                  Cout * W * ng);
  return FlopBreakdown({{"encoder", enc, std::nullopt}, {"processor", proc, proc_real}, {"decoder", dec, std::nullopt}});
}

FlopBreakdown flops(const ModelShape& shape, const CostConfig& cfg) {
  switch (shape.arch) {
    case Arch::GraphCast: return flops_graphcast(shape, cfg.grid);
    case Arch::Aurora: return flops_aurora(shape, cfg);
    case Arch::Pangu: return flops_pangu(shape, cfg);
    case Arch::SFNO: return flops_sfno(shape, cfg.grid, cfg.sfno_alpha, cfg.sfno_skip);
    case Arch::AIFS: return flops_aifs(shape, cfg.grid);
  }
  throw Error(ErrorCode::InvalidShape, "unhandled architecture");
}

ComputeBudget training_compute(Exact flops_per_step, Exact steps) {
  if (flops_per_step == E(0) || steps == E(0)) {
    throw Error(ErrorCode::InvalidInput, "flops per step and steps must both be >= 1");
  }
  return {flops_per_step, steps, flops_per_step * steps};
}

UtilizationRecord utilization(double achieved_tflops, double peak_tflops, int precision_bits) {
  if (!(achieved_tflops > 0) || !(peak_tflops > 0) || !std::isfinite(achieved_tflops) ||
      !std::isfinite(peak_tflops)) {
    throw Error(ErrorCode::InvalidInput, "throughput values must be positive and finite");
  }
  if (precision_bits != 16 && precision_bits != 32) {
    throw Error(ErrorCode::InvalidInput, "precision must be 16 or 32 bits");
  }
  if (achieved_tflops > peak_tflops) {
    throw Error(ErrorCode::InvalidInput, "achieved throughput exceeds peak");
  }
  return {achieved_tflops, peak_tflops, precision_bits, 100.0 * achieved_tflops / peak_tflops};
}

double h100_peak_tflops(int precision_bits) {
  if (precision_bits == 32) return 989.0;
  if (precision_bits == 16) return 1979.0;
  throw Error(ErrorCode::InvalidInput, "precision must be 16 or 32 bits");
}

std::string format_significant(double value, int digits) {
  if (value == 0) return "0";
  const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(value))));
  int decimals = digits - 1 - exponent;
  if (decimals < 0) decimals = 0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace wxscale
