#include "wxscale/registry.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"

#ifndef WXSCALE_DATA_DIR
#define WXSCALE_DATA_DIR "data"
#endif

namespace wxscale {

using json = nlohmann::json;

namespace {

std::uint64_t positive_u64(const json& j, const char* field) {
  if (!j.is_number_unsigned()) {
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    throw Error(ErrorCode::InvalidShape, std::string(field) + " must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<std::uint64_t> depth_from_json(const json& j) {
  std::vector<std::uint64_t> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(positive_u64(v, "depth"));
    if (out.empty()) throw Error(ErrorCode::InvalidShape, "depth list is empty");
  } else {
    out.push_back(positive_u64(j, "depth"));
  }
  return out;
}

bool same_shape_key(const RegistryRow& row, const ModelShape& shape) {
  return row.arch == shape.arch && row.width == shape.width && row.depth == shape.depth;
}

}  // namespace

ShapeRegistry::ShapeRegistry(std::vector<RegistryRow> rows) {
  for (auto& row : rows) {
    bool duplicate = false;
    for (const auto& existing : rows_) {
      if (existing.arch == row.arch && existing.width == row.width && existing.depth == row.depth) {
        if (existing.params != row.params) {
          throw Error(ErrorCode::InvalidConfig, "conflicting registry rows for " + std::string(to_string(row.arch)) +
                                                    " width " + std::to_string(row.width));
        }
        duplicate = true;
      }
    }
    if (!duplicate) rows_.push_back(std::move(row));
  }
}

ShapeRegistry ShapeRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open registry " + path.string());
  return parse(in);
}

ShapeRegistry ShapeRegistry::parse(std::istream& in) {
  std::vector<RegistryRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const json j = json::parse(line);
      RegistryRow row;
      row.arch = parse_arch(j.at("arch").get<std::string>());
      row.width = positive_u64(j.at("width"), "width");
      row.depth = depth_from_json(j.at("depth"));
      row.params = positive_u64(j.at("params"), "params");
      rows.push_back(std::move(row));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return ShapeRegistry(std::move(rows));
}

const RegistryRow* ShapeRegistry::find(const ModelShape& shape) const {
  for (const auto& row : rows_) {
    if (same_shape_key(row, shape)) return &row;
  }
  return nullptr;
}

std::uint64_t lookup_param_count(const ModelShape& shape, const ShapeRegistry& registry) {
  if (shape.arch == Arch::GraphCast) return param_count_graphcast(shape.width, shape.depth_scalar());
  if (const RegistryRow* row = registry.find(shape)) return row->params;
  throw Error(ErrorCode::UnknownShape, std::string(to_string(shape.arch)) + " width " + std::to_string(shape.width) +
                                           " depth " + shape.depth_string() + " is not in the registry");
}

std::filesystem::path bundled_data_dir() {
  if (const char* env = std::getenv("WXSCALE_DATA_DIR")) return env;
  return WXSCALE_DATA_DIR;
}

std::filesystem::path default_registry_path() {
  if (const char* env = std::getenv("WXSCALE_REGISTRY")) return env;
  return bundled_data_dir() / "shape_registry.jsonl";
}

ModelShape shape_from_json(const json& j) {
  ModelShape shape;
  shape.arch = parse_arch(j.at("arch").get<std::string>());
  shape.width = positive_u64(j.at("width"), "width");
  shape.depth = depth_from_json(j.at("depth"));
  if (j.contains("heads")) shape.heads = positive_u64(j.at("heads"), "heads");
  if (j.contains("mlp_ratio")) shape.mlp_ratio = positive_u64(j.at("mlp_ratio"), "mlp_ratio");
  if (j.contains("window")) shape.window = positive_u64(j.at("window"), "window");
  return shape;
}

nlohmann::ordered_json shape_to_json(const ModelShape& shape) {
  nlohmann::ordered_json j;
  j["arch"] = std::string(to_string(shape.arch));
  j["width"] = shape.width;
  if (shape.depth.size() == 1) {
    j["depth"] = shape.depth.front();
  } else {
    j["depth"] = shape.depth;
  }
  if (shape.heads != 0) j["heads"] = shape.heads;
  if (shape.mlp_ratio != 4) j["mlp_ratio"] = shape.mlp_ratio;
  if (shape.window != 144) j["window"] = shape.window;
  return j;
}

CostConfig cost_config_from_json(Arch arch, const json& j) {
  CostConfig cfg = default_cost_config(arch);
  try {
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      auto set = [&](const char* key, std::uint64_t& field) {
        if (g.contains(key)) field = positive_u64(g.at(key), key);
      };
      set("n_grid", cfg.grid.n_grid);
      set("n_mesh", cfg.grid.n_mesh);
      set("e_mesh", cfg.grid.e_mesh);
      set("e_enc", cfg.grid.e_enc);
      set("e_dec", cfg.grid.e_dec);
      set("edge_dim", cfg.grid.edge_dim);
      set("h_hi", cfg.grid.h_hi);
      set("w_hi", cfg.grid.w_hi);
      set("h_lo", cfg.grid.h_lo);
      set("w_lo", cfg.grid.w_lo);
      set("l_max", cfg.grid.l_max);
      set("m_max", cfg.grid.m_max);
      set("lat_cells", cfg.grid.lat_cells);
      set("lon_cells", cfg.grid.lon_cells);
      set("patch", cfg.grid.patch);
      set("channels_in", cfg.grid.channels_in);
      set("channels_out", cfg.grid.channels_out);
    }
    if (j.contains("swin")) {
      const json& s = j.at("swin");
      if (s.contains("stage_width_multipliers")) {
        cfg.swin.stage_width_multipliers = s.at("stage_width_multipliers").get<std::vector<std::uint64_t>>();
      }
      if (s.contains("downsample")) cfg.swin.downsample = positive_u64(s.at("downsample"), "downsample");
      if (s.contains("include_projections")) cfg.swin.include_projections = s.at("include_projections").get<bool>();
      if (s.contains("patch_in_features")) {
        cfg.swin.patch_in_features = positive_u64(s.at("patch_in_features"), "patch_in_features");
      }
    }
    if (j.contains("sfno_alpha")) cfg.sfno_alpha = j.at("sfno_alpha").get<double>();
    if (j.contains("sfno_skip")) cfg.sfno_skip = j.at("sfno_skip").get<bool>();
    if (j.contains("head_dim")) cfg.head_dim = positive_u64(j.at("head_dim"), "head_dim");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (!(cfg.sfno_alpha > 0)) throw Error(ErrorCode::InvalidConfig, "sfno_alpha must be > 0");
  return cfg;
}

nlohmann::ordered_json cost_config_to_json(const CostConfig& cfg) {
  nlohmann::ordered_json g;
  const GridSpec& s = cfg.grid;
  g["n_grid"] = s.n_grid;
  g["n_mesh"] = s.n_mesh;
  g["e_mesh"] = s.e_mesh;
  g["e_enc"] = s.e_enc;
  g["e_dec"] = s.e_dec;
  g["edge_dim"] = s.edge_dim;
  g["h_hi"] = s.h_hi;
  g["w_hi"] = s.w_hi;
  g["h_lo"] = s.h_lo;
  g["w_lo"] = s.w_lo;
  g["l_max"] = s.resolved_l_max();
  g["m_max"] = s.resolved_m_max();
  g["lat_cells"] = s.lat_cells;
  g["lon_cells"] = s.lon_cells;
  g["patch"] = s.patch;
  g["channels_in"] = s.channels_in;
  g["channels_out"] = s.channels_out;
  nlohmann::ordered_json swin;
  swin["stage_width_multipliers"] = cfg.swin.stage_width_multipliers;
  swin["downsample"] = cfg.swin.downsample;
  swin["include_projections"] = cfg.swin.include_projections;
  swin["patch_in_features"] = cfg.swin.patch_in_features;
  nlohmann::ordered_json out;
  out["grid"] = g;
  out["swin"] = swin;
  out["sfno_alpha"] = cfg.sfno_alpha;
  out["sfno_skip"] = cfg.sfno_skip;
  out["head_dim"] = cfg.head_dim;
  return out;
}

CostConfig load_arch_defaults(Arch arch, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  const std::string key(to_string(arch));
  if (!doc.contains(key)) return default_cost_config(arch);
  return cost_config_from_json(arch, doc.at(key));
}

}  // namespace wxscale
