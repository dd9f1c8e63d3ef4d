#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wxscale/arch.hpp"

namespace wxscale {

struct RegistryRow {
  Arch arch = Arch::GraphCast;
  std::uint64_t width = 0;
  std::vector<std::uint64_t> depth;
  std::uint64_t params = 0;  // exact units; table values x.yM stored as x.y * 10^6
};

/// Shape -> parameter count table. One JSON record per line:
///   {"arch": "Aurora", "width": 384, "depth": [3, 5, 4], "params": 364700000}
/// Blank lines and lines starting with '#' are skipped. Immutable after load.
class ShapeRegistry {
 public:
  ShapeRegistry() = default;
  explicit ShapeRegistry(std::vector<RegistryRow> rows);

  static ShapeRegistry load(const std::filesystem::path& path);
  static ShapeRegistry parse(std::istream& in);

  const std::vector<RegistryRow>& rows() const { return rows_; }

  // Matches on (arch, width, depth); nullptr if absent.
  const RegistryRow* find(const ModelShape& shape) const;

 private:
  std::vector<RegistryRow> rows_;
};

// GraphCast: closed-form count. Other architectures: registry value, or
// Error(UnknownShape).
std::uint64_t lookup_param_count(const ModelShape& shape, const ShapeRegistry& registry);

// Registry path from $WXSCALE_REGISTRY, else the bundled data directory.
std::filesystem::path default_registry_path();
std::filesystem::path bundled_data_dir();

// Shape as stored in run logs and registry rows: arch, width, depth (scalar or
// list), optional heads/mlp_ratio/window.
ModelShape shape_from_json(const nlohmann::json& j);
nlohmann::ordered_json shape_to_json(const ModelShape& shape);

// Starts from default_cost_config(arch) and overrides any fields present:
//   {"grid": {...GridSpec fields...}, "swin": {...}, "sfno_alpha": 5.0,
//    "sfno_skip": false, "head_dim": 64}
CostConfig cost_config_from_json(Arch arch, const nlohmann::json& j);
nlohmann::ordered_json cost_config_to_json(const CostConfig& cfg);

// Arch-keyed defaults document (the bundled arch_defaults.json layout).
CostConfig load_arch_defaults(Arch arch, const std::filesystem::path& path);

}  // namespace wxscale
