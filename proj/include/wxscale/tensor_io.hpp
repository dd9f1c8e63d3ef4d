#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "wxscale/metrics.hpp"

namespace wxscale {

/// Delimited-text tensor file:
///
///   wxtensor 1
///   lat_count 3
///   lon_count 2
///   batch 1
///   columns 2t,z500
///   values
///   <batch * lat * lon lines of comma-separated column values>
///
/// Values are written in shortest round-trip form, so write -> read is
/// bit-exact. Rows are ordered batch, latitude, longitude.
void write_tensor(std::ostream& out, const FieldBatch& field);
FieldBatch read_tensor(std::istream& in);

void write_tensor_file(const std::filesystem::path& path, const FieldBatch& field);
FieldBatch read_tensor_file(const std::filesystem::path& path);

/// Variables document: {"variables": [{"name", "kind": "surface"|"upper_air",
/// "levels": [...], "weight", "sigma" | "inv_variance"}], "lead_time_hours": 6}.
/// A missing surface "weight" takes default_surface_weight(name).
EvalConfig eval_config_from_json(const nlohmann::json& j);
EvalConfig load_eval_config(const std::filesystem::path& path);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
// Strict full-string parse; throws InvalidInput.
double parse_double(const std::string& text);

}  // namespace wxscale
