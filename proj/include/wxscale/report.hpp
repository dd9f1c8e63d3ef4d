#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace wxscale {

/// Plot-ready table. Numeric cells hold shortest round-trip decimals, so a
/// write -> read cycle reproduces every value bit for bit.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const Table&, const Table&) = default;
};

void write_csv(std::ostream& out, const Table& table);
// RFC 4180 subset: quoted fields, doubled quotes, no embedded newlines.
// Throws ParseError(line) on ragged rows.
Table read_csv(std::istream& in);

struct Report {
  std::string kind;  // flops | params | fit_power | fit_isoflop | metrics | utilization
  std::string inputs_digest;  // "sha256:<hex>" over the canonical inputs document
  nlohmann::ordered_json body;
  std::string tool_version;
  std::optional<Table> table;
  // Set when a fit ran but could not produce its headline numbers.
  bool insufficient_data = false;
};

std::string render_json(const Report& report);
std::string render_text(const Report& report);

std::string sha256_hex(std::string_view bytes);
// "sha256:" + hex digest of inputs.dump().
std::string digest_inputs(const nlohmann::ordered_json& inputs);
// "sha256:" + hex digest of a file's bytes.
std::string digest_file(const std::filesystem::path& path);

std::string tool_version();

}  // namespace wxscale
