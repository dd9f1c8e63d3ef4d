#include "wxscale/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "wxscale/error.hpp"
#include "wxscale/tensor_io.hpp"

#ifndef WXSCALE_VERSION
#define WXSCALE_VERSION "0.0.0"
#endif

namespace wxscale {

namespace {

using ojson = nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(lineno, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string scalar_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_null()) return "-";
  return v.dump();
}

bool is_flat_object(const ojson& v) {
  if (!v.is_object()) return false;
  return std::all_of(v.begin(), v.end(), [](const ojson& x) { return !x.is_structured() || (x.is_array() && x.size() == 2 && x[0].is_number()); });
}

std::string cell_text(const ojson& v) {
  if (v.is_array()) return "[" + scalar_text(v[0]) + ", " + scalar_text(v[1]) + "]";
  return scalar_text(v);
}

void render_table(std::ostream& out, const ojson& rows, const std::string& indent) {
  std::vector<std::string> cols;
  for (const auto& row : rows) {
    for (const auto& [k, v] : row.items()) {
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    }
  }
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> widths;
  for (const auto& c : cols) widths.push_back(c.size());
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      line.push_back(row.contains(cols[i]) ? cell_text(row.at(cols[i])) : "-");
      widths[i] = std::max(widths[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    out << indent;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i + 1 == line.size()) {
        out << line[i];
      } else {
        out << line[i] << std::string(widths[i] - line[i].size() + 2, ' ');
      }
    }
    out << '\n';
  };
  emit(cols);
  for (const auto& line : cells) emit(line);
}

void render_value(std::ostream& out, const std::string& key, const ojson& v, const std::string& indent) {
  if (v.is_object()) {
    out << indent << key << ":\n";
    for (const auto& [k, x] : v.items()) render_value(out, k, x, indent + "  ");
  } else if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), is_flat_object)) {
    out << indent << key << ":\n";
    render_table(out, v, indent + "  ");
  } else if (v.is_array()) {
    out << indent << key << ": [";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ", ";
      out << (v[i].is_structured() ? v[i].dump() : scalar_text(v[i]));
    }
    out << "]\n";
  } else {
    out << indent << key << ": " << scalar_text(v) << '\n';
  }
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_field(table.columns[i]);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      t.columns = split_csv(line, lineno);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv(line, lineno);
    if (fields.size() != t.columns.size()) {
      throw ParseError(lineno, "expected " + std::to_string(t.columns.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

std::string render_json(const Report& report) {
  ojson j;
  j["kind"] = report.kind;
  j["inputs_digest"] = report.inputs_digest;
  j["tool_version"] = report.tool_version;
  j["body"] = report.body;
  return j.dump(2) + "\n";
}

std::string render_text(const Report& report) {
  std::ostringstream out;
  out << "kind: " << report.kind << '\n';
  out << "inputs_digest: " << report.inputs_digest << '\n';
  out << "tool_version: " << report.tool_version << '\n';
  for (const auto& [k, v] : report.body.items()) render_value(out, k, v, "");
  return out.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string digest_inputs(const nlohmann::ordered_json& inputs) { return "sha256:" + sha256_hex(inputs.dump()); }

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return "sha256:" + sha256_hex(bytes);
}

std::string tool_version() { return WXSCALE_VERSION; }

}  // namespace wxscale
