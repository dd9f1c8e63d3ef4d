#include "wxscale/tensor_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wxscale/error.hpp"

namespace wxscale {

namespace {

std::string next_line(std::istream& in, std::size_t& lineno) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(lineno + 1, "unexpected end of tensor file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string expect_key(const std::string& line, const std::string& key, std::size_t lineno) {
  if (line.rfind(key + " ", 0) != 0) throw ParseError(lineno, "expected '" + key + " ...'");
  return line.substr(key.size() + 1);
}

std::size_t parse_count(const std::string& text, std::size_t lineno) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ParseError(lineno, "bad count '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw Error(ErrorCode::InvalidInput, "not a number: '" + text + "'");
  }
  return v;
}

void write_tensor(std::ostream& out, const FieldBatch& field) {
  out << "wxtensor 1\n";
  out << "lat_count " << field.lat_count() << "\n";
  out << "lon_count " << field.lon_count() << "\n";
  out << "batch " << field.batch() << "\n";
  out << "columns ";
  for (std::size_t j = 0; j < field.columns().size(); ++j) {
    if (j) out << ',';
    out << field.columns()[j];
  }
  out << "\nvalues\n";
  const std::size_t ncol = field.columns().size();
  for (std::size_t b = 0; b < field.batch(); ++b) {
    for (std::size_t i = 0; i < field.cells(); ++i) {
      for (std::size_t j = 0; j < ncol; ++j) {
        if (j) out << ',';
        out << format_double(field.at(b, i, j));
      }
      out << '\n';
    }
  }
}

FieldBatch read_tensor(std::istream& in) {
  std::size_t lineno = 0;
  if (next_line(in, lineno) != "wxtensor 1") throw ParseError(lineno, "missing 'wxtensor 1' header");
  // read the line before passing lineno; argument evaluation order is unspecified
  auto field = [&](const char* key) {
    const std::string line = next_line(in, lineno);
    return expect_key(line, key, lineno);
  };
  auto count = [&](const char* key) {
    const std::string text = field(key);
    return parse_count(text, lineno);
  };
  const std::size_t lat = count("lat_count");
  const std::size_t lon = count("lon_count");
  const std::size_t batch = count("batch");
  std::vector<std::string> columns = split(field("columns"), ',');
  if (columns.empty()) throw ParseError(lineno, "no columns");
  for (const auto& c : columns) {
    if (c.empty()) throw ParseError(lineno, "empty column name");
  }
  if (next_line(in, lineno) != "values") throw ParseError(lineno, "expected 'values'");
  if (lat == 0 || lon == 0 || batch == 0) throw ParseError(lineno, "dimensions must be >= 1");

  const std::size_t rows = batch * lat * lon;
  std::vector<double> values;
  values.reserve(rows * columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string line = next_line(in, lineno);
    const auto fields = split(line, ',');
    if (fields.size() != columns.size()) {
      throw ParseError(lineno, "expected " + std::to_string(columns.size()) + " values, got " +
                                   std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      double v = 0;
      try {
        v = parse_double(f);
      } catch (const Error& e) {
        throw ParseError(lineno, e.what());
      }
      if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value");
      values.push_back(v);
    }
  }
  std::string trailing;
  while (std::getline(in, trailing)) {
    ++lineno;
    if (trailing.find_first_not_of(" \t\r") != std::string::npos) throw ParseError(lineno, "trailing data");
  }
  return FieldBatch(batch, lat, lon, std::move(columns), std::move(values));
}

void write_tensor_file(const std::filesystem::path& path, const FieldBatch& field) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_tensor(out, field);
}

FieldBatch read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_tensor(in);
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
  EvalConfig cfg;
  try {
    for (const auto& v : j.at("variables")) {
      VariableSpec spec;
      spec.name = v.at("name").get<std::string>();
      const std::string kind = v.value("kind", std::string("surface"));
      if (kind == "surface") {
        spec.kind = VariableKind::Surface;
      } else if (kind == "upper_air") {
        spec.kind = VariableKind::UpperAir;
        spec.levels = v.at("levels").get<std::vector<double>>();
      } else {
        throw Error(ErrorCode::InvalidConfig, spec.name + ": unknown kind '" + kind + "'");
      }
      spec.weight = v.contains("weight") ? v.at("weight").get<double>()
                                         : (spec.kind == VariableKind::Surface ? default_surface_weight(spec.name)
                                                                               : 1.0);
      if (v.contains("inv_variance")) {
        spec.inv_variance = v.at("inv_variance").get<double>();
      } else if (v.contains("sigma")) {
        const double sigma = v.at("sigma").get<double>();
        if (!(sigma > 0)) throw Error(ErrorCode::InvalidConfig, spec.name + ": sigma must be > 0");
        spec.inv_variance = 1.0 / (sigma * sigma);
      }
      cfg.variables.push_back(std::move(spec));
    }
    if (j.contains("lead_time_hours")) cfg.lead_time_hours = j.at("lead_time_hours").get<double>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

EvalConfig load_eval_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return eval_config_from_json(j);
}

}  // namespace wxscale
