#include "wxscale/runstore.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"

namespace wxscale {

namespace {

using json = nlohmann::json;

const std::set<std::string> kRecordFields = {"run_id",        "model_id",    "shape",           "step",
                                             "samples_seen",  "batch_size",  "data_tb",         "val_loss",
                                             "per_variable_rmse", "wall_time_s", "achieved_tflops", "params",
                                             "compute_flops"};

std::uint64_t get_count(const json& j, const char* key, std::size_t line) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ParseError(line, std::string(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

double get_real(const json& j, const char* key, std::size_t line) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError(line, std::string(key) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(line, std::string(key) + ": not finite");
  return d;
}

double get_positive(const json& j, const char* key, std::size_t line) {
  const double d = get_real(j, key, line);
  if (!(d > 0)) throw ParseError(line, std::string(key) + ": must be > 0");
  return d;
}

std::string get_text(const json& j, const char* key, std::size_t line) {
  const json& v = j.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw ParseError(line, std::string(key) + ": expected a non-empty string");
  }
  return v.get<std::string>();
}

SampleSizeConfig sample_size_from_json(const json& j, std::size_t line) {
  SampleSizeConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key != "lat_count" && key != "lon_count" && key != "total_scalar_fields" && key != "bytes_per_value") {
      throw ParseError(line, "sample_size: unknown field '" + key + "'");
    }
  }
  cfg.lat_count = get_count(j, "lat_count", line);
  cfg.lon_count = get_count(j, "lon_count", line);
  cfg.total_scalar_fields = get_count(j, "total_scalar_fields", line);
  if (j.contains("bytes_per_value")) cfg.bytes_per_value = get_count(j, "bytes_per_value", line);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
  return cfg;
}

RunRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kRecordFields.count(key)) throw ParseError(line, "unknown field '" + key + "'");
  }
  for (const char* key : {"run_id", "model_id", "step", "samples_seen", "batch_size", "data_tb", "val_loss"}) {
    if (!j.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
  }
  RunRecord r;
  r.run_id = get_text(j, "run_id", line);
  r.model_id = get_text(j, "model_id", line);
  if (j.contains("shape")) {
    try {
      r.shape = shape_from_json(j.at("shape"));
    } catch (const Error& e) {
      throw ParseError(line, std::string("shape: ") + e.what());
    } catch (const std::exception& e) {
      throw ParseError(line, std::string("shape: ") + e.what());
    }
  }
  r.step = get_count(j, "step", line);
  r.samples_seen = get_count(j, "samples_seen", line);
  r.batch_size = get_count(j, "batch_size", line);
  if (r.batch_size == 0) throw ParseError(line, "batch_size: must be >= 1");
  r.data_tb = get_real(j, "data_tb", line);
  if (r.data_tb < 0) throw ParseError(line, "data_tb: must be >= 0");
  r.val_loss = get_positive(j, "val_loss", line);
  if (j.contains("per_variable_rmse")) {
    const json& m = j.at("per_variable_rmse");
    if (!m.is_object()) throw ParseError(line, "per_variable_rmse: expected an object");
    std::map<std::string, double> rmse;
    for (const auto& [key, value] : m.items()) {
      rmse[key] = get_positive(m, key.c_str(), line);
    }
    r.per_variable_rmse = std::move(rmse);
  }
  if (j.contains("wall_time_s")) r.wall_time_s = get_positive(j, "wall_time_s", line);
  if (j.contains("achieved_tflops")) r.achieved_tflops = get_positive(j, "achieved_tflops", line);
  if (j.contains("params")) {
    r.params = get_count(j, "params", line);
    if (*r.params == 0) throw ParseError(line, "params: must be >= 1");
  }
  if (j.contains("compute_flops")) {
    const json& c = j.at("compute_flops");
    if (!c.is_string()) throw ParseError(line, "compute_flops: expected a decimal string");
    try {
      r.compute_flops = Exact::parse(c.get<std::string>());
    } catch (const Error& e) {
      throw ParseError(line, std::string("compute_flops: ") + e.what());
    }
  }
  return r;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void SampleSizeConfig::validate() const {
  if (lat_count == 0 || lon_count == 0 || total_scalar_fields == 0 || bytes_per_value == 0) {
    throw Error(ErrorCode::InvalidConfig, "sample size fields must all be >= 1");
  }
}

Exact SampleSizeConfig::bytes_per_sample() const {
  validate();
  return Exact(lat_count) * Exact(lon_count) * Exact(total_scalar_fields) * Exact(bytes_per_value);
}

double samples_to_tb(std::uint64_t samples, const SampleSizeConfig& cfg) {
  const Exact bytes = Exact(samples) * cfg.bytes_per_sample();
  return static_cast<double>(bytes.to_long_double() / 1e12L);
}

std::uint64_t tb_to_samples(double tb, const SampleSizeConfig& cfg) {
  if (!std::isfinite(tb) || tb < 0) throw Error(ErrorCode::InvalidInput, "data volume must be finite and >= 0");
  const long double samples = static_cast<long double>(tb) * 1e12L / cfg.bytes_per_sample().to_long_double();
  return round_to_exact(samples).to_u64();
}

RunLog read_runlog(std::istream& in) {
  RunLog log;
  std::string text;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<std::pair<RunRecord, std::size_t>> parsed;
  while (std::getline(in, text)) {
    ++lineno;
    const std::string body = trim(text);
    if (body.empty()) continue;
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", std::string()) != "wxscale-runlog") {
        throw ParseError(lineno, "missing run-log header {\"format\": \"wxscale-runlog\", \"version\": 1}");
      }
      if (!j.contains("version") || j.at("version") != 1) throw ParseError(lineno, "unsupported run-log version");
      for (const auto& [key, value] : j.items()) {
        if (key != "format" && key != "version" && key != "sample_size") {
          throw ParseError(lineno, "header: unknown field '" + key + "'");
        }
      }
      if (j.contains("sample_size")) log.sample_size = sample_size_from_json(j.at("sample_size"), lineno);
      have_header = true;
      continue;
    }
    RunRecord r;
    try {
      r = record_from_json(j, lineno);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (log.sample_size) {
      const double expected = samples_to_tb(r.samples_seen, *log.sample_size);
      if (std::fabs(r.data_tb - expected) > 1e-3 * expected || (expected == 0 && r.data_tb != 0)) {
        throw ParseError(lineno, "data_tb " + std::to_string(r.data_tb) + " disagrees with samples_seen (expected " +
                                     std::to_string(expected) + " TB within 0.1%)");
      }
    }
    parsed.emplace_back(std::move(r), lineno);
  }

  // Group by run in order of first appearance, then sort each run by step.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<RunRecord, std::size_t>>> runs;
  for (auto& entry : parsed) {
    auto [it, inserted] = runs.try_emplace(entry.first.run_id);
    if (inserted) order.push_back(entry.first.run_id);
    it->second.push_back(std::move(entry));
  }
  for (const auto& id : order) {
    auto& run = runs[id];
    std::stable_sort(run.begin(), run.end(), [](const auto& a, const auto& b) { return a.first.step < b.first.step; });
    for (std::size_t i = 0; i < run.size(); ++i) {
      if (i > 0) {
        const auto& prev = run[i - 1].first;
        const auto& cur = run[i].first;
        if (cur.step == prev.step) {
          throw Error(ErrorCode::MonotonicityViolation, "line " + std::to_string(run[i].second) + ": run '" + id +
                                                            "' repeats step " + std::to_string(cur.step));
        }
        if (cur.samples_seen < prev.samples_seen) {
          throw Error(ErrorCode::MonotonicityViolation,
                      "line " + std::to_string(run[i].second) + ": run '" + id + "' step " +
                          std::to_string(cur.step) + ": samples_seen decreases from " +
                          std::to_string(prev.samples_seen) + " to " + std::to_string(cur.samples_seen));
        }
      }
      log.records.push_back(std::move(run[i].first));
    }
  }
  return log;
}

RunLog load_runlog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_runlog(in);
}

std::vector<RunRecord> ingest_runlog(const std::filesystem::path& path) { return load_runlog(path).records; }

nlohmann::ordered_json record_to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["model_id"] = r.model_id;
  if (r.shape) j["shape"] = shape_to_json(*r.shape);
  j["step"] = r.step;
  j["samples_seen"] = r.samples_seen;
  j["batch_size"] = r.batch_size;
  j["data_tb"] = r.data_tb;
  j["val_loss"] = r.val_loss;
  if (r.per_variable_rmse) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [k, v] : *r.per_variable_rmse) m[k] = v;
    j["per_variable_rmse"] = m;
  }
  if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
  if (r.achieved_tflops) j["achieved_tflops"] = *r.achieved_tflops;
  if (r.params) j["params"] = *r.params;
  if (r.compute_flops) j["compute_flops"] = r.compute_flops->to_string();
  return j;
}

void write_runlog(std::ostream& out, const RunLog& log) {
  nlohmann::ordered_json header;
  header["format"] = "wxscale-runlog";
  header["version"] = 1;
  if (log.sample_size) {
    const auto& s = *log.sample_size;
    header["sample_size"] = {{"lat_count", s.lat_count},
                             {"lon_count", s.lon_count},
                             {"total_scalar_fields", s.total_scalar_fields},
                             {"bytes_per_value", s.bytes_per_value}};
  }
  out << header.dump() << '\n';
  for (const auto& r : log.records) out << record_to_json(r).dump() << '\n';
}

void save_runlog(const std::filesystem::path& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_runlog(out, log);
}

void attach_compute(std::vector<RunRecord>& records, const std::map<Arch, CostConfig>& configs) {
  std::map<std::string, Exact> cache;  // per-sample train FLOPs by shape
  for (auto& r : records) {
    if (!r.shape) {
      if (r.compute_flops) continue;
      throw Error(ErrorCode::UnknownShape, "run '" + r.run_id + "' step " + std::to_string(r.step) +
                                               ": no shape and no compute_flops");
    }
    const std::string key = shape_to_json(*r.shape).dump();
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto cfg_it = configs.find(r.shape->arch);
      const CostConfig cfg = cfg_it != configs.end() ? cfg_it->second : default_cost_config(r.shape->arch);
      it = cache.emplace(key, flops(*r.shape, cfg).train_total()).first;
    }
    r.compute_flops = it->second * Exact(r.samples_seen);
  }
}

void attach_params(std::vector<RunRecord>& records, const ShapeRegistry& registry) {
  for (auto& r : records) {
    if (r.params) continue;
    if (!r.shape) {
      throw Error(ErrorCode::UnknownShape, "run '" + r.run_id + "': no shape and no params");
    }
    r.params = lookup_param_count(*r.shape, registry);
  }
}

std::vector<Observation> to_observations(const std::vector<RunRecord>& records, DataUnit unit) {
  std::vector<Observation> out;
  for (const auto& r : records) {
    if (!r.params || !r.compute_flops) {
      throw Error(ErrorCode::InvalidInput, "run '" + r.run_id + "' step " + std::to_string(r.step) +
                                               ": params and compute are required");
    }
    Observation o;
    o.model_id = r.model_id;
    o.params = static_cast<double>(*r.params);
    o.data = unit == DataUnit::Terabytes ? r.data_tb : static_cast<double>(r.samples_seen);
    o.compute = r.compute_flops->to_double();
    o.loss = r.val_loss;
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<RunRecord> final_records(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.try_emplace(r.run_id, out.size());
    if (inserted) {
      out.push_back(r);
    } else if (r.step >= out[it->second].step) {
      out[it->second] = r;
    }
  }
  return out;
}

}  // namespace wxscale
