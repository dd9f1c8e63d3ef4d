#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wxscale/arch.hpp"
#include "wxscale/exact.hpp"
#include "wxscale/registry.hpp"
#include "wxscale/scaling_fit.hpp"

namespace wxscale {

/// One training-log observation. `params` and `compute_flops` are optional
/// extensions: logs for shapes outside the cost models may carry them
/// directly, otherwise they are derived from `shape`.
struct RunRecord {
  std::string run_id;
  std::string model_id;
  std::optional<ModelShape> shape;
  std::uint64_t step = 0;
  std::uint64_t samples_seen = 0;
  std::uint64_t batch_size = 1;
  double data_tb = 0;
  double val_loss = 0;
  std::optional<std::map<std::string, double>> per_variable_rmse;
  std::optional<double> wall_time_s;
  std::optional<double> achieved_tflops;
  std::optional<std::uint64_t> params;
  std::optional<Exact> compute_flops;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct SampleSizeConfig {
  std::uint64_t lat_count = 721;
  std::uint64_t lon_count = 1440;
  std::uint64_t total_scalar_fields = 69;
  std::uint64_t bytes_per_value = 4;

  // Throws InvalidConfig if any field is zero.
  void validate() const;
  Exact bytes_per_sample() const;

  friend bool operator==(const SampleSizeConfig&, const SampleSizeConfig&) = default;
};

// samples * bytes_per_sample / 1e12 (decimal TB).
double samples_to_tb(std::uint64_t samples, const SampleSizeConfig& cfg);
// Nearest whole sample count; throws InvalidInput for negative or non-finite TB.
std::uint64_t tb_to_samples(double tb, const SampleSizeConfig& cfg);

/// Run-log file: newline-delimited JSON. The first non-blank line is the
/// header
///
///   {"format": "wxscale-runlog", "version": 1, "sample_size": {...}}
///
/// ("sample_size" optional; when present, each record's data_tb must match
/// samples_seen within 0.1%). Every following non-blank line is one record
/// with the RunRecord field names. An empty file is an empty log.
struct RunLog {
  std::optional<SampleSizeConfig> sample_size;
  std::vector<RunRecord> records;  // grouped by run (first appearance), step-sorted

  friend bool operator==(const RunLog&, const RunLog&) = default;
};

// Throws ParseError(line) for malformed or invalid lines and
// MonotonicityViolation for duplicate steps or samples_seen decreasing with step.
RunLog read_runlog(std::istream& in);
RunLog load_runlog(const std::filesystem::path& path);
std::vector<RunRecord> ingest_runlog(const std::filesystem::path& path);

void write_runlog(std::ostream& out, const RunLog& log);
void save_runlog(const std::filesystem::path& path, const RunLog& log);

nlohmann::ordered_json record_to_json(const RunRecord& r);

/// Fills compute_flops = per-sample training FLOPs x samples_seen for records
/// with a shape. Records without a shape keep a logged compute_flops; with
/// neither, throws UnknownShape. Architectures missing from `configs` use
/// default_cost_config.
void attach_compute(std::vector<RunRecord>& records, const std::map<Arch, CostConfig>& configs = {});

// Fills missing params from the shape; throws UnknownShape when unresolvable.
void attach_params(std::vector<RunRecord>& records, const ShapeRegistry& registry);

enum class DataUnit { Terabytes, Samples };

// Requires params and compute_flops on every record (InvalidInput otherwise).
std::vector<Observation> to_observations(const std::vector<RunRecord>& records, DataUnit unit);

// Last record (highest step) of every run, in run order.
std::vector<RunRecord> final_records(const std::vector<RunRecord>& records);

}  // namespace wxscale
