#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wxscale/arch.hpp"
#include "wxscale/report.hpp"
#include "wxscale/runstore.hpp"
#include "wxscale/scaling_fit.hpp"

namespace wxscale {

/// Report builders behind the CLI verbs. Each returns a Report whose digest
/// covers the resolved inputs (file contents by hash) but not thread counts
/// or output options.

struct ParamsRequest {
  std::optional<ModelShape> shape;  // absent: list every registry row
  std::filesystem::path registry;   // consulted for non-GraphCast shapes
};
Report cmd_params(const ParamsRequest& req);

struct FlopsRequest {
  ModelShape shape;
  CostConfig config;
  std::optional<std::uint64_t> samples;  // adds compute = train FLOPs x samples
};
Report cmd_flops(const FlopsRequest& req);

enum class FitMode { PowerD, PowerN, IsoFlop };
std::string_view to_string(FitMode mode);
FitMode parse_fit_mode(std::string_view text);

struct FitFilters {
  std::vector<std::string> models;
  std::vector<std::string> runs;
  std::optional<Arch> arch;
  std::optional<std::uint64_t> min_step;
  // power-N and isoflop use each run's final record unless set.
  bool all_steps = false;

  std::string describe() const;
};

struct FitRequest {
  std::filesystem::path runlog;
  FitMode mode = FitMode::PowerD;
  FitFilters filters;
  DataUnit unit = DataUnit::Terabytes;
  double tolerance = 0.05;  // budget (isoflop) or D (power-N) bucketing
  std::size_t min_points = 3;
  BootstrapOptions bootstrap;
  std::optional<ComputeLaw> law;  // isoflop; default from the records' architecture
  bool calibrate_kappa = true;
  std::filesystem::path registry;
  std::optional<std::filesystem::path> cost_config;  // arch-keyed defaults document
};
// Errors from fitting (TooFewPoints etc.) carry the filter description. An
// isoflop fit without exponents still returns its report, marked
// insufficient_data.
Report cmd_fit(const FitRequest& req);

struct MetricsRequest {
  std::filesystem::path pred;
  std::filesystem::path truth;
  std::optional<std::filesystem::path> config;  // absent: every column a surface variable
  std::vector<std::filesystem::path> members;   // ensemble members for CRPS
  bool fair_crps = false;
  unsigned threads = 1;
};
Report cmd_metrics(const MetricsRequest& req);

struct UtilizationRequest {
  std::optional<std::filesystem::path> preset;
  std::optional<double> achieved_tflops;
  std::optional<double> peak_tflops;  // default: H100 peak for precision_bits
  int precision_bits = 32;
};
Report cmd_utilization(const UtilizationRequest& req);

}  // namespace wxscale
