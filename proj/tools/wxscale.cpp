// wxscale command-line front end.
//
// Exit codes: 0 success, 2 validation error, 3 insufficient data for a fit.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wxscale/commands.hpp"
#include "wxscale/error.hpp"
#include "wxscale/registry.hpp"
#include "wxscale/synth.hpp"
#include "wxscale/tensor_io.hpp"

namespace {

using namespace wxscale;

constexpr int kExitValidation = 2;
constexpr int kExitInsufficient = 3;

struct OutputOptions {
  bool json = false;
  std::string csv;
  unsigned threads = 1;
};

struct ShapeArgs {
  std::string arch;
  std::uint64_t width = 0;
  std::string depth;
  std::uint64_t heads = 0;
  std::uint64_t mlp_ratio = 4;
  std::uint64_t window = 144;

  void add_to(CLI::App* cmd, bool required) {
    auto* a = cmd->add_option("--arch", arch, "GraphCast, Aurora, Pangu, SFNO or AIFS");
    auto* w = cmd->add_option("--width", width, "Model width");
    auto* d = cmd->add_option("--depth", depth, "Depth: one integer, or comma-separated stage depths");
    if (required) {
      a->required();
      w->required();
      d->required();
    }
    cmd->add_option("--heads", heads, "Attention heads (default: derived from head dimension)");
    cmd->add_option("--mlp-ratio", mlp_ratio, "MLP expansion ratio")->check(CLI::PositiveNumber);
    cmd->add_option("--window", window, "Attention window in tokens")->check(CLI::PositiveNumber);
  }

  ModelShape build() const {
    ModelShape s;
    s.arch = parse_arch(arch);
    s.width = width;
    std::stringstream ss(depth);
    std::string part;
    while (std::getline(ss, part, ',')) {
      const double v = parse_double(part);
      if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::InvalidShape, "depth entries must be integers >= 0");
      s.depth.push_back(static_cast<std::uint64_t>(v));
    }
    if (s.depth.empty()) throw Error(ErrorCode::InvalidShape, "depth is empty");
    s.heads = heads;
    s.mlp_ratio = mlp_ratio;
    s.window = window;
    return s;
  }
};

void emit(const Report& report, const OutputOptions& out) {
  std::cout << (out.json ? render_json(report) : render_text(report));
  if (!out.csv.empty()) {
    if (!report.table) throw Error(ErrorCode::InvalidInput, report.kind + " reports have no table");
    std::ofstream f(out.csv);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + out.csv);
    write_csv(f, *report.table);
  }
}

// "key=value" overrides for cost-config fields, applied as a JSON patch.
nlohmann::json config_overrides(const std::vector<std::string>& sets) {
  static const std::set<std::string> grid_keys = {
      "n_grid", "n_mesh", "e_mesh", "e_enc", "e_dec", "edge_dim", "h_hi", "w_hi", "h_lo", "w_lo",
      "l_max", "m_max", "lat_cells", "lon_cells", "patch", "channels_in", "channels_out"};
  static const std::set<std::string> swin_keys = {"downsample", "patch_in_features"};
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
    auto as_count = [&]() {
      const double v = parse_double(value);
      if (v < 0 || v != std::floor(v) || v > 1.8e19) {
        throw Error(ErrorCode::InvalidConfig, key + " must be a non-negative integer");
      }
      return static_cast<std::uint64_t>(v);
    };
    if (grid_keys.count(key)) {
      j["grid"][key] = as_count();
    } else if (swin_keys.count(key)) {
      j["swin"][key] = as_count();
    } else if (key == "stage_width_multipliers") {
      std::vector<std::uint64_t> mult;
      std::stringstream ss(value);
      std::string part;
      while (std::getline(ss, part, ',')) mult.push_back(static_cast<std::uint64_t>(parse_double(part)));
      j["swin"][key] = mult;
    } else if (key == "include_projections" || key == "sfno_skip") {
      if (value != "true" && value != "false") throw Error(ErrorCode::InvalidConfig, key + " must be true or false");
      (key == "sfno_skip" ? j[key] : j["swin"][key]) = value == "true";
    } else if (key == "sfno_alpha") {
      j[key] = parse_double(value);
    } else if (key == "head_dim") {
      j[key] = as_count();
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
  return j;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_double(part));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weather-model scaling-law workbench: cost models, metrics and scaling fits"};
  app.require_subcommand(1);
  OutputOptions out;
  std::string registry;
  app.add_flag("--json", out.json, "Print the machine-readable report");
  app.add_option("--csv", out.csv, "Write the report's table to this CSV file");
  app.add_option("--threads", out.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--registry", registry, "Shape registry (default: $WXSCALE_REGISTRY or the bundled one)");
  app.fallthrough();

  // params
  auto* params = app.add_subcommand("params", "Parameter count of a shape, or the whole registry");
  ShapeArgs pshape;
  pshape.add_to(params, false);

  // flops
  auto* flops_cmd = app.add_subcommand("flops", "Forward/training FLOP breakdown");
  ShapeArgs fshape;
  fshape.add_to(flops_cmd, true);
  std::string cost_config;
  std::vector<std::string> sets;
  std::uint64_t samples = 0;
  flops_cmd->add_option("--config", cost_config, "Arch-keyed cost config document (default: bundled)");
  flops_cmd->add_option("--set", sets, "Override a config field, e.g. --set n_grid=2")->take_all();
  auto* samples_opt = flops_cmd->add_option("--samples", samples, "Also report compute for this many samples");

  // fit
  auto* fit = app.add_subcommand("fit", "Scaling-law fits from a run log");
  FitRequest freq;
  std::string fit_mode = "power-D", unit = "tb", law_kind, fit_arch, fit_cost_config;
  std::uint64_t min_step = 0, patch = 1;
  double kappa = 6.0;
  bool fixed_kappa = false;
  std::string runlog;
  fit->add_option("runlog", runlog, "Run-log file")->required();
  fit->add_option("--mode", fit_mode, "power-D, power-N or isoflop");
  fit->add_option("--model", freq.filters.models, "Keep only these model ids")->take_all();
  fit->add_option("--run", freq.filters.runs, "Keep only these run ids")->take_all();
  fit->add_option("--arch", fit_arch, "Keep only records of this architecture");
  auto* min_step_opt = fit->add_option("--min-step", min_step, "Drop records before this step");
  fit->add_flag("--all-steps", freq.filters.all_steps, "Use every record, not just each run's last");
  fit->add_option("--unit", unit, "Data axis: tb or samples");
  fit->add_option("--tolerance", freq.tolerance, "Relative bucketing tolerance")->check(CLI::NonNegativeNumber);
  fit->add_option("--min-points", freq.min_points, "Minimum points per fit")->check(CLI::Range(2, 1000000));
  fit->add_option("--resamples", freq.bootstrap.resamples, "Bootstrap resamples");
  fit->add_option("--seed", freq.bootstrap.seed, "Bootstrap seed");
  fit->add_option("--confidence", freq.bootstrap.confidence, "Interval coverage")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--law", law_kind, "Compute law for isoflop: patched or graph");
  fit->add_option("--patch", patch, "Patch size for the patched law")->check(CLI::PositiveNumber);
  fit->add_option("--kappa", kappa, "Compute-law constant")->check(CLI::PositiveNumber);
  fit->add_flag("--fixed-kappa", fixed_kappa, "Use --kappa as given instead of calibrating per budget");
  fit->add_option("--cost-config", fit_cost_config, "Arch-keyed cost config for deriving compute");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Weighted loss, per-variable RMSE and CRPS");
  MetricsRequest mreq;
  std::string mpred, mtruth, mconfig;
  std::vector<std::string> mmembers;
  metrics->add_option("--pred", mpred, "Prediction tensor")->required();
  metrics->add_option("--truth", mtruth, "Truth tensor")->required();
  metrics->add_option("--config", mconfig, "Variables document");
  metrics->add_option("--member", mmembers, "Ensemble member tensor (repeatable)")->take_all();
  metrics->add_flag("--fair", mreq.fair_crps, "Fair CRPS estimator");

  // utilization
  auto* util = app.add_subcommand("utilization", "Hardware utilization");
  UtilizationRequest ureq;
  bool use_preset = false;
  std::string preset_file;
  double achieved = 0, peak = 0;
  util->add_flag("--preset", use_preset, "Use the bundled H100 preset table");
  util->add_option("--preset-file", preset_file, "Preset table file");
  auto* achieved_opt = util->add_option("--achieved", achieved, "Achieved TFLOPS");
  auto* peak_opt = util->add_option("--peak", peak, "Peak TFLOPS (default: H100 peak for --precision)");
  util->add_option("--precision", ureq.precision_bits, "16 or 32");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic run log");
  std::string synth_kind, synth_out, budgets, sample_levels;
  double noise = 0, prefactor = 0, exponent = 0;
  std::uint64_t synth_seed = 1, x_min = 0, x_max = 0;
  std::size_t points = 0;
  synth->add_option("kind", synth_kind, "power-D, power-N, chinchilla or monotone")->required();
  synth->add_option("--out", synth_out, "Output file (default: stdout)");
  synth->add_option("--seed", synth_seed, "Noise seed");
  synth->add_option("--noise", noise, "Lognormal sigma")->check(CLI::NonNegativeNumber);
  auto* pre_opt = synth->add_option("--prefactor", prefactor, "Power-law prefactor");
  auto* exp_opt = synth->add_option("--exponent", exponent, "Power-law exponent");
  auto* pts_opt = synth->add_option("--points", points, "Number of x values");
  auto* xmin_opt = synth->add_option("--x-min", x_min, "Smallest x (samples or parameters)");
  auto* xmax_opt = synth->add_option("--x-max", x_max, "Largest x");
  synth->add_option("--budgets", budgets, "Comma-separated compute budgets");
  synth->add_option("--samples", sample_levels, "Comma-separated sample counts (power-N groups)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const std::filesystem::path reg = registry.empty() ? default_registry_path() : std::filesystem::path(registry);
    Report report;
    if (*params) {
      ParamsRequest req;
      req.registry = reg;
      if (!pshape.arch.empty()) {
        if (pshape.depth.empty()) throw Error(ErrorCode::InvalidShape, "--depth is required with --arch");
        req.shape = pshape.build();
      }
      report = cmd_params(req);
    } else if (*flops_cmd) {
      FlopsRequest req;
      req.shape = fshape.build();
      const std::filesystem::path cfg_path =
          cost_config.empty() ? bundled_data_dir() / "arch_defaults.json" : std::filesystem::path(cost_config);
      req.config = load_arch_defaults(req.shape.arch, cfg_path);
      if (!sets.empty()) {
        nlohmann::json base = nlohmann::json::parse(cost_config_to_json(req.config).dump());
        base.merge_patch(config_overrides(sets));
        req.config = cost_config_from_json(req.shape.arch, base);
      }
      if (*samples_opt) req.samples = samples;
      report = cmd_flops(req);
    } else if (*fit) {
      freq.runlog = runlog;
      freq.mode = parse_fit_mode(fit_mode);
      if (unit == "tb" || unit == "TB") {
        freq.unit = DataUnit::Terabytes;
      } else if (unit == "samples") {
        freq.unit = DataUnit::Samples;
      } else {
        throw Error(ErrorCode::InvalidInput, "--unit must be tb or samples");
      }
      if (!fit_arch.empty()) freq.filters.arch = parse_arch(fit_arch);
      if (*min_step_opt) freq.filters.min_step = min_step;
      if (!law_kind.empty()) freq.law = ComputeLaw{parse_law_kind(law_kind), patch, kappa};
      freq.calibrate_kappa = !fixed_kappa;
      if (fixed_kappa && !freq.law) throw Error(ErrorCode::InvalidInput, "--fixed-kappa needs --law");
      freq.registry = reg;
      if (!fit_cost_config.empty()) freq.cost_config = fit_cost_config;
      freq.bootstrap.threads = out.threads;
      report = cmd_fit(freq);
    } else if (*metrics) {
      mreq.pred = mpred;
      mreq.truth = mtruth;
      if (!mconfig.empty()) mreq.config = mconfig;
      for (const auto& m : mmembers) mreq.members.emplace_back(m);
      mreq.threads = out.threads;
      report = cmd_metrics(mreq);
    } else if (*util) {
      if (use_preset) ureq.preset = bundled_data_dir() / "utilization_h100.json";
      if (!preset_file.empty()) ureq.preset = preset_file;
      if (*achieved_opt) ureq.achieved_tflops = achieved;
      if (*peak_opt) ureq.peak_tflops = peak;
      report = cmd_utilization(ureq);
    } else if (*synth) {
      RunLog log;
      if (synth_kind == "power-D") {
        PowerDataSpec s;
        if (*pre_opt) s.prefactor = prefactor;
        if (*exp_opt) s.exponent = exponent;
        if (*pts_opt) s.points = points;
        if (*xmin_opt) s.x_min = x_min;
        if (*xmax_opt) s.x_max = x_max;
        s.noise = noise;
        s.seed = synth_seed;
        log = synth_power_data(s);
      } else if (synth_kind == "power-N") {
        PowerParamsSpec s;
        if (*pre_opt) s.prefactor = prefactor;
        if (*exp_opt) s.exponent = exponent;
        if (*pts_opt) s.points = points;
        if (*xmin_opt) s.n_min = x_min;
        if (*xmax_opt) s.n_max = x_max;
        if (!sample_levels.empty()) {
          s.samples.clear();
          for (double v : parse_list(sample_levels)) s.samples.push_back(static_cast<std::uint64_t>(v));
        }
        s.noise = noise;
        s.seed = synth_seed;
        log = synth_power_params(s);
      } else if (synth_kind == "chinchilla") {
        ChinchillaSpec s;
        if (!budgets.empty()) s.budgets = parse_list(budgets);
        s.noise = noise;
        s.seed = synth_seed;
        log = synth_chinchilla(s);
      } else if (synth_kind == "monotone") {
        MonotoneSpec s;
        if (!budgets.empty()) s.budgets = parse_list(budgets);
        log = synth_monotone(s);
      } else {
        throw Error(ErrorCode::InvalidInput, "unknown synth kind '" + synth_kind + "'");
      }
      if (synth_out.empty()) {
        write_runlog(std::cout, log);
      } else {
        save_runlog(synth_out, log);
      }
      return 0;
    }
    emit(report, out);
    return report.insufficient_data ? kExitInsufficient : 0;
  } catch (const Error& e) {
    std::cerr << "wxscale: " << e.what() << '\n';
    return is_insufficient_data(e.code()) ? kExitInsufficient : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "wxscale: " << e.what() << '\n';
    return kExitValidation;
  }
}
