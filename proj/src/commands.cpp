#include "wxscale/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"
#include "wxscale/exact_sum.hpp"
#include "wxscale/metrics.hpp"
#include "wxscale/parallel.hpp"
#include "wxscale/registry.hpp"
#include "wxscale/tensor_io.hpp"

namespace wxscale {

namespace {

using ojson = nlohmann::ordered_json;

Report make_report(std::string kind, const ojson& inputs, ojson body) {
  Report r;
  r.kind = std::move(kind);
  r.inputs_digest = digest_inputs(inputs);
  r.body = std::move(body);
  r.tool_version = tool_version();
  return r;
}

ojson interval_json(const Interval& i) { return ojson::array({i.lo, i.hi}); }

std::string_view unit_name(DataUnit unit) { return unit == DataUnit::Terabytes ? "TB" : "samples"; }

// Error message without the "Code: " prefix the Error constructor adds.
std::string bare_message(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

std::string fixed_decimals(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

ojson utilization_row(const UtilizationRecord& u, const ojson& source) {
  ojson row;
  if (source.contains("model")) row["model"] = source.at("model");
  row["achieved_tflops"] = u.achieved_tflops;
  row["peak_tflops"] = u.peak_tflops;
  row["precision_bits"] = u.precision_bits;
  row["utilization_pct"] = u.utilization_pct;
  if (source.contains("reported_pct")) {
    const std::string reported = source.at("reported_pct").get<std::string>();
    const auto dot = reported.find('.');
    const int decimals = dot == std::string::npos ? 0 : static_cast<int>(reported.size() - dot - 1);
    row["display_pct"] = fixed_decimals(u.utilization_pct, decimals);
    row["reported_pct"] = reported;
    row["delta_pp"] = u.utilization_pct - parse_double(reported);
  } else {
    // Three significant figures from 1% up, two below (the layout of the H100 table).
    row["display_pct"] = format_significant(u.utilization_pct, u.utilization_pct >= 1.0 ? 3 : 2);
  }
  return row;
}

bool passes(const RunRecord& r, const FitFilters& f) {
  if (!f.models.empty() && std::find(f.models.begin(), f.models.end(), r.model_id) == f.models.end()) return false;
  if (!f.runs.empty() && std::find(f.runs.begin(), f.runs.end(), r.run_id) == f.runs.end()) return false;
  if (f.arch && (!r.shape || r.shape->arch != *f.arch)) return false;
  if (f.min_step && r.step < *f.min_step) return false;
  return true;
}

ojson filters_json(const FitFilters& f) {
  ojson j;
  j["models"] = f.models;
  j["runs"] = f.runs;
  j["arch"] = f.arch ? ojson(std::string(to_string(*f.arch))) : ojson(nullptr);
  j["min_step"] = f.min_step ? ojson(*f.min_step) : ojson(nullptr);
  j["all_steps"] = f.all_steps;
  return j;
}

double data_value(const RunRecord& r, DataUnit unit) {
  return unit == DataUnit::Terabytes ? r.data_tb : static_cast<double>(r.samples_seen);
}

ojson law_json(const ComputeLaw& law, bool calibrated) {
  ojson j;
  j["kind"] = std::string(to_string(law.kind));
  j["patch"] = law.patch;
  j["kappa"] = law.kappa;
  j["kappa_calibrated"] = calibrated;
  return j;
}

ojson skipped_json(const std::vector<SkippedBudget>& skipped, const char* key) {
  ojson arr = ojson::array();
  for (const auto& s : skipped) {
    ojson j;
    j[key] = s.budget;
    j["points"] = s.points;
    j["reason"] = s.reason;
    arr.push_back(j);
  }
  return arr;
}

ojson power_fit_json(const PowerLawFit& f) {
  ojson j;
  j["n_points"] = f.n_points;
  j["prefactor"] = f.prefactor;
  j["exponent"] = f.exponent;
  j["exponent_ci"] = interval_json(f.exponent_ci);
  j["r_squared"] = f.r_squared;
  return j;
}

struct FitContext {
  const FitRequest& req;
  ojson& inputs;
  std::vector<RunRecord> records;
  std::optional<ShapeRegistry> registry;

  void ensure_params() {
    const bool missing = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return !r.params; });
    if (!missing) return;
    registry = ShapeRegistry::load(req.registry);
    inputs["registry"] = digest_file(req.registry);
    attach_params(records, *registry);
  }

  void ensure_compute() {
    std::vector<std::size_t> idx;
    std::vector<RunRecord> todo;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].compute_flops) {
        idx.push_back(i);
        todo.push_back(records[i]);
      }
    }
    if (todo.empty()) return;
    std::map<Arch, CostConfig> configs;
    if (req.cost_config) {
      inputs["cost_config"] = digest_file(*req.cost_config);
      for (Arch a : kAllArchs) configs[a] = load_arch_defaults(a, *req.cost_config);
    }
    attach_compute(todo, configs);
    for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]] = std::move(todo[k]);
  }

  std::vector<Observation> observations() const {
    std::vector<Observation> out;
    for (const auto& r : records) {
      Observation o;
      o.model_id = r.model_id;
      o.params = static_cast<double>(*r.params);
      o.data = data_value(r, req.unit);
      o.compute = r.compute_flops ? r.compute_flops->to_double() : 0.0;
      o.loss = r.val_loss;
      out.push_back(std::move(o));
    }
    return out;
  }
};

ComputeLaw resolve_law(const FitRequest& req, const std::vector<RunRecord>& records) {
  if (req.law) return *req.law;
  std::set<Arch> archs;
  for (const auto& r : records) {
    if (r.shape) archs.insert(r.shape->arch);
  }
  if (archs.size() > 1) {
    throw Error(ErrorCode::InvalidInput, "records span several architectures; filter to one or pass a compute law");
  }
  if (archs.empty()) return ComputeLaw{LawKind::Patched, 1, 6.0};
  return ComputeLawTable::defaults().at(*archs.begin());
}

Report fit_power_d(FitContext& ctx, ojson body) {
  const FitRequest& req = ctx.req;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  for (const auto& r : ctx.records) {
    const double x = data_value(r, req.unit);
    if (!(x > 0)) continue;
    auto [it, inserted] = groups.try_emplace(r.model_id);
    if (inserted) order.push_back(r.model_id);
    it->second.emplace_back(x, r.val_loss);
  }
  PowerLawOptions opts{req.min_points, req.bootstrap};
  ojson fits = ojson::array(), skipped = ojson::array();
  Table table{{"model_id", "x", "loss", "fitted_loss"}, {}};
  for (const auto& id : order) {
    const auto& pts = groups[id];
    try {
      const PowerLawFit f = fit_power_law(pts, opts);
      ojson j;
      j["model_id"] = id;
      j.update(power_fit_json(f));
      fits.push_back(j);
      for (const auto& [x, y] : pts) {
        table.rows.push_back({id, format_double(x), format_double(y), format_double(f.predict(x))});
      }
    } catch (const Error& e) {
      if (!is_insufficient_data(e.code())) throw;
      skipped.push_back({{"model_id", id}, {"points", pts.size()}, {"reason", bare_message(e)}});
    }
  }
  if (fits.empty()) {
    throw Error(ErrorCode::TooFewPoints, "no model has " + std::to_string(req.min_points) +
                                             " usable points with D > 0 (filters: " + body["filters"].get<std::string>() + ")");
  }
  body["fits"] = fits;
  body["skipped"] = skipped;
  Report rep = make_report("fit_power", ctx.inputs, body);
  rep.table = std::move(table);
  return rep;
}

Report fit_power_n(FitContext& ctx, ojson body) {
  const FitRequest& req = ctx.req;
  ctx.ensure_params();
  std::vector<Observation> obs;
  for (auto& o : ctx.observations()) {
    if (o.data > 0) obs.push_back(std::move(o));
  }
  PowerLawOptions opts{req.min_points, req.bootstrap};
  ModelScalingResult result;
  try {
    result = fit_model_scaling(obs, req.tolerance, opts);
  } catch (const Error& e) {
    if (!is_insufficient_data(e.code())) throw;
    throw Error(e.code(), bare_message(e) + " (filters: " + req.filters.describe() + ")");
  }
  ojson groups = ojson::array();
  Table table{{"data", "x", "loss", "fitted_loss"}, {}};
  for (const auto& g : result.groups) {
    ojson j;
    j["data"] = g.data;
    j.update(power_fit_json(g.fit));
    groups.push_back(j);
    for (const auto& p : g.points) {
      table.rows.push_back(
          {format_double(g.data), format_double(p.params), format_double(p.loss), format_double(g.fit.predict(p.params))});
    }
  }
  body["groups"] = groups;
  body["skipped"] = skipped_json(result.skipped, "data");
  Report rep = make_report("fit_power", ctx.inputs, body);
  rep.table = std::move(table);
  return rep;
}

Report fit_isoflop_report(FitContext& ctx, ojson body) {
  const FitRequest& req = ctx.req;
  ctx.ensure_params();
  ctx.ensure_compute();
  IsoFlopOptions opts;
  opts.budget_tolerance = req.tolerance;
  opts.min_points = req.min_points;
  opts.law = resolve_law(req, ctx.records);
  opts.calibrate_kappa = req.calibrate_kappa;
  opts.bootstrap = req.bootstrap;

  std::vector<Observation> obs;
  for (auto& o : ctx.observations()) {
    if (o.data > 0 && o.compute > 0) obs.push_back(std::move(o));
  }
  if (obs.empty()) {
    throw Error(ErrorCode::TooFewPoints, "no records with D > 0 and C > 0 (filters: " + req.filters.describe() + ")");
  }
  const IsoFlopFrontier frontier = fit_isoflop(obs, opts);

  body["law"] = law_json(opts.law, opts.calibrate_kappa);
  body["status"] = std::string(to_string(frontier.status));
  ojson curves = ojson::array();
  Table table{{"budget", "data", "loss", "fitted_loss"}, {}};
  for (const auto& c : frontier.curves) {
    ojson j;
    j["budget"] = c.budget;
    j["n_points"] = c.points.size();
    j["q2"] = c.fit.q2;
    j["q1"] = c.fit.q1;
    j["q0"] = c.fit.q0;
    j["shape_flag"] = std::string(to_string(c.flag));
    j["kappa"] = c.kappa;
    if (c.minimum) {
      j["data_opt"] = c.minimum->data;
      j["loss_min"] = c.minimum->loss;
      j["params_opt"] = c.minimum->params;
    } else {
      j["data_opt"] = nullptr;
      j["loss_min"] = nullptr;
      j["params_opt"] = nullptr;
    }
    curves.push_back(j);
    for (const auto& p : c.points) {
      table.rows.push_back({format_double(c.budget), format_double(p.data), format_double(p.loss),
                            format_double(c.fit(std::log10(p.data)))});
    }
  }
  body["curves"] = curves;
  body["skipped"] = skipped_json(frontier.skipped, "budget");
  if (frontier.exponents) {
    const auto& e = *frontier.exponents;
    ojson x;
    x["a"] = e.a;
    x["b"] = e.b;
    x["sum_ab"] = e.sum_ab;
    x["a_ci"] = interval_json(e.a_ci);
    x["b_ci"] = interval_json(e.b_ci);
    x["sum_ci"] = interval_json(e.sum_ci);
    x["n_budgets"] = e.n_fit.n_points;
    x["a_r_squared"] = e.n_fit.r_squared;
    x["b_r_squared"] = e.d_fit.r_squared;
    body["exponents"] = x;
  } else {
    body["exponents"] = nullptr;
  }
  Report rep = make_report("fit_isoflop", ctx.inputs, body);
  rep.table = std::move(table);
  rep.insufficient_data = !frontier.exponents.has_value();
  return rep;
}

}  // namespace

const std::vector<std::string> kParamsColumns{"arch", "width", "depth", "params", "params_millions"};

Report cmd_params(const ParamsRequest& req) {
  ojson inputs;
  inputs["command"] = "params";
  ojson body;
  if (req.shape) {
    const ModelShape& s = *req.shape;
    inputs["shape"] = shape_to_json(s);
    std::uint64_t params = 0;
    if (s.arch == Arch::GraphCast) {
      params = param_count_graphcast(s.width, s.depth_scalar());
      body["source"] = "formula";
    } else {
      inputs["registry"] = digest_file(req.registry);
      params = lookup_param_count(s, ShapeRegistry::load(req.registry));
      body["source"] = "registry";
    }
    body["arch"] = std::string(to_string(s.arch));
    body["width"] = s.width;
    body["depth"] = s.depth_string();
    body["params"] = params;
    body["params_millions"] = format_millions(params);
    Report rep = make_report("params", inputs, body);
    rep.table = Table{kParamsColumns, {{body["arch"].get<std::string>(), std::to_string(s.width), s.depth_string(),
                                        std::to_string(params), format_millions(params)}}};
    return rep;
  }
  inputs["registry"] = digest_file(req.registry);
  const ShapeRegistry reg = ShapeRegistry::load(req.registry);
  ojson rows = ojson::array();
  Table table{kParamsColumns, {}};
  for (const auto& row : reg.rows()) {
    ModelShape s;
    s.arch = row.arch;
    s.width = row.width;
    s.depth = row.depth;
    rows.push_back({{"arch", std::string(to_string(row.arch))},
                    {"width", row.width},
                    {"depth", s.depth_string()},
                    {"params", row.params},
                    {"params_millions", format_millions(row.params)}});
    table.rows.push_back({std::string(to_string(row.arch)), std::to_string(row.width), s.depth_string(),
                          std::to_string(row.params), format_millions(row.params)});
  }
  body["rows"] = rows;
  Report rep = make_report("params", inputs, body);
  rep.table = std::move(table);
  return rep;
}

Report cmd_flops(const FlopsRequest& req) {
  ojson inputs;
  inputs["command"] = "flops";
  inputs["shape"] = shape_to_json(req.shape);
  inputs["config"] = cost_config_to_json(req.config);
  inputs["samples"] = req.samples ? ojson(*req.samples) : ojson(nullptr);

  const FlopBreakdown fb = flops(req.shape, req.config);
  ojson body;
  body["arch"] = std::string(to_string(req.shape.arch));
  body["shape"] = shape_to_json(req.shape);
  body["config"] = cost_config_to_json(req.config);
  // Stage widths, token counts and transitions are configurable conventions, not published values.
  if (req.shape.arch == Arch::Aurora || req.shape.arch == Arch::Pangu) body["layout_source"] = "configured convention";
  ojson comps = ojson::array();
  for (const auto& c : fb.components()) comps.push_back({{"label", c.label}, {"flops", c.flops.to_string()}});
  body["components"] = comps;
  body["forward_total"] = fb.forward_total().to_string();
  body["train_total"] = fb.train_total().to_string();
  if (req.samples) {
    const ComputeBudget b = training_compute(fb.train_total(), Exact(*req.samples));
    body["samples"] = *req.samples;
    body["compute_total"] = b.total.to_string();
  }
  Report rep = make_report("flops", inputs, body);
  Table t{{"component", "forward_flops"}, {}};
  for (const auto& c : fb.components()) t.rows.push_back({c.label, c.flops.to_string()});
  t.rows.push_back({"forward_total", fb.forward_total().to_string()});
  t.rows.push_back({"train_total", fb.train_total().to_string()});
  rep.table = std::move(t);
  return rep;
}

std::string_view to_string(FitMode mode) {
  switch (mode) {
    case FitMode::PowerD: return "power-D";
    case FitMode::PowerN: return "power-N";
    case FitMode::IsoFlop: return "isoflop";
  }
  return "?";
}

FitMode parse_fit_mode(std::string_view text) {
  if (text == "power-D" || text == "power-d") return FitMode::PowerD;
  if (text == "power-N" || text == "power-n") return FitMode::PowerN;
  if (text == "isoflop") return FitMode::IsoFlop;
  throw Error(ErrorCode::InvalidInput, "unknown fit mode '" + std::string(text) + "' (power-D, power-N, isoflop)");
}

std::string FitFilters::describe() const {
  std::string out;
  auto add = [&](const std::string& s) { out += (out.empty() ? "" : ", ") + s; };
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "|") + x;
    return s;
  };
  if (!models.empty()) add("model=" + join(models));
  if (!runs.empty()) add("run=" + join(runs));
  if (arch) add("arch=" + std::string(to_string(*arch)));
  if (min_step) add("min_step=" + std::to_string(*min_step));
  add(all_steps ? "all steps" : "final records");
  return out;
}

Report cmd_fit(const FitRequest& req) {
  ojson inputs;
  inputs["command"] = "fit";
  inputs["mode"] = std::string(to_string(req.mode));
  inputs["runlog"] = digest_file(req.runlog);
  inputs["filters"] = filters_json(req.filters);
  inputs["unit"] = std::string(unit_name(req.unit));
  inputs["tolerance"] = req.tolerance;
  inputs["min_points"] = req.min_points;
  inputs["bootstrap"] = {{"resamples", req.bootstrap.resamples},
                         {"seed", req.bootstrap.seed},
                         {"confidence", req.bootstrap.confidence}};
  inputs["law"] = req.law ? law_json(*req.law, req.calibrate_kappa) : ojson(nullptr);
  inputs["calibrate_kappa"] = req.calibrate_kappa;

  FitFilters effective = req.filters;
  if (req.mode == FitMode::PowerD) effective.all_steps = true;
  const std::string describe = effective.describe();

  FitContext ctx{req, inputs, {}, std::nullopt};
  std::vector<RunRecord> kept;
  for (auto& r : ingest_runlog(req.runlog)) {
    if (passes(r, req.filters)) kept.push_back(std::move(r));
  }
  const bool finals = req.mode != FitMode::PowerD && !req.filters.all_steps;
  ctx.records = finals ? final_records(kept) : std::move(kept);
  if (ctx.records.empty()) {
    throw Error(ErrorCode::TooFewPoints, "no records left (filters: " + describe + ")");
  }

  ojson body;
  body["mode"] = std::string(to_string(req.mode));
  body["unit"] = std::string(unit_name(req.unit));
  body["records"] = ctx.records.size();
  body["filters"] = describe;
  body["bootstrap"] = inputs["bootstrap"];
  switch (req.mode) {
    case FitMode::PowerD: return fit_power_d(ctx, body);
    case FitMode::PowerN: return fit_power_n(ctx, body);
    case FitMode::IsoFlop: return fit_isoflop_report(ctx, body);
  }
  throw Error(ErrorCode::InvalidInput, "unknown fit mode");
}

Report cmd_metrics(const MetricsRequest& req) {
  ojson inputs;
  inputs["command"] = "metrics";
  inputs["pred"] = digest_file(req.pred);
  inputs["truth"] = digest_file(req.truth);
  inputs["config"] = req.config ? ojson(digest_file(*req.config)) : ojson(nullptr);
  ojson members = ojson::array();
  for (const auto& m : req.members) members.push_back(digest_file(m));
  inputs["members"] = members;
  inputs["fair_crps"] = req.fair_crps;

  const FieldBatch pred = read_tensor_file(req.pred);
  const FieldBatch truth = read_tensor_file(req.truth);
  auto same_layout = [](const FieldBatch& a, const FieldBatch& b) {
    return a.batch() == b.batch() && a.lat_count() == b.lat_count() && a.lon_count() == b.lon_count() &&
           a.columns() == b.columns();
  };
  if (!same_layout(pred, truth)) throw Error(ErrorCode::ShapeMismatch, "prediction and truth layouts differ");

  EvalConfig cfg;
  if (req.config) {
    cfg = load_eval_config(*req.config);
  } else {
    for (const auto& c : truth.columns()) {
      VariableSpec v;
      v.name = c;
      v.weight = default_surface_weight(c);
      cfg.variables.push_back(v);
    }
    cfg.validate();
  }
  const AreaWeights weights = area_weights(truth.lat_count(), truth.lon_count());

  ojson body;
  body["grid"] = {{"lat_count", truth.lat_count()}, {"lon_count", truth.lon_count()}};
  body["batch"] = truth.batch();
  body["lead_time_hours"] = cfg.lead_time_hours;
  body["weighted_loss"] = weighted_mse(pred, truth, weights, cfg, req.threads);
  ojson vars = ojson::array();
  Table table{{"column", "mse", "rmse"}, {}};
  for (std::size_t j = 0; j < truth.columns().size(); ++j) {
    const double mse = per_variable_mse(pred, truth, weights, j, req.threads);
    vars.push_back({{"column", truth.columns()[j]}, {"mse", mse}, {"rmse", std::sqrt(mse)}});
    table.rows.push_back({truth.columns()[j], format_double(mse), format_double(std::sqrt(mse))});
  }
  body["variables"] = vars;

  if (!req.members.empty()) {
    std::vector<FieldBatch> ens;
    for (const auto& m : req.members) {
      ens.push_back(read_tensor_file(m));
      if (!same_layout(ens.back(), truth)) {
        throw Error(ErrorCode::ShapeMismatch, "ensemble member " + m.string() + " layout differs from truth");
      }
    }
    table.columns.push_back("crps");
    ojson crps = ojson::array();
    const std::size_t n = truth.batch() * truth.cells();
    for (std::size_t j = 0; j < truth.columns().size(); ++j) {
      std::vector<double> terms(n);
      parallel_for(n, req.threads, [&](std::size_t k) {
        EnsembleSample s;
        const std::size_t b = k / truth.cells(), i = k % truth.cells();
        for (const auto& e : ens) s.members.push_back(e.at(b, i, j));
        s.observation = truth.at(b, i, j);
        terms[k] = weights.values[i] * crps_ensemble(s, req.fair_crps);
      });
      ExactSum sum;
      for (double t : terms) sum.add(t);
      const double mean = sum.value() / static_cast<double>(n);
      crps.push_back({{"column", truth.columns()[j]}, {"crps", mean}});
      table.rows[j].push_back(format_double(mean));
    }
    body["members"] = req.members.size();
    body["crps"] = crps;
  }
  Report rep = make_report("metrics", inputs, body);
  rep.table = std::move(table);
  return rep;
}

Report cmd_utilization(const UtilizationRequest& req) {
  ojson inputs;
  inputs["command"] = "utilization";
  ojson rows = ojson::array();
  ojson body;
  if (req.preset) {
    inputs["preset"] = digest_file(*req.preset);
    std::ifstream in(*req.preset);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + req.preset->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::InvalidConfig, req.preset->string() + ": " + e.what());
    }
    if (doc.contains("hardware")) body["hardware"] = doc.at("hardware").get<std::string>();
    for (const auto& src : doc.at("rows")) {
      const ojson row = ojson::parse(src.dump());
      const auto u = utilization(src.at("achieved_tflops").get<double>(), src.at("peak_tflops").get<double>(),
                                 src.value("precision_bits", 32));
      rows.push_back(utilization_row(u, row));
    }
  } else {
    if (!req.achieved_tflops) throw Error(ErrorCode::InvalidInput, "give --achieved or --preset");
    const double peak = req.peak_tflops ? *req.peak_tflops : h100_peak_tflops(req.precision_bits);
    inputs["achieved_tflops"] = *req.achieved_tflops;
    inputs["peak_tflops"] = peak;
    inputs["precision_bits"] = req.precision_bits;
    rows.push_back(utilization_row(utilization(*req.achieved_tflops, peak, req.precision_bits), ojson::object()));
  }
  body["rows"] = rows;
  Report rep = make_report("utilization", inputs, body);
  Table t{{"model", "achieved_tflops", "peak_tflops", "precision_bits", "utilization_pct"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.value("model", std::string()), format_double(r.at("achieved_tflops").get<double>()),
                      format_double(r.at("peak_tflops").get<double>()), std::to_string(r.at("precision_bits").get<int>()),
                      format_double(r.at("utilization_pct").get<double>())});
  }
  rep.table = std::move(t);
  return rep;
}

}  // namespace wxscale
