// Python bindings. Reports cross the boundary as their JSON rendering; the
// wxscale package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wxscale/commands.hpp"
#include "wxscale/cost_models.hpp"
#include "wxscale/error.hpp"
#include "wxscale/metrics.hpp"
#include "wxscale/registry.hpp"
#include "wxscale/scaling_fit.hpp"

namespace py = pybind11;
using namespace wxscale;

namespace {

std::filesystem::path registry_or_default(const std::optional<std::filesystem::path>& registry) {
  return registry ? *registry : default_registry_path();
}

ModelShape parse_shape(const std::string& shape_json) { return shape_from_json(nlohmann::json::parse(shape_json)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> validation;
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> insufficient;
  validation.call_once_and_store_result(
      [&] { return py::exception<Error>(m, "ValidationError", PyExc_ValueError); });
  insufficient.call_once_and_store_result(
      [&] { return py::exception<Error>(m, "InsufficientDataError", validation.get_stored().ptr()); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = is_insufficient_data(e.code()) ? insufficient.get_stored() : validation.get_stored();
      py::set_error(type, e.what());
    } catch (const nlohmann::json::exception& e) {
      py::set_error(validation.get_stored(), e.what());
    }
  });

  m.attr("__version__") = tool_version();

  m.def("default_registry_path", [] { return default_registry_path(); });

  m.def("param_count_graphcast", &param_count_graphcast, py::arg("width"), py::arg("depth"));
  m.def("format_millions", &format_millions, py::arg("params"));

  m.def(
      "params",
      [](std::optional<std::string> shape_json, std::optional<std::filesystem::path> registry) {
        ParamsRequest req;
        req.registry = registry_or_default(registry);
        if (shape_json) req.shape = parse_shape(*shape_json);
        return render_json(cmd_params(req));
      },
      py::arg("shape_json") = py::none(), py::arg("registry") = py::none());

  m.def(
      "flops",
      [](const std::string& shape_json, const std::string& config_json, std::optional<std::uint64_t> samples) {
        FlopsRequest req;
        req.shape = parse_shape(shape_json);
        const CostConfig defaults = load_arch_defaults(req.shape.arch, bundled_data_dir() / "arch_defaults.json");
        nlohmann::json base = nlohmann::json::parse(cost_config_to_json(defaults).dump());
        base.merge_patch(nlohmann::json::parse(config_json));
        req.config = cost_config_from_json(req.shape.arch, base);
        req.samples = samples;
        return render_json(cmd_flops(req));
      },
      py::arg("shape_json"), py::arg("config_json") = "{}", py::arg("samples") = py::none());

  m.def(
      "fit",
      [](const std::filesystem::path& runlog, const std::string& mode, std::vector<std::string> models,
         const std::string& unit, double tolerance, std::size_t min_points, std::size_t resamples,
         std::uint64_t seed, unsigned threads, std::optional<std::filesystem::path> registry) {
        FitRequest req;
        req.runlog = runlog;
        req.mode = parse_fit_mode(mode);
        req.filters.models = std::move(models);
        if (unit == "tb") {
          req.unit = DataUnit::Terabytes;
        } else if (unit == "samples") {
          req.unit = DataUnit::Samples;
        } else {
          throw Error(ErrorCode::InvalidInput, "unit must be 'tb' or 'samples'");
        }
        req.tolerance = tolerance;
        req.min_points = min_points;
        req.bootstrap.resamples = resamples;
        req.bootstrap.seed = seed;
        req.bootstrap.threads = threads;
        req.registry = registry_or_default(registry);
        py::gil_scoped_release release;
        return render_json(cmd_fit(req));
      },
      py::arg("runlog"), py::arg("mode") = "power-D", py::arg("models") = std::vector<std::string>{},
      py::arg("unit") = "tb", py::arg("tolerance") = 0.05, py::arg("min_points") = 3, py::arg("resamples") = 1000,
      py::arg("seed") = BootstrapOptions{}.seed, py::arg("threads") = 1, py::arg("registry") = py::none());

  m.def(
      "metrics",
      [](const std::filesystem::path& pred, const std::filesystem::path& truth,
         std::optional<std::filesystem::path> config, std::vector<std::filesystem::path> members, bool fair,
         unsigned threads) {
        MetricsRequest req{pred, truth, config, std::move(members), fair, threads};
        py::gil_scoped_release release;
        return render_json(cmd_metrics(req));
      },
      py::arg("pred"), py::arg("truth"), py::arg("config") = py::none(),
      py::arg("members") = std::vector<std::filesystem::path>{}, py::arg("fair") = false, py::arg("threads") = 1);

  m.def(
      "utilization",
      [](std::optional<std::filesystem::path> preset, std::optional<double> achieved, std::optional<double> peak,
         int precision_bits) {
        return render_json(cmd_utilization({preset, achieved, peak, precision_bits}));
      },
      py::arg("preset") = py::none(), py::arg("achieved_tflops") = py::none(), py::arg("peak_tflops") = py::none(),
      py::arg("precision_bits") = 32);

  m.def(
      "crps",
      [](std::vector<double> members, double observation, bool fair) {
        return crps_ensemble({std::move(members), observation}, fair);
      },
      py::arg("members"), py::arg("observation"), py::arg("fair") = false);

  m.def(
      "fit_power_law",
      [](const std::vector<double>& x, const std::vector<double>& loss, std::size_t resamples, std::uint64_t seed) {
        if (x.size() != loss.size()) throw Error(ErrorCode::ShapeMismatch, "x and loss differ in length");
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < x.size(); ++i) pts.emplace_back(x[i], loss[i]);
        PowerLawOptions opts;
        opts.bootstrap.resamples = resamples;
        opts.bootstrap.seed = seed;
        const PowerLawFit f = fit_power_law(pts, opts);
        py::dict out;
        out["prefactor"] = f.prefactor;
        out["exponent"] = f.exponent;
        out["r_squared"] = f.r_squared;
        out["n_points"] = f.n_points;
        out["exponent_ci"] = py::make_tuple(f.exponent_ci.lo, f.exponent_ci.hi);
        return out;
      },
      py::arg("x"), py::arg("loss"), py::arg("resamples") = 1000, py::arg("seed") = BootstrapOptions{}.seed);
}
