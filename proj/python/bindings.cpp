#include <chrono>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "onebit/bench.hpp"
#include "onebit/bnb.hpp"
#include "onebit/config.hpp"
#include "onebit/detectors.hpp"
#include "onebit/links.hpp"
#include "onebit/model.hpp"

namespace py = pybind11;
using namespace onebit;

namespace {

// nlohmann -> python via the json module; extras are small
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict detection_dict(const MethodRun& run, const RealInstance& inst) {
  py::dict d;
  d["method"] = run.detection.method;
  d["x_hat"] = run.detection.x_hat;
  d["objective"] = run.detection.objective;
  d["wall_time_us"] = std::chrono::duration_cast<std::chrono::microseconds>(run.detection.wall_time).count();
  d["status"] = run.status;
  d["stats"] = run.detection.stats;
  d["extra"] = to_py(run.extra);
  if (inst.x_true) {
    const auto e = ber(run.detection.x_hat, *inst.x_true);
    d["bit_errors"] = e.errors;
    d["bits"] = e.bits;
  }
  return d;
}

ExperimentConfig config_from(const py::dict& settings) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : settings) {
    const std::string key = py::str(k);
    std::string value;
    if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v) value += (value.empty() ? "" : ",") + std::string(py::str(item));
    } else if (py::isinstance<py::bool_>(v)) {
      value = v.cast<bool>() ? "true" : "false";
    } else {
      value = py::str(v);
    }
    apply_setting(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

py::dict record_dict(const TrialRecord& r) {
  py::dict d;
  d["trial"] = r.trial;
  d["method"] = r.method;
  d["snr_db"] = r.snr_db;
  d["m_tilde"] = r.m_tilde;
  d["n_tilde"] = r.n_tilde;
  d["bit_errors"] = r.bit_errors;
  d["bits"] = r.bits;
  d["wall_time_us"] = r.wall_time_us;
  d["objective"] = r.objective;
  d["status"] = r.status;
  d["extra"] = to_py(r.extra);
  return d;
}

LinkFunction link_named(const std::string& name, double sigma) {
  if (name == "ML") return LinkFunction::ml(sigma);
  if (name == "AR-L1") return LinkFunction::ar_l1();
  if (name == "AR-L2") return LinkFunction::ar_l2();
  throw std::invalid_argument("link must be ML, AR-L1 or AR-L2");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "One-bit MIMO detection: global branch-and-bound, ABB, baselines, experiment driver";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionTooLarge>(m, "DimensionTooLarge", PyExc_ValueError);
  py::register_exception<RankDeficient>(m, "RankDeficient", PyExc_ArithmeticError);
  py::register_exception<bnb::SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);

  py::class_<RealInstance>(m, "Instance")
      .def_readonly("h", &RealInstance::h)
      .def_readonly("r", &RealInstance::r)
      .def_readonly("b", &RealInstance::b)
      .def_readonly("sigma", &RealInstance::sigma)
      .def_readonly("x_true", &RealInstance::x_true)
      .def_property_readonly("m", &RealInstance::m)
      .def_property_readonly("n", &RealInstance::n)
      .def_property_readonly("snr_db", [](const RealInstance& i) { return i.provenance.snr_db; })
      .def_property_readonly("seed", [](const RealInstance& i) { return i.provenance.seed; })
      .def_static("from_real", &RealInstance::from_real, py::arg("h"), py::arg("r"), py::arg("sigma"),
                  py::arg("x_true") = std::nullopt);

  m.def("generate_instance", &generate_instance, py::arg("m_tilde"), py::arg("n_tilde"), py::arg("snr_db"),
        py::arg("seed"));
  m.def(
      "instance_json",
      [](int mt, int nt, double snr, std::uint64_t seed) {
        return instance_to_json(generate_complex_instance(mt, nt, snr, seed)).dump();
      },
      py::arg("m_tilde"), py::arg("n_tilde"), py::arg("snr_db"), py::arg("seed"));
  m.def(
      "load_instance", [](const std::string& text) { return complex_to_real(instance_from_json(nlohmann::json::parse(text))); },
      py::arg("json_text"));

  m.def("log_phi", &log_phi, py::arg("z"));
  m.def("mills_ratio", &mills_ratio, py::arg("z"));
  m.def(
      "objective",
      [](const RealInstance& inst, const std::string& link, const Vector& x) {
        return objective_value(inst, link_named(link, inst.sigma), x);
      },
      py::arg("instance"), py::arg("link"), py::arg("x"));

  m.def(
      "detect",
      [](const RealInstance& inst, const std::string& method, const py::dict& settings, std::uint64_t seed) {
        const ExperimentConfig cfg = config_from(settings);
        MethodRun run;
        {
          py::gil_scoped_release release;
          run = run_method(method, inst, cfg, seed);
        }
        return detection_dict(run, inst);
      },
      py::arg("instance"), py::arg("method") = "gML", py::arg("settings") = py::dict(), py::arg("seed") = 1,
      "Run one detector. `settings` takes config keys (node_limit, rho, ...).");

  m.def(
      "solve_global",
      [](const RealInstance& inst, const std::string& link, bool alg1) {
        bnb::SolverOptions opts;
        opts.mode = alg1 ? bnb::Mode::Alg1 : bnb::Mode::Alg2;
        bnb::GlobalResult g;
        {
          py::gil_scoped_release release;
          g = bnb::solve(inst, link_named(link, inst.sigma), opts);
        }
        py::dict d;
        d["x_opt"] = g.x_opt;
        d["objective"] = g.objective;
        d["proven_optimal"] = g.proven_optimal;
        d["termination"] = g.termination;
        d["nodes"] = g.stats.nodes_processed;
        d["pool_size"] = g.stats.pool_size;
        d["cut_pool_ratio"] = g.stats.cut_pool_ratio;
        d["root_bound"] = g.stats.root_bound;
        return d;
      },
      py::arg("instance"), py::arg("link") = "ML", py::arg("alg1") = false);

  m.def(
      "exhaustive_search",
      [](const RealInstance& inst, const std::string& link) {
        const auto d = exhaustive_search(inst, link_named(link, inst.sigma));
        return py::make_tuple(d.x_hat, d.objective);
      },
      py::arg("instance"), py::arg("link") = "ML");

  m.def("signflip_ratio", &signflip_ratio, py::arg("instance"), py::arg("x"));

  m.def(
      "run_experiment",
      [](const py::dict& settings) {
        const ExperimentConfig cfg = config_from(settings);
        std::vector<TrialRecord> recs;
        {
          py::gil_scoped_release release;
          recs = run_experiment(cfg);
        }
        py::list out;
        for (const auto& r : recs) out.append(record_dict(r));
        return out;
      },
      py::arg("settings"), "Monte-Carlo sweep; returns one dict per CSV row, summary rows last.");

  m.def(
      "parse_config",
      [](const std::string& text) {
        const ExperimentConfig cfg = parse_config(text);
        cfg.validate();
        py::dict d;
        d["experiment"] = cfg.experiment;
        d["m_tilde"] = cfg.m_tilde;
        d["n_tilde"] = cfg.n_tilde;
        d["snr_db"] = cfg.snr_db;
        d["trials"] = cfg.trials;
        d["methods"] = cfg.effective_methods();
        d["base_seed"] = cfg.base_seed;
        return d;
      },
      py::arg("text"));

  m.def(
      "render_svg_plot",
      [](const std::string& csv_text, const std::string& metric, bool log_y) {
        PlotSpec spec;
        spec.metric = metric;
        spec.log_y = log_y;
        return render_svg_plot(csv_text, spec);
      },
      py::arg("csv_text"), py::arg("metric") = "ber", py::arg("log_y") = true);

  m.attr("CSV_HEADER") = kCsvHeader;
  m.attr("METHODS") = known_methods();
}
