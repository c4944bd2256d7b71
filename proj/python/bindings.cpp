#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "wmid/client/http_client.hpp"
#include "wmid/client/local_client.hpp"
#include "wmid/core/config.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/core/watermark.hpp"
#include "wmid/detectors/bit_bias.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/detectors/determinism.hpp"
#include "wmid/detectors/mean_adjacent.hpp"
#include "wmid/detectors/rng_divergence.hpp"
#include "wmid/error.hpp"
#include "wmid/monitor/monitor.hpp"
#include "wmid/monitor/report_writer.hpp"
#include "wmid/monitor/sim_server.hpp"
#include "wmid/monitor/sweep.hpp"
#include "wmid/stats/chernoff.hpp"
#include "wmid/stats/dip.hpp"
#include "wmid/stats/inequality.hpp"
#include "wmid/stats/ks.hpp"

namespace py = pybind11;
using namespace wmid;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

SimulationConfig sim_config(const py::dict& d) { return simulation_from_json(from_py(d)); }

}  // namespace

PYBIND11_MODULE(_wmid, m) {
  m.doc() = "Watermark identification toolkit";
  m.attr("__version__") = WMID_VERSION;

  static py::exception<Error> base(m, "WmidError");
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CapabilityError>(m, "CapabilityError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  // stats
  m.def("ks_statistic", [](const std::vector<double>& a, const std::vector<double>& b) {
    return ks_statistic(a, b);
  });
  m.def("ks_p_value", &ks_p_value, py::arg("d"), py::arg("n"), py::arg("m"));
  m.def("ks_threshold", [](std::size_t n, std::size_t mm, double alpha) {
    return ks_reject(0.0, n, mm, alpha).threshold;
  }, py::arg("n"), py::arg("m"), py::arg("alpha") = 0.05);
  m.def("gini", [](const std::vector<double>& p) { return gini(p); });
  m.def("lorenz", [](const std::vector<double>& p) {
    LorenzCurve c = lorenz(p);
    return py::make_tuple(c.ordered_probs, c.cumulative);
  });
  m.def("dip", [](const std::vector<double>& x) { return dip_statistic(x).dip; });
  m.def("dip_test", [](const std::vector<double>& x, std::size_t bootstrap, std::uint64_t seed) {
    DipResult r;
    {
      py::gil_scoped_release nogil;
      r = dip_test(x, bootstrap, seed);
    }
    py::dict d;
    d["dip"] = r.dip;
    d["p"] = r.p_value;
    d["modal_lo"] = r.modal_lo;
    d["modal_hi"] = r.modal_hi;
    return d;
  }, py::arg("x"), py::arg("bootstrap") = kDefaultBootstrap, py::arg("seed") = kDefaultDipSeed);
  m.def("chernoff_budget", [](double p, double delta, std::size_t n) {
    ChernoffBudget b = chernoff_budget(p, delta, n);
    py::dict d;
    d["m"] = b.m;
    d["k"] = b.k;
    d["q"] = b.q;
    d["v"] = b.v;
    return d;
  }, py::arg("p"), py::arg("delta"), py::arg("n"));
  m.def("mean_adjacent_index", [](const std::vector<double>& v) {
    return mean_adjacent_index(LogitVector(v));
  });
  m.def("max_adjacent_gap", [](const std::vector<double>& v) { return max_adjacent_gap(LogitVector(v)); });

  // models and clients
  py::class_<SyntheticModel, std::shared_ptr<SyntheticModel>>(m, "SyntheticModel")
      .def(py::init([](std::size_t vocab_size, double skew, double sigma, std::uint64_t seed) {
             SyntheticModelConfig c;
             c.vocab_size = vocab_size;
             c.skew = skew;
             c.context_sensitivity = sigma;
             c.seed = seed;
             return std::make_shared<SyntheticModel>(c);
           }),
           py::arg("vocab_size") = 4096, py::arg("skew") = 1.0, py::arg("sigma") = 1.0,
           py::arg("seed") = 0)
      .def("encode", [](const SyntheticModel& s, const std::string& text) { return s.vocabulary().encode(text); })
      .def("logits", [](const SyntheticModel& s, const std::string& text) {
        return s.logits(Context{s.vocabulary().encode(text)}).values;
      })
      .def_property_readonly("vocab_size", [](const SyntheticModel& s) { return s.vocabulary().size(); });

  m.def("green_list", [](const std::vector<std::uint32_t>& context, std::size_t vocab_size, double gamma,
                         const std::string& key_hex, std::size_t window) {
    WatermarkSpec w;
    w.gamma = gamma;
    w.key = hex_decode(key_hex);
    w.window_k = window;
    return green_list(w, vocab_size, Context{context});
  }, py::arg("context"), py::arg("vocab_size"), py::arg("gamma"), py::arg("key_hex") = "", py::arg("window") = 5);

  py::class_<ModelClient, std::shared_ptr<ModelClient>>(m, "ModelClient")
      .def_property_readonly("model_id", &ModelClient::model_id)
      .def("capabilities", [](ModelClient& c) {
        Capabilities caps;
        {
          py::gil_scoped_release nogil;
          caps = c.capabilities();
        }
        py::dict d;
        d["has_exact_logits"] = caps.has_exact_logits;
        d["top_k_logprobs"] = caps.top_k_logprobs;
        d["sample_only"] = caps.sample_only();
        return d;
      })
      .def("complete", [](ModelClient& c, const std::string& prompt, std::size_t max_tokens, double temperature,
                          std::size_t logprobs, std::optional<std::uint64_t> seed) {
        CompletionRequest r;
        r.prompt = prompt;
        r.max_tokens = max_tokens;
        r.temperature = temperature;
        r.logprobs = logprobs;
        r.seed = seed;
        Completion out;
        {
          py::gil_scoped_release nogil;
          out = c.complete(r);
        }
        py::dict d;
        d["text"] = out.text;
        d["tokens"] = out.tokens;
        d["token_logprobs"] = out.token_logprobs;
        d["top_logprobs"] = out.top_logprobs;
        d["finish_reason"] = out.finish_reason;
        d["short_generation"] = out.short_generation;
        d["attempts"] = out.attempts;
        return d;
      }, py::arg("prompt"), py::arg("max_tokens") = 1, py::arg("temperature") = 1.0, py::arg("logprobs") = 0,
         py::arg("seed") = py::none());

  py::class_<LocalClient, ModelClient, std::shared_ptr<LocalClient>>(m, "LocalClient")
      .def(py::init([](std::shared_ptr<SyntheticModel> model, std::optional<py::dict> watermark,
                       std::string model_id, std::uint64_t seed) {
             std::optional<WatermarkSpec> w;
             if (watermark) w = watermark_from_json(from_py(*watermark));
             return std::make_shared<LocalClient>(model, w, model_id, seed);
           }),
           py::arg("model"), py::arg("watermark") = py::none(), py::arg("model_id") = "synthetic",
           py::arg("seed") = 0);

  py::class_<HttpClient, ModelClient, std::shared_ptr<HttpClient>>(m, "HttpClient")
      .def(py::init([](py::dict cfg) { return std::make_shared<HttpClient>(endpoint_from_json(from_py(cfg))); }),
           py::arg("config"));

  // detectors; reports come back as dicts
  m.def("rng_divergence_suite", [](ModelClient& ref, ModelClient& cand, std::size_t trials, std::size_t n,
                                   double alpha, std::uint64_t seed) {
    RngSuiteOptions o;
    o.trials = trials;
    o.alpha = alpha;
    o.probe.n = n;
    o.probe.seed = seed;
    DetectionReport r;
    {
      py::gil_scoped_release nogil;
      r = rng_divergence_suite(ref, cand, o);
    }
    return to_py(r.to_json());
  }, py::arg("reference"), py::arg("candidate"), py::arg("trials") = 30, py::arg("n") = 1000,
     py::arg("alpha") = 0.05, py::arg("seed") = 0);

  m.def("delta_amplify", [](ModelClient& c, const std::vector<std::string>& prefixes, const std::string& suffix) {
    py::gil_scoped_release nogil;
    return delta_amplify(c, prefixes, suffix).mean_values;
  }, py::arg("client"), py::arg("prefixes"), py::arg("suffix") = kStorySuffix);

  m.def("delta_amp_detect", [](const std::vector<double>& values, std::size_t M, double alpha,
                               std::size_t bootstrap, std::uint64_t seed) {
    AveragedLogits avg{values, M};
    DeltaAmpOptions o{alpha, bootstrap, seed};
    DetectionReport r;
    {
      py::gil_scoped_release nogil;
      r = delta_amp_detect(avg, o);
    }
    return to_py(r.to_json());
  }, py::arg("values"), py::arg("M"), py::arg("alpha") = 0.05, py::arg("bootstrap") = kDefaultBootstrap,
     py::arg("seed") = kDefaultDipSeed);

  m.def("recover_parameters", [](const std::vector<double>& values) -> py::object {
    auto r = recover_parameters(values);
    if (!r) return py::none();
    py::dict d;
    d["delta_hat"] = r->delta_hat;
    d["gamma_hat"] = r->gamma_hat;
    d["antimode"] = r->antimode;
    return d;
  });

  m.def("determinism_probe", [](ModelClient& c, const std::string& prompt, std::size_t repeats,
                                std::size_t gen_len) {
    DeterminismOptions o;
    o.repeats = repeats;
    o.gen_len = gen_len;
    DetectionReport r;
    {
      py::gil_scoped_release nogil;
      r = determinism_probe(c, prompt, o);
    }
    return to_py(r.to_json());
  }, py::arg("client"), py::arg("prompt"), py::arg("repeats") = 5, py::arg("gen_len") = 50);

  m.def("bit_bias_probe", [](ModelClient& c, double p, double confidence, std::size_t n, std::uint64_t seed) {
    ChernoffBudget b = chernoff_budget(p, confidence, n);
    ClientBitSource src(c);
    BitProbeOptions o;
    o.seed = seed;
    DetectionReport r;
    {
      py::gil_scoped_release nogil;
      r = bit_bias_probe(src, b, o);
    }
    return to_py(r.to_json());
  }, py::arg("client"), py::arg("p") = 0.5, py::arg("confidence") = 0.1, py::arg("n") = 1, py::arg("seed") = 0);

  m.def("delta_sweep", [](const std::vector<double>& deltas, double gamma, std::size_t prompts,
                          std::uint64_t seed, std::size_t bootstrap) {
    SweepOptions o;
    o.deltas = deltas;
    o.gamma = gamma;
    o.prompts = prompts;
    o.seed = seed;
    o.bootstrap = bootstrap;
    std::vector<SweepRow> rows;
    {
      py::gil_scoped_release nogil;
      rows = delta_sweep(o);
    }
    py::list out;
    for (const auto& r : rows) out.append(py::make_tuple(r.delta, r.p, r.dip));
    return out;
  }, py::arg("deltas"), py::arg("gamma") = 0.25, py::arg("prompts") = 140, py::arg("seed") = 0,
     py::arg("bootstrap") = kDefaultBootstrap);

  // monitor
  py::class_<SimulationServer>(m, "SimulationServer")
      .def(py::init([](py::dict cfg, std::uint64_t seed, std::string model_id) {
             return std::make_unique<SimulationServer>(sim_config(cfg), seed, model_id);
           }),
           py::arg("config") = py::dict(), py::arg("seed") = 0, py::arg("model_id") = "synthetic")
      .def("start", &SimulationServer::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0)
      .def("stop", &SimulationServer::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("base_url", &SimulationServer::base_url);

  m.def("run_once", [](py::dict plan, std::string base_dir) {
    MonitorPlan p = plan_from_json(from_py(plan), base_dir);
    RunResult r;
    {
      py::gil_scoped_release nogil;
      r = run_once(p);
    }
    py::list snaps;
    for (const auto& s : r.snapshots) snaps.append(to_py(s.to_json()));
    return py::make_tuple(r.exit_code, snaps);
  }, py::arg("plan"), py::arg("base_dir") = "");

  m.def("read_snapshots", [](const std::filesystem::path& p) {
    py::list out;
    for (const auto& s : read_snapshots(p)) out.append(to_py(s.to_json()));
    return out;
  });
  m.def("write_report", [](const std::filesystem::path& snapshots_file, const std::filesystem::path& out_dir) {
    std::vector<std::string> files;
    for (const auto& f : write_report(read_snapshots(snapshots_file), out_dir)) files.push_back(f.string());
    return files;
  }, py::arg("snapshots_file"), py::arg("out_dir"));
}
