#include "wmid/monitor/plan.hpp"

#include <algorithm>

#include "wmid/client/local_client.hpp"
#include "wmid/core/model.hpp"
#include "wmid/error.hpp"
#include "wmid/util/config_file.hpp"

namespace wmid {

using nlohmann::json;

namespace {

json resolve(const json& v, const std::filesystem::path& base_dir) {
  if (!v.is_string()) return v;
  std::filesystem::path p = v.get<std::string>();
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return load_config_file(p);
}

void check_keys(const json& j, const std::vector<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw ArgumentError(what + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ArgumentError("unknown " + what + " field '" + it.key() + "'");
}

}  // namespace

std::string Target::describe() const {
  if (endpoint) return endpoint->model.empty() ? endpoint->base_url : endpoint->model;
  return "local";
}

Target target_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"endpoint", "local", "seed"}, "target");
  Target t;
  if (j.contains("endpoint") == j.contains("local"))
    throw ArgumentError("target needs exactly one of 'endpoint' or 'local'");
  if (j.contains("endpoint")) t.endpoint = endpoint_from_json(resolve(j["endpoint"], base_dir));
  if (j.contains("local")) t.local = simulation_from_json(resolve(j["local"], base_dir));
  t.local_seed = j.value("seed", std::uint64_t{0});
  return t;
}

json to_json(const Target& t) {
  json j;
  if (t.endpoint) j["endpoint"] = to_json(*t.endpoint);
  if (t.local) j["local"] = to_json(*t.local);
  j["seed"] = t.local_seed;
  return j;
}

std::unique_ptr<ModelClient> make_client(const Target& t) {
  if (t.endpoint) return std::make_unique<HttpClient>(*t.endpoint);
  if (!t.local) throw ArgumentError("empty target");
  auto model = std::make_shared<SyntheticModel>(t.local->model);
  return std::make_unique<LocalClient>(model, t.local->watermark, "local", t.local_seed);
}

void MonitorPlan::validate() const {
  if (detectors.empty()) throw ArgumentError("plan enables no detectors");
  if (!(interval_s > 0.0)) throw ArgumentError("interval must be positive");
  const bool remote = target.remote() || (reference && reference->remote());
  if (remote && interval_s < kMinRemoteIntervalS)
    throw ArgumentError("interval must be at least 60 s for remote endpoints");
  if (output_dir.empty()) throw ArgumentError("output_dir is empty");
  if (!shares.empty() && shares.size() != corpora.size())
    throw ArgumentError("one share per corpus required");
  if (parallelism < 1) throw ArgumentError("parallelism must be >= 1");
  const auto& b = budgets;
  if (b.rng_trials < 1 || b.rng_samples < 1) throw ArgumentError("rng budget must be >= 1");
  if (b.dip_prompts < 2) throw ArgumentError("dip budget needs at least 2 prompts");
  if (b.dip_bootstrap < 1000) throw ArgumentError("dip bootstrap needs at least 1000 replicates");
  if (b.gap_prompts < 1) throw ArgumentError("gap budget needs at least 1 prompt");
  if (b.determinism_repeats < 2) throw ArgumentError("determinism needs at least 2 repeats");
  if (!(b.alpha > 0.0 && b.alpha < 1.0)) throw ArgumentError("alpha must be in (0, 1)");
}

MonitorPlan plan_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"interval_s", "detectors", "budgets", "target", "reference", "output_dir", "seed",
              "corpora", "shares", "parallelism", "prompt_determinism"},
             "plan");
  MonitorPlan p;
  try {
    p.interval_s = j.value("interval_s", p.interval_s);
    if (!j.contains("detectors")) throw ArgumentError("plan lists no detectors");
    for (const auto& d : j.at("detectors")) p.detectors.insert(parse_detector(d.get<std::string>()));
    if (j.contains("budgets")) {
      const json& b = j["budgets"];
      check_keys(b,
                 {"rng_trials", "rng_samples", "dip_prompts", "dip_bootstrap", "gap_prompts",
                  "gap_threshold", "bits_p", "bits_n", "bits_confidence", "determinism_repeats",
                  "determinism_gen_len", "alpha"},
                 "budgets");
      auto& o = p.budgets;
      o.rng_trials = b.value("rng_trials", o.rng_trials);
      o.rng_samples = b.value("rng_samples", o.rng_samples);
      o.dip_prompts = b.value("dip_prompts", o.dip_prompts);
      o.dip_bootstrap = b.value("dip_bootstrap", o.dip_bootstrap);
      o.gap_prompts = b.value("gap_prompts", o.gap_prompts);
      o.gap_threshold = b.value("gap_threshold", o.gap_threshold);
      o.bits_p = b.value("bits_p", o.bits_p);
      o.bits_n = b.value("bits_n", o.bits_n);
      o.bits_confidence = b.value("bits_confidence", o.bits_confidence);
      o.determinism_repeats = b.value("determinism_repeats", o.determinism_repeats);
      o.determinism_gen_len = b.value("determinism_gen_len", o.determinism_gen_len);
      o.alpha = b.value("alpha", o.alpha);
    }
    if (!j.contains("target")) throw ArgumentError("plan has no target");
    p.target = target_from_json(j["target"], base_dir);
    if (j.contains("reference") && !j["reference"].is_null())
      p.reference = target_from_json(j["reference"], base_dir);
    if (j.contains("output_dir")) {
      std::filesystem::path o = j["output_dir"].get<std::string>();
      p.output_dir = (o.is_relative() && !base_dir.empty()) ? base_dir / o : o;
    }
    p.seed = j.value("seed", p.seed);
    if (j.contains("corpora"))
      for (const auto& c : j["corpora"]) {
        std::filesystem::path cp = c.get<std::string>();
        p.corpora.push_back((cp.is_relative() && !base_dir.empty()) ? base_dir / cp : cp);
      }
    if (j.contains("shares")) p.shares = j["shares"].get<std::vector<double>>();
    p.parallelism = j.value("parallelism", p.parallelism);
    p.prompt_determinism = j.value("prompt_determinism", p.prompt_determinism);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

json to_json(const MonitorPlan& p) {
  json dets = json::array();
  for (auto d : p.detectors) dets.push_back(to_string(d));
  const auto& b = p.budgets;
  json corpora = json::array();
  for (const auto& c : p.corpora) corpora.push_back(c.string());
  json j{{"interval_s", p.interval_s},
         {"detectors", dets},
         {"budgets",
          {{"rng_trials", b.rng_trials},
           {"rng_samples", b.rng_samples},
           {"dip_prompts", b.dip_prompts},
           {"dip_bootstrap", b.dip_bootstrap},
           {"gap_prompts", b.gap_prompts},
           {"gap_threshold", b.gap_threshold},
           {"bits_p", b.bits_p},
           {"bits_n", b.bits_n},
           {"bits_confidence", b.bits_confidence},
           {"determinism_repeats", b.determinism_repeats},
           {"determinism_gen_len", b.determinism_gen_len},
           {"alpha", b.alpha}}},
         {"target", to_json(p.target)},
         {"output_dir", p.output_dir.string()},
         {"seed", p.seed},
         {"corpora", corpora},
         {"shares", p.shares},
         {"parallelism", p.parallelism},
         {"prompt_determinism", p.prompt_determinism}};
  if (p.reference) j["reference"] = to_json(*p.reference);
  return j;
}

MonitorPlan load_plan(const std::filesystem::path& path) {
  return plan_from_json(load_config_file(path), path.parent_path());
}

}  // namespace wmid
