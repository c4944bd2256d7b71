#include "wmid/core/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"
#include "wmid/util/config_file.hpp"

namespace wmid {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const SyntheticModelConfig& cfg) {
  return json{{"vocab_size", cfg.vocab_size},
              {"skew", cfg.skew},
              {"context_sensitivity", cfg.context_sensitivity},
              {"seed", cfg.seed}};
}

SyntheticModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("model config must be a JSON object");
  SyntheticModelConfig c;
  c.vocab_size = get_or<std::size_t>(j, "vocab_size", c.vocab_size);
  c.skew = get_or<double>(j, "skew", c.skew);
  c.context_sensitivity = get_or<double>(j, "context_sensitivity", c.context_sensitivity);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.validate();
  return c;
}

json to_json(const WatermarkSpec& spec) {
  return json{{"gamma", spec.gamma},
              {"delta", spec.delta},
              {"window_k", spec.window_k},
              {"key_hex", hex_encode(spec.key)},
              {"variant", to_string(spec.variant)}};
}

WatermarkSpec watermark_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("watermark config must be a JSON object");
  WatermarkSpec w;
  w.gamma = get_or<double>(j, "gamma", w.gamma);
  w.delta = get_or<double>(j, "delta", w.delta);
  w.window_k = get_or<std::size_t>(j, "window_k", w.window_k);
  w.key = hex_decode(get_or<std::string>(j, "key_hex", ""));
  w.variant = parse_variant(get_or<std::string>(j, "variant", "GreenListBoost"));
  w.validate();
  return w;
}

json to_json(const SimulationConfig& cfg) {
  json j = to_json(cfg.model);
  if (cfg.watermark) j.update(to_json(*cfg.watermark));
  return j;
}

SimulationConfig simulation_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("simulation config must be a JSON object");
  static const char* const known[] = {"vocab_size", "skew",     "context_sensitivity", "seed",   "gamma",
                                      "delta",      "window_k", "key_hex",             "variant"};
  for (const auto& [k, v] : j.items())
    if (std::find(std::begin(known), std::end(known), k) == std::end(known))
      throw ArgumentError("unknown simulation config key '" + k + "'");
  SimulationConfig c;
  c.model = model_config_from_json(j);
  if (j.contains("gamma") || j.contains("delta") || j.contains("variant"))
    c.watermark = watermark_from_json(j);
  return c;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  return simulation_from_json(load_config_file(path));
}

void save_simulation_config(const SimulationConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace wmid
