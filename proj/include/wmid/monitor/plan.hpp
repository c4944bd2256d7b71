#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmid/client/client.hpp"
#include "wmid/client/http_client.hpp"
#include "wmid/core/config.hpp"
#include "wmid/detectors/report.hpp"

namespace wmid {

// A model to probe: a remote endpoint or an in-process synthetic model.
struct Target {
  std::optional<EndpointConfig> endpoint;
  std::optional<SimulationConfig> local;
  std::uint64_t local_seed = 0;

  bool remote() const { return endpoint.has_value(); }
  std::string describe() const;
};

// {"endpoint": {...} | "<file>"} or {"local": {...} | "<file>"}; relative
// file names resolve against base_dir.
Target target_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const Target& t);
std::unique_ptr<ModelClient> make_client(const Target& t);

struct DetectorBudgets {
  std::size_t rng_trials = 30;
  std::size_t rng_samples = 1000;
  std::size_t dip_prompts = 140;
  std::size_t dip_bootstrap = 2000;
  std::size_t gap_prompts = 8;
  double gap_threshold = 5.0;
  double bits_p = 0.5;
  std::size_t bits_n = 1;
  double bits_confidence = 0.1;
  std::size_t determinism_repeats = 5;
  std::size_t determinism_gen_len = 50;
  double alpha = 0.05;
};

inline constexpr double kDefaultIntervalS = 3600.0;
inline constexpr double kMinRemoteIntervalS = 60.0;

struct MonitorPlan {
  double interval_s = kDefaultIntervalS;
  std::set<DetectorKind> detectors;
  DetectorBudgets budgets;
  Target target;
  // Unmarked baseline model; without one, baselines come from the
  // earliest stored snapshot.
  std::optional<Target> reference;
  std::filesystem::path output_dir = "wmid-monitor";
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> corpora;  // empty: bundled corpora
  std::vector<double> shares;                  // empty: equal shares
  std::size_t parallelism = 4;
  std::string prompt_determinism = "Tell me about the history of bridges.";

  void validate() const;
  std::filesystem::path snapshot_path() const { return output_dir / "snapshots.jsonl"; }
};

MonitorPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const MonitorPlan& p);
MonitorPlan load_plan(const std::filesystem::path& path);

}  // namespace wmid
