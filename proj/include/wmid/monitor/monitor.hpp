#pragma once

#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "wmid/monitor/plan.hpp"
#include "wmid/monitor/snapshot.hpp"

namespace wmid {

enum ExitCode : int {
  kExitClean = 0,
  kExitWatermarked = 1,
  kExitUsage = 2,
  kExitTransport = 3,
};

struct RunResult {
  std::vector<Snapshot> snapshots;
  int exit_code = kExitClean;
};

// Every enabled detector once, in a fixed order; each snapshot is appended
// to the plan's store as soon as it exists. Detector failures become
// Inconclusive snapshots.
RunResult run_once(const MonitorPlan& plan);
// Same, against caller-supplied clients (reference may be null).
RunResult run_once(const MonitorPlan& plan, ModelClient& target, ModelClient* reference);

int exit_code_for(const std::vector<Snapshot>& snapshots);

struct DriftPoint {
  std::string timestamp;
  std::map<std::string, double> statistics;
  bool fired = false;
};

struct DriftReport {
  DetectorKind detector = DetectorKind::RngDivergence;
  std::vector<DriftPoint> series;  // time-ordered
  std::optional<std::size_t> first_flag;

  nlohmann::json to_json() const;
};

// Time series of one detector's snapshots, each judged against the
// earliest one.
DriftReport diff(const std::vector<Snapshot>& history, DetectorKind detector,
                 double alpha = 0.05, double gap_threshold = 5.0);

}  // namespace wmid
