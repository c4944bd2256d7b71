#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmid/detectors/report.hpp"

namespace wmid {

struct Snapshot {
  std::string timestamp;  // UTC, ISO-8601, seconds
  std::string model_id;
  DetectorKind detector = DetectorKind::RngDivergence;
  DetectionReport report;
  nlohmann::json inputs = nlohmann::json::object();
  std::string inputs_digest;  // sha256 of the canonical inputs dump
  std::string version;

  nlohmann::json to_json() const;
  static Snapshot from_json(const nlohmann::json& j);
};

std::string utc_now_iso();
std::string inputs_digest(const nlohmann::json& inputs);

Snapshot make_snapshot(std::string model_id, DetectionReport report, nlohmann::json inputs,
                       std::string timestamp = utc_now_iso());

// One snapshot per line. Writes only ever append.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path path) : path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

  void append(const Snapshot& s) const;
  std::vector<Snapshot> load() const;  // empty when the file does not exist

 private:
  std::filesystem::path path_;
};

// Reads a JSONL snapshot file or a JSON report ({"snapshots": [...]}).
std::vector<Snapshot> read_snapshots(const std::filesystem::path& path);

}  // namespace wmid
