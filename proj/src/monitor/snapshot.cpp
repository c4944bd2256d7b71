#include "wmid/monitor/snapshot.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

using nlohmann::json;

json Snapshot::to_json() const {
  return json{{"timestamp", timestamp},         {"model_id", model_id},
              {"detector", to_string(detector)}, {"report", report.to_json()},
              {"inputs", inputs},               {"inputs_digest", inputs_digest},
              {"version", version}};
}

Snapshot Snapshot::from_json(const json& j) {
  try {
    Snapshot s;
    s.timestamp = j.at("timestamp").get<std::string>();
    s.model_id = j.at("model_id").get<std::string>();
    s.detector = parse_detector(j.at("detector").get<std::string>());
    s.report = DetectionReport::from_json(j.at("report"));
    s.inputs = j.value("inputs", json::object());
    s.inputs_digest = j.value("inputs_digest", std::string{});
    s.version = j.value("version", std::string{});
    return s;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed snapshot: ") + e.what());
  }
}

std::string utc_now_iso() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string inputs_digest(const json& inputs) { return sha256_hex(inputs.dump()); }

Snapshot make_snapshot(std::string model_id, DetectionReport report, json inputs,
                       std::string timestamp) {
  Snapshot s;
  s.timestamp = std::move(timestamp);
  s.model_id = std::move(model_id);
  s.detector = report.detector;
  s.report = std::move(report);
  s.inputs = std::move(inputs);
  s.inputs_digest = inputs_digest(s.inputs);
  s.version = WMID_VERSION;
  return s;
}

void SnapshotStore::append(const Snapshot& s) const {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  const std::string line = s.to_json().dump() + "\n";
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot open snapshot store " + path_.string());
  out << line;
  out.flush();
  if (!out) throw IoError("failed writing snapshot store " + path_.string());
}

std::vector<Snapshot> SnapshotStore::load() const {
  if (!std::filesystem::exists(path_)) return {};
  return read_snapshots(path_);
}

std::vector<Snapshot> read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<Snapshot> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;
  // A whole-file JSON report, or JSONL.
  if (text[first] == '{') {
    try {
      json j = json::parse(text);
      if (j.contains("snapshots")) {
        for (const auto& s : j.at("snapshots")) out.push_back(Snapshot::from_json(s));
        return out;
      }
    } catch (const json::parse_error&) {
    }
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Snapshot::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace wmid
