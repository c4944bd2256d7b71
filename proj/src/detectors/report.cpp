#include "wmid/detectors/report.hpp"

#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

std::string to_string(DetectorKind d) {
  switch (d) {
    case DetectorKind::RngDivergence: return "RngDivergence";
    case DetectorKind::MeanAdjacent: return "MeanAdjacent";
    case DetectorKind::DeltaAmplification: return "DeltaAmplification";
    case DetectorKind::Determinism: return "Determinism";
    case DetectorKind::BitBias: return "BitBias";
  }
  return "Unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Watermarked: return "Watermarked";
    case Verdict::Unmarked: return "Unmarked";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

DetectorKind parse_detector(const std::string& s) {
  for (auto d : {DetectorKind::RngDivergence, DetectorKind::MeanAdjacent,
                 DetectorKind::DeltaAmplification, DetectorKind::Determinism, DetectorKind::BitBias})
    if (to_string(d) == s) return d;
  throw ArgumentError("unknown detector: " + s);
}

Verdict parse_verdict(const std::string& s) {
  for (auto v : {Verdict::Watermarked, Verdict::Unmarked, Verdict::Inconclusive})
    if (to_string(v) == s) return v;
  throw ArgumentError("unknown verdict: " + s);
}

nlohmann::json DetectionReport::to_json() const {
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [k, v] : statistics) {
    if (!std::isfinite(v)) throw NumericError("statistic '" + k + "' is not finite");
    stats[k] = v;
  }
  nlohmann::json j{{"detector", to_string(detector)},
                   {"statistics", stats},
                   {"verdict", to_string(verdict)},
                   {"recovered", nullptr},
                   {"metadata", metadata},
                   {"observations", observations}};
  if (recovered)
    j["recovered"] = {{"delta_hat", recovered->delta_hat}, {"gamma_hat", recovered->gamma_hat}};
  return j;
}

DetectionReport DetectionReport::from_json(const nlohmann::json& j) {
  DetectionReport r;
  try {
    r.detector = parse_detector(j.at("detector").get<std::string>());
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    for (const auto& [k, v] : j.at("statistics").items()) r.statistics[k] = v.get<double>();
    if (j.contains("recovered") && !j.at("recovered").is_null()) {
      const auto& rc = j.at("recovered");
      r.recovered = Recovered{rc.at("delta_hat").get<double>(), rc.at("gamma_hat").get<double>()};
    }
    r.metadata = j.value("metadata", nlohmann::json::object());
    r.observations = j.value("observations", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed detection report: ") + e.what());
  }
  return r;
}

DetectionReport inconclusive(DetectorKind d, const std::string& reason) {
  DetectionReport r;
  r.detector = d;
  r.verdict = Verdict::Inconclusive;
  r.metadata["reason"] = reason;
  return r;
}

}  // namespace wmid
