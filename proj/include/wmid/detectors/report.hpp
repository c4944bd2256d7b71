#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace wmid {

enum class DetectorKind { RngDivergence, MeanAdjacent, DeltaAmplification, Determinism, BitBias };
enum class Verdict { Watermarked, Unmarked, Inconclusive };

std::string to_string(DetectorKind d);
std::string to_string(Verdict v);
DetectorKind parse_detector(const std::string& s);
Verdict parse_verdict(const std::string& s);

struct Recovered {
  double delta_hat = 0.0;
  double gamma_hat = 0.0;
};

// statistics holds named scalars (D, p, dip, ...). observations holds the
// raw material behind them (histograms, logit vectors) for plot export.
struct DetectionReport {
  DetectorKind detector = DetectorKind::RngDivergence;
  std::map<std::string, double> statistics;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<Recovered> recovered;
  nlohmann::json metadata = nlohmann::json::object();
  nlohmann::json observations = nlohmann::json::object();

  nlohmann::json to_json() const;
  static DetectionReport from_json(const nlohmann::json& j);
};

DetectionReport inconclusive(DetectorKind d, const std::string& reason);

}  // namespace wmid
