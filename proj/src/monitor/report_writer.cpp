#include "wmid/monitor/report_writer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wmid/core/sampling.hpp"
#include "wmid/detectors/empirical.hpp"
#include "wmid/error.hpp"
#include "wmid/stats/inequality.hpp"

namespace wmid {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << header << '\n';
  }
  std::ostream& row() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace

std::string summary_text(const std::vector<Snapshot>& snapshots) {
  std::ostringstream os;
  std::size_t marked = 0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    if (s.report.verdict == Verdict::Watermarked) ++marked;
    os << "[" << i << "] " << s.timestamp << "  " << s.model_id << "  " << to_string(s.detector)
       << "  " << to_string(s.report.verdict) << "\n";
    for (const auto& [k, v] : s.report.statistics) os << "      " << k << " = " << num(v) << "\n";
    if (s.report.recovered)
      os << "      recovered delta_hat = " << num(s.report.recovered->delta_hat)
         << ", gamma_hat = " << num(s.report.recovered->gamma_hat) << "\n";
    if (s.report.metadata.contains("reason"))
      os << "      reason: " << s.report.metadata["reason"].get<std::string>() << "\n";
  }
  os << snapshots.size() << " snapshot(s), " << marked << " Watermarked\n";
  return os.str();
}

std::vector<std::filesystem::path> write_report(const std::vector<Snapshot>& snapshots,
                                                const std::filesystem::path& out_dir) {
  if (snapshots.empty()) throw ArgumentError("no snapshots to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());

  std::vector<std::filesystem::path> files;
  {
    auto p = out_dir / "summary.txt";
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << summary_text(snapshots);
    if (!out) throw IoError("failed writing " + p.string());
    files.push_back(p);
  }
  {
    auto p = out_dir / "report.json";
    json arr = json::array();
    for (const auto& s : snapshots) arr.push_back(s.to_json());
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << json{{"version", WMID_VERSION}, {"snapshots", arr}}.dump() << '\n';
    if (!out) throw IoError("failed writing " + p.string());
    files.push_back(p);
  }

  CsvFile rng(out_dir / "rng_histogram.csv", "snapshot,timestamp,value,reference_count,candidate_count");
  CsvFile lor(out_dir / "lorenz.csv", "snapshot,timestamp,rank,population_share,cumulative_share");
  CsvFile sca(out_dir / "logit_scatter.csv", "snapshot,timestamp,token,logit_old,logit_new");
  CsvFile avg(out_dir / "averaged_logit_histogram.csv", "snapshot,timestamp,bin,bin_lo,bin_hi,count");

  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    const json& obs = s.report.observations;
    const std::string pre = std::to_string(i) + "," + s.timestamp + ",";
    if (s.detector == DetectorKind::RngDivergence && obs.contains("candidate")) {
      auto cand = EmpiricalDistribution::from_json(obs["candidate"]);
      std::optional<EmpiricalDistribution> ref;
      if (obs.contains("reference")) ref = EmpiricalDistribution::from_json(obs["reference"]);
      for (std::size_t v = 1; v <= kRngBins; ++v) {
        auto count = [&](const EmpiricalDistribution& d) {
          auto it = d.counts.find(static_cast<long long>(v));
          return it == d.counts.end() ? std::size_t{0} : it->second;
        };
        rng.row() << pre << v << "," << (ref ? std::to_string(count(*ref)) : std::string{}) << ","
                  << count(cand) << "\n";
      }
    }
    if (s.detector == DetectorKind::MeanAdjacent && obs.contains("logits")) {
      LogitVector now(doubles(obs["logits"]));
      auto probs = softmax(now, 1.0);
      LorenzCurve lc = lorenz(probs);
      const double n = static_cast<double>(lc.cumulative.size());
      for (std::size_t r = 0; r < lc.cumulative.size(); ++r)
        lor.row() << pre << r + 1 << "," << num(static_cast<double>(r + 1) / n) << ","
                  << num(lc.cumulative[r]) << "\n";
      if (obs.contains("logits_old")) {
        auto old = doubles(obs["logits_old"]);
        for (std::size_t t = 0; t < old.size() && t < now.values.size(); ++t)
          sca.row() << pre << t << "," << num(old[t]) << "," << num(now.values[t]) << "\n";
      }
    }
    if (s.detector == DetectorKind::DeltaAmplification && obs.contains("averaged_logits")) {
      auto v = doubles(obs["averaged_logits"]);
      if (!v.empty()) {
        auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        const double lo = *mn, hi = *mx;
        const double width = hi > lo ? (hi - lo) / kAveragedLogitBins : 1.0;
        std::vector<std::size_t> counts(kAveragedLogitBins, 0);
        for (double x : v) {
          auto b = static_cast<std::size_t>((x - lo) / width);
          counts[std::min(b, kAveragedLogitBins - 1)]++;
        }
        for (std::size_t b = 0; b < kAveragedLogitBins; ++b)
          avg.row() << pre << b << "," << num(lo + width * static_cast<double>(b)) << ","
                    << num(lo + width * static_cast<double>(b + 1)) << "," << counts[b] << "\n";
      }
    }
  }
  rng.close();
  lor.close();
  sca.close();
  avg.close();
  for (const char* f : {"rng_histogram.csv", "lorenz.csv", "logit_scatter.csv", "averaged_logit_histogram.csv"})
    files.push_back(out_dir / f);
  return files;
}

}  // namespace wmid
