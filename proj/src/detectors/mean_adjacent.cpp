#include "wmid/detectors/mean_adjacent.hpp"

#include <algorithm>
#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

namespace {
std::vector<double> sorted_values(const LogitVector& logits) {
  if (logits.size() < 2) throw ArgumentError("need at least two logits");
  logits.check_finite();
  std::vector<double> v = logits.values;
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

double mean_adjacent_index(const LogitVector& logits) {
  auto v = sorted_values(logits);
  // Neumaier summation of the adjacent gaps.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    double g = v[i] - v[i - 1];
    double t = sum + g;
    if (std::fabs(sum) >= std::fabs(g))
      comp += (sum - t) + g;
    else
      comp += (g - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(v.size() - 1);
}

double max_adjacent_gap(const LogitVector& logits) {
  auto v = sorted_values(logits);
  double g = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) g = std::max(g, v[i] - v[i - 1]);
  return g;
}

double band_separation(const LogitVector& logits) {
  auto v = sorted_values(logits);
  std::size_t cut = 1;
  double g = -1.0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] - v[i - 1] > g) {
      g = v[i] - v[i - 1];
      cut = i;
    }
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < cut; ++i) lo += v[i];
  for (std::size_t i = cut; i < v.size(); ++i) hi += v[i];
  return hi / static_cast<double>(v.size() - cut) - lo / static_cast<double>(cut);
}

LogitSnapshotSet collect_logit_snapshots(ModelClient& client, const std::vector<PromptRef>& prompts) {
  require_logits(client);
  LogitSnapshotSet s;
  for (const auto& p : prompts) {
    CompletionRequest req;
    req.prompt = p.text;
    req.max_tokens = 1;
    req.want_logits = true;
    req.seed = 0;
    Completion c = client.complete(req);
    if (!c.first_logits) throw CapabilityError("endpoint returned no logits");
    s.prompt_ids.push_back(p.id);
    s.logits.emplace_back(*c.first_logits);
  }
  return s;
}

DetectionReport mean_adjacent_drift(const LogitSnapshotSet& old_set, const LogitSnapshotSet& new_set,
                                    double gap_threshold) {
  if (old_set.prompt_ids != new_set.prompt_ids || old_set.logits.size() != new_set.logits.size())
    throw ArgumentError("snapshot sets must share the same prompts");
  if (old_set.logits.empty()) throw ArgumentError("empty snapshot set");
  const double n = static_cast<double>(old_set.logits.size());
  double i_old = 0, i_new = 0, g_old = 0, g_new = 0, s_new = 0;
  nlohmann::json per_prompt = nlohmann::json::array();
  for (std::size_t i = 0; i < old_set.logits.size(); ++i) {
    double a = mean_adjacent_index(old_set.logits[i]);
    double b = mean_adjacent_index(new_set.logits[i]);
    double ga = max_adjacent_gap(old_set.logits[i]);
    double gb = max_adjacent_gap(new_set.logits[i]);
    i_old += a;
    i_new += b;
    g_old += ga;
    g_new += gb;
    s_new += band_separation(new_set.logits[i]);
    per_prompt.push_back({{"prompt_id", old_set.prompt_ids[i]},
                          {"index_old", a},
                          {"index_new", b},
                          {"max_gap_old", ga},
                          {"max_gap_new", gb}});
  }
  DetectionReport r;
  r.detector = DetectorKind::MeanAdjacent;
  r.statistics["index_old"] = i_old / n;
  r.statistics["index_new"] = i_new / n;
  r.statistics["delta_index"] = (i_new - i_old) / n;
  r.statistics["max_gap_old"] = g_old / n;
  r.statistics["max_gap_new"] = g_new / n;
  r.statistics["delta_max_gap"] = (g_new - g_old) / n;
  r.statistics["band_separation_new"] = s_new / n;
  r.statistics["gap_threshold"] = gap_threshold;
  r.verdict = (g_new - g_old) / n > gap_threshold ? Verdict::Watermarked : Verdict::Unmarked;
  r.metadata["prompt_ids"] = old_set.prompt_ids;
  r.observations["per_prompt"] = per_prompt;
  r.observations["logits_old"] = old_set.logits.front().values;
  r.observations["logits"] = new_set.logits.front().values;
  return r;
}

}  // namespace wmid
