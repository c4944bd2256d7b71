#include "wmid/detectors/delta_amplification.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "wmid/detectors/parallel.hpp"
#include "wmid/error.hpp"

namespace wmid {

AveragedLogits delta_amplify(ModelClient& client, const std::vector<std::string>& prefixes,
                             const std::string& suffix, std::size_t parallelism) {
  if (prefixes.empty()) throw ArgumentError("need at least one prefix");
  require_logits(client);
  std::vector<std::vector<double>> rows(prefixes.size());
  parallel_for(prefixes.size(), parallelism, [&](std::size_t i) {
    CompletionRequest req;
    std::string p = prefixes[i];
    while (!p.empty() && std::isspace(static_cast<unsigned char>(p.back()))) p.pop_back();
    req.prompt = p + suffix;
    req.max_tokens = 1;
    req.want_logits = true;
    req.seed = i;
    Completion c = client.complete(req);
    if (!c.first_logits) throw CapabilityError("endpoint returned no logits");
    rows[i] = std::move(*c.first_logits);
  });
  AveragedLogits avg;
  avg.M = rows.size();
  avg.mean_values.assign(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    if (r.size() != avg.mean_values.size()) throw ProtocolError("logit vector length changed", "");
    for (std::size_t t = 0; t < r.size(); ++t) avg.mean_values[t] += r[t];
  }
  for (auto& v : avg.mean_values) v /= static_cast<double>(avg.M);
  return avg;
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  double pos = q * static_cast<double>(s.size() - 1);
  auto i = static_cast<std::size_t>(std::floor(pos));
  std::size_t j = std::min(i + 1, s.size() - 1);
  return s[i] + (pos - static_cast<double>(i)) * (s[j] - s[i]);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace

std::optional<Recovery> recover_parameters(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) return std::nullopt;
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  if (s.front() == s.back()) return std::nullopt;

  double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  double sd = std::sqrt(var / static_cast<double>(n - 1));
  double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h > 0.0)) return std::nullopt;

  // Binned Gaussian KDE.
  constexpr std::size_t kGrid = 4096;
  const double g0 = s.front() - 3.0 * h;
  const double dx = (s.back() + 3.0 * h - g0) / static_cast<double>(kGrid - 1);
  std::vector<double> counts(kGrid, 0.0);
  for (double x : s) {
    auto b = static_cast<std::size_t>(std::llround((x - g0) / dx));
    counts[std::min(b, kGrid - 1)] += 1.0;
  }
  const auto half = static_cast<std::ptrdiff_t>(5.0 * h / dx) + 1;
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    double z = static_cast<double>(k) * dx / h;
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * z * z);
  }
  std::vector<double> dens(kGrid, 0.0);
  for (std::size_t i = 0; i < kGrid; ++i) {
    if (counts[i] == 0.0) continue;
    auto ii = static_cast<std::ptrdiff_t>(i);
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      std::ptrdiff_t j = ii + k;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(kGrid)) continue;
      dens[static_cast<std::size_t>(j)] += counts[i] * kernel[static_cast<std::size_t>(k + half)];
    }
  }

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < kGrid; ++i)
    if (dens[i] >= dens[i - 1] && dens[i] > dens[i + 1]) peaks.push_back(i);
  if (peaks.size() < 2) return std::nullopt;
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return dens[a] > dens[b]; });
  const std::size_t top = peaks.front();
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  // The second peak must be separated from the first by a real valley.
  for (std::size_t c = 1; c < peaks.size(); ++c) {
    std::size_t a = std::min(top, peaks[c]), b = std::max(top, peaks[c]);
    double valley = *std::min_element(dens.begin() + static_cast<std::ptrdiff_t>(a),
                                      dens.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    if (valley < 0.8 * dens[peaks[c]]) {
      pair = {a, b};
      break;
    }
  }
  if (!pair) return std::nullopt;
  auto valley_it = std::min_element(dens.begin() + static_cast<std::ptrdiff_t>(pair->first),
                                    dens.begin() + static_cast<std::ptrdiff_t>(pair->second) + 1);
  const double cut = g0 + static_cast<double>(valley_it - dens.begin()) * dx;

  std::vector<double> lower, upper;
  for (double x : s) (x > cut ? upper : lower).push_back(x);
  if (lower.empty() || upper.empty()) return std::nullopt;
  Recovery r;
  r.antimode = cut;
  r.delta_hat = std::max(0.0, median_of(upper) - median_of(lower));
  r.gamma_hat = static_cast<double>(upper.size()) / static_cast<double>(n);
  return r;
}

DetectionReport delta_amp_detect(const AveragedLogits& avg, const DeltaAmpOptions& opts) {
  DetectionReport r;
  r.detector = DetectorKind::DeltaAmplification;
  r.metadata["M"] = avg.M;
  r.metadata["bootstrap"] = opts.bootstrap;
  r.metadata["dip_seed"] = opts.seed;
  r.metadata["alpha"] = opts.alpha;
  r.observations["averaged_logits"] = avg.mean_values;
  if (avg.M < 2) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "need at least two prompts";
    return r;
  }
  for (double v : avg.mean_values)
    if (!std::isfinite(v)) throw NumericError("non-finite averaged logit");
  DipResult dip = dip_test(avg.mean_values, opts.bootstrap, opts.seed);
  r.statistics["dip"] = dip.dip;
  r.statistics["p"] = dip.p_value;
  r.statistics["modal_lo"] = dip.modal_lo;
  r.statistics["modal_hi"] = dip.modal_hi;
  r.verdict = dip.p_value < opts.alpha ? Verdict::Watermarked : Verdict::Unmarked;
  if (r.verdict == Verdict::Watermarked) {
    if (auto rec = recover_parameters(avg.mean_values)) {
      r.recovered = Recovered{rec->delta_hat, rec->gamma_hat};
      r.statistics["antimode"] = rec->antimode;
    }
  }
  return r;
}

}  // namespace wmid
