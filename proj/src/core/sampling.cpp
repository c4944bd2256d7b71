#include "wmid/core/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

std::vector<double> softmax(const LogitVector& logits, double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (logits.size() == 0) throw ArgumentError("empty logit vector");
  logits.check_finite();
  double mx = *std::max_element(logits.values.begin(), logits.values.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((logits.values[i] - mx) / temperature);
    z += p[i];
  }
  for (auto& x : p) x /= z;
  return p;
}

std::vector<double> cumulative(std::span<const double> probs) {
  std::vector<double> c(probs.size());
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s += probs[i];
    c[i] = s;
  }
  // Guard against rounding leaving the total just below r.
  if (!c.empty()) {
    double total = c.back();
    for (auto& x : c) x /= total;
    c.back() = 1.0;
  }
  return c;
}

TokenId inverse_cdf(std::span<const double> cdf, double r) {
  if (cdf.empty()) throw ArgumentError("empty distribution");
  auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
  if (it == cdf.end()) --it;
  auto i = static_cast<std::size_t>(it - cdf.begin());
  // Skip zero-probability ids sharing the same cumulative value.
  double prev = i == 0 ? 0.0 : cdf[i - 1];
  while (cdf[i] == prev && i + 1 < cdf.size()) {
    ++i;
    prev = cdf[i - 1];
  }
  return static_cast<TokenId>(i);
}

TokenId sample(const LogitVector& logits, double temperature, SplitMix& rng) {
  auto c = cumulative(softmax(logits, temperature));
  return inverse_cdf(c, rng.uniform());
}

TokenId sample(const LogitVector& logits, double temperature, std::uint64_t rng_seed) {
  SplitMix rng(rng_seed);
  return sample(logits, temperature, rng);
}

}  // namespace wmid
