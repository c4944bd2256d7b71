#include "wmid/stats/inequality.hpp"

#include <algorithm>
#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

namespace {
std::vector<double> checked_sorted(std::span<const double> probs, double& total) {
  if (probs.empty()) throw ArgumentError("empty probability vector");
  std::vector<double> v(probs.begin(), probs.end());
  total = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw ArgumentError("probabilities must be finite and >= 0");
    total += x;
  }
  if (total <= 0.0) throw ArgumentError("probabilities are all zero");
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

LorenzCurve lorenz(std::span<const double> probs) {
  double total = 0.0;
  LorenzCurve c;
  c.ordered_probs = checked_sorted(probs, total);
  c.cumulative.resize(c.ordered_probs.size());
  double run = 0.0;
  for (std::size_t i = 0; i < c.ordered_probs.size(); ++i) {
    c.ordered_probs[i] /= total;
    run += c.ordered_probs[i];
    c.cumulative[i] = run;
  }
  return c;
}

double gini(std::span<const double> probs) {
  double total = 0.0;
  auto v = checked_sorted(probs, total);
  const double n = static_cast<double>(v.size());
  // sum_i (2i - n - 1) x_(i) with Kahan compensation.
  double s = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double term = (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i] - comp;
    double t = s + term;
    comp = (t - s) - term;
    s = t;
  }
  return std::max(0.0, s / (n * total));
}

}  // namespace wmid
