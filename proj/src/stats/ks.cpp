#include "wmid/stats/ks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "wmid/error.hpp"

namespace wmid {

namespace {
std::vector<double> sorted_copy(std::span<const double> s) {
  if (s.empty()) throw ArgumentError("KS sample must be nonempty");
  std::vector<double> v(s.begin(), s.end());
  for (double x : v)
    if (!std::isfinite(x)) throw ArgumentError("KS sample contains a non-finite value");
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  auto x = sorted_copy(a);
  auto y = sorted_copy(b);
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double t;
    if (j == y.size() || (i < x.size() && x[i] <= y[j]))
      t = x[i];
    else
      t = y[j];
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  return std::sqrt(-std::log(alpha / 2.0) * 0.5);
}

KsDecision ks_reject(double d, std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw ArgumentError("sample sizes must be positive");
  double nn = static_cast<double>(n), mm = static_cast<double>(m);
  KsDecision r;
  r.threshold = ks_critical_coefficient(alpha) * std::sqrt((nn + mm) / (nn * mm));
  r.reject = d > r.threshold;
  return r;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double p;
  if (lambda < 1.18) {
    // Jacobi theta form of the CDF converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int j = 1; j <= 50; ++j) {
      double k = 2.0 * j - 1.0;
      double term = std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-16) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    p = 1.0 - cdf;
  } else {
    p = 0.0;
    for (int j = 1; j <= 200; ++j) {
      double term = std::exp(-2.0 * j * j * lambda * lambda);
      p += (j % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-12 * std::max(p, 1e-300) || term == 0.0) break;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t n, std::size_t m) {
  if (!(d >= 0.0 && d <= 1.0)) throw ArgumentError("KS statistic must lie in [0, 1]");
  if (n == 0 || m == 0) throw ArgumentError("sample sizes must be positive");
  if (d == 0.0) return 1.0;
  double nn = static_cast<double>(n), mm = static_cast<double>(m);
  double lambda = d * std::sqrt(nn * mm / (nn + mm));
  return std::max(kolmogorov_survival(lambda), kPValueFloor);
}

}  // namespace wmid
