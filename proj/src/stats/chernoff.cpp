#include "wmid/stats/chernoff.hpp"

#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

double bernoulli_kl(double a, double b) {
  auto term = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); };
  return term(a, b) + term(1.0 - a, 1.0 - b);
}

ChernoffBudget chernoff_budget(double p, double delta_conf, std::size_t n) {
  if (!(p > 0.0 && p <= 0.5)) throw ArgumentError("p must lie in (0, 0.5]");
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) throw ArgumentError("delta_conf must lie in (0, 1)");
  if (n < 1) throw ArgumentError("n must be at least 1");

  ChernoffBudget b;
  b.p = p;
  b.delta_conf = delta_conf;
  b.n = n;
  const double nn = static_cast<double>(n);
  const double root = std::sqrt(1.0 - p);
  const double hit = (2.0 - 2.0 * root) / nn;
  b.m = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log(delta_conf / 2.0) / std::log1p(-hit) - 1e-9)));
  b.v = (1.0 - root) / nn;

  const double c1 = std::log(2.0 * static_cast<double>(b.m) / delta_conf);
  const double c2 = std::log(2.0 / delta_conf);
  // k1 falls and k2 rises in q; bisect for the crossing.
  auto k1 = [&](double q) { return c1 / bernoulli_kl(0.5 + q, 0.5); };
  auto k2 = [&](double q) { return c2 / bernoulli_kl(0.5 + q, 0.5 + b.v); };
  double lo = 0.0, hi = b.v;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * b.v; ++it) {
    double mid = 0.5 * (lo + hi);
    if (k1(mid) > k2(mid))
      lo = mid;
    else
      hi = mid;
  }
  b.q = 0.5 * (lo + hi);
  double k = std::max(k1(b.q), k2(b.q));
  if (!std::isfinite(k)) throw NumericError("Chernoff solve did not converge");
  b.k = static_cast<std::size_t>(std::max(1.0, std::ceil(k)));
  return b;
}

}  // namespace wmid
