#pragma once

#include <cstddef>
#include <span>

namespace wmid {

// sup |ECDF_a - ECDF_b| over the merged support. Throws ArgumentError on an
// empty sample or non-finite values.
double ks_statistic(std::span<const double> a, std::span<const double> b);

double ks_critical_coefficient(double alpha);

struct KsDecision {
  bool reject = false;
  double threshold = 0.0;
};

// Rejects iff d > c(alpha) * sqrt((n + m) / (n m)).
KsDecision ks_reject(double d, std::size_t n, std::size_t m, double alpha);

// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

inline constexpr double kPValueFloor = 1e-300;

// Asymptotic two-sample p-value, floored at kPValueFloor for d > 0.
double ks_p_value(double d, std::size_t n, std::size_t m);

}  // namespace wmid
