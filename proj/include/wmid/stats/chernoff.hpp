#pragma once

#include <cstddef>

namespace wmid {

struct ChernoffBudget {
  std::size_t m = 1;  // contexts to sample
  std::size_t k = 1;  // generations per context
  double q = 0.0;     // threshold on |p_hat - 1/2|
  double v = 0.0;     // bias of a watermarked context
  double p = 0.0;
  double delta_conf = 0.0;
  std::size_t n = 1;
};

// Bernoulli relative entropy KL(a || b) in nats.
double bernoulli_kl(double a, double b);

ChernoffBudget chernoff_budget(double p, double delta_conf, std::size_t n);

}  // namespace wmid
