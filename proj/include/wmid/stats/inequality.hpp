#pragma once

#include <span>
#include <vector>

namespace wmid {

struct LorenzCurve {
  std::vector<double> ordered_probs;  // normalized, ascending
  std::vector<double> cumulative;
};

// Inputs must be nonnegative and not all zero.
LorenzCurve lorenz(std::span<const double> probs);
double gini(std::span<const double> probs);

}  // namespace wmid
