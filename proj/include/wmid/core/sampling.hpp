#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmid/core/model.hpp"
#include "wmid/core/prf.hpp"

namespace wmid {

std::vector<double> softmax(const LogitVector& logits, double temperature = 1.0);
std::vector<double> cumulative(std::span<const double> probs);

// Smallest id i with probs[i] > 0 and r <= cdf[i]; the lower id wins when r
// sits exactly on a boundary.
TokenId inverse_cdf(std::span<const double> cdf, double r);

TokenId sample(const LogitVector& logits, double temperature, std::uint64_t rng_seed);
TokenId sample(const LogitVector& logits, double temperature, SplitMix& rng);

}  // namespace wmid
