#include "wmid/client/client.hpp"

#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

void require_logits(ModelClient& client) {
  if (!client.capabilities().has_exact_logits)
    throw CapabilityError("client '" + client.model_id() + "' does not expose logits");
}

std::optional<double> bit_probability_from_top(const TopLogprobs& top) {
  std::optional<double> lp0, lp1;
  for (const auto& [tok, lp] : top) {
    if (tok == "0" && !lp0) lp0 = lp;
    if (tok == "1" && !lp1) lp1 = lp;
  }
  if (!lp0 || !lp1) return std::nullopt;
  double p0 = std::exp(*lp0), p1 = std::exp(*lp1);
  if (!(p0 + p1 > 0.0)) return std::nullopt;
  return p0 / (p0 + p1);
}

}  // namespace wmid
