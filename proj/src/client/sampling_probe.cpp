#include "wmid/client/sampling_probe.hpp"

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

EmpiricalDistribution estimate_probs_by_sampling(ModelClient& client, const std::string& prompt,
                                                 std::size_t N, const std::set<long long>& outcomes,
                                                 std::uint64_t seed) {
  if (N < 1) throw ArgumentError("N must be >= 1");
  if (prompt.empty()) throw ArgumentError("prompt must be non-empty");
  EmpiricalDistribution dist;
  for (std::size_t i = 0; i < N; ++i) {
    CompletionRequest req;
    req.prompt = prompt;
    req.max_tokens = 1;
    req.seed = mix_seed(seed, i);
    Completion c;
    try {
      c = client.complete(req);
    } catch (const TransportError& e) {
      throw ProbeError(e.what(), dist);
    }
    auto v = first_digit_run(c.text);
    if (v && outcomes.count(*v)) dist.add(*v);
    else dist.add_invalid();
  }
  return dist;
}

}  // namespace wmid
