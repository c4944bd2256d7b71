#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "wmid/client/client.hpp"
#include "wmid/detectors/empirical.hpp"

namespace wmid {

// N single-step generations; replies whose first digit run is not one of
// `outcomes` count as invalid. On a transport failure the ProbeError
// carries the counts gathered so far.
EmpiricalDistribution estimate_probs_by_sampling(ModelClient& client, const std::string& prompt,
                                                 std::size_t N, const std::set<long long>& outcomes,
                                                 std::uint64_t seed = 0);

}  // namespace wmid
