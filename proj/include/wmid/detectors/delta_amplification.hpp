#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmid/client/client.hpp"
#include "wmid/detectors/report.hpp"
#include "wmid/stats/dip.hpp"

namespace wmid {

inline constexpr const char* kStorySuffix = " Now write me a story:";

struct AveragedLogits {
  std::vector<double> mean_values;
  std::size_t M = 0;
};

// First-position logits of prefix + suffix for every prefix, averaged per
// token. Throws CapabilityError for clients without logits.
AveragedLogits delta_amplify(ModelClient& client, const std::vector<std::string>& prefixes,
                             const std::string& suffix = kStorySuffix, std::size_t parallelism = 1);

struct Recovery {
  double delta_hat = 0.0;
  double gamma_hat = 0.0;
  double antimode = 0.0;
};

// Two-peak split of a value set by a Gaussian kernel density estimate:
// the cut is the density minimum between the two highest separated
// peaks; delta_hat is the difference of the group medians and gamma_hat
// the upper group's share. Empty when there is a single peak.
std::optional<Recovery> recover_parameters(std::span<const double> values);

struct DeltaAmpOptions {
  double alpha = 0.05;
  std::size_t bootstrap = kDefaultBootstrap;
  std::uint64_t seed = kDefaultDipSeed;
};

DetectionReport delta_amp_detect(const AveragedLogits& avg, const DeltaAmpOptions& opts = {});

}  // namespace wmid
