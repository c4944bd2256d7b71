#pragma once

#include <cstdint>
#include <string>

#include "wmid/client/client.hpp"
#include "wmid/detectors/empirical.hpp"
#include "wmid/detectors/report.hpp"

namespace wmid {

inline constexpr const char* kRngPrompt =
    "Below is an instruction that describes a task. Write a response that appropriately "
    "completes the request.\n\n### Instruction:\nGenerate a random number between 1 and "
    "100.\n\n### Response:";

inline constexpr std::size_t kMinValidSamples = 30;

struct RngProbeOptions {
  std::size_t n = 1000;
  std::string prompt = kRngPrompt;
  std::size_t max_tokens = 4;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
};

// Outcomes outside 1..100 or without digits count as invalid. Request i
// carries seed mix(seed, i), so results do not depend on parallelism.
EmpiricalDistribution collect_rng_distribution(ModelClient& client, const RngProbeOptions& opts);

DetectionReport rng_divergence_test(const EmpiricalDistribution& reference,
                                    const EmpiricalDistribution& candidate, double alpha = 0.05);

struct RngSuiteOptions {
  std::size_t trials = 30;
  double alpha = 0.05;
  RngProbeOptions probe;
};

// One reference distribution against `trials` independent candidate
// distributions; Watermarked iff the average p-value is below alpha.
DetectionReport rng_divergence_suite(ModelClient& reference, ModelClient& candidate,
                                     const RngSuiteOptions& opts);
DetectionReport rng_divergence_suite(const EmpiricalDistribution& reference,
                                     ModelClient& candidate, const RngSuiteOptions& opts);

}  // namespace wmid
