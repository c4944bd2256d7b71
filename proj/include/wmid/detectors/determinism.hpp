#pragma once

#include <string>

#include "wmid/client/client.hpp"
#include "wmid/detectors/report.hpp"

namespace wmid {

inline constexpr const char* kDisposablePrompt = "Say any word at all:";

struct DeterminismOptions {
  std::size_t repeats = 5;
  std::size_t gen_len = 50;
  double temperature = 1.0;
  std::string disposable_prompt = kDisposablePrompt;
  // First-token top probability at or above this counts as degenerate.
  double degenerate_threshold = 0.99;
};

// Watermarked (PRF-deterministic suspected) iff every repeat is identical
// and the disposable prompt shows a non-degenerate first-token
// distribution. Any two differing outputs give Unmarked.
DetectionReport determinism_probe(ModelClient& client, const std::string& prompt,
                                  const DeterminismOptions& opts = {});

}  // namespace wmid
