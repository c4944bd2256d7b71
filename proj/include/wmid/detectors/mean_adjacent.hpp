#pragma once

#include <string>
#include <vector>

#include "wmid/client/client.hpp"
#include "wmid/core/model.hpp"
#include "wmid/detectors/report.hpp"

namespace wmid {

// Mean gap between rank-adjacent logits. Telescopes to (max-min)/(n-1).
double mean_adjacent_index(const LogitVector& logits);
double max_adjacent_gap(const LogitVector& logits);
// Mean of the values above the largest adjacent gap minus the mean of those
// below it.
double band_separation(const LogitVector& logits);

struct LogitSnapshotSet {
  std::vector<std::string> prompt_ids;
  std::vector<LogitVector> logits;
};

struct PromptRef {
  std::string id;
  std::string text;
};

LogitSnapshotSet collect_logit_snapshots(ModelClient& client, const std::vector<PromptRef>& prompts);

inline constexpr double kDefaultGapThreshold = 5.0;

// Watermarked iff the mean max-adjacent-gap rises by more than
// gap_threshold. The literal index difference is always reported.
DetectionReport mean_adjacent_drift(const LogitSnapshotSet& old_set, const LogitSnapshotSet& new_set,
                                    double gap_threshold = kDefaultGapThreshold);

}  // namespace wmid
