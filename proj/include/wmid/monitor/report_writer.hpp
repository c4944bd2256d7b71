#pragma once

#include <filesystem>
#include <vector>

#include "wmid/monitor/snapshot.hpp"

namespace wmid {

// Files written by write_report; CSV columns are fixed:
//   rng_histogram.csv            snapshot,timestamp,value,reference_count,candidate_count
//   lorenz.csv                   snapshot,timestamp,rank,population_share,cumulative_share
//   logit_scatter.csv            snapshot,timestamp,token,logit_old,logit_new
//   averaged_logit_histogram.csv snapshot,timestamp,bin,bin_lo,bin_hi,count
// `snapshot` is the index in the input order. Headers are written even
// when no snapshot feeds a file.
inline constexpr std::size_t kRngBins = 100;
inline constexpr std::size_t kAveragedLogitBins = 50;

std::vector<std::filesystem::path> write_report(const std::vector<Snapshot>& snapshots,
                                                const std::filesystem::path& out_dir);

std::string summary_text(const std::vector<Snapshot>& snapshots);

}  // namespace wmid
