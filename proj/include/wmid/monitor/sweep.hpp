#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wmid/client/corpus.hpp"
#include "wmid/core/model.hpp"
#include "wmid/stats/dip.hpp"

namespace wmid {

struct SweepOptions {
  std::vector<double> deltas;
  double gamma = 0.25;
  std::size_t prompts = 140;
  SyntheticModelConfig model;
  std::vector<std::uint8_t> key;  // empty: derived from seed
  std::uint64_t seed = 0;         // prefix selection and key derivation
  std::size_t bootstrap = kDefaultBootstrap;
  std::vector<PromptCorpus> corpora;  // empty: bundled corpora at equal shares
  std::vector<double> shares;
};

struct SweepRow {
  double delta = 0.0;
  double p = 1.0;
  double dip = 0.0;
};

// delta-amplification dip test at each delta on one synthetic model and
// one fixed prefix set.
std::vector<SweepRow> delta_sweep(const SweepOptions& opts);

std::vector<std::uint8_t> derived_key(std::uint64_t seed);
std::vector<PromptCorpus> bundled_corpora();

}  // namespace wmid
