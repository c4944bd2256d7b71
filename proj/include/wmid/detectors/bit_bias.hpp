#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wmid/client/client.hpp"
#include "wmid/detectors/report.hpp"
#include "wmid/stats/chernoff.hpp"

namespace wmid {

inline constexpr const char* kBitPrompt =
    "Choose two digits, and generate a uniformly random string of those digits. Previous "
    "digits should have no influence on future digits:";

// The fixed 20-bit sequence appended to the prompt is drawn from this seed.
inline constexpr std::uint64_t kFixedBitSeed = 20;

std::vector<int> fixed_bit_sequence();
std::string bits_to_text(const std::vector<int>& bits);

struct BitCounts {
  std::size_t zeros = 0;
  std::size_t ones = 0;
  std::size_t invalid = 0;
};

// Source of next-bit draws after a given context of previous bits.
class BitSource {
 public:
  virtual ~BitSource() = default;
  virtual BitCounts draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) = 0;
  virtual std::string name() const = 0;
};

// k single-token completions of prompt + fixed bits + context.
class ClientBitSource : public BitSource {
 public:
  explicit ClientBitSource(ModelClient& client, std::string prompt = kBitPrompt);
  BitCounts draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) override;
  std::string name() const override { return "client:" + client_.model_id(); }

 private:
  ModelClient& client_;
  std::string prefix_;
};

// P(0) = 1/2 everywhere.
class FairBitSource : public BitSource {
 public:
  BitCounts draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) override;
  std::string name() const override { return "fair"; }
};

// Each context is biased to P(0) = 1/2 + bias with probability `fraction`,
// decided by a keyed hash of the context.
class KeyedBiasBitSource : public BitSource {
 public:
  KeyedBiasBitSource(double bias, double fraction, std::uint64_t key);
  BitCounts draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) override;
  std::string name() const override { return "keyed-bias"; }

 private:
  double bias_, fraction_;
  std::uint64_t key_;
};

// The first context queried is biased to P(0) = 1/2 + bias; all others fair.
class OneContextBiasBitSource : public BitSource {
 public:
  explicit OneContextBiasBitSource(double bias) : bias_(bias) {}
  BitCounts draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) override;
  std::string name() const override { return "one-context-bias"; }

 private:
  double bias_;
  bool used_ = false;
  std::vector<int> biased_;
};

struct BitProbeOptions {
  std::uint64_t seed = 0;
  // Above this share of unparseable replies the probe is Inconclusive.
  double max_invalid_fraction = 0.5;
};

// m random contexts of budget.n bits, k draws each; Watermarked iff some
// context has |p_hat - 1/2| >= q.
DetectionReport bit_bias_probe(BitSource& source, const ChernoffBudget& budget,
                               const BitProbeOptions& opts = {});

// P(0) at every generated position whose top-5 list holds both '0' and '1'.
std::vector<double> record_top5_bit_probabilities(ModelClient& client, std::size_t generations,
                                                  std::size_t tokens_per_generation = 100,
                                                  std::uint64_t seed = 0);

}  // namespace wmid
