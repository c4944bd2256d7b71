#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "wmid/core/vocabulary.hpp"

namespace wmid {

struct LogitVector {
  std::vector<double> values;

  LogitVector() = default;
  explicit LogitVector(std::vector<double> v) : values(std::move(v)) {}
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  // Throws NumericError when any value is NaN or infinite.
  void check_finite() const;
};

struct Context {
  std::vector<TokenId> tokens;
};

std::uint64_t context_hash(std::span<const TokenId> tokens, std::uint64_t salt = 0);
void check_context(const Context& ctx, std::size_t vocab_size);

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual LogitVector logits(const Context& ctx) const = 0;
};

struct SyntheticModelConfig {
  std::size_t vocab_size = 4096;
  double skew = 1.0;
  double context_sensitivity = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Base logits skew * Gumbel per token, plus Normal(0, sigma) noise keyed on
// the hash of the whole context. Two restricted tasks are primed by cue
// words in the context: after "random number" the numerals 1..100 carry
// high logits (and end-of-sequence follows an answer); after "random
// string" the bare digits 0 and 1 carry equal, dominant logits.
class SyntheticModel : public LanguageModel {
 public:
  static constexpr double kNumeralLogit = 10.0;
  static constexpr double kNumeralSpread = 0.4;
  static constexpr double kBitLogit = 25.0;
  static constexpr double kEosAfterAnswer = 40.0;

  explicit SyntheticModel(SyntheticModelConfig cfg);
  SyntheticModel(SyntheticModelConfig cfg, Vocabulary vocab);

  const Vocabulary& vocabulary() const override { return vocab_; }
  const SyntheticModelConfig& config() const { return cfg_; }
  LogitVector logits(const Context& ctx) const override;

  // Context-free part of the logits.
  const std::vector<double>& base_logits() const { return base_; }

 private:
  enum class Task { None, Numeral, Bits };
  Task detect_task(std::span<const TokenId> tokens) const;
  LogitVector compute(const Context& ctx) const;

  SyntheticModelConfig cfg_;
  Vocabulary vocab_;
  std::vector<double> base_;
  std::vector<double> numeral_profile_;
  std::vector<TokenId> numeral_ids_;
  std::vector<char> task_numeral_;
  std::optional<TokenId> random_id_, number_id_, string_id_, zero_id_, one_id_;

  struct CacheEntry {
    std::vector<TokenId> tokens;
    std::shared_ptr<const LogitVector> logits;
  };
  static constexpr std::size_t kCacheCapacity = 128;
  mutable std::mutex mu_;
  mutable std::list<std::pair<std::uint64_t, CacheEntry>> lru_;
  mutable std::unordered_map<std::uint64_t, decltype(lru_)::iterator> index_;
};

}  // namespace wmid
