#include "wmid/core/model.hpp"

#include <cmath>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

void LogitVector::check_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("non-finite logit");
}

std::uint64_t context_hash(std::span<const TokenId> tokens, std::uint64_t salt) {
  std::uint64_t h = splitmix64(salt ^ 0xC0DEC0FFEEULL);
  for (TokenId t : tokens) h = mix_seed(h, t);
  return mix_seed(h, tokens.size());
}

void check_context(const Context& ctx, std::size_t vocab_size) {
  for (TokenId t : ctx.tokens)
    if (t >= vocab_size)
      throw InvalidContextError("token id " + std::to_string(t) + " outside vocabulary of size " +
                                std::to_string(vocab_size));
}

void SyntheticModelConfig::validate() const {
  if (vocab_size < 2) throw ArgumentError("vocab_size must be at least 2");
  if (!(skew > 0.0) || !std::isfinite(skew)) throw ArgumentError("skew must be positive");
  if (!(context_sensitivity >= 0.0) || !std::isfinite(context_sensitivity))
    throw ArgumentError("context_sensitivity must be nonnegative");
}

SyntheticModel::SyntheticModel(SyntheticModelConfig cfg)
    : SyntheticModel(cfg, Vocabulary::standard(cfg.vocab_size)) {}

SyntheticModel::SyntheticModel(SyntheticModelConfig cfg, Vocabulary vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  if (vocab_.size() != cfg_.vocab_size) throw ArgumentError("vocabulary size mismatch");
  const std::size_t n = cfg_.vocab_size;
  base_.resize(n);
  SplitMix base_rng(mix_seed(cfg_.seed, 0xBA5E));
  for (auto& b : base_) b = cfg_.skew * base_rng.gumbel();

  numeral_profile_.assign(n, 0.0);
  task_numeral_.assign(n, 0);
  SplitMix prof_rng(mix_seed(cfg_.seed, 0x4E0D));
  for (TokenId i = 0; i < n; ++i) {
    double g = prof_rng.gumbel();
    auto v = vocab_.numeral_value(i);
    if (v && *v >= 1 && *v <= 100) {
      numeral_ids_.push_back(i);
      task_numeral_[i] = 1;
      numeral_profile_[i] = kNumeralLogit + kNumeralSpread * g;
    }
  }
  if (vocab_.has_labels()) {
    random_id_ = vocab_.find("random");
    number_id_ = vocab_.find("number");
    string_id_ = vocab_.find("string");
    zero_id_ = vocab_.find("0");
    one_id_ = vocab_.find("1");
  }
}

SyntheticModel::Task SyntheticModel::detect_task(std::span<const TokenId> tokens) const {
  if (!random_id_) return Task::None;
  for (std::size_t i = tokens.size(); i-- > 1;) {
    if (tokens[i - 1] != *random_id_) continue;
    if (number_id_ && tokens[i] == *number_id_) return Task::Numeral;
    if (string_id_ && tokens[i] == *string_id_) return Task::Bits;
  }
  return Task::None;
}

LogitVector SyntheticModel::compute(const Context& ctx) const {
  const std::size_t n = cfg_.vocab_size;
  std::vector<double> out(base_);
  const double sigma = cfg_.context_sensitivity;
  if (sigma > 0.0) {
    SplitMix rng(mix_seed(cfg_.seed, context_hash(ctx.tokens, 0x5EED)));
    for (std::size_t i = 0; i < n; ++i) out[i] += sigma * rng.normal();
  }
  switch (detect_task(ctx.tokens)) {
    case Task::Numeral: {
      bool answered = !ctx.tokens.empty() && task_numeral_[ctx.tokens.back()];
      if (answered && vocab_.eos()) {
        out[*vocab_.eos()] = kEosAfterAnswer;
      } else {
        for (TokenId id : numeral_ids_) out[id] = numeral_profile_[id];
      }
      break;
    }
    case Task::Bits:
      if (zero_id_ && one_id_) {
        out[*zero_id_] = kBitLogit;
        out[*one_id_] = kBitLogit;
      }
      break;
    case Task::None:
      break;
  }
  return LogitVector(std::move(out));
}

LogitVector SyntheticModel::logits(const Context& ctx) const {
  check_context(ctx, cfg_.vocab_size);
  const std::uint64_t key = context_hash(ctx.tokens);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(key);
    if (it != index_.end() && it->second->second.tokens == ctx.tokens) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return *it->second->second.logits;
    }
  }
  auto computed = std::make_shared<const LogitVector>(compute(ctx));
  std::lock_guard<std::mutex> lock(mu_);
  auto it = index_.find(key);
  if (it != index_.end()) {
    lru_.erase(it->second);
    index_.erase(it);
  }
  lru_.emplace_front(key, CacheEntry{ctx.tokens, computed});
  index_[key] = lru_.begin();
  if (lru_.size() > kCacheCapacity) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return *computed;
}

}  // namespace wmid
