#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wmid/core/model.hpp"

namespace wmid {

enum class WatermarkVariant { GreenListBoost, PrfDeterministic };

std::string to_string(WatermarkVariant v);
WatermarkVariant parse_variant(const std::string& s);

struct WatermarkSpec {
  double gamma = 0.25;
  double delta = 2.0;
  std::size_t window_k = 5;
  std::vector<std::uint8_t> key;
  WatermarkVariant variant = WatermarkVariant::GreenListBoost;

  void validate() const;
};

// floor(gamma * vocab_size), robust to representation error in gamma.
std::size_t green_count(double gamma, std::size_t vocab_size);

// The last window_k tokens, or the whole context when it is shorter.
std::span<const TokenId> window_of(const WatermarkSpec& spec, const Context& ctx);

// Sorted ascending.
std::vector<TokenId> green_list(const WatermarkSpec& spec, std::size_t vocab_size,
                                const Context& ctx);
LogitVector apply_watermark(const WatermarkSpec& spec, const LogitVector& logits,
                            const Context& ctx);

double prf_uniform(const WatermarkSpec& spec, const Context& ctx);
TokenId prf_deterministic_next(const WatermarkSpec& spec, const LanguageModel& model,
                               const Context& ctx, double temperature = 1.0);

// Green-list boost applied on top of a base model.
class WatermarkedModel : public LanguageModel {
 public:
  WatermarkedModel(std::shared_ptr<const LanguageModel> base, WatermarkSpec spec);
  const Vocabulary& vocabulary() const override { return base_->vocabulary(); }
  LogitVector logits(const Context& ctx) const override;
  const WatermarkSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const LanguageModel> base_;
  WatermarkSpec spec_;
};

}  // namespace wmid
