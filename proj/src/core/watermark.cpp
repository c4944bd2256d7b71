#include "wmid/core/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmid/core/prf.hpp"
#include "wmid/core/sampling.hpp"
#include "wmid/error.hpp"

namespace wmid {

std::string to_string(WatermarkVariant v) {
  return v == WatermarkVariant::GreenListBoost ? "GreenListBoost" : "PrfDeterministic";
}

WatermarkVariant parse_variant(const std::string& s) {
  if (s == "GreenListBoost") return WatermarkVariant::GreenListBoost;
  if (s == "PrfDeterministic") return WatermarkVariant::PrfDeterministic;
  throw ArgumentError("unknown watermark variant: " + s);
}

void WatermarkSpec::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in [0, 1]");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ArgumentError("delta must be nonnegative");
  if (window_k < 1) throw ArgumentError("window_k must be at least 1");
}

std::size_t green_count(double gamma, std::size_t vocab_size) {
  double x = gamma * static_cast<double>(vocab_size);
  auto n = static_cast<std::size_t>(std::floor(x * (1.0 + 1e-12) + 1e-12));
  return std::min(n, vocab_size);
}

std::span<const TokenId> window_of(const WatermarkSpec& spec, const Context& ctx) {
  std::span<const TokenId> all(ctx.tokens);
  if (all.size() <= spec.window_k) return all;
  return all.last(spec.window_k);
}

namespace {

Digest window_prf(const WatermarkSpec& spec, const Context& ctx, std::uint8_t tag) {
  auto w = window_of(spec, ctx);
  std::vector<std::uint8_t> msg;
  msg.reserve(1 + 4 * w.size());
  msg.push_back(tag);
  for (TokenId t : w)
    for (int b = 0; b < 4; ++b) msg.push_back(static_cast<std::uint8_t>(t >> (8 * b)));
  return hmac_sha256(spec.key, msg);
}

constexpr std::uint8_t kGreenTag = 0x47;
constexpr std::uint8_t kNextTag = 0x4E;

}  // namespace

std::vector<TokenId> green_list(const WatermarkSpec& spec, std::size_t vocab_size,
                                const Context& ctx) {
  if (spec.variant != WatermarkVariant::GreenListBoost)
    throw ArgumentError("green_list requires the GreenListBoost variant");
  spec.validate();
  check_context(ctx, vocab_size);
  const std::size_t g = green_count(spec.gamma, vocab_size);
  if (g == 0) return {};
  std::vector<TokenId> perm(vocab_size);
  std::iota(perm.begin(), perm.end(), TokenId{0});
  if (g < vocab_size) {
    SplitMix rng(digest_u64(window_prf(spec, ctx, kGreenTag)));
    for (std::size_t i = 0; i < g; ++i) {
      std::size_t j = i + rng.below(vocab_size - i);
      std::swap(perm[i], perm[j]);
    }
  }
  perm.resize(g);
  std::sort(perm.begin(), perm.end());
  return perm;
}

LogitVector apply_watermark(const WatermarkSpec& spec, const LogitVector& logits,
                            const Context& ctx) {
  LogitVector out = logits;
  if (spec.delta == 0.0) {
    spec.validate();
    check_context(ctx, logits.size());
    return out;
  }
  for (TokenId id : green_list(spec, logits.size(), ctx)) out.values[id] += spec.delta;
  return out;
}

double prf_uniform(const WatermarkSpec& spec, const Context& ctx) {
  return to_unit(digest_u64(window_prf(spec, ctx, kNextTag)));
}

TokenId prf_deterministic_next(const WatermarkSpec& spec, const LanguageModel& model,
                               const Context& ctx, double temperature) {
  if (spec.variant != WatermarkVariant::PrfDeterministic)
    throw ArgumentError("prf_deterministic_next requires the PrfDeterministic variant");
  auto cdf = cumulative(softmax(model.logits(ctx), temperature));
  return inverse_cdf(cdf, prf_uniform(spec, ctx));
}

WatermarkedModel::WatermarkedModel(std::shared_ptr<const LanguageModel> base, WatermarkSpec spec)
    : base_(std::move(base)), spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.variant != WatermarkVariant::GreenListBoost)
    throw ArgumentError("WatermarkedModel wraps the GreenListBoost variant");
}

LogitVector WatermarkedModel::logits(const Context& ctx) const {
  return apply_watermark(spec_, base_->logits(ctx), ctx);
}

}  // namespace wmid
