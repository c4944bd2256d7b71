#include "wmid/client/local_client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmid/core/prf.hpp"
#include "wmid/core/sampling.hpp"
#include "wmid/error.hpp"

namespace wmid {

LocalClient::LocalClient(std::shared_ptr<const SyntheticModel> model,
                         std::optional<WatermarkSpec> watermark, std::string model_id,
                         std::uint64_t seed)
    : model_(std::move(model)),
      watermark_(std::move(watermark)),
      model_id_(std::move(model_id)),
      seed_(seed) {
  if (!model_) throw ArgumentError("LocalClient needs a model");
  if (watermark_) watermark_->validate();
}

Capabilities LocalClient::capabilities() {
  Capabilities c;
  c.has_exact_logits = true;
  c.top_k_logprobs = model_->vocabulary().size();
  return c;
}

LogitVector LocalClient::served_logits(const Context& ctx) const {
  LogitVector l = model_->logits(ctx);
  if (watermark_ && watermark_->variant == WatermarkVariant::GreenListBoost)
    return apply_watermark(*watermark_, l, ctx);
  return l;
}

std::shared_ptr<const std::vector<double>> LocalClient::cdf_for(const Context& ctx,
                                                                double temperature) {
  const std::uint64_t h = context_hash(ctx.tokens, std::hash<double>{}(temperature));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto [b, e] = index_.equal_range(h);
    for (auto it = b; it != e; ++it) {
      const auto& key = it->second->first;
      if (key.temperature == temperature && key.tokens == ctx.tokens) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return it->second->second;
      }
    }
  }
  auto cdf = std::make_shared<const std::vector<double>>(
      cumulative(softmax(served_logits(ctx), temperature)));
  std::lock_guard<std::mutex> lock(mu_);
  lru_.emplace_front(CdfKey{ctx.tokens, temperature}, cdf);
  index_.emplace(h, lru_.begin());
  if (lru_.size() > kCdfCacheCapacity) {
    auto last = std::prev(lru_.end());
    const auto& key = last->first;
    auto [b, e] = index_.equal_range(context_hash(key.tokens, std::hash<double>{}(key.temperature)));
    for (auto it = b; it != e; ++it)
      if (it->second == last) {
        index_.erase(it);
        break;
      }
    lru_.pop_back();
  }
  return cdf;
}

Completion LocalClient::complete(const CompletionRequest& req) {
  if (req.prompt.empty()) throw ArgumentError("prompt must be non-empty");
  if (!(req.temperature > 0.0)) throw ArgumentError("temperature must be positive");
  const Vocabulary& vocab = model_->vocabulary();
  Context ctx{vocab.encode(req.prompt)};
  const std::uint64_t stream =
      req.seed ? mix_seed(seed_, *req.seed) : mix_seed(seed_ ^ 0xA5A5A5A5ULL, counter_++);
  SplitMix rng(stream);
  const bool prf = watermark_ && watermark_->variant == WatermarkVariant::PrfDeterministic;

  Completion out;
  out.finish_reason = "length";
  std::vector<TokenId> generated;
  for (std::size_t step = 0; step < req.max_tokens; ++step) {
    const bool need_dist = req.logprobs > 0 || (req.want_logits && step == 0);
    LogitVector logits;
    if (need_dist) logits = served_logits(ctx);
    if (req.want_logits && step == 0) out.first_logits = logits.values;

    TokenId tok;
    if (prf) {
      tok = prf_deterministic_next(*watermark_, *model_, ctx, req.temperature);
    } else {
      auto cdf = cdf_for(ctx, req.temperature);
      tok = inverse_cdf(*cdf, rng.uniform());
    }

    if (req.logprobs > 0) {
      auto probs = softmax(logits, req.temperature);
      std::vector<TokenId> order(probs.size());
      std::iota(order.begin(), order.end(), TokenId{0});
      std::size_t k = std::min(req.logprobs, probs.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](TokenId a, TokenId b) {
                          return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                        });
      TopLogprobs top;
      for (std::size_t i = 0; i < k; ++i)
        top.emplace_back(vocab.label(order[i]), std::log(probs[order[i]]));
      out.top_logprobs.push_back(std::move(top));
      out.token_logprobs.push_back(std::log(probs[tok]));
    }

    if (vocab.eos() && tok == *vocab.eos()) {
      out.finish_reason = "stop";
      if (req.logprobs > 0) {
        out.top_logprobs.pop_back();
        out.token_logprobs.pop_back();
      }
      break;
    }
    generated.push_back(tok);
    out.tokens.push_back(vocab.label(tok));
    ctx.tokens.push_back(tok);
  }
  out.text = vocab.decode(generated);
  out.short_generation = generated.size() < req.max_tokens;
  return out;
}

}  // namespace wmid
