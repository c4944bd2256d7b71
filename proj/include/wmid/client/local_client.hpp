#pragma once

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "wmid/client/client.hpp"
#include "wmid/core/model.hpp"
#include "wmid/core/watermark.hpp"

namespace wmid {

// In-process client over a synthetic model, optionally watermarked.
// Requests without a seed draw from an internal counter, so a fixed
// construction seed reproduces the whole request sequence.
class LocalClient : public ModelClient {
 public:
  LocalClient(std::shared_ptr<const SyntheticModel> model, std::optional<WatermarkSpec> watermark,
              std::string model_id = "synthetic", std::uint64_t seed = 0);

  std::string model_id() const override { return model_id_; }
  Capabilities capabilities() override;
  Completion complete(const CompletionRequest& req) override;

  const SyntheticModel& model() const { return *model_; }
  const std::optional<WatermarkSpec>& watermark() const { return watermark_; }
  // Next-token logits as served (watermark applied for GreenListBoost).
  LogitVector served_logits(const Context& ctx) const;

 private:
  std::shared_ptr<const std::vector<double>> cdf_for(const Context& ctx, double temperature);

  std::shared_ptr<const SyntheticModel> model_;
  std::optional<WatermarkSpec> watermark_;
  std::string model_id_;
  std::uint64_t seed_;
  std::atomic<std::uint64_t> counter_{0};

  static constexpr std::size_t kCdfCacheCapacity = 512;
  struct CdfKey {
    std::vector<TokenId> tokens;
    double temperature;
  };
  std::mutex mu_;
  std::list<std::pair<CdfKey, std::shared_ptr<const std::vector<double>>>> lru_;
  std::unordered_multimap<std::uint64_t, decltype(lru_)::iterator> index_;
};

}  // namespace wmid
