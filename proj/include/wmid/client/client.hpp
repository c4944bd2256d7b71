#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wmid {

struct Capabilities {
  bool has_exact_logits = false;
  std::size_t top_k_logprobs = 0;
  bool sample_only() const { return !has_exact_logits && top_k_logprobs == 0; }
};

struct CompletionRequest {
  std::string prompt;
  std::size_t max_tokens = 1;
  double temperature = 1.0;
  std::size_t logprobs = 0;  // top-k per position; 0 disables
  bool want_logits = false;  // first-position logits, when the backend has them
  std::optional<std::uint64_t> seed;
};

using TopLogprobs = std::vector<std::pair<std::string, double>>;

struct Completion {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  std::vector<TopLogprobs> top_logprobs;  // one entry per position, best first
  std::optional<std::vector<double>> first_logits;
  std::string finish_reason;
  bool short_generation = false;  // fewer tokens than max_tokens
  int attempts = 1;
};

// One backing implementation per client. Implementations are safe to share
// across threads.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string model_id() const = 0;
  virtual Capabilities capabilities() = 0;
  virtual Completion complete(const CompletionRequest& req) = 0;
};

// Throws CapabilityError unless first-position logits are available.
void require_logits(ModelClient& client);

// P('0') renormalized over the two bit tokens, recorded only when both '0'
// and '1' appear in the top-k list.
std::optional<double> bit_probability_from_top(const TopLogprobs& top);

}  // namespace wmid
