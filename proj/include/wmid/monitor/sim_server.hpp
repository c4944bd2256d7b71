#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "wmid/core/config.hpp"

namespace wmid {

class LocalClient;

inline constexpr std::size_t kMaxServedLogprobs = 100;

// Serves a synthetic model over the completions wire format:
//   POST /v1/completions {prompt, max_tokens, temperature, logprobs, seed, logits}
//   GET  /v1/models
// `logits: true` is an extension returning the first-position logit vector
// in choices[0].logits.
class SimulationServer {
 public:
  explicit SimulationServer(const SimulationConfig& cfg, std::uint64_t seed = 0,
                            std::string model_id = "synthetic");
  ~SimulationServer();
  SimulationServer(const SimulationServer&) = delete;
  SimulationServer& operator=(const SimulationServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Binds and serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();
  std::string base_url() const;

  // The request handler, exposed for tests: returns (status, body).
  std::pair<int, std::string> handle_completion(const std::string& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wmid
