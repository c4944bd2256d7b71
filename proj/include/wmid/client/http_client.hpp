#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "wmid/client/client.hpp"

namespace wmid {

struct RetryPolicy {
  int max_attempts = 4;
  double initial_backoff_s = 0.5;
  double multiplier = 2.0;
  double max_backoff_s = 30.0;
};

struct RateLimit {
  std::size_t max_in_flight = 4;
  double min_interval_s = 0.0;
};

struct EndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/completions";
  std::string model;
  // Name of the environment variable holding a bearer token; empty for none.
  std::string auth_env;
  double timeout_s = 30.0;
  RetryPolicy retry;
  RateLimit rate;
  std::size_t max_tokens = 16;
  double temperature = 1.0;
  std::size_t logprobs = 5;

  void validate() const;
};

nlohmann::json to_json(const EndpointConfig& c);
EndpointConfig endpoint_from_json(const nlohmann::json& j);

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Raw transport; throws TransportError when no response was received.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers, double timeout_s) = 0;
};

std::unique_ptr<Transport> make_http_transport(const std::string& base_url);

// Client for the completions JSON shape. Capabilities are probed with a
// one-token request on first use. 429 and 5xx replies and transport
// failures are retried with exponential backoff.
class HttpClient : public ModelClient {
 public:
  explicit HttpClient(EndpointConfig cfg, std::unique_ptr<Transport> transport = nullptr);

  std::string model_id() const override;
  Capabilities capabilities() override;
  Completion complete(const CompletionRequest& req) override;

  const EndpointConfig& config() const { return cfg_; }
  // Test hook: replaces the sleep used between retries.
  void set_sleeper(std::function<void(double)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  Completion send(const nlohmann::json& body);
  Completion parse(const std::string& raw) const;
  void pace();

  EndpointConfig cfg_;
  std::unique_ptr<Transport> transport_;
  std::function<void(double)> sleeper_;
  std::optional<Capabilities> caps_;
  std::mutex caps_mu_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::counting_semaphore<1024> in_flight_;
};

}  // namespace wmid
