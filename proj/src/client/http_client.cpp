#include "wmid/client/http_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "wmid/error.hpp"

namespace wmid {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ArgumentError("endpoint base_url is empty");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
    throw ArgumentError("endpoint base_url must start with http:// or https://");
  if (path.empty() || path[0] != '/') throw ArgumentError("endpoint path must start with '/'");
  if (!(timeout_s > 0.0)) throw ArgumentError("endpoint timeout must be > 0");
  if (retry.max_attempts < 1) throw ArgumentError("retry attempts must be >= 1");
  if (!(retry.initial_backoff_s >= 0.0) || !(retry.multiplier >= 1.0) ||
      !(retry.max_backoff_s >= 0.0))
    throw ArgumentError("invalid retry backoff");
  if (rate.max_in_flight < 1 || rate.max_in_flight > 1024)
    throw ArgumentError("max_in_flight must be in [1, 1024]");
  if (!(rate.min_interval_s >= 0.0)) throw ArgumentError("min_interval_s must be >= 0");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
}

json to_json(const EndpointConfig& c) {
  return json{{"base_url", c.base_url},
              {"path", c.path},
              {"model", c.model},
              {"auth_env", c.auth_env},
              {"timeout_s", c.timeout_s},
              {"retry",
               {{"max_attempts", c.retry.max_attempts},
                {"initial_backoff_s", c.retry.initial_backoff_s},
                {"multiplier", c.retry.multiplier},
                {"max_backoff_s", c.retry.max_backoff_s}}},
              {"rate",
               {{"max_in_flight", c.rate.max_in_flight},
                {"min_interval_s", c.rate.min_interval_s}}},
              {"max_tokens", c.max_tokens},
              {"temperature", c.temperature},
              {"logprobs", c.logprobs}};
}

EndpointConfig endpoint_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("endpoint config must be an object");
  static const std::vector<std::string> known = {"base_url", "path",       "model",     "auth_env",
                                                 "timeout_s", "retry",     "rate",      "max_tokens",
                                                 "temperature", "logprobs", "auth_token", "api_key"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "auth_token" || it.key() == "api_key")
      throw ArgumentError("tokens are read from the environment; set auth_env instead of '" +
                          it.key() + "'");
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ArgumentError("unknown endpoint field '" + it.key() + "'");
  }
  EndpointConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.path = j.value("path", c.path);
    c.model = j.value("model", c.model);
    c.auth_env = j.value("auth_env", c.auth_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.initial_backoff_s = r.value("initial_backoff_s", c.retry.initial_backoff_s);
      c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
      c.retry.max_backoff_s = r.value("max_backoff_s", c.retry.max_backoff_s);
    }
    if (j.contains("rate")) {
      const auto& r = j.at("rate");
      c.rate.max_in_flight = r.value("max_in_flight", c.rate.max_in_flight);
      c.rate.min_interval_s = r.value("min_interval_s", c.rate.min_interval_s);
    }
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.temperature = j.value("temperature", c.temperature);
    c.logprobs = j.value("logprobs", c.logprobs);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::string base_url) : base_url_(std::move(base_url)) {}

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& headers, double timeout_s) override {
    httplib::Client cli(base_url_);
    const auto sec = static_cast<time_t>(timeout_s);
    const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Post(path, h, body, "application/json");
    if (!res) throw TransportError("POST " + base_url_ + path + ": " + httplib::to_string(res.error()), 1);
    return HttpResponse{res->status, res->body};
  }

 private:
  std::string base_url_;
};

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url) {
  return std::make_unique<HttplibTransport>(base_url);
}

HttpClient::HttpClient(EndpointConfig cfg, std::unique_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.rate.max_in_flight, 1, 1024))) {
  cfg_.validate();
  if (!transport_) transport_ = make_http_transport(cfg_.base_url);
  sleeper_ = [](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
}

std::string HttpClient::model_id() const {
  return cfg_.model.empty() ? cfg_.base_url : cfg_.model;
}

Capabilities HttpClient::capabilities() {
  std::lock_guard<std::mutex> lock(caps_mu_);
  if (caps_) return *caps_;
  json body{{"prompt", "0"}, {"max_tokens", 1}, {"temperature", 1.0}, {"logits", true}};
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  if (cfg_.logprobs > 0) body["logprobs"] = cfg_.logprobs;
  Completion c = send(body);
  Capabilities caps;
  caps.has_exact_logits = c.first_logits.has_value();
  if (cfg_.logprobs > 0 && !c.top_logprobs.empty())
    caps.top_k_logprobs = std::min(cfg_.logprobs, c.top_logprobs.front().size());
  caps_ = caps;
  return caps;
}

Completion HttpClient::complete(const CompletionRequest& req) {
  if (req.prompt.empty()) throw ArgumentError("prompt must be non-empty");
  if (!(req.temperature > 0.0)) throw ArgumentError("temperature must be positive");
  json body{{"prompt", req.prompt}, {"max_tokens", req.max_tokens}, {"temperature", req.temperature}};
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  if (req.logprobs > 0) body["logprobs"] = req.logprobs;
  if (req.want_logits) body["logits"] = true;
  if (req.seed) body["seed"] = *req.seed;
  Completion c = send(body);
  if (req.want_logits && !c.first_logits)
    throw CapabilityError("endpoint '" + model_id() + "' returned no logits");
  c.short_generation = c.finish_reason == "stop" ||
                       (!c.tokens.empty() && c.tokens.size() < req.max_tokens);
  return c;
}

void HttpClient::pace() {
  if (cfg_.rate.min_interval_s <= 0.0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(cfg_.rate.min_interval_s));
  }
  std::this_thread::sleep_until(slot);
}

Completion HttpClient::send(const json& body) {
  std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
  if (!cfg_.auth_env.empty()) {
    const char* tok = std::getenv(cfg_.auth_env.c_str());
    if (!tok || !*tok)
      throw ArgumentError("environment variable '" + cfg_.auth_env + "' is not set");
    headers["Authorization"] = std::string("Bearer ") + tok;
  }
  const std::string payload = body.dump();
  double backoff = cfg_.retry.initial_backoff_s;
  std::string last_error;
  for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
    HttpResponse res;
    bool got = false;
    {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      pace();
      try {
        res = transport_->post(cfg_.path, payload, headers, cfg_.timeout_s);
        got = true;
      } catch (const TransportError& e) {
        last_error = e.what();
      }
    }
    if (got) {
      if (res.status >= 200 && res.status < 300) {
        Completion c = parse(res.body);
        c.attempts = attempt;
        return c;
      }
      if (!retryable(res.status))
        throw ProtocolError("endpoint replied HTTP " + std::to_string(res.status), res.body);
      last_error = "HTTP " + std::to_string(res.status);
    }
    if (attempt < cfg_.retry.max_attempts) {
      sleeper_(std::min(backoff, cfg_.retry.max_backoff_s));
      backoff *= cfg_.retry.multiplier;
    }
  }
  throw TransportError("request to " + cfg_.base_url + cfg_.path + " failed after " +
                           std::to_string(cfg_.retry.max_attempts) + " attempts: " + last_error,
                       cfg_.retry.max_attempts);
}

Completion HttpClient::parse(const std::string& raw) const {
  Completion c;
  try {
    const json j = json::parse(raw);
    const json& choice = j.at("choices").at(0);
    c.text = choice.at("text").get<std::string>();
    c.finish_reason = choice.value("finish_reason", std::string{});
    if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
      const json& lp = choice["logprobs"];
      if (lp.contains("tokens")) c.tokens = lp["tokens"].get<std::vector<std::string>>();
      if (lp.contains("token_logprobs")) {
        for (const auto& v : lp["token_logprobs"])
          c.token_logprobs.push_back(v.is_null() ? -INFINITY : v.get<double>());
      }
      if (lp.contains("top_logprobs")) {
        for (const auto& pos : lp["top_logprobs"]) {
          TopLogprobs top;
          if (pos.is_object()) {
            for (auto it = pos.begin(); it != pos.end(); ++it)
              top.emplace_back(it.key(), it.value().get<double>());
          } else if (!pos.is_null()) {
            throw ProtocolError("top_logprobs entries must be objects", raw);
          }
          std::stable_sort(top.begin(), top.end(),
                           [](const auto& a, const auto& b) { return a.second > b.second; });
          c.top_logprobs.push_back(std::move(top));
        }
      }
    }
    if (choice.contains("logits") && !choice["logits"].is_null())
      c.first_logits = choice["logits"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed completion reply: ") + e.what(), raw);
  }
  return c;
}

}  // namespace wmid
