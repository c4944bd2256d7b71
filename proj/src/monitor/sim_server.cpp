#include "wmid/monitor/sim_server.hpp"

#include <thread>

#include <httplib.h>

#include "wmid/client/local_client.hpp"
#include "wmid/error.hpp"

namespace wmid {

using nlohmann::json;

struct SimulationServer::Impl {
  std::string model_id;
  std::unique_ptr<LocalClient> client;
  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;
};

namespace {

std::string error_body(const std::string& msg) {
  return json{{"error", {{"message", msg}, {"type", "invalid_request_error"}}}}.dump();
}

}  // namespace

SimulationServer::SimulationServer(const SimulationConfig& cfg, std::uint64_t seed,
                                   std::string model_id)
    : impl_(std::make_unique<Impl>()) {
  impl_->model_id = std::move(model_id);
  auto model = std::make_shared<SyntheticModel>(cfg.model);
  impl_->client = std::make_unique<LocalClient>(model, cfg.watermark, impl_->model_id, seed);

  impl_->server.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
    auto [status, body] = handle_completion(req.body);
    res.status = status;
    res.set_content(body, "application/json");
  });
  impl_->server.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"object", "list"}, {"data", {{{"id", impl_->model_id}, {"object", "model"}}}}}.dump(),
                    "application/json");
  });
}

SimulationServer::~SimulationServer() { stop(); }

std::pair<int, std::string> SimulationServer::handle_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return {400, error_body("request body is not JSON")};
  }
  CompletionRequest req;
  try {
    const json& p = j.at("prompt");
    if (p.is_array()) {
      if (p.size() != 1) return {400, error_body("exactly one prompt per request")};
      req.prompt = p[0].get<std::string>();
    } else {
      req.prompt = p.get<std::string>();
    }
    req.max_tokens = j.value("max_tokens", std::size_t{16});
    req.temperature = j.value("temperature", 1.0);
    if (j.contains("logprobs") && !j["logprobs"].is_null())
      req.logprobs = std::min(j["logprobs"].get<std::size_t>(), kMaxServedLogprobs);
    if (j.contains("seed") && !j["seed"].is_null()) req.seed = j["seed"].get<std::uint64_t>();
    req.want_logits = j.value("logits", false);
  } catch (const json::exception& e) {
    return {400, error_body(std::string("bad request field: ") + e.what())};
  }
  Completion c;
  try {
    c = impl_->client->complete(req);
  } catch (const ArgumentError& e) {
    return {400, error_body(e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(e.what())};
  }
  json choice{{"index", 0}, {"text", c.text}, {"finish_reason", c.finish_reason}};
  if (req.logprobs > 0) {
    json tops = json::array();
    for (const auto& pos : c.top_logprobs) {
      json m = json::object();
      for (const auto& [tok, lp] : pos) m[tok] = lp;
      tops.push_back(m);
    }
    choice["logprobs"] = {{"tokens", c.tokens}, {"token_logprobs", c.token_logprobs}, {"top_logprobs", tops}};
  } else {
    choice["logprobs"] = nullptr;
  }
  if (c.first_logits) choice["logits"] = *c.first_logits;
  json out{{"object", "text_completion"}, {"model", impl_->model_id}, {"choices", json::array({choice})}};
  return {200, out.dump()};
}

int SimulationServer::start(const std::string& host, int port) {
  if (impl_->thread.joinable()) throw ArgumentError("server already running");
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  impl_->host = host;
  impl_->port = bound;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void SimulationServer::serve(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port;
  if (!impl_->server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void SimulationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string SimulationServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace wmid
