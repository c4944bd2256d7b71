#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "wmid/client/corpus.hpp"
#include "wmid/client/http_client.hpp"
#include "wmid/client/local_client.hpp"
#include "wmid/client/sampling_probe.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/error.hpp"
#include "wmid/util/config_file.hpp"

using namespace wmid;
using nlohmann::json;

namespace {

std::string ok_body(const std::string& text = "7") {
  json j = {{"choices",
             {{{"text", text},
               {"finish_reason", "length"},
               {"logprobs",
                {{"tokens", {text}},
                 {"token_logprobs", {-0.5}},
                 {"top_logprobs", {{{"0", -0.9}, {"1", -0.6}, {"7", -0.5}}}}}}}}}};
  return j.dump();
}

class ScriptTransport : public Transport {
 public:
  std::vector<HttpResponse> script;
  std::vector<std::string> bodies;
  std::vector<std::map<std::string, std::string>> headers_seen;
  std::size_t calls = 0;
  HttpResponse post(const std::string&, const std::string& body,
                    const std::map<std::string, std::string>& headers, double) override {
    bodies.push_back(body);
    headers_seen.push_back(headers);
    const auto& r = script.at(std::min(calls, script.size() - 1));
    ++calls;
    if (r.status == 0) throw TransportError("connection refused", 1);
    return r;
  }
};

struct Clocked : Transport {
  std::mutex mu;
  std::vector<std::chrono::steady_clock::time_point> stamps;
  std::atomic<int> active{0}, peak{0};
  HttpResponse post(const std::string&, const std::string&, const std::map<std::string, std::string>&,
                    double) override {
    int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    {
      std::lock_guard<std::mutex> lock(mu);
      stamps.push_back(std::chrono::steady_clock::now());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return {200, ok_body()};
  }
};

EndpointConfig cfg() {
  EndpointConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.model = "m";
  return c;
}

CompletionRequest req() {
  CompletionRequest r;
  r.prompt = "hi";
  r.max_tokens = 1;
  r.logprobs = 3;
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST_CASE("retry on 429 twice then success") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{429, "slow down"}, {429, "slow down"}, {200, ok_body()}};
  auto* raw = t.get();
  HttpClient c(cfg(), std::move(t));
  std::vector<double> sleeps;
  c.set_sleeper([&](double s) { sleeps.push_back(s); });
  auto out = c.complete(req());
  CHECK(out.attempts == 3);
  CHECK(raw->calls == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[1] == doctest::Approx(2 * sleeps[0]));
  CHECK(out.text == "7");
}

TEST_CASE("top logprobs parsed best first and bit rule applies") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{200, ok_body()}};
  HttpClient c(cfg(), std::move(t));
  auto out = c.complete(req());
  REQUIRE(out.top_logprobs.size() == 1);
  CHECK(out.top_logprobs[0][0].first == "7");
  CHECK(out.top_logprobs[0][1].first == "1");
  auto p0 = bit_probability_from_top(out.top_logprobs[0]);
  REQUIRE(p0.has_value());
  CHECK(*p0 == doctest::Approx(std::exp(-0.9) / (std::exp(-0.9) + std::exp(-0.6))));
  TopLogprobs only_one = {{"0", -0.1}, {"x", -3}};
  CHECK_FALSE(bit_probability_from_top(only_one).has_value());
}

TEST_CASE("malformed reply raises a protocol error carrying the payload") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{200, "{\"unexpected\": true}"}};
  HttpClient c(cfg(), std::move(t));
  try {
    c.complete(req());
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.raw_payload() == "{\"unexpected\": true}");
  }
  auto t2 = std::make_unique<ScriptTransport>();
  t2->script = {{400, "bad request body"}};
  HttpClient c2(cfg(), std::move(t2));
  CHECK_THROWS_AS(c2.complete(req()), ProtocolError);
}

TEST_CASE("transport failures exhaust the retry budget") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{0, ""}};
  auto* raw = t.get();
  HttpClient c(cfg(), std::move(t));
  c.set_sleeper([](double) {});
  try {
    c.complete(req());
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 4);
  }
  CHECK(raw->calls == 4);
}

TEST_CASE("auth token comes from the named environment variable") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{200, ok_body()}};
  auto* raw = t.get();
  EndpointConfig e = cfg();
  e.auth_env = "WMID_TEST_TOKEN";
  HttpClient c(e, std::move(t));
  ::unsetenv("WMID_TEST_TOKEN");
  CHECK_THROWS_AS(c.complete(req()), ArgumentError);
  ::setenv("WMID_TEST_TOKEN", "s3cret", 1);
  c.complete(req());
  CHECK(raw->headers_seen.back().at("Authorization") == "Bearer s3cret");
  ::unsetenv("WMID_TEST_TOKEN");

  json j = to_json(cfg());
  j["api_key"] = "inline";
  CHECK_THROWS_AS(endpoint_from_json(j), ArgumentError);
  json unknown = to_json(cfg());
  unknown["bogus"] = 1;
  CHECK_THROWS_AS(endpoint_from_json(unknown), ArgumentError);
}

TEST_CASE("endpoint config round trip and validation") {
  EndpointConfig e = cfg();
  e.rate.max_in_flight = 2;
  e.retry.max_attempts = 7;
  auto back = endpoint_from_json(to_json(e));
  CHECK(back.rate.max_in_flight == 2);
  CHECK(back.retry.max_attempts == 7);
  CHECK(back.base_url == e.base_url);
  EndpointConfig bad = cfg();
  bad.base_url = "ftp://x";
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("request rate and concurrency respect the configured limits") {
  auto t = std::make_unique<Clocked>();
  auto* raw = t.get();
  EndpointConfig e = cfg();
  e.rate.max_in_flight = 2;
  e.rate.min_interval_s = 0.01;
  HttpClient c(e, std::move(t));
  std::vector<std::thread> pool;
  for (int w = 0; w < 6; ++w)
    pool.emplace_back([&] {
      for (int i = 0; i < 5; ++i) c.complete(req());
    });
  for (auto& th : pool) th.join();
  CHECK(raw->peak.load() <= 2);
  auto s = raw->stamps;
  std::sort(s.begin(), s.end());
  REQUIRE(s.size() == 30);
  for (std::size_t i = 1; i < s.size(); ++i)
    CHECK(std::chrono::duration<double>(s[i] - s[i - 1]).count() >= 0.0095);
}

TEST_CASE("capabilities from the probe reply") {
  auto t = std::make_unique<ScriptTransport>();
  t->script = {{200, ok_body()}};
  HttpClient c(cfg(), std::move(t));
  auto caps = c.capabilities();
  CHECK_FALSE(caps.has_exact_logits);
  CHECK(caps.top_k_logprobs == 3);
  CHECK_THROWS_AS(require_logits(c), CapabilityError);
}

TEST_CASE("local client reproducibility") {
  auto m = std::make_shared<SyntheticModel>(SyntheticModelConfig{});
  LocalClient a(m, std::nullopt, "a", 5), b(m, std::nullopt, "b", 5);
  CompletionRequest r;
  r.prompt = "Once upon a time";
  r.max_tokens = 20;
  auto ca = a.complete(r), cb = b.complete(r);
  CHECK(ca.tokens == cb.tokens);
  CHECK(ca.text == cb.text);
  r.seed = 99;
  CHECK(a.complete(r).tokens == b.complete(r).tokens);
  CHECK(a.capabilities().has_exact_logits);
}

TEST_CASE("sample-only client fails fast for logit detectors") {
  struct SampleOnly : ModelClient {
    std::string model_id() const override { return "s"; }
    Capabilities capabilities() override { return {}; }
    Completion complete(const CompletionRequest&) override {
      Completion c;
      c.text = "1";
      return c;
    }
  } s;
  CHECK(s.capabilities().sample_only());
  CHECK_THROWS_AS(require_logits(s), CapabilityError);
  CHECK_THROWS_AS(delta_amplify(s, {"a", "b"}), CapabilityError);
}

TEST_CASE("corpus loading") {
  auto p = temp_file("wmid_corpus_test.txt", "first line\n\nsecond line\nthird\n");
  auto c = load_corpus(p);
  REQUIRE(c.entries.size() == 3);
  CHECK(c.entries[1].text == "second line");
  CHECK(c.entries[1].id == "wmid_corpus_test:3");
  auto empty = temp_file("wmid_corpus_empty.txt", "\n\n");
  CHECK_THROWS_AS(load_corpus(empty), ArgumentError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.txt"), IoError);
}

TEST_CASE("prefix sampling shares, permutation and determinism") {
  PromptCorpus a, b;
  for (int i = 0; i < 200; ++i) {
    a.entries.push_back({"a:" + std::to_string(i), "alpha " + std::to_string(i)});
    b.entries.push_back({"b:" + std::to_string(i), "beta " + std::to_string(i)});
  }
  a.source = "a";
  b.source = "b";
  auto sel = sample_prefixes({a, b}, {0.5, 0.5}, 140, 3);
  REQUIRE(sel.entries.size() == 140);
  int from_a = 0;
  for (const auto& e : sel.entries) from_a += e.id[0] == 'a';
  CHECK(from_a == 70);

  auto perm = sample_prefixes(a, 200, 4);
  std::set<std::string> ids;
  for (const auto& e : perm.entries) ids.insert(e.id);
  CHECK(ids.size() == 200);
  CHECK_FALSE(perm.with_replacement);

  auto again = sample_prefixes({a, b}, {0.5, 0.5}, 140, 3);
  for (std::size_t i = 0; i < 140; ++i) CHECK(again.entries[i].id == sel.entries[i].id);
}

TEST_CASE("bundled corpora are present") {
  auto dir = bundled_corpus_dir();
  CHECK(std::filesystem::exists(dir / "archive.txt"));
  CHECK(load_corpus(dir / "webtext.txt").entries.size() == 1000);
}

TEST_CASE("sampling probe estimates probabilities") {
  auto m = std::make_shared<SyntheticModel>(SyntheticModelConfig{});
  LocalClient c(m, std::nullopt);
  std::set<long long> outcomes;
  for (int v = 1; v <= 100; ++v) outcomes.insert(v);
  const std::string prompt = "Generate a random number between 1 and 100:";
  auto one = estimate_probs_by_sampling(c, prompt, 1, outcomes);
  CHECK(one.total + one.invalid_count == 1);
  if (one.total == 1) CHECK(one.counts.size() == 1);

  const std::size_t N = 10000;
  auto est = estimate_probs_by_sampling(c, prompt, N, outcomes, 1);
  // Exact first-token probability of the modal value from the served logits.
  Context ctx;
  ctx.tokens = m->vocabulary().encode(prompt);
  auto lv = c.served_logits(ctx);
  std::vector<double> p(lv.size());
  double mx = *std::max_element(lv.values.begin(), lv.values.end()), z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(lv[i] - mx);
  std::map<long long, double> exact;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (auto v = m->vocabulary().numeral_value(static_cast<TokenId>(i)); v && outcomes.count(*v))
      exact[*v] += p[i] / z;
  auto best = std::max_element(exact.begin(), exact.end(),
                               [](auto& x, auto& y) { return x.second < y.second; });
  double f = est.counts[best->first] / static_cast<double>(N);
  double se = std::sqrt(best->second * (1 - best->second) / N);
  CHECK(std::fabs(f - best->second) <= 3 * se);
}

TEST_CASE("sampling probe counts out-of-range replies as invalid") {
  struct Reply137 : ModelClient {
    std::string model_id() const override { return "x"; }
    Capabilities capabilities() override { return {}; }
    Completion complete(const CompletionRequest&) override {
      Completion c;
      c.text = "137";
      return c;
    }
  } c;
  std::set<long long> outcomes;
  for (int v = 1; v <= 100; ++v) outcomes.insert(v);
  auto d = estimate_probs_by_sampling(c, "p", 1, outcomes);
  CHECK(d.invalid_count == 1);
  CHECK(d.total == 0);
}

TEST_CASE("toml subset parser") {
  auto j = parse_toml(R"(
# comment
name = "wmid"   # trailing
count = 3
ratio = 0.25
on = true
list = [1, 2, 3]
lit = 'C:\path'

[model]
vocab_size = 512
seed.value = 4

[watermark.spec]
gamma = 0.1
)");
  CHECK(j["name"] == "wmid");
  CHECK(j["count"] == 3);
  CHECK(j["ratio"].get<double>() == 0.25);
  CHECK(j["on"] == true);
  CHECK(j["list"] == json::array({1, 2, 3}));
  CHECK(j["lit"] == "C:\\path");
  CHECK(j["model"]["vocab_size"] == 512);
  CHECK(j["model"]["seed"]["value"] == 4);
  CHECK(j["watermark"]["spec"]["gamma"].get<double>() == 0.1);
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ArgumentError);
  CHECK_THROWS_AS(parse_toml("a = \n"), ArgumentError);

  auto p = temp_file("wmid_cfg_test.toml", "[x]\ny = 2\n");
  CHECK(load_config_file(p)["x"]["y"] == 2);
  auto pj = temp_file("wmid_cfg_test.json", "{\"x\": {\"y\": 3}}");
  CHECK(load_config_file(pj)["x"]["y"] == 3);
}
