#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "wmid/core/model.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/core/sampling.hpp"
#include "wmid/core/vocabulary.hpp"
#include "wmid/core/watermark.hpp"
#include "wmid/error.hpp"

using namespace wmid;

namespace {

WatermarkSpec spec_with(double gamma, double delta, std::uint8_t key_byte = 1) {
  WatermarkSpec w;
  w.gamma = gamma;
  w.delta = delta;
  w.key = {key_byte, 2, 3, 4};
  return w;
}

Context random_context(SplitMix& rng, std::size_t vocab, std::size_t len) {
  Context c;
  for (std::size_t i = 0; i < len; ++i) c.tokens.push_back(static_cast<TokenId>(rng.below(vocab)));
  return c;
}

}  // namespace

TEST_CASE("hmac-sha256 matches RFC 4231 case 2") {
  std::string key = "Jefe", msg = "what do ya want for nothing?";
  auto d = hmac_sha256({reinterpret_cast<const std::uint8_t*>(key.data()), key.size()},
                       {reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size()});
  CHECK(hex_encode(d) == "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hex round trip and bad hex") {
  std::vector<std::uint8_t> b = {0, 1, 0xab, 0xff};
  CHECK(hex_decode(hex_encode(b)) == b);
  CHECK_THROWS_AS(hex_decode("abc"), ArgumentError);
  CHECK_THROWS_AS(hex_decode("zz"), ArgumentError);
}

TEST_CASE("splitmix below stays in range") {
  SplitMix rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("vocabulary numerals and encode/decode") {
  Vocabulary v = Vocabulary::standard(4096);
  REQUIRE(v.find("42").has_value());
  CHECK(v.numeral_value(*v.find("42")) == 42);
  CHECK(v.numeral_value(*v.find("42.")) == 42);
  CHECK(v.numeral_value(*v.find("42,")) == 42);
  REQUIRE(v.eos().has_value());
  auto ids = v.encode("7 1 0");
  REQUIRE(ids.size() == 3);
  CHECK(v.decode(ids) == "7 1 0");
  for (auto id : v.encode("some unseen wordsxyz here")) CHECK(id < v.size());
}

TEST_CASE("synthetic model determinism and context checks") {
  SyntheticModelConfig cfg;
  cfg.seed = 9;
  SyntheticModel m(cfg);
  SplitMix rng(1);
  Context c = random_context(rng, cfg.vocab_size, 12);
  LogitVector first = m.logits(c);
  for (int i = 0; i < 20; ++i) CHECK(m.logits(c).values == first.values);
  first.check_finite();
  Context bad;
  bad.tokens = {static_cast<TokenId>(cfg.vocab_size)};
  CHECK_THROWS_AS(m.logits(bad), InvalidContextError);
}

TEST_CASE("sigma zero removes context dependence") {
  SyntheticModelConfig cfg;
  cfg.context_sensitivity = 0.0;
  SyntheticModel m(cfg);
  Context a, b;
  a.tokens = {500, 600};
  b.tokens = {700, 800, 900};
  CHECK(m.logits(a).values == m.logits(b).values);
}

TEST_CASE("config validation") {
  SyntheticModelConfig cfg;
  cfg.skew = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg.skew = 1;
  cfg.context_sensitivity = -1;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  WatermarkSpec w = spec_with(1.5, 1);
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  w = spec_with(0.5, -1);
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  w = spec_with(0.5, 1);
  w.window_k = 0;
  CHECK_THROWS_AS(w.validate(), ArgumentError);
}

TEST_CASE("sampling: saturated and uniform logits") {
  std::vector<double> v(8, 0.0);
  v[3] = 50.0;
  LogitVector lv(v);
  SplitMix rng(11);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += sample(lv, 1.0, rng) == 3;
  CHECK(hits / 10000.0 > 0.999);

  LogitVector flat(std::vector<double>(4, 0.0));
  std::map<TokenId, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[sample(flat, 1.0, rng)];
  for (TokenId t = 0; t < 4; ++t) CHECK(std::fabs(counts[t] / 10000.0 - 0.25) <= 0.02);

  LogitVector two(std::vector<double>{std::log(1.0), std::log(3.0)});
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += sample(two, 1.0, rng) == 1;
  CHECK(std::fabs(ones / 10000.0 - 0.75) <= 0.02);
}

TEST_CASE("sampling frequencies pass chi-square on a small vocab") {
  LogitVector lv(std::vector<double>{0.3, -1.0, 1.2, 0.0, 2.0, -0.5});
  auto p = softmax(lv);
  SplitMix rng(21);
  std::vector<double> counts(p.size(), 0.0);
  const int N = 10000;
  for (int i = 0; i < N; ++i) counts[sample(lv, 1.0, rng)] += 1;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) chi2 += std::pow(counts[i] - N * p[i], 2) / (N * p[i]);
  // 5 degrees of freedom, upper 1% point.
  CHECK(chi2 < 15.086);
}

TEST_CASE("inverse cdf boundary goes to the lower id") {
  std::vector<double> cdf = {0.25, 0.5, 1.0};
  CHECK(inverse_cdf(cdf, 0.25) == 0);
  CHECK(inverse_cdf(cdf, 0.2500001) == 1);
  std::vector<double> zero_mass = {0.0, 0.5, 1.0};
  CHECK(inverse_cdf(zero_mass, 0.0) == 1);
}

TEST_CASE("green list edge cases and size") {
  Context c;
  c.tokens = {1, 2, 3};
  CHECK(green_list(spec_with(0.0, 1), 100, c).empty());
  auto all = green_list(spec_with(1.0, 1), 100, c);
  std::set<TokenId> s(all.begin(), all.end());
  CHECK(s.size() == 100);
  CHECK(green_list(spec_with(0.25, 1), 101, c).size() == green_count(0.25, 101));
  CHECK(green_count(0.25, 101) == 25);
}

TEST_CASE("green list depends only on key and the last window tokens") {
  SplitMix rng(4);
  WatermarkSpec w = spec_with(0.3, 1);
  for (int t = 0; t < 200; ++t) {
    Context a = random_context(rng, 1000, 5 + rng.below(10));
    Context b = random_context(rng, 1000, rng.below(10));
    b.tokens.insert(b.tokens.end(), a.tokens.end() - 5, a.tokens.end());
    CHECK(green_list(w, 1000, a) == green_list(w, 1000, b));
  }
  Context c = random_context(rng, 1000, 8);
  CHECK(green_list(w, 1000, c) != green_list(spec_with(0.3, 1, 99), 1000, c));
}

TEST_CASE("apply_watermark adds delta to exactly the green coordinates") {
  WatermarkSpec w = spec_with(0.5, 2);
  LogitVector zeros(std::vector<double>(4, 0.0));
  Context c;
  c.tokens = {1};
  auto out = apply_watermark(w, zeros, c);
  auto g = green_list(w, 4, c);
  for (TokenId t = 0; t < 4; ++t)
    CHECK(out[t] == (std::find(g.begin(), g.end(), t) != g.end() ? 2.0 : 0.0));

  CHECK(apply_watermark(spec_with(0.5, 0), zeros, c).values == zeros.values);

  SplitMix rng(8);
  for (int t = 0; t < 100; ++t) {
    std::size_t V = 10 + rng.below(300);
    double gamma = rng.uniform(), delta = 10 * rng.uniform() + 0.5;
    std::vector<double> v(V);
    for (auto& x : v) x = rng.normal();
    LogitVector in(v);
    Context ctx = random_context(rng, V, 6);
    auto o = apply_watermark(spec_with(gamma, delta), in, ctx);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < V; ++i) {
      if (o[i] != in[i]) {
        ++changed;
        CHECK(o[i] - in[i] == doctest::Approx(delta).epsilon(1e-12));
      }
    }
    CHECK(changed == green_count(gamma, V));
  }
}

TEST_CASE("watermark bands separate by delta on a real-shaped vector") {
  SyntheticModel m(SyntheticModelConfig{});
  WatermarkSpec w = spec_with(0.15, 40);
  Context c;
  c.tokens = m.vocabulary().encode("the old bridge");
  auto base = m.logits(c);
  auto out = apply_watermark(w, base, c);
  auto g = green_list(w, base.size(), c);
  double green_mean = 0, red_mean = 0;
  std::set<TokenId> gs(g.begin(), g.end());
  for (std::size_t i = 0; i < base.size(); ++i) (gs.count(i) ? green_mean : red_mean) += out[i];
  green_mean /= gs.size();
  red_mean /= base.size() - gs.size();
  CHECK(std::fabs(green_mean - red_mean - 40.0) < 1.0);
}

TEST_CASE("prf deterministic: same key same token, keys differ somewhere") {
  SyntheticModel m(SyntheticModelConfig{});
  WatermarkSpec a = spec_with(0.25, 0, 1), b = spec_with(0.25, 0, 2);
  a.variant = b.variant = WatermarkVariant::PrfDeterministic;
  SplitMix rng(2);
  bool differ = false;
  for (int t = 0; t < 50; ++t) {
    Context c = random_context(rng, 4096, 6);
    TokenId x = prf_deterministic_next(a, m, c);
    CHECK(prf_deterministic_next(a, m, c) == x);
    differ = differ || prf_deterministic_next(b, m, c) != x;
  }
  CHECK(differ);
}

namespace {

class TinyModel : public LanguageModel {
 public:
  TinyModel() : vocab_(6) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  LogitVector logits(const Context&) const override {
    return LogitVector(std::vector<double>{0.5, -0.3, 1.1, 0.0, -1.2, 0.8});
  }

 private:
  Vocabulary vocab_;
};

}  // namespace

TEST_CASE("prf deterministic marginal matches softmax over many keys") {
  TinyModel m;
  auto p = softmax(m.logits({}));
  const int K = 10000;
  std::vector<double> freq(p.size(), 0.0);
  Context c;
  c.tokens = {1, 2};
  for (int k = 0; k < K; ++k) {
    WatermarkSpec w;
    w.variant = WatermarkVariant::PrfDeterministic;
    w.key = {static_cast<std::uint8_t>(k & 255), static_cast<std::uint8_t>(k >> 8), 7};
    freq[prf_deterministic_next(w, m, c)] += 1;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    double se = std::sqrt(p[i] * (1 - p[i]) / K);
    CHECK(std::fabs(freq[i] / K - p[i]) <= 3 * se);
  }
}

TEST_CASE("watermarked model wraps the base") {
  auto base = std::make_shared<SyntheticModel>(SyntheticModelConfig{});
  WatermarkSpec w = spec_with(0.25, 3);
  WatermarkedModel wm(base, w);
  Context c;
  c.tokens = {10, 20, 30};
  CHECK(wm.logits(c).values == apply_watermark(w, base->logits(c), c).values);
}
