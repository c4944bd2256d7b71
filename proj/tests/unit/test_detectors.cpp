#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "wmid/client/corpus.hpp"
#include "wmid/client/local_client.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/core/sampling.hpp"
#include "wmid/detectors/bit_bias.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/detectors/determinism.hpp"
#include "wmid/detectors/empirical.hpp"
#include "wmid/detectors/mean_adjacent.hpp"
#include "wmid/detectors/rng_divergence.hpp"
#include "wmid/error.hpp"
#include "wmid/monitor/sweep.hpp"
#include "wmid/stats/inequality.hpp"

using namespace wmid;

namespace {

class FixedClient : public ModelClient {
 public:
  explicit FixedClient(std::string text, std::size_t top_k = 0, double top_lp = 0.0)
      : text_(std::move(text)), top_k_(top_k), top_lp_(top_lp) {}
  std::string model_id() const override { return "fixed"; }
  Capabilities capabilities() override { return {false, top_k_}; }
  Completion complete(const CompletionRequest& req) override {
    Completion c;
    c.text = text_;
    c.tokens = {text_};
    if (req.logprobs > 0) c.top_logprobs = {{{text_, top_lp_}}};
    return c;
  }

 private:
  std::string text_;
  std::size_t top_k_;
  double top_lp_;
};

std::shared_ptr<SyntheticModel> model(std::uint64_t seed = 0, double sigma = 1.0) {
  SyntheticModelConfig cfg;
  cfg.seed = seed;
  cfg.context_sensitivity = sigma;
  return std::make_shared<SyntheticModel>(cfg);
}

WatermarkSpec mark(double gamma, double delta, std::uint64_t seed = 0) {
  WatermarkSpec w;
  w.gamma = gamma;
  w.delta = delta;
  w.key = derived_key(seed);
  return w;
}

std::vector<std::string> corpus_prefixes(std::size_t M, std::uint64_t seed) {
  auto sel = sample_prefixes(bundled_corpora(), {1.0, 1.0}, M, seed);
  std::vector<std::string> out;
  for (const auto& e : sel.entries) out.push_back(e.text);
  return out;
}

}  // namespace

TEST_CASE("first digit run and bit parsing") {
  CHECK(first_digit_run("I pick 42.") == 42);
  CHECK(first_digit_run(" 7, then 9") == 7);
  CHECK_FALSE(first_digit_run("none").has_value());
  CHECK(parse_bit(" 0") == 0);
  CHECK(parse_bit("1 1") == 1);
  CHECK_FALSE(parse_bit("7").has_value());
}

TEST_CASE("empirical distribution json round trip") {
  EmpiricalDistribution d;
  d.add(3);
  d.add(3);
  d.add(9);
  d.add_invalid();
  auto r = EmpiricalDistribution::from_json(d.to_json());
  CHECK(r.counts == d.counts);
  CHECK(r.total == 3);
  CHECK(r.invalid_count == 1);
  CHECK(d.frequency(3) == doctest::Approx(2.0 / 3));
  CHECK(d.expand().size() == 3);
}

TEST_CASE("rng distribution of a degenerate client") {
  FixedClient c("42");
  RngProbeOptions o;
  o.n = 50;
  auto d = collect_rng_distribution(c, o);
  CHECK(d.counts.size() == 1);
  CHECK(d.counts.at(42) == 50);
  CHECK(d.invalid_count == 0);

  FixedClient words("no idea");
  auto bad = collect_rng_distribution(words, o);
  CHECK(bad.total == 0);
  CHECK(bad.invalid_count == 50);
  CHECK(rng_divergence_test(d, bad).verdict == Verdict::Inconclusive);
}

TEST_CASE("rng divergence of a distribution with itself") {
  LocalClient c(model(), std::nullopt, "m", 1);
  RngProbeOptions o;
  o.n = 300;
  auto d = collect_rng_distribution(c, o);
  auto r = rng_divergence_test(d, d);
  CHECK(r.statistics.at("D") == 0.0);
  CHECK(r.verdict == Verdict::Unmarked);
}

TEST_CASE("unmarked rng distribution is far from uniform") {
  for (std::uint64_t seed : {0, 3}) {
    LocalClient c(model(seed), std::nullopt, "m", 1);
    RngProbeOptions o;
    o.n = 1000;
    auto d = collect_rng_distribution(c, o);
    CHECK(d.invalid_count == 0);
    const double e = static_cast<double>(d.total) / 100.0;
    double chi2 = 0.0;
    for (long long v = 1; v <= 100; ++v) {
      double x = d.counts.count(v) ? static_cast<double>(d.counts.at(v)) : 0.0;
      chi2 += (x - e) * (x - e) / e;
    }
    // 99 degrees of freedom, upper 1% point.
    CHECK(chi2 > 134.642);
  }
}

TEST_CASE("rng suite: same client passes, strong watermark is flagged") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto m = model(seed);
    LocalClient ref(m, std::nullopt, "r", 1), same(m, std::nullopt, "s", 2);
    RngSuiteOptions o;
    o.probe.seed = seed;
    auto r0 = rng_divergence_suite(ref, same, o);
    CHECK(r0.statistics.at("p_mean") > 0.05);
    CHECK(r0.verdict == Verdict::Unmarked);
    LocalClient strong(m, mark(0.25, 50, seed), "w", 3);
    auto r1 = rng_divergence_suite(ref, strong, o);
    CHECK(r1.verdict == Verdict::Watermarked);
  }
}

// Pilot bound p_mean < 1e-6 for (gamma 0.25, delta 50). With three surface
// forms per numeral, about 58% of values carry a green form at gamma 0.25, so
// thinning is mild; seeds 0..5 give p_mean from 3e-9 to 9e-3.
TEST_CASE("rng suite: strong watermark pilot bound" * doctest::should_fail()) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto m = model(seed);
    LocalClient ref(m, std::nullopt, "r", 1);
    LocalClient strong(m, mark(0.25, 50, seed), "w", 3);
    RngSuiteOptions o;
    o.probe.seed = seed;
    CHECK(rng_divergence_suite(ref, strong, o).statistics.at("p_mean") < 1e-6);
  }
}

TEST_CASE("mean adjacent index examples") {
  CHECK(mean_adjacent_index(LogitVector({0, 1, 2})) == 1.0);
  CHECK(mean_adjacent_index(LogitVector({2, 0, 1})) == 1.0);
  CHECK(mean_adjacent_index(LogitVector(std::vector<double>(7, 3.5))) == 0.0);
  CHECK_THROWS_AS(mean_adjacent_index(LogitVector({1.0})), ArgumentError);
  SplitMix rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(2 + rng.below(100));
    for (auto& x : v) x = 10 * rng.normal();
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(std::fabs(mean_adjacent_index(LogitVector(v)) - (*hi - *lo) / (v.size() - 1)) <= 1e-12);
  }
}

TEST_CASE("mean adjacent drift") {
  auto m = model(5);
  LocalClient plain(m, std::nullopt);
  std::vector<PromptRef> prompts;
  auto texts = corpus_prefixes(6, 5);
  for (std::size_t i = 0; i < texts.size(); ++i) prompts.push_back({std::to_string(i), texts[i]});
  auto old_set = collect_logit_snapshots(plain, prompts);
  auto same = mean_adjacent_drift(old_set, old_set);
  CHECK(same.statistics.at("delta_index") == 0.0);
  CHECK(same.verdict == Verdict::Unmarked);

  LocalClient marked(m, mark(0.15, 40, 5));
  auto new_set = collect_logit_snapshots(marked, prompts);
  auto r = mean_adjacent_drift(old_set, new_set);
  CHECK(r.statistics.at("delta_max_gap") > 20.0);
  CHECK(r.verdict == Verdict::Watermarked);

  auto short_set = old_set;
  short_set.prompt_ids.pop_back();
  short_set.logits.pop_back();
  CHECK_THROWS_AS(mean_adjacent_drift(old_set, short_set), ArgumentError);
}

TEST_CASE("literal index shift is bounded when both extremes stay red") {
  SplitMix rng(12);
  WatermarkSpec w = mark(0.25, 10, 12);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 20; ++t) {
    std::vector<double> v(64);
    for (auto& x : v) x = rng.normal();
    Context c;
    c.tokens = {static_cast<TokenId>(rng.below(64))};
    auto g = green_list(w, 64, c);
    std::set<TokenId> gs(g.begin(), g.end());
    auto lo = std::min_element(v.begin(), v.end()) - v.begin();
    auto hi = std::max_element(v.begin(), v.end()) - v.begin();
    if (gs.count(lo) || gs.count(hi)) continue;
    ++checked;
    LogitVector before(v);
    auto after = apply_watermark(w, before, c);
    CHECK(mean_adjacent_index(after) - mean_adjacent_index(before) <= 10.0 / 63 + 1e-12);
  }
  CHECK(checked > 0);
}

TEST_CASE("delta amplify with one prefix equals the single snapshot") {
  LocalClient c(model(), mark(0.25, 5));
  auto avg = delta_amplify(c, {"A single prefix."});
  CHECK(avg.M == 1);
  CompletionRequest req;
  req.prompt = std::string("A single prefix.") + kStorySuffix;
  req.want_logits = true;
  auto one = c.complete(req);
  REQUIRE(one.first_logits.has_value());
  CHECK(avg.mean_values == *one.first_logits);
}

TEST_CASE("delta amplify requires logits") {
  FixedClient c("x", 5);
  CHECK_THROWS_AS(delta_amplify(c, {"a", "b"}), CapabilityError);
}

TEST_CASE("averaging makes a delta=5 watermark bimodal") {
  auto m = model(6);
  LocalClient c(m, mark(0.25, 5, 6));
  auto prefixes = corpus_prefixes(140, 6);
  auto avg = delta_amplify(c, prefixes);
  auto single = delta_amplify(c, {prefixes[0]});
  CHECK(delta_amp_detect(avg).statistics.at("p") < 0.05);
  CHECK(dip_test(single.mean_values).p_value > 0.05);
}

TEST_CASE("lower prefix diversity gives weaker bimodality") {
  auto m = model(7);
  LocalClient c(m, mark(0.25, 5, 7));
  auto diverse = corpus_prefixes(140, 7);
  PromptCorpus narrow;
  for (int i = 0; i < 5; ++i) narrow.entries.push_back({std::to_string(i), diverse[i]});
  auto sel = sample_prefixes(narrow, 140, 7);
  CHECK(sel.with_replacement);
  std::vector<std::string> repeated;
  for (const auto& e : sel.entries) repeated.push_back(e.text);
  double dip_diverse = delta_amp_detect(delta_amplify(c, diverse)).statistics.at("dip");
  double dip_narrow = delta_amp_detect(delta_amplify(c, repeated)).statistics.at("dip");
  CHECK(dip_diverse > dip_narrow);
}

TEST_CASE("delta amp detection and recovery at delta=10") {
  LocalClient c(model(0), mark(0.25, 10, 0));
  auto r = delta_amp_detect(delta_amplify(c, corpus_prefixes(140, 0)));
  CHECK(r.statistics.at("p") < 0.05);
  CHECK(r.verdict == Verdict::Watermarked);
  REQUIRE(r.recovered.has_value());
  CHECK(std::fabs(r.recovered->delta_hat - 10) <= 1.0);
  CHECK(std::fabs(r.recovered->gamma_hat - 0.25) <= 0.05);
  CHECK(r.recovered->gamma_hat >= 0.0);
  CHECK(r.recovered->gamma_hat <= 1.0);
  CHECK(r.recovered->delta_hat >= 0.0);
}

TEST_CASE("delta amp false positives on unmarked models stay under 10%") {
  int fired = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    LocalClient c(model(100 + s), std::nullopt);
    auto r = delta_amp_detect(delta_amplify(c, corpus_prefixes(140, 100 + s)));
    fired += r.verdict == Verdict::Watermarked;
    if (r.recovered) {
      CHECK(r.recovered->gamma_hat >= 0.0);
      CHECK(r.recovered->delta_hat >= 0.0);
    }
  }
  CHECK(fired <= seeds / 10);
}

TEST_CASE("averaged logit variance scales as sigma^2 / M") {
  const double sigma = 1.0;
  auto m = model(8, sigma);
  LocalClient c(m, std::nullopt);
  for (std::size_t M : {10, 40, 140}) {
    const int runs = 12;
    std::vector<std::vector<double>> avgs;
    for (int r = 0; r < runs; ++r) {
      std::vector<std::string> prefixes;
      for (std::size_t i = 0; i < M; ++i)
        prefixes.push_back("run " + std::to_string(r) + " prompt " + std::to_string(i));
      avgs.push_back(delta_amplify(c, prefixes).mean_values);
    }
    const std::size_t V = avgs[0].size();
    double var_sum = 0.0;
    for (std::size_t t = 0; t < V; ++t) {
      double mean = 0;
      for (const auto& a : avgs) mean += a[t];
      mean /= runs;
      double v = 0;
      for (const auto& a : avgs) v += (a[t] - mean) * (a[t] - mean);
      var_sum += v / (runs - 1);
    }
    double observed = var_sum / static_cast<double>(V);
    double expected = sigma * sigma / static_cast<double>(M);
    CHECK(observed >= expected / 2);
    CHECK(observed <= expected * 2);
  }
}

TEST_CASE("determinism probe") {
  WatermarkSpec w;
  w.variant = WatermarkVariant::PrfDeterministic;
  w.key = derived_key(1);
  LocalClient prf(model(1), w);
  CHECK(determinism_probe(prf, "Tell me a story.").verdict == Verdict::Watermarked);

  LocalClient plain(model(1), std::nullopt);
  auto r = determinism_probe(plain, "Tell me a story.");
  CHECK(r.statistics.at("distinct_outputs") > 1);
  CHECK(r.verdict == Verdict::Unmarked);

  FixedClient single("only", 1, 0.0);
  CHECK(determinism_probe(single, "x").verdict == Verdict::Inconclusive);
  FixedClient no_logprobs("only");
  CHECK(determinism_probe(no_logprobs, "x").verdict == Verdict::Inconclusive);

  DeterminismOptions bad;
  bad.repeats = 1;
  CHECK_THROWS_AS(determinism_probe(plain, "x", bad), ArgumentError);
}

TEST_CASE("unmarked outputs differ with the bound from the top softmax probability") {
  auto m = model(2);
  LocalClient c(m, std::nullopt);
  Context ctx;
  ctx.tokens = m->vocabulary().encode("Tell me a story.");
  double pmax = 0.0;
  auto p = softmax(m->logits(ctx));
  pmax = *std::max_element(p.begin(), p.end());
  DeterminismOptions o;
  double bound = 1.0 - std::pow(pmax, static_cast<double>(o.gen_len * (o.repeats - 1)));
  CHECK(bound > 0.99);
  int differ = 0;
  for (int s = 0; s < 30; ++s) {
    LocalClient cs(m, std::nullopt, "u", s);
    differ += determinism_probe(cs, "Tell me a story.", o).verdict == Verdict::Unmarked;
  }
  CHECK(differ >= 29);
}

TEST_CASE("fixed bit sequence is 20 bits and stable") {
  auto a = fixed_bit_sequence();
  CHECK(a.size() == 20);
  CHECK(a == fixed_bit_sequence());
  for (int b : a) CHECK((b == 0 || b == 1));
}

TEST_CASE("bit bias probe on simulated sources") {
  auto b = chernoff_budget(0.5, 0.1, 1);
  int fp = 0, tp = 0;
  for (int t = 0; t < 200; ++t) {
    BitProbeOptions o;
    o.seed = t;
    FairBitSource fair;
    fp += bit_bias_probe(fair, b, o).verdict == Verdict::Watermarked;
    OneContextBiasBitSource one(2 * b.q);
    tp += bit_bias_probe(one, b, o).verdict == Verdict::Watermarked;
  }
  CHECK(fp <= 20);
  CHECK(tp >= 180);
}

TEST_CASE("bit bias probe through the synthetic model") {
  LocalClient c(model(3), std::nullopt);
  ClientBitSource src(c);
  auto b = chernoff_budget(0.5, 0.1, 1);
  auto r = bit_bias_probe(src, b);
  CHECK(r.verdict != Verdict::Inconclusive);
  CHECK(r.statistics.at("invalid_rate") < 0.5);
  CHECK(r.metadata.contains("fixed_bits"));
}

TEST_CASE("watermark smooths a peaked distribution by gini") {
  // A peaked first-token distribution whose top token is red: the boosted
  // green tokens take over and the ranked curve flattens.
  auto m = model(9);
  Context ctx;
  ctx.tokens = m->vocabulary().encode(std::string(kRngPrompt) + " 42");
  auto base = m->logits(ctx);
  auto pu = softmax(base);
  const auto top = static_cast<TokenId>(std::max_element(pu.begin(), pu.end()) - pu.begin());
  REQUIRE(top == *m->vocabulary().eos());
  REQUIRE(pu[top] > 0.99);
  int tried = 0;
  for (std::uint64_t k = 0; tried < 5 && k < 50; ++k) {
    WatermarkSpec w = mark(0.5, 100, k);
    auto g = green_list(w, base.size(), ctx);
    if (std::find(g.begin(), g.end(), top) != g.end()) continue;
    ++tried;
    CHECK(gini(softmax(apply_watermark(w, base, ctx))) < gini(pu));
  }
  CHECK(tried == 5);
}
