#include "wmid/detectors/bit_bias.hpp"

#include <algorithm>
#include <cmath>

#include "wmid/core/prf.hpp"
#include "wmid/detectors/empirical.hpp"
#include "wmid/error.hpp"

namespace wmid {

std::vector<int> fixed_bit_sequence() {
  SplitMix rng(kFixedBitSeed);
  std::vector<int> bits(20);
  for (auto& b : bits) b = static_cast<int>(rng.next() >> 63);
  return bits;
}

std::string bits_to_text(const std::vector<int>& bits) {
  std::string s;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i) s.push_back(' ');
    s.push_back(bits[i] ? '1' : '0');
  }
  return s;
}

ClientBitSource::ClientBitSource(ModelClient& client, std::string prompt)
    : client_(client), prefix_(std::move(prompt) + " " + bits_to_text(fixed_bit_sequence())) {}

BitCounts ClientBitSource::draw(const std::vector<int>& context, std::size_t k, std::uint64_t seed) {
  BitCounts out;
  std::string prompt = prefix_;
  if (!context.empty()) prompt += " " + bits_to_text(context);
  for (std::size_t i = 0; i < k; ++i) {
    CompletionRequest req;
    req.prompt = prompt;
    req.max_tokens = 1;
    req.seed = mix_seed(seed, i);
    auto bit = parse_bit(client_.complete(req).text);
    if (!bit)
      ++out.invalid;
    else if (*bit == 0)
      ++out.zeros;
    else
      ++out.ones;
  }
  return out;
}

namespace {
BitCounts binomial_counts(std::size_t k, double p0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::binomial_distribution<std::size_t> dist(k, std::clamp(p0, 0.0, 1.0));
  BitCounts c;
  c.zeros = dist(rng);
  c.ones = k - c.zeros;
  return c;
}

std::uint64_t bits_hash(const std::vector<int>& bits, std::uint64_t key) {
  std::uint64_t h = splitmix64(key);
  for (int b : bits) h = mix_seed(h, static_cast<std::uint64_t>(b));
  return mix_seed(h, bits.size());
}
}  // namespace

BitCounts FairBitSource::draw(const std::vector<int>&, std::size_t k, std::uint64_t seed) {
  return binomial_counts(k, 0.5, seed);
}

KeyedBiasBitSource::KeyedBiasBitSource(double bias, double fraction, std::uint64_t key)
    : bias_(bias), fraction_(fraction), key_(key) {
  if (!(fraction_ >= 0.0 && fraction_ <= 1.0)) throw ArgumentError("fraction must lie in [0, 1]");
}

BitCounts KeyedBiasBitSource::draw(const std::vector<int>& context, std::size_t k,
                                   std::uint64_t seed) {
  bool biased = to_unit(bits_hash(context, key_)) < fraction_;
  return binomial_counts(k, 0.5 + (biased ? bias_ : 0.0), seed);
}

BitCounts OneContextBiasBitSource::draw(const std::vector<int>& context, std::size_t k,
                                        std::uint64_t seed) {
  if (!used_) {
    used_ = true;
    biased_ = context;
  }
  return binomial_counts(k, 0.5 + (context == biased_ ? bias_ : 0.0), seed);
}

DetectionReport bit_bias_probe(BitSource& source, const ChernoffBudget& budget,
                               const BitProbeOptions& opts) {
  if (budget.m < 1 || budget.k < 1 || !(budget.q > 0.0 && budget.q < 0.5))
    throw ArgumentError("invalid Chernoff budget");
  DetectionReport r;
  r.detector = DetectorKind::BitBias;
  r.metadata["m"] = budget.m;
  r.metadata["k"] = budget.k;
  r.metadata["q"] = budget.q;
  r.metadata["n"] = budget.n;
  r.metadata["seed"] = opts.seed;
  r.metadata["source"] = source.name();
  r.metadata["fixed_bits"] = bits_to_text(fixed_bit_sequence());

  SplitMix ctx_rng(mix_seed(opts.seed, 0xB175));
  std::vector<double> p_hat;
  std::size_t invalid = 0, fired = 0;
  double max_dev = 0.0;
  for (std::size_t c = 0; c < budget.m; ++c) {
    std::vector<int> context(budget.n);
    for (auto& b : context) b = static_cast<int>(ctx_rng.next() >> 63);
    BitCounts bc = source.draw(context, budget.k, mix_seed(opts.seed, c + 1));
    invalid += bc.invalid;
    std::size_t valid = bc.zeros + bc.ones;
    if (valid == 0) continue;
    double p = static_cast<double>(bc.zeros) / static_cast<double>(valid);
    p_hat.push_back(p);
    double dev = std::fabs(p - 0.5);
    max_dev = std::max(max_dev, dev);
    if (dev >= budget.q) ++fired;
  }
  const double total = static_cast<double>(budget.m) * static_cast<double>(budget.k);
  r.statistics["invalid_rate"] = static_cast<double>(invalid) / total;
  r.statistics["max_deviation"] = max_dev;
  r.statistics["q"] = budget.q;
  r.statistics["flagged_contexts"] = static_cast<double>(fired);

  constexpr int kBins = 20;
  std::vector<std::size_t> hist(kBins, 0);
  for (double p : p_hat) hist[std::min(kBins - 1, static_cast<int>(p * kBins))]++;
  r.observations["p_hat"] = p_hat;
  r.observations["p_hat_histogram"] = hist;

  if (static_cast<double>(invalid) > opts.max_invalid_fraction * total || p_hat.empty()) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "too many unparseable bit replies";
    return r;
  }
  r.verdict = fired > 0 ? Verdict::Watermarked : Verdict::Unmarked;
  return r;
}

std::vector<double> record_top5_bit_probabilities(ModelClient& client, std::size_t generations,
                                                  std::size_t tokens_per_generation,
                                                  std::uint64_t seed) {
  if (client.capabilities().top_k_logprobs < 2)
    throw CapabilityError("recording bit probabilities needs top-k logprobs");
  std::vector<double> out;
  const std::string prompt = std::string(kBitPrompt) + " " + bits_to_text(fixed_bit_sequence());
  for (std::size_t g = 0; g < generations; ++g) {
    CompletionRequest req;
    req.prompt = prompt;
    req.max_tokens = tokens_per_generation;
    req.logprobs = 5;
    req.seed = mix_seed(seed, g);
    Completion c = client.complete(req);
    for (const auto& top : c.top_logprobs)
      if (auto p = bit_probability_from_top(top)) out.push_back(*p);
  }
  return out;
}

}  // namespace wmid
