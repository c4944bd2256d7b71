#include "wmid/detectors/rng_divergence.hpp"

#include <vector>

#include "wmid/core/prf.hpp"
#include "wmid/detectors/parallel.hpp"
#include "wmid/stats/ks.hpp"

namespace wmid {

namespace {
constexpr std::uint64_t kReferenceStream = 0x5EFE5E0CEULL;
}

EmpiricalDistribution collect_rng_distribution(ModelClient& client, const RngProbeOptions& opts) {
  if (opts.n < 1) throw ArgumentError("n must be at least 1");
  // 0 = not run, 1 = valid, 2 = invalid.
  std::vector<int> state(opts.n, 0);
  std::vector<long long> value(opts.n, 0);
  auto one = [&](std::size_t i) {
    CompletionRequest req;
    req.prompt = opts.prompt;
    req.max_tokens = opts.max_tokens;
    req.temperature = opts.temperature;
    req.seed = mix_seed(opts.seed, i);
    Completion c = client.complete(req);
    auto v = first_digit_run(c.text);
    if (v && *v >= 1 && *v <= 100) {
      value[i] = *v;
      state[i] = 1;
    } else {
      state[i] = 2;
    }
  };
  auto gather = [&] {
    EmpiricalDistribution d;
    for (std::size_t i = 0; i < opts.n; ++i) {
      if (state[i] == 1) d.add(value[i]);
      if (state[i] == 2) d.add_invalid();
    }
    return d;
  };
  try {
    parallel_for(opts.n, opts.parallelism, one);
  } catch (const Error& e) {
    throw ProbeError(std::string("RNG probe failed: ") + e.what(), gather());
  }
  return gather();
}

DetectionReport rng_divergence_test(const EmpiricalDistribution& reference,
                                    const EmpiricalDistribution& candidate, double alpha) {
  DetectionReport r;
  r.detector = DetectorKind::RngDivergence;
  r.metadata["reference_total"] = reference.total;
  r.metadata["candidate_total"] = candidate.total;
  r.metadata["reference_invalid"] = reference.invalid_count;
  r.metadata["candidate_invalid"] = candidate.invalid_count;
  r.metadata["alpha"] = alpha;
  if (reference.total < kMinValidSamples || candidate.total < kMinValidSamples) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "fewer than 30 valid samples";
    return r;
  }
  auto a = reference.expand();
  auto b = candidate.expand();
  double d = ks_statistic(a, b);
  auto decision = ks_reject(d, a.size(), b.size(), alpha);
  r.statistics["D"] = d;
  r.statistics["p"] = ks_p_value(d, a.size(), b.size());
  r.statistics["threshold"] = decision.threshold;
  r.verdict = decision.reject ? Verdict::Watermarked : Verdict::Unmarked;
  return r;
}

DetectionReport rng_divergence_suite(const EmpiricalDistribution& reference,
                                     ModelClient& candidate, const RngSuiteOptions& opts) {
  if (opts.trials < 1) throw ArgumentError("trials must be at least 1");
  DetectionReport r;
  r.detector = DetectorKind::RngDivergence;
  nlohmann::json pvals = nlohmann::json::array();
  double psum = 0.0, dsum = 0.0;
  std::size_t invalid = 0;
  EmpiricalDistribution first;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    RngProbeOptions p = opts.probe;
    p.seed = mix_seed(opts.probe.seed, t + 1);
    EmpiricalDistribution cand = collect_rng_distribution(candidate, p);
    if (t == 0) first = cand;
    invalid += cand.invalid_count;
    DetectionReport one = rng_divergence_test(reference, cand, opts.alpha);
    if (one.verdict == Verdict::Inconclusive) {
      r.verdict = Verdict::Inconclusive;
      r.metadata["reason"] = "trial " + std::to_string(t) + ": fewer than 30 valid samples";
      r.observations["reference"] = reference.to_json();
      r.observations["candidate"] = cand.to_json();
      return r;
    }
    psum += one.statistics["p"];
    dsum += one.statistics["D"];
    pvals.push_back(one.statistics["p"]);
  }
  const double trials = static_cast<double>(opts.trials);
  r.statistics["p_mean"] = psum / trials;
  r.statistics["D_mean"] = dsum / trials;
  r.statistics["threshold"] =
      ks_reject(0.0, reference.total, first.total, opts.alpha).threshold;
  r.statistics["invalid_rate"] =
      static_cast<double>(invalid) / (trials * static_cast<double>(opts.probe.n));
  r.verdict = r.statistics["p_mean"] < opts.alpha ? Verdict::Watermarked : Verdict::Unmarked;
  r.metadata["trials"] = opts.trials;
  r.metadata["samples"] = opts.probe.n;
  r.metadata["alpha"] = opts.alpha;
  r.metadata["seed"] = opts.probe.seed;
  r.metadata["prompt_sha256"] = sha256_hex(opts.probe.prompt);
  r.observations["reference"] = reference.to_json();
  r.observations["candidate"] = first.to_json();
  r.observations["p_values"] = pvals;
  return r;
}

DetectionReport rng_divergence_suite(ModelClient& reference, ModelClient& candidate,
                                     const RngSuiteOptions& opts) {
  RngProbeOptions p = opts.probe;
  p.seed = mix_seed(opts.probe.seed, kReferenceStream);
  EmpiricalDistribution ref = collect_rng_distribution(reference, p);
  return rng_divergence_suite(ref, candidate, opts);
}

}  // namespace wmid
