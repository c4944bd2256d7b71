#include "wmid/detectors/determinism.hpp"

#include <algorithm>
#include <cmath>

#include "wmid/error.hpp"

namespace wmid {

DetectionReport determinism_probe(ModelClient& client, const std::string& prompt,
                                  const DeterminismOptions& opts) {
  if (opts.repeats < 2) throw ArgumentError("repeats must be at least 2");
  if (!(opts.temperature > 0.0)) throw ArgumentError("temperature must be positive");
  DetectionReport r;
  r.detector = DetectorKind::Determinism;
  r.metadata["repeats"] = opts.repeats;
  r.metadata["gen_len"] = opts.gen_len;
  r.metadata["temperature"] = opts.temperature;

  // No seed: an honest sampler must be free to vary between repeats.
  // Remote replies carry tokens only with logprobs, so text is compared too.
  std::vector<std::pair<std::string, std::vector<std::string>>> outputs;
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < opts.repeats; ++i) {
    CompletionRequest req;
    req.prompt = prompt;
    req.max_tokens = opts.gen_len;
    req.temperature = opts.temperature;
    Completion c = client.complete(req);
    auto key = std::make_pair(c.text, std::move(c.tokens));
    if (std::find(outputs.begin(), outputs.end(), key) == outputs.end()) ++distinct;
    outputs.push_back(std::move(key));
  }
  r.statistics["distinct_outputs"] = static_cast<double>(distinct);
  nlohmann::json texts = nlohmann::json::array();
  for (const auto& o : outputs) texts.push_back(o.first);
  r.observations["outputs"] = texts;

  if (distinct > 1) {
    r.verdict = Verdict::Unmarked;
    return r;
  }

  Capabilities caps = client.capabilities();
  if (caps.top_k_logprobs == 0) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "identical outputs but no logprobs to rule out a degenerate model";
    return r;
  }
  CompletionRequest probe;
  probe.prompt = opts.disposable_prompt;
  probe.max_tokens = 1;
  probe.temperature = opts.temperature;
  probe.logprobs = std::min<std::size_t>(caps.top_k_logprobs, 5);
  Completion c = client.complete(probe);
  if (c.top_logprobs.empty() || c.top_logprobs.front().empty()) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "disposable prompt returned no logprobs";
    return r;
  }
  double top = -INFINITY;
  for (const auto& [tok, lp] : c.top_logprobs.front()) top = std::max(top, lp);
  double p_top = std::exp(top);
  r.statistics["disposable_top_prob"] = p_top;
  if (p_top >= opts.degenerate_threshold) {
    r.verdict = Verdict::Inconclusive;
    r.metadata["reason"] = "first-token distribution is degenerate";
    return r;
  }
  r.verdict = Verdict::Watermarked;
  return r;
}

}  // namespace wmid
