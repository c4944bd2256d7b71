#include "wmid/monitor/sweep.hpp"

#include "wmid/client/local_client.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/error.hpp"

namespace wmid {

std::vector<std::uint8_t> derived_key(std::uint64_t seed) {
  Digest d = sha256("wmid-key-" + std::to_string(seed));
  return std::vector<std::uint8_t>(d.begin(), d.begin() + 16);
}

std::vector<PromptCorpus> bundled_corpora() {
  return {load_corpus(bundled_corpus_dir() / "archive.txt"),
          load_corpus(bundled_corpus_dir() / "webtext.txt")};
}

std::vector<SweepRow> delta_sweep(const SweepOptions& opts) {
  if (opts.deltas.empty()) throw ArgumentError("no delta values");
  auto corpora = opts.corpora.empty() ? bundled_corpora() : opts.corpora;
  auto shares = opts.shares;
  if (shares.empty()) shares.assign(corpora.size(), 1.0);
  PrefixSelection sel = sample_prefixes(corpora, shares, opts.prompts, opts.seed);
  std::vector<std::string> prefixes;
  for (const auto& e : sel.entries) prefixes.push_back(e.text);

  auto model = std::make_shared<SyntheticModel>(opts.model);
  std::vector<SweepRow> rows;
  for (double delta : opts.deltas) {
    WatermarkSpec w;
    w.gamma = opts.gamma;
    w.delta = delta;
    w.key = opts.key.empty() ? derived_key(opts.seed) : opts.key;
    LocalClient client(model, w);
    AveragedLogits avg = delta_amplify(client, prefixes);
    DeltaAmpOptions o;
    o.bootstrap = opts.bootstrap;
    DetectionReport r = delta_amp_detect(avg, o);
    rows.push_back({delta, r.statistics.at("p"), r.statistics.at("dip")});
  }
  return rows;
}

}  // namespace wmid
