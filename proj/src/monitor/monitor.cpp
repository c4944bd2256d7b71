#include "wmid/monitor/monitor.hpp"

#include <algorithm>

#include "wmid/client/corpus.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/detectors/bit_bias.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/detectors/determinism.hpp"
#include "wmid/detectors/mean_adjacent.hpp"
#include "wmid/detectors/rng_divergence.hpp"
#include "wmid/error.hpp"
#include "wmid/stats/chernoff.hpp"

namespace wmid {

using nlohmann::json;

namespace {

DetectionReport failed(DetectorKind d, const std::string& kind, const std::string& what) {
  DetectionReport r = inconclusive(d, what);
  r.metadata["error_kind"] = kind;
  return r;
}

std::vector<PromptCorpus> plan_corpora(const MonitorPlan& plan) {
  std::vector<PromptCorpus> out;
  if (plan.corpora.empty()) {
    for (const char* f : {"archive.txt", "webtext.txt"}) out.push_back(load_corpus(bundled_corpus_dir() / f));
  } else {
    for (const auto& p : plan.corpora) out.push_back(load_corpus(p));
  }
  return out;
}

PrefixSelection plan_prefixes(const MonitorPlan& plan, std::size_t M, std::uint64_t stream) {
  auto corpora = plan_corpora(plan);
  std::vector<double> shares = plan.shares;
  if (shares.empty()) shares.assign(corpora.size(), 1.0);
  return sample_prefixes(corpora, shares, M, mix_seed(plan.seed, stream));
}

// Earliest stored snapshot of this detector and model, if any.
const Snapshot* earliest(const std::vector<Snapshot>& history, DetectorKind d,
                         const std::string& model_id, const char* obs_key) {
  const Snapshot* best = nullptr;
  for (const auto& s : history) {
    if (s.detector != d || s.model_id != model_id) continue;
    if (!s.report.observations.contains(obs_key)) continue;
    if (!best || s.timestamp < best->timestamp) best = &s;
  }
  return best;
}

LogitSnapshotSet set_from_json(const json& j) {
  LogitSnapshotSet s;
  s.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
  for (const auto& v : j.at("logits")) s.logits.emplace_back(v.get<std::vector<double>>());
  return s;
}

json set_to_json(const LogitSnapshotSet& s) {
  json logits = json::array();
  for (const auto& l : s.logits) logits.push_back(l.values);
  return json{{"prompt_ids", s.prompt_ids}, {"logits", logits}};
}

DetectionReport run_rng(const MonitorPlan& plan, ModelClient& target, ModelClient* reference,
                        const std::vector<Snapshot>& history, json& inputs) {
  RngSuiteOptions o;
  o.trials = plan.budgets.rng_trials;
  o.alpha = plan.budgets.alpha;
  o.probe.n = plan.budgets.rng_samples;
  o.probe.seed = plan.seed;
  o.probe.parallelism = plan.parallelism;
  inputs["trials"] = o.trials;
  inputs["n"] = o.probe.n;
  inputs["prompt_sha256"] = sha256_hex(o.probe.prompt);
  if (reference) {
    inputs["baseline"] = "reference:" + reference->model_id();
    return rng_divergence_suite(*reference, target, o);
  }
  if (const Snapshot* base = earliest(history, DetectorKind::RngDivergence, target.model_id(), "candidate")) {
    inputs["baseline"] = "snapshot:" + base->timestamp;
    auto ref = EmpiricalDistribution::from_json(base->report.observations["candidate"]);
    DetectionReport r = rng_divergence_suite(ref, target, o);
    r.metadata["baseline"] = base->timestamp;
    return r;
  }
  inputs["baseline"] = "none";
  RngProbeOptions p = o.probe;
  p.seed = mix_seed(o.probe.seed, 1);
  EmpiricalDistribution d = collect_rng_distribution(target, p);
  DetectionReport r = inconclusive(DetectorKind::RngDivergence, "no baseline yet; stored as baseline");
  r.observations["candidate"] = d.to_json();
  r.statistics["invalid_rate"] = static_cast<double>(d.invalid_count) / static_cast<double>(p.n);
  return r;
}

DetectionReport run_gap(const MonitorPlan& plan, ModelClient& target, ModelClient* reference,
                        const std::vector<Snapshot>& history, json& inputs) {
  auto sel = plan_prefixes(plan, plan.budgets.gap_prompts, 0x6A9);
  std::vector<PromptRef> prompts;
  for (const auto& e : sel.entries) prompts.push_back({e.id, e.text});
  json ids = json::array();
  for (const auto& p : prompts) ids.push_back(p.id);
  inputs["prompt_ids"] = ids;
  LogitSnapshotSet now = collect_logit_snapshots(target, prompts);

  std::optional<LogitSnapshotSet> old;
  if (reference) {
    inputs["baseline"] = "reference:" + reference->model_id();
    old = collect_logit_snapshots(*reference, prompts);
  } else if (const Snapshot* base = earliest(history, DetectorKind::MeanAdjacent, target.model_id(),
                                             "snapshot_logits")) {
    auto s = set_from_json(base->report.observations["snapshot_logits"]);
    if (s.prompt_ids == now.prompt_ids) {
      inputs["baseline"] = "snapshot:" + base->timestamp;
      old = std::move(s);
    }
  }
  DetectionReport r;
  if (old) {
    r = mean_adjacent_drift(*old, now, plan.budgets.gap_threshold);
  } else {
    inputs["baseline"] = "none";
    r = inconclusive(DetectorKind::MeanAdjacent, "no baseline yet; stored as baseline");
    double idx = 0, gap = 0;
    for (const auto& l : now.logits) {
      idx += mean_adjacent_index(l);
      gap += max_adjacent_gap(l);
    }
    r.statistics["index_new"] = idx / static_cast<double>(now.logits.size());
    r.statistics["max_gap_new"] = gap / static_cast<double>(now.logits.size());
    r.observations["logits"] = now.logits.front().values;
  }
  r.observations["snapshot_logits"] = set_to_json(now);
  return r;
}

DetectionReport run_dip(const MonitorPlan& plan, ModelClient& target, json& inputs) {
  auto sel = plan_prefixes(plan, plan.budgets.dip_prompts, 0xD1B);
  std::vector<std::string> prefixes;
  json ids = json::array();
  for (const auto& e : sel.entries) {
    prefixes.push_back(e.text);
    ids.push_back(e.id);
  }
  inputs["prompt_ids"] = ids;
  inputs["bootstrap"] = plan.budgets.dip_bootstrap;
  AveragedLogits avg = delta_amplify(target, prefixes, kStorySuffix, plan.parallelism);
  DeltaAmpOptions o;
  o.alpha = plan.budgets.alpha;
  o.bootstrap = plan.budgets.dip_bootstrap;
  DetectionReport r = delta_amp_detect(avg, o);
  r.metadata["prompt_ids"] = ids;
  r.metadata["with_replacement"] = sel.with_replacement;
  return r;
}

DetectionReport run_determinism(const MonitorPlan& plan, ModelClient& target, json& inputs) {
  DeterminismOptions o;
  o.repeats = plan.budgets.determinism_repeats;
  o.gen_len = plan.budgets.determinism_gen_len;
  inputs["repeats"] = o.repeats;
  inputs["gen_len"] = o.gen_len;
  inputs["prompt_sha256"] = sha256_hex(plan.prompt_determinism);
  return determinism_probe(target, plan.prompt_determinism, o);
}

DetectionReport run_bits(const MonitorPlan& plan, ModelClient& target, json& inputs) {
  const auto& b = plan.budgets;
  ChernoffBudget budget = chernoff_budget(b.bits_p, b.bits_confidence, b.bits_n);
  inputs["p"] = b.bits_p;
  inputs["n"] = b.bits_n;
  inputs["confidence"] = b.bits_confidence;
  inputs["m"] = budget.m;
  inputs["k"] = budget.k;
  ClientBitSource source(target);
  BitProbeOptions o;
  o.seed = plan.seed;
  return bit_bias_probe(source, budget, o);
}

}  // namespace

int exit_code_for(const std::vector<Snapshot>& snapshots) {
  bool any_transport = false, all_inconclusive = !snapshots.empty();
  for (const auto& s : snapshots) {
    if (s.report.verdict == Verdict::Watermarked) return kExitWatermarked;
    if (s.report.verdict != Verdict::Inconclusive) all_inconclusive = false;
    if (s.report.metadata.value("error_kind", std::string{}) == "transport") any_transport = true;
  }
  return all_inconclusive && any_transport ? kExitTransport : kExitClean;
}

RunResult run_once(const MonitorPlan& plan, ModelClient& target, ModelClient* reference) {
  plan.validate();
  SnapshotStore store(plan.snapshot_path());
  const std::vector<Snapshot> history = store.load();
  RunResult out;
  std::string model_id = target.model_id();
  for (DetectorKind d : plan.detectors) {
    json inputs{{"detector", to_string(d)}, {"model_id", model_id}, {"seed", plan.seed}};
    DetectionReport r;
    try {
      switch (d) {
        case DetectorKind::RngDivergence: r = run_rng(plan, target, reference, history, inputs); break;
        case DetectorKind::MeanAdjacent: r = run_gap(plan, target, reference, history, inputs); break;
        case DetectorKind::DeltaAmplification: r = run_dip(plan, target, inputs); break;
        case DetectorKind::Determinism: r = run_determinism(plan, target, inputs); break;
        case DetectorKind::BitBias: r = run_bits(plan, target, inputs); break;
      }
    } catch (const TransportError& e) {
      r = failed(d, "transport", e.what());
    } catch (const ProbeError& e) {
      r = failed(d, "transport", e.what());
    } catch (const CapabilityError& e) {
      r = failed(d, "capability", e.what());
    } catch (const ProtocolError& e) {
      r = failed(d, "protocol", e.what());
      r.metadata["raw_payload"] = e.raw_payload().substr(0, 4096);
    } catch (const std::exception& e) {
      r = failed(d, "error", e.what());
    }
    r.detector = d;
    Snapshot s = make_snapshot(model_id, std::move(r), std::move(inputs));
    store.append(s);
    out.snapshots.push_back(std::move(s));
  }
  out.exit_code = exit_code_for(out.snapshots);
  return out;
}

RunResult run_once(const MonitorPlan& plan) {
  plan.validate();
  auto target = make_client(plan.target);
  std::unique_ptr<ModelClient> reference;
  if (plan.reference) reference = make_client(*plan.reference);
  return run_once(plan, *target, reference.get());
}

json DriftReport::to_json() const {
  json series_j = json::array();
  for (const auto& p : series)
    series_j.push_back({{"timestamp", p.timestamp}, {"statistics", p.statistics}, {"fired", p.fired}});
  json j{{"detector", to_string(detector)}, {"series", series_j}};
  j["first_flag"] = first_flag ? json(*first_flag) : json(nullptr);
  return j;
}

DriftReport diff(const std::vector<Snapshot>& history, DetectorKind detector, double alpha,
                 double gap_threshold) {
  std::vector<const Snapshot*> hs;
  for (const auto& s : history)
    if (s.detector == detector) hs.push_back(&s);
  if (hs.size() < 2) throw ArgumentError("diff needs at least 2 snapshots of " + to_string(detector));
  std::stable_sort(hs.begin(), hs.end(),
                   [](const Snapshot* a, const Snapshot* b) { return a->timestamp < b->timestamp; });
  DriftReport out;
  out.detector = detector;
  const Snapshot& base = *hs.front();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const Snapshot& s = *hs[i];
    DriftPoint p;
    p.timestamp = s.timestamp;
    p.statistics = s.report.statistics;
    switch (detector) {
      case DetectorKind::RngDivergence: {
        const auto& bo = base.report.observations;
        const auto& so = s.report.observations;
        if (bo.contains("candidate") && so.contains("candidate")) {
          auto a = EmpiricalDistribution::from_json(bo["candidate"]);
          auto b = EmpiricalDistribution::from_json(so["candidate"]);
          DetectionReport t = rng_divergence_test(a, b, alpha);
          for (const auto& [k, v] : t.statistics) p.statistics["baseline_" + k] = v;
          p.fired = i > 0 && t.verdict == Verdict::Watermarked;
        }
        // The suite average is far less noisy than a single KS draw.
        if (auto pm = s.report.statistics.find("p_mean"); pm != s.report.statistics.end())
          p.fired = i > 0 && pm->second < alpha;
        break;
      }
      case DetectorKind::MeanAdjacent: {
        auto g0 = base.report.statistics.find("max_gap_new");
        auto gi = s.report.statistics.find("max_gap_new");
        if (g0 != base.report.statistics.end() && gi != s.report.statistics.end()) {
          p.statistics["baseline_delta_max_gap"] = gi->second - g0->second;
          p.fired = gi->second - g0->second > gap_threshold;
        }
        break;
      }
      case DetectorKind::DeltaAmplification: {
        auto pv = s.report.statistics.find("p");
        p.fired = pv != s.report.statistics.end() && pv->second < alpha;
        break;
      }
      case DetectorKind::Determinism:
      case DetectorKind::BitBias:
        p.fired = s.report.verdict == Verdict::Watermarked;
        break;
    }
    if (p.fired && !out.first_flag) out.first_flag = i;
    out.series.push_back(std::move(p));
  }
  return out;
}

}  // namespace wmid
