#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "wmid/client/corpus.hpp"
#include "wmid/client/http_client.hpp"
#include "wmid/client/local_client.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/core/sampling.hpp"
#include "wmid/detectors/bit_bias.hpp"
#include "wmid/detectors/delta_amplification.hpp"
#include "wmid/detectors/determinism.hpp"
#include "wmid/detectors/mean_adjacent.hpp"
#include "wmid/detectors/rng_divergence.hpp"
#include "wmid/error.hpp"
#include "wmid/monitor/monitor.hpp"
#include "wmid/monitor/report_writer.hpp"
#include "wmid/monitor/sim_server.hpp"
#include "wmid/monitor/sweep.hpp"
#include "wmid/stats/chernoff.hpp"
#include "wmid/stats/inequality.hpp"
#include "wmid/util/config_file.hpp"

using namespace wmid;
using nlohmann::json;

namespace {

struct TargetOpts {
  std::string url, model, auth_env, config, sim;
  std::uint64_t sim_seed = 0;

  bool given() const { return !url.empty() || !config.empty() || !sim.empty(); }

  Target resolve(const char* what) const {
    int n = !url.empty() + !config.empty() + !sim.empty();
    if (n != 1) throw ArgumentError(std::string("give exactly one ") + what + " source");
    Target t;
    if (!sim.empty()) {
      t.local = load_simulation_config(sim);
      t.local_seed = sim_seed;
      return t;
    }
    EndpointConfig e;
    if (!config.empty()) e = endpoint_from_json(load_config_file(config));
    if (!url.empty()) e.base_url = url;
    if (!model.empty()) e.model = model;
    if (!auth_env.empty()) e.auth_env = auth_env;
    e.validate();
    t.endpoint = e;
    return t;
  }
};

void add_target(CLI::App* app, TargetOpts& o) {
  app->add_option("--endpoint", o.url, "Base URL of a completions endpoint");
  app->add_option("--model", o.model, "Model name sent with each request");
  app->add_option("--auth-env", o.auth_env, "Environment variable holding a bearer token");
  app->add_option("--endpoint-config", o.config, "Endpoint config file (JSON or TOML)");
  app->add_option("--sim", o.sim, "Probe an in-process synthetic model from a config file");
  app->add_option("--sim-seed", o.sim_seed, "Sampling seed of the in-process model");
}

void add_reference(CLI::App* app, TargetOpts& o) {
  app->add_option("--reference", o.url, "Base URL of an unmarked reference endpoint");
  app->add_option("--reference-config", o.config, "Reference endpoint config file");
  app->add_option("--reference-sim", o.sim, "Reference in-process synthetic model config");
}

int verdict_exit(const DetectionReport& r) {
  if (r.verdict == Verdict::Watermarked) return kExitWatermarked;
  if (r.verdict == Verdict::Inconclusive && r.metadata.value("error_kind", std::string{}) == "transport")
    return kExitTransport;
  return kExitClean;
}

void emit(const DetectionReport& r, const std::string& out, DetectorKind d, const std::string& model_id,
          const json& inputs) {
  Snapshot s = make_snapshot(model_id, r, inputs);
  s.detector = d;
  std::cout << summary_text({s});
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    f << s.to_json().dump(2) << "\n";
  }
}

// Catches client failures so they produce an Inconclusive report.
template <class F>
DetectionReport guarded(DetectorKind d, F&& f) {
  try {
    return f();
  } catch (const TransportError& e) {
    auto r = inconclusive(d, e.what());
    r.metadata["error_kind"] = "transport";
    return r;
  } catch (const ProbeError& e) {
    auto r = inconclusive(d, e.what());
    r.metadata["error_kind"] = "transport";
    return r;
  }
}

std::vector<double> parse_range(const std::string& s) {
  std::vector<double> out;
  auto dots = s.find("..");
  if (dots != std::string::npos) {
    int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
    if (b < a) throw ArgumentError("empty delta range " + s);
    for (int d = a; d <= b; ++d) out.push_back(d);
    return out;
  }
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
  if (out.empty()) throw ArgumentError("empty delta list");
  return out;
}

std::vector<PromptCorpus> load_corpora(const std::vector<std::string>& files) {
  if (files.empty()) return bundled_corpora();
  std::vector<PromptCorpus> out;
  for (const auto& f : files) out.push_back(load_corpus(f));
  return out;
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermark identification toolkit"};
  app.set_version_flag("--version", WMID_VERSION);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Serve a synthetic model over the completions protocol");
  std::string sim_host = "127.0.0.1", sim_config, sim_key, sim_variant = "GreenListBoost",
              sim_model_id = "synthetic";
  int sim_port = 8000;
  std::uint64_t sim_seed = 0;
  std::optional<double> sim_gamma, sim_delta;
  std::optional<std::size_t> sim_vocab, sim_window;
  std::optional<double> sim_skew;
  std::optional<std::uint64_t> sim_model_seed;
  sim->add_option("--host", sim_host);
  sim->add_option("--port", sim_port, "0 picks a free port");
  sim->add_option("--config", sim_config, "Simulation config file (JSON or TOML)");
  sim->add_option("--gamma", sim_gamma, "Green-list fraction; 0 disables the watermark");
  sim->add_option("--delta", sim_delta, "Green-list boost; 0 disables the watermark");
  sim->add_option("--window", sim_window, "Context tokens hashed into the green list");
  sim->add_option("--key", sim_key, "Watermark key, hex");
  sim->add_option("--variant", sim_variant, "GreenListBoost or PrfDeterministic");
  sim->add_option("--vocab", sim_vocab);
  sim->add_option("--skew", sim_skew);
  sim->add_option("--model-seed", sim_model_seed);
  sim->add_option("--seed", sim_seed, "Sampling seed");
  sim->add_option("--model-id", sim_model_id);

  // probe
  auto* probe = app.add_subcommand("probe", "Run one detector against a model");
  probe->require_subcommand(1);
  std::string out_file;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t parallel = 4;

  TargetOpts rng_t, rng_ref;
  std::size_t rng_trials = 30, rng_samples = 1000;
  std::string rng_prompt = kRngPrompt;
  auto* p_rng = probe->add_subcommand("rng", "RNG-divergence suite (KS test against a reference)");
  add_target(p_rng, rng_t);
  add_reference(p_rng, rng_ref);
  p_rng->add_option("--trials", rng_trials);
  p_rng->add_option("--samples", rng_samples);
  p_rng->add_option("--prompt", rng_prompt);

  TargetOpts dip_t;
  std::size_t dip_prompts = 140, dip_bootstrap = kDefaultBootstrap;
  std::vector<std::string> dip_corpora;
  std::vector<double> dip_shares;
  std::string dip_suffix = kStorySuffix;
  auto* p_dip = probe->add_subcommand("dip", "delta-amplification dip test over prompt prefixes");
  add_target(p_dip, dip_t);
  p_dip->add_option("--prompts", dip_prompts);
  p_dip->add_option("--bootstrap", dip_bootstrap);
  p_dip->add_option("--corpus", dip_corpora, "Prefix corpus files (default: bundled)");
  p_dip->add_option("--shares", dip_shares, "Share of each corpus");
  p_dip->add_option("--suffix", dip_suffix);

  TargetOpts gini_t;
  std::string gini_prompt = kDisposablePrompt;
  std::size_t gini_samples = 2000;
  auto* p_gini = probe->add_subcommand("gini", "Lorenz curve and Gini coefficient of the next-token distribution");
  add_target(p_gini, gini_t);
  p_gini->add_option("--prompt", gini_prompt);
  p_gini->add_option("--samples", gini_samples, "Generations used when the endpoint exposes no probabilities");

  TargetOpts gap_t, gap_ref;
  std::size_t gap_prompts = 8;
  double gap_threshold = kDefaultGapThreshold;
  auto* p_gap = probe->add_subcommand("gap", "Mean-adjacent index and band-gap drift against a reference");
  add_target(p_gap, gap_t);
  add_reference(p_gap, gap_ref);
  p_gap->add_option("--prompts", gap_prompts);
  p_gap->add_option("--threshold", gap_threshold);

  TargetOpts bits_t;
  double bits_p = 0.5, bits_conf = 0.1;
  std::size_t bits_n = 1;
  auto* p_bits = probe->add_subcommand("bits", "Random-bit bias distinguisher");
  add_target(p_bits, bits_t);
  p_bits->add_option("--p", bits_p, "Watermark strength assumed by the budget");
  p_bits->add_option("--n", bits_n, "Context length in bits");
  p_bits->add_option("--confidence", bits_conf, "Error probability of the test");

  TargetOpts det_t;
  std::string det_prompt = "Tell me about the history of bridges.";
  DeterminismOptions det_opts;
  auto* p_det = probe->add_subcommand("determinism", "Repeat a prompt and look for PRF-deterministic sampling");
  add_target(p_det, det_t);
  p_det->add_option("--prompt", det_prompt);
  p_det->add_option("--repeats", det_opts.repeats);
  p_det->add_option("--gen-len", det_opts.gen_len);
  p_det->add_option("--temperature", det_opts.temperature);

  for (auto* sc : {p_rng, p_dip, p_gini, p_gap, p_bits, p_det}) {
    sc->add_option("--out", out_file, "Write the snapshot JSON here");
    sc->add_option("--seed", seed);
    sc->add_option("--alpha", alpha);
    sc->add_option("--parallel", parallel);
  }

  // sweep
  auto* sweep = app.add_subcommand("sweep", "delta sweep of the dip test on a synthetic model");
  std::string sw_delta = "0..10", sw_csv;
  SweepOptions sw;
  std::vector<std::string> sw_corpora;
  sweep->add_option("--delta", sw_delta, "Range a..b or comma list");
  sweep->add_option("--gamma", sw.gamma);
  sweep->add_option("--prompts", sw.prompts);
  sweep->add_option("--seed", sw.seed);
  sweep->add_option("--model-seed", sw.model.seed);
  sweep->add_option("--vocab", sw.model.vocab_size);
  sweep->add_option("--sigma", sw.model.context_sensitivity, "Per-prompt logit noise");
  sweep->add_option("--bootstrap", sw.bootstrap);
  sweep->add_option("--corpus", sw_corpora);
  sweep->add_option("--shares", sw.shares);
  sweep->add_option("--csv", sw_csv, "Also write the table as CSV");

  // monitor
  auto* mon = app.add_subcommand("monitor", "Run a monitoring plan periodically");
  std::string mon_plan;
  bool mon_once = false;
  std::size_t mon_iterations = 0;
  mon->add_option("--plan", mon_plan, "Plan file (JSON or TOML)")->required();
  mon->add_flag("--once", mon_once, "Single run");
  mon->add_option("--iterations", mon_iterations, "Stop after this many runs (0: forever)");

  // report
  auto* rep = app.add_subcommand("report", "Write summary, JSON and plot CSVs from snapshots");
  std::string rep_in, rep_out = "wmid-report";
  rep->add_option("--input", rep_in, "snapshots.jsonl or report.json")->required();
  rep->add_option("--out", rep_out);

  // diff
  auto* dif = app.add_subcommand("diff", "Time series of one detector against its earliest snapshot");
  std::string dif_in, dif_det = "RngDivergence";
  double dif_alpha = 0.05, dif_gap = kDefaultGapThreshold;
  dif->add_option("--input", dif_in)->required();
  dif->add_option("--detector", dif_det);
  dif->add_option("--alpha", dif_alpha);
  dif->add_option("--gap-threshold", dif_gap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) {
      SimulationConfig cfg;
      if (!sim_config.empty()) cfg = load_simulation_config(sim_config);
      if (sim_vocab) cfg.model.vocab_size = *sim_vocab;
      if (sim_skew) cfg.model.skew = *sim_skew;
      if (sim_model_seed) cfg.model.seed = *sim_model_seed;
      const bool touched = sim_gamma || sim_delta || !sim_key.empty() || sim_window ||
                           sim->count("--variant") > 0;
      if (touched) {
        WatermarkSpec w = cfg.watermark.value_or(WatermarkSpec{});
        if (sim_gamma) w.gamma = *sim_gamma;
        if (sim_delta) w.delta = *sim_delta;
        if (sim_window) w.window_k = *sim_window;
        if (!sim_key.empty()) w.key = hex_decode(sim_key);
        w.variant = parse_variant(sim_variant);
        w.validate();
        const bool off = w.variant == WatermarkVariant::GreenListBoost && (w.gamma == 0.0 || w.delta == 0.0);
        cfg.watermark = off ? std::nullopt : std::optional<WatermarkSpec>(w);
      }
      cfg.model.validate();
      SimulationServer server(cfg, sim_seed, sim_model_id);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      int port = server.start(sim_host, sim_port);
      std::cout << "serving " << sim_model_id << " ("
                << (cfg.watermark ? to_string(cfg.watermark->variant) : std::string("unmarked"))
                << ") on http://" << sim_host << ":" << port << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return kExitClean;
    }

    if (*probe) {
      if (*p_rng) {
        Target t = rng_t.resolve("target");
        auto client = make_client(t);
        std::unique_ptr<ModelClient> ref;
        if (rng_ref.given()) ref = make_client(rng_ref.resolve("reference"));
        RngSuiteOptions o;
        o.trials = rng_trials;
        o.alpha = alpha;
        o.probe.n = rng_samples;
        o.probe.prompt = rng_prompt;
        o.probe.seed = seed;
        o.probe.parallelism = parallel;
        json inputs{{"trials", rng_trials}, {"n", rng_samples}, {"seed", seed},
                    {"prompt_sha256", sha256_hex(rng_prompt)}};
        if (!ref) std::cerr << "no reference given; comparing the target against itself\n";
        auto r = guarded(DetectorKind::RngDivergence,
                         [&] { return rng_divergence_suite(ref ? *ref : *client, *client, o); });
        emit(r, out_file, DetectorKind::RngDivergence, client->model_id(), inputs);
        return verdict_exit(r);
      }
      if (*p_dip) {
        auto client = make_client(dip_t.resolve("target"));
        auto corpora = load_corpora(dip_corpora);
        auto shares = dip_shares;
        if (shares.empty()) shares.assign(corpora.size(), 1.0);
        auto sel = sample_prefixes(corpora, shares, dip_prompts, seed);
        std::vector<std::string> prefixes;
        json ids = json::array();
        for (const auto& e : sel.entries) {
          prefixes.push_back(e.text);
          ids.push_back(e.id);
        }
        json inputs{{"prompt_ids", ids}, {"seed", seed}, {"bootstrap", dip_bootstrap}};
        auto r = guarded(DetectorKind::DeltaAmplification, [&] {
          AveragedLogits avg = delta_amplify(*client, prefixes, dip_suffix, parallel);
          DeltaAmpOptions o;
          o.alpha = alpha;
          o.bootstrap = dip_bootstrap;
          return delta_amp_detect(avg, o);
        });
        emit(r, out_file, DetectorKind::DeltaAmplification, client->model_id(), inputs);
        return verdict_exit(r);
      }
      if (*p_gini) {
        auto client = make_client(gini_t.resolve("target"));
        Capabilities caps = client->capabilities();
        std::vector<double> probs;
        std::string source;
        CompletionRequest req;
        req.prompt = gini_prompt;
        req.max_tokens = 1;
        if (caps.has_exact_logits) {
          req.want_logits = true;
          probs = softmax(LogitVector(*client->complete(req).first_logits), 1.0);
          source = "logits";
        } else if (caps.top_k_logprobs > 0) {
          req.logprobs = caps.top_k_logprobs;
          auto c = client->complete(req);
          if (c.top_logprobs.empty()) throw ProtocolError("no top logprobs returned", "");
          for (const auto& [tok, lp] : c.top_logprobs.front()) probs.push_back(std::exp(lp));
          source = "top_logprobs";
        } else {
          std::map<std::string, double> counts;
          for (std::size_t i = 0; i < gini_samples; ++i) {
            req.seed = mix_seed(seed, i);
            counts[client->complete(req).text] += 1.0;
          }
          for (const auto& [k, v] : counts) probs.push_back(v);
          source = "sampling";
        }
        LorenzCurve lc = lorenz(probs);
        double g = gini(probs);
        std::printf("gini %.6f over %zu outcomes (%s)\n", g, probs.size(), source.c_str());
        if (!out_file.empty()) {
          std::ofstream f(out_file);
          if (!f) throw IoError("cannot write " + out_file);
          f << "rank,population_share,cumulative_share\n";
          for (std::size_t r = 0; r < lc.cumulative.size(); ++r)
            f << r + 1 << "," << static_cast<double>(r + 1) / static_cast<double>(lc.cumulative.size()) << ","
              << lc.cumulative[r] << "\n";
        }
        return kExitClean;
      }
      if (*p_gap) {
        auto client = make_client(gap_t.resolve("target"));
        auto ref = make_client(gap_ref.resolve("reference"));
        auto sel = sample_prefixes(bundled_corpora(), {1.0, 1.0}, gap_prompts, seed);
        std::vector<PromptRef> prompts;
        json ids = json::array();
        for (const auto& e : sel.entries) {
          prompts.push_back({e.id, e.text});
          ids.push_back(e.id);
        }
        auto r = guarded(DetectorKind::MeanAdjacent, [&] {
          return mean_adjacent_drift(collect_logit_snapshots(*ref, prompts),
                                     collect_logit_snapshots(*client, prompts), gap_threshold);
        });
        emit(r, out_file, DetectorKind::MeanAdjacent, client->model_id(), json{{"prompt_ids", ids}});
        return verdict_exit(r);
      }
      if (*p_bits) {
        auto client = make_client(bits_t.resolve("target"));
        ChernoffBudget b = chernoff_budget(bits_p, bits_conf, bits_n);
        std::cerr << "budget: m=" << b.m << " contexts, k=" << b.k << " draws, q=" << b.q << "\n";
        ClientBitSource source(*client);
        BitProbeOptions o;
        o.seed = seed;
        auto r = guarded(DetectorKind::BitBias, [&] { return bit_bias_probe(source, b, o); });
        emit(r, out_file, DetectorKind::BitBias, client->model_id(),
             json{{"p", bits_p}, {"n", bits_n}, {"confidence", bits_conf}, {"seed", seed}});
        return verdict_exit(r);
      }
      if (*p_det) {
        auto client = make_client(det_t.resolve("target"));
        auto r = guarded(DetectorKind::Determinism, [&] { return determinism_probe(*client, det_prompt, det_opts); });
        emit(r, out_file, DetectorKind::Determinism, client->model_id(),
             json{{"repeats", det_opts.repeats}, {"gen_len", det_opts.gen_len},
                  {"prompt_sha256", sha256_hex(det_prompt)}});
        return verdict_exit(r);
      }
    }

    if (*sweep) {
      sw.deltas = parse_range(sw_delta);
      sw.corpora = load_corpora(sw_corpora);
      auto rows = delta_sweep(sw);
      std::printf("%6s %12s %10s\n", "delta", "p", "dip");
      for (const auto& r : rows) std::printf("%6g %12.4g %10.5f\n", r.delta, r.p, r.dip);
      if (!sw_csv.empty()) {
        std::ofstream f(sw_csv);
        if (!f) throw IoError("cannot write " + sw_csv);
        f << "delta,p,dip\n";
        for (const auto& r : rows) f << r.delta << "," << r.p << "," << r.dip << "\n";
      }
      return kExitClean;
    }

    if (*mon) {
      MonitorPlan plan = load_plan(mon_plan);
      const std::size_t runs = mon_once ? 1 : mon_iterations;
      int rc = kExitClean;
      for (std::size_t i = 0; runs == 0 || i < runs; ++i) {
        if (i > 0) std::this_thread::sleep_for(std::chrono::duration<double>(plan.interval_s));
        RunResult r = run_once(plan);
        std::cout << summary_text(r.snapshots) << std::flush;
        rc = r.exit_code;
        if (rc == kExitWatermarked && runs == 0) std::cout << "ALERT: watermark flagged" << std::endl;
      }
      return rc;
    }

    if (*rep) {
      auto snaps = read_snapshots(rep_in);
      for (const auto& f : write_report(snaps, rep_out)) std::cout << f.string() << "\n";
      return kExitClean;
    }

    if (*dif) {
      auto snaps = read_snapshots(dif_in);
      DriftReport d = diff(snaps, parse_detector(dif_det), dif_alpha, dif_gap);
      std::cout << d.to_json().dump(2) << "\n";
      return d.first_flag ? kExitWatermarked : kExitClean;
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitClean;
}
