#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wmid/client/http_client.hpp"
#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"
#include "wmid/monitor/monitor.hpp"
#include "wmid/monitor/plan.hpp"
#include "wmid/monitor/report_writer.hpp"
#include "wmid/monitor/sim_server.hpp"
#include "wmid/monitor/snapshot.hpp"
#include "wmid/monitor/sweep.hpp"

using namespace wmid;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("wmid-unit-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string s;
  while (std::getline(in, s)) ++n;
  return n;
}

SimulationConfig sim(std::optional<WatermarkSpec> w = std::nullopt) {
  SimulationConfig c;
  c.watermark = std::move(w);
  return c;
}

WatermarkSpec green(double gamma, double delta) {
  WatermarkSpec w;
  w.gamma = gamma;
  w.delta = delta;
  w.key = derived_key(1);
  return w;
}

MonitorPlan local_plan(const fs::path& dir, std::set<DetectorKind> detectors, SimulationConfig cfg) {
  MonitorPlan p;
  p.interval_s = 1.0;
  p.detectors = std::move(detectors);
  Target t;
  t.local = cfg;
  p.target = t;
  p.output_dir = dir;
  p.budgets.rng_trials = 5;
  return p;
}

}  // namespace

TEST_CASE("determinism-only plan on a PRF model") {
  auto dir = fresh_dir("prf");
  WatermarkSpec w;
  w.variant = WatermarkVariant::PrfDeterministic;
  w.key = derived_key(2);
  auto plan = local_plan(dir, {DetectorKind::Determinism}, sim(w));
  auto r = run_once(plan);
  REQUIRE(r.snapshots.size() == 1);
  CHECK(r.snapshots[0].report.verdict == Verdict::Watermarked);
  CHECK(r.exit_code == kExitWatermarked);
  CHECK(read_snapshots(plan.snapshot_path()).size() == 1);
}

TEST_CASE("unreachable endpoint gives all inconclusive and exit 3") {
  auto dir = fresh_dir("unreachable");
  MonitorPlan plan;
  plan.interval_s = kMinRemoteIntervalS;
  plan.detectors = {DetectorKind::RngDivergence, DetectorKind::MeanAdjacent, DetectorKind::DeltaAmplification,
                    DetectorKind::Determinism, DetectorKind::BitBias};
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:9";
  e.timeout_s = 0.5;
  e.retry.max_attempts = 1;
  Target t;
  t.endpoint = e;
  plan.target = t;
  plan.output_dir = dir;
  auto r = run_once(plan);
  REQUIRE(r.snapshots.size() == 5);
  for (const auto& s : r.snapshots) {
    CHECK(s.report.verdict == Verdict::Inconclusive);
    CHECK(s.report.metadata.value("error_kind", "") == "transport");
  }
  CHECK(r.exit_code == kExitTransport);
}

TEST_CASE("exit code rules") {
  auto mk = [](Verdict v, const char* kind) {
    Snapshot s;
    s.report.verdict = v;
    if (kind) s.report.metadata["error_kind"] = kind;
    return s;
  };
  CHECK(exit_code_for({mk(Verdict::Unmarked, nullptr), mk(Verdict::Inconclusive, "transport")}) == kExitClean);
  CHECK(exit_code_for({mk(Verdict::Watermarked, nullptr), mk(Verdict::Inconclusive, "transport")}) ==
        kExitWatermarked);
  CHECK(exit_code_for({mk(Verdict::Inconclusive, "transport"), mk(Verdict::Inconclusive, nullptr)}) ==
        kExitTransport);
  CHECK(exit_code_for({mk(Verdict::Inconclusive, nullptr)}) == kExitClean);
}

TEST_CASE("plan validation and parsing") {
  MonitorPlan p;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p.detectors = {DetectorKind::Determinism};
  EndpointConfig e;
  e.base_url = "http://example.invalid";
  Target t;
  t.endpoint = e;
  p.target = t;
  p.interval_s = 30;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p.interval_s = 60;
  CHECK_NOTHROW(p.validate());
  p.budgets.dip_bootstrap = 10;
  CHECK_THROWS_AS(p.validate(), ArgumentError);

  json j = to_json(local_plan("out", {DetectorKind::RngDivergence}, sim()));
  auto back = plan_from_json(j);
  CHECK(back.detectors == std::set<DetectorKind>{DetectorKind::RngDivergence});
  CHECK(back.budgets.rng_trials == 5);
  j["unknown_key"] = 1;
  CHECK_THROWS_AS(plan_from_json(j), ArgumentError);
}

TEST_CASE("plan loads from toml") {
  auto dir = fresh_dir("toml");
  std::ofstream(dir / "plan.toml") << R"(interval_s = 120
detectors = ["Determinism"]
output_dir = "out"

[target.local]
vocab_size = 1024
)";
  auto p = load_plan(dir / "plan.toml");
  CHECK(p.interval_s == 120);
  REQUIRE(p.target.local.has_value());
  CHECK(p.target.local->model.vocab_size == 1024);
  CHECK(p.output_dir == dir / "out");
  std::ofstream(dir / "bad.toml") << "detectors = [\"Determinism\"]\n[target.local.model]\nvocab_size = 1\n";
  CHECK_THROWS_AS(load_plan(dir / "bad.toml"), ArgumentError);
}

TEST_CASE("snapshots: digest, round trip, append-only store") {
  auto dir = fresh_dir("store");
  DetectionReport r;
  r.detector = DetectorKind::BitBias;
  r.verdict = Verdict::Unmarked;
  r.statistics["q"] = 0.1;
  auto s = make_snapshot("m", r, json{{"a", 1}});
  CHECK(s.inputs_digest == sha256_hex(json{{"a", 1}}.dump()));
  CHECK(s.timestamp.size() == 20);
  CHECK(s.timestamp.back() == 'Z');
  auto back = Snapshot::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());

  SnapshotStore store(dir / "s.jsonl");
  CHECK(store.load().empty());
  store.append(s);
  auto before = slurp(store.path());
  store.append(s);
  auto after = slurp(store.path());
  CHECK(after.substr(0, before.size()) == before);
  CHECK(store.load().size() == 2);
}

TEST_CASE("diff: identical snapshots do not flag") {
  auto dir = fresh_dir("diff-same");
  auto plan = local_plan(dir, {DetectorKind::RngDivergence}, sim());
  run_once(plan);
  run_once(plan);
  auto hist = read_snapshots(plan.snapshot_path());
  REQUIRE(hist.size() == 2);
  auto d = diff(hist, DetectorKind::RngDivergence);
  CHECK_FALSE(d.first_flag.has_value());
  CHECK_THROWS_AS(diff({hist[0]}, DetectorKind::RngDivergence), ArgumentError);
}

TEST_CASE("diff flags the first snapshot after a watermark is switched on") {
  auto dir = fresh_dir("diff-switch");
  auto plan = local_plan(dir, {DetectorKind::RngDivergence}, sim());
  for (int i = 0; i < 2; ++i) {
    plan.seed = i;
    run_once(plan);
  }
  plan.target.local = sim(green(0.1, 10));
  for (int i = 2; i < 4; ++i) {
    plan.seed = i;
    auto r = run_once(plan);
    CHECK(r.snapshots[0].report.verdict == Verdict::Watermarked);
  }
  auto d = diff(read_snapshots(plan.snapshot_path()), DetectorKind::RngDivergence);
  REQUIRE(d.first_flag.has_value());
  CHECK(*d.first_flag == 2);
  CHECK_FALSE(d.series[1].fired);
  CHECK(d.series[3].fired);
}

TEST_CASE("report artifacts, Lorenz end point and re-ingestion") {
  auto dir = fresh_dir("report");
  auto plan = local_plan(dir, {DetectorKind::RngDivergence, DetectorKind::MeanAdjacent,
                               DetectorKind::DeltaAmplification},
                         sim());
  plan.budgets.dip_prompts = 20;
  plan.budgets.gap_prompts = 2;
  run_once(plan);
  auto snaps = read_snapshots(plan.snapshot_path());
  REQUIRE(snaps.size() == 3);
  const auto store_before = slurp(plan.snapshot_path());

  auto out = dir / "report";
  write_report(snaps, out);
  for (auto f : {"summary.txt", "report.json", "rng_histogram.csv", "lorenz.csv", "logit_scatter.csv",
                 "averaged_logit_histogram.csv"})
    CHECK(fs::exists(out / f));
  CHECK(lines(out / "rng_histogram.csv") == kRngBins + 1);
  CHECK(lines(out / "averaged_logit_histogram.csv") == kAveragedLogitBins + 1);

  std::ifstream lz(out / "lorenz.csv");
  std::string row, last;
  std::getline(lz, row);
  while (std::getline(lz, row)) {
    // Each snapshot's curve ends at rank V; track the final row.
    last = row;
  }
  REQUIRE(!last.empty());
  double cum = std::stod(last.substr(last.rfind(',') + 1));
  CHECK(std::fabs(cum - 1.0) <= 1e-9);

  auto again = dir / "report2";
  write_report(read_snapshots(out / "report.json"), again);
  for (auto f : {"rng_histogram.csv", "lorenz.csv", "logit_scatter.csv", "averaged_logit_histogram.csv"})
    CHECK(slurp(out / f) == slurp(again / f));
  CHECK(slurp(plan.snapshot_path()) == store_before);
}

TEST_CASE("single snapshot report has histogram-sized csv") {
  auto dir = fresh_dir("report-one");
  auto plan = local_plan(dir, {DetectorKind::RngDivergence}, sim());
  run_once(plan);
  auto out = dir / "r";
  write_report(read_snapshots(plan.snapshot_path()), out);
  CHECK(lines(out / "rng_histogram.csv") == kRngBins + 1);
  CHECK(lines(out / "averaged_logit_histogram.csv") == 1);
}

TEST_CASE("simulation server answers over http") {
  SimulationServer srv(sim(), 3, "sim");
  srv.start();
  EndpointConfig e;
  e.base_url = srv.base_url();
  HttpClient c(e);
  CompletionRequest r;
  r.prompt = "Once upon a time";
  r.max_tokens = 5;
  r.logprobs = 5;
  r.want_logits = true;
  auto out = c.complete(r);
  CHECK(out.tokens.size() <= 5);
  REQUIRE(out.first_logits.has_value());
  CHECK(out.first_logits->size() == 4096);
  CHECK(out.top_logprobs.front().size() == 5);
  auto caps = c.capabilities();
  CHECK(caps.has_exact_logits);
  auto [status, body] = srv.handle_completion("not json");
  CHECK(status == 400);
  srv.stop();
}

TEST_CASE("delta sweep rows") {
  SweepOptions o;
  o.deltas = {0, 8};
  o.prompts = 60;
  o.bootstrap = 1000;
  auto rows = delta_sweep(o);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].p > 0.05);
  CHECK(rows[1].p < 0.05);
  CHECK(rows[1].dip > rows[0].dip);
}
