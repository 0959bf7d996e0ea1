#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cases.hpp"
#include "dllm/bench.hpp"
#include "dllm/diffusion.hpp"
#include "dllm/path_lab.hpp"

using namespace dllm;
using dllm::testing::Case;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

std::string config_path(const std::string& name) { return std::string(DLLM_SOURCE_DIR) + "/configs/" + name; }

constexpr std::uint64_t kLosslessSuite = 0xacce55;
constexpr std::uint64_t kPathSuite = 0x9a7415;
constexpr std::size_t kLosslessCases = 1200;
constexpr std::size_t kPathCases = 600;

struct SuiteStats {
  std::size_t cases = 0;
  std::size_t lossless = 0;
  std::size_t within_bound = 0;
  std::size_t exact_steps = 0;
  std::vector<std::string> failures;
};

const SuiteStats& lossless_suite() {
  static const SuiteStats stats = [] {
    SuiteStats s;
    for (std::size_t i = 0; i < kLosslessCases; ++i) {
      const Case c = dllm::testing::random_case(kLosslessSuite, i);
      auto pred = c.predictor();
      const auto sched = c.schedule();
      const auto cfg = c.scheduler();
      const auto ref = decode_static(*pred, cfg, sched, c.rng());
      pred->reset_counter();
      const auto fd = decode_freedave(*pred, cfg, sched, c.draft_steps, c.rng());
      ++s.cases;
      const bool same = fd.tokens == ref.tokens;
      const bool bound = fd.nfe.forward_calls <= ref.nfe.forward_calls + 1;
      const bool steps = dllm::testing::accepted_steps(fd) == c.steps;
      s.lossless += same ? 1 : 0;
      s.within_bound += bound ? 1 : 0;
      s.exact_steps += steps ? 1 : 0;
      if (!(same && bound && steps) && s.failures.size() < 20) s.failures.push_back(c.describe());
    }
    return s;
  }();
  return stats;
}

Outcome lossless_equivalence() {
  const auto& s = lossless_suite();
  return {s.lossless == s.cases && s.cases >= 1000,
          std::to_string(s.lossless) + "/" + std::to_string(s.cases) + " configs bitwise equal to static"};
}

Outcome nfe_bound() {
  const auto& s = lossless_suite();
  return {s.within_bound == s.cases && s.exact_steps == s.cases && s.cases >= 1000,
          "calls <= static+1 in " + std::to_string(s.within_bound) + "/" + std::to_string(s.cases) +
              ", sum of accepted steps == N in " + std::to_string(s.exact_steps) + "/" + std::to_string(s.cases)};
}

Outcome context_free_speedup() {
  const auto runs = load_run_configs(config_path("context_free.json"));
  const RunConfig& cfg = runs.front();
  auto pred = make_predictor(cfg, cfg.seed);
  const auto sched = cfg.schedule();
  const auto sc = cfg.scheduler();
  const DeterministicRng rng(cfg.seed);
  const auto ref = decode_static(*pred, sc, sched, rng);
  pred->reset_counter();
  const auto fd = decode_freedave(*pred, sc, sched, 8, rng);
  const auto verified = dllm::testing::verified_rounds(fd);
  const double speedup = static_cast<double>(ref.nfe.forward_calls) / static_cast<double>(fd.nfe.forward_calls);
  const bool ok = cfg.length == 32 && cfg.steps == 32 && ref.nfe.forward_calls == 32 && fd.nfe.forward_calls == 5 &&
                  verified == 4 && fd.rounds.size() == 4 && speedup == 6.4 && fd.tokens == ref.tokens;
  return {ok, std::to_string(verified) + " batched rounds, " + std::to_string(fd.nfe.forward_calls) + " vs " +
                  std::to_string(ref.nfe.forward_calls) + " calls, speedup " + std::to_string(speedup)};
}

struct PathRecord {
  Case c;
  bool feasible = false;
  bool rounds_match = false;
  LemmaReport lemma;
  json graph;
};

const std::vector<PathRecord>& path_suite() {
  static const std::vector<PathRecord> records = [] {
    std::vector<PathRecord> out;
    for (std::size_t i = 0; i < kPathCases; ++i) {
      PathRecord rec;
      rec.c = dllm::testing::random_case(kPathSuite, i, 12, 12);
      auto pred = rec.c.predictor();
      const auto sched = rec.c.schedule();
      const auto cfg = rec.c.scheduler();
      const PathLabInput in{*pred, cfg, sched, rec.c.rng()};
      const FeasibleGraph g = build_feasible_graph(in);
      const auto greedy = greedy_verifier_path(g, cfg, sched, rec.c.draft_steps, rec.c.rng());
      const auto fd = decode_freedave(*pred, cfg, sched, rec.c.draft_steps, rec.c.rng());
      rec.feasible = g.contains_path(greedy);
      rec.rounds_match = fd.rounds.size() + 1 == greedy.size();
      rec.lemma = check_lemma(g, cfg, sched, rec.c.rng());
      if (!rec.lemma.agree()) rec.graph = to_json(g);
      out.push_back(std::move(rec));
    }
    return out;
  }();
  return records;
}

Outcome greedy_path_feasibility() {
  std::size_t feasible = 0;
  std::size_t match = 0;
  for (const auto& r : path_suite()) {
    feasible += r.feasible ? 1 : 0;
    match += r.rounds_match ? 1 : 0;
  }
  const std::size_t n = path_suite().size();
  return {feasible == n && match == n && n >= 500,
          "greedy path feasible in " + std::to_string(feasible) + "/" + std::to_string(n) +
              ", rounds == path length in " + std::to_string(match) + "/" + std::to_string(n)};
}

Outcome greedy_path_optimality(const std::filesystem::path& artifacts) {
  std::size_t agree = 0;
  std::size_t at_span = 0;
  std::size_t at_length = 0;
  std::size_t complete = 0;
  json counterexamples = json::array();
  for (const auto& r : path_suite()) {
    agree += r.lemma.agree() ? 1 : 0;
    at_span += r.lemma.agree_at_span ? 1 : 0;
    at_length += r.lemma.agree_at_length ? 1 : 0;
    complete += r.lemma.complete_graph ? 1 : 0;
    if (!r.lemma.agree()) {
      counterexamples.push_back({{"case", r.c.describe()}, {"lemma", to_json(r.lemma)}, {"graph", r.graph}});
    }
  }
  const std::size_t n = path_suite().size();
  const double rate = static_cast<double>(agree) / static_cast<double>(n);
  json doc = {{"configs_checked", n},
              {"agreement_rate", rate},
              {"agree_at_max_span", at_span},
              {"agree_at_length", at_length},
              {"complete_graphs", complete},
              {"counterexamples", counterexamples}};
  std::filesystem::create_directories(artifacts);
  const auto file = artifacts / "lemma_counterexamples.json";
  std::ofstream(file) << doc.dump(2) << "\n";
  return {rate >= 0.99, "agreement " + std::to_string(agree) + "/" + std::to_string(n) + " (" +
                            std::to_string(rate * 100.0) + "%), " + std::to_string(n - agree) +
                            " counterexamples in " + file.string()};
}

Outcome diffusion_math() {
  const auto alpha = AlphaSchedule::linear();
  std::vector<TokenId> clean(10000);
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = static_cast<TokenId>(i % 7);
  const SequenceState x0(clean, 0, 7);
  double worst_z = 0.0;
  for (int k = 1; k <= 9; ++k) {
    const double t = k / 10.0;
    const double frac = static_cast<double>(forward_corrupt(x0, t, alpha, DeterministicRng(77 + k)).masked_count()) / 1e4;
    const double expect = 1.0 - alpha(t);
    worst_z = std::max(worst_z, std::abs(frac - expect) / std::sqrt(expect * (1.0 - expect) / 1e4));
  }
  double worst_norm = 0.0;
  double worst_chain = 0.0;
  for (int a = 1; a <= 50; ++a) {
    for (int b = 0; b < a; ++b) {
      const double t = a / 50.0;
      const double s = b / 50.0;
      const auto k = reverse_transition(t, s, alpha);
      worst_norm = std::max(worst_norm, std::abs(k.unmask_prob + k.stay_mask_prob - 1.0));
      for (int c = 0; c < b; ++c) {
        const double r = c / 50.0;
        const double two = k.unmask_prob + k.stay_mask_prob * reverse_transition(s, r, alpha).unmask_prob;
        worst_chain = std::max(worst_chain, std::abs(two - reverse_transition(t, r, alpha).unmask_prob));
      }
    }
  }
  return {worst_z <= 3.0 && worst_norm <= 1e-12 && worst_chain <= 1e-12,
          "max |z| " + std::to_string(worst_z) + ", normalization err " + std::to_string(worst_norm) +
              ", two-step err " + std::to_string(worst_chain)};
}

Outcome threshold_lossiness_witness() {
  const auto report = run_comparison(load_run_configs(config_path("lossiness_witness.json")));
  std::set<std::uint64_t> lossy_threshold;
  std::set<std::uint64_t> lossless_freedave;
  for (const BenchRow& r : report.rows) {
    if (r.decoder == DecoderKind::kThreshold && !r.lossless) lossy_threshold.insert(r.seed);
    if (r.decoder == DecoderKind::kFreeDave && r.lossless) lossless_freedave.insert(r.seed);
  }
  std::vector<std::uint64_t> witnesses;
  std::set_intersection(lossy_threshold.begin(), lossy_threshold.end(), lossless_freedave.begin(),
                        lossless_freedave.end(), std::back_inserter(witnesses));
  std::string seeds;
  for (auto s : witnesses) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  return {!witnesses.empty(), std::to_string(witnesses.size()) + " witness seeds [" + seeds + "]"};
}

Outcome draft_sweep_shape() {
  std::vector<RunConfig> bases;
  bases.push_back(load_run_configs(config_path("context_free.json")).front());
  for (const auto& [length, steps, block] : std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{
           {12, 12, 12}, {20, 10, 20}, {24, 24, 4}, {9, 5, 1}}) {
    RunConfig c = bases.front();
    c.name = "context-free-" + std::to_string(length) + "-" + std::to_string(steps) + "-" + std::to_string(block);
    c.length = length;
    c.steps = steps;
    c.block_size = block;
    bases.push_back(c);
  }
  std::size_t checked = 0;
  std::string detail;
  bool ok = true;
  for (const RunConfig& cfg : bases) {
    auto pred = make_predictor(cfg, cfg.seed);
    const auto sched = cfg.schedule();
    const auto sc = cfg.scheduler();
    const DeterministicRng rng(cfg.seed);
    const PathLabInput in{*pred, sc, sched, rng, cfg.steps};
    const auto span = optimal_path(build_feasible_graph(in)).max_span;
    std::vector<std::uint64_t> calls;
    for (std::size_t d = 1; d <= cfg.steps + 4; ++d) {
      pred->reset_counter();
      const auto fd = decode_freedave(*pred, sc, sched, d, rng);
      calls.push_back(fd.nfe.forward_calls);
    }
    const bool monotone = std::is_sorted(calls.rbegin(), calls.rend());
    const bool flat = std::all_of(calls.begin() + static_cast<std::ptrdiff_t>(span - 1), calls.end(),
                                  [&](std::uint64_t v) { return v == calls[span - 1]; });
    ok = ok && monotone && flat;
    ++checked;
    if (cfg.name == bases.front().name) {
      for (std::size_t d : {1, 2, 4, 8, 16, 32}) detail += (detail.empty() ? "" : ",") + std::to_string(calls[d - 1]);
      detail = "d=1,2,4,8,16,32 -> [" + detail + "] calls, p* span " + std::to_string(span);
    }
  }
  return {ok, detail + ", " + std::to_string(checked) + " context-free configs checked"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the decoding engine"};
  std::string artifacts = "artifacts";
  std::vector<std::string> known_failures;
  app.add_option("--artifacts", artifacts, "Directory for structured outputs");
  app.add_option("--known-failure", known_failures, "Criterion whose FAIL does not affect the exit status");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"lossless_equivalence", lossless_equivalence},
      {"nfe_bound", nfe_bound},
      {"context_free_speedup", context_free_speedup},
      {"greedy_path_feasibility", greedy_path_feasibility},
      {"greedy_path_optimality", [&] { return greedy_path_optimality(artifacts); }},
      {"diffusion_math", diffusion_math},
      {"threshold_lossiness_witness", threshold_lossiness_witness},
      {"draft_sweep_shape", draft_sweep_shape},
  };

  int blocking = 0;
  json summary = json::array();
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known = std::find(known_failures.begin(), known_failures.end(), c.name) != known_failures.end();
    if (!o.pass && !known) ++blocking;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail;
    if (!o.pass && known) std::cout << " (known failure)";
    std::cout << " [" << secs << " s]" << std::endl;
    summary.push_back({{"criterion", c.name}, {"pass", o.pass}, {"detail", o.detail}, {"seconds", secs}});
  }
  std::filesystem::create_directories(artifacts);
  std::ofstream(std::filesystem::path(artifacts) / "acceptance_summary.json") << summary.dump(2) << "\n";
  return blocking == 0 ? 0 : 1;
}
