#include "dllm/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dllm/bench.hpp"
#include "dllm/error.hpp"
#include "dllm/path_lab.hpp"
#include "dllm/run_config.hpp"
#include "dllm/trace.hpp"

namespace dllm {

using nlohmann::json;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfig:
    case ErrorCode::kSizeLimit:
      return 1;
    case ErrorCode::kContractViolation:
    case ErrorCode::kDecode:
      return 2;
    case ErrorCode::kTraceFormat:
    case ErrorCode::kTraceMiss:
      return 3;
  }
  return 2;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) fail(ErrorCode::kConfig, "cannot write " + out_path);
  file << text;
}

bool wants_json(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

std::string render(const BenchReport& report, const std::string& out_path) {
  return wants_json(out_path) ? report_json(report).dump(2) + "\n" : report_csv(report);
}

DecodeResult run_decoder(const RunConfig& cfg, Predictor& predictor, const DeterministicRng& rng) {
  const TimeSchedule schedule = cfg.schedule();
  const SchedulerConfig sched = cfg.scheduler();
  switch (cfg.decoder) {
    case DecoderKind::kStatic:
      return decode_static(predictor, sched, schedule, rng);
    case DecoderKind::kThreshold:
      return decode_threshold(predictor, sched, schedule, rng);
    case DecoderKind::kFreeDave:
      return decode_freedave(predictor, sched, schedule, *cfg.draft_steps, rng);
  }
  fail(ErrorCode::kDecode, "unknown decoder");
}

RunConfig select_run(const std::vector<RunConfig>& runs, const std::string& decoder, std::optional<std::size_t> d,
                     std::optional<std::uint64_t> seed) {
  RunConfig cfg = runs.front();
  if (!decoder.empty()) {
    const DecoderKind kind = parse_decoder_kind(decoder);
    auto it = std::find_if(runs.begin(), runs.end(), [&](const RunConfig& r) { return r.decoder == kind; });
    if (it != runs.end()) {
      cfg = *it;
    } else {
      cfg.decoder = kind;
      cfg.draft_steps.reset();
      cfg.threshold.reset();
      if (kind == DecoderKind::kThreshold) {
        auto t = std::find_if(runs.begin(), runs.end(), [](const RunConfig& r) { return r.threshold.has_value(); });
        if (t == runs.end()) fail(ErrorCode::kConfig, "threshold decoder needs a run with a threshold");
        cfg.threshold = t->threshold;
      }
      if (kind == DecoderKind::kFreeDave) cfg.draft_steps = d.value_or(1);
    }
  }
  if (d) {
    if (cfg.decoder != DecoderKind::kFreeDave) fail(ErrorCode::kConfig, "--d only applies to the freedave decoder");
    cfg.draft_steps = *d;
  }
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

int cmd_decode(const std::string& config, const std::string& decoder, std::optional<std::size_t> d,
               std::optional<std::uint64_t> seed, const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = select_run(load_run_configs(config), decoder, d, seed);
  auto predictor = make_predictor(cfg, cfg.seed);
  const DecodeResult result = run_decoder(cfg, *predictor, DeterministicRng(cfg.seed));
  json doc = {{"config", cfg.to_json()},
              {"config_digest", cfg.digest()},
              {"decoder", to_string(cfg.decoder)},
              {"valid_tokens", valid_token_count(result.tokens, predictor->vocabulary())},
              {"result", to_json(result)}};
  emit(doc.dump(2) + "\n", out_path, out);
  return 0;
}

int cmd_compare(const std::string& config, const std::string& out_path, std::ostream& out) {
  emit(render(run_comparison(load_run_configs(config)), out_path), out_path, out);
  return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::size_t>& d_list, const std::string& out_path,
              std::ostream& out) {
  const auto runs = load_run_configs(config);
  auto it = std::find_if(runs.begin(), runs.end(), [](const RunConfig& r) { return r.decoder == DecoderKind::kFreeDave; });
  RunConfig base = it != runs.end() ? *it : select_run(runs, "freedave", 1, std::nullopt);
  emit(render(sweep_draft_steps(base, d_list), out_path), out_path, out);
  return 0;
}

int cmd_pathlab(const std::string& config, std::size_t cap, const std::string& out_path, std::ostream& out) {
  const auto runs = load_run_configs(config);
  const RunConfig& first = runs.front();
  const SchedulerConfig sched = SchedulerConfig::greedy(first.block_size, first.sampling, first.temperature);
  const TimeSchedule schedule = first.schedule();
  json results = json::array();
  std::size_t agreements = 0;
  for (std::size_t rep = 0; rep < first.repetitions; ++rep) {
    const std::uint64_t seed = first.seed + rep;
    auto predictor = make_predictor(first, seed);
    const DeterministicRng rng(seed);
    const FeasibleGraph graph = build_feasible_graph({*predictor, sched, schedule, rng, cap});
    const LemmaReport lemma = check_lemma(graph, sched, schedule, rng);
    agreements += lemma.agree() ? 1 : 0;
    json runs_json = json::array();
    for (const RunConfig& cfg : runs) {
      if (cfg.decoder != DecoderKind::kFreeDave) continue;
      const std::size_t d = *cfg.draft_steps;
      const auto greedy = greedy_verifier_path(graph, sched, schedule, d, rng);
      const DecodeResult fd = decode_freedave(*predictor, sched, schedule, d, rng);
      std::vector<std::size_t> engine_cuts{0};
      engine_cuts.insert(engine_cuts.end(), fd.cut_points.begin(), fd.cut_points.end());
      runs_json.push_back({{"d", d},
                           {"greedy_path", greedy},
                           {"greedy_path_is_feasible", graph.contains_path(greedy)},
                           {"engine_cut_points", engine_cuts},
                           {"engine_matches_greedy", engine_cuts == greedy}});
    }
    results.push_back({{"seed", seed}, {"graph", to_json(graph)}, {"lemma", to_json(lemma)}, {"freedave", runs_json}});
  }
  json doc = {{"config", first.to_json()},
              {"cap", cap},
              {"configs_checked", first.repetitions},
              {"lemma_agreement_rate", static_cast<double>(agreements) / static_cast<double>(first.repetitions)},
              {"results", results}};
  emit(doc.dump(2) + "\n", out_path, out);
  return 0;
}

int cmd_replay_validate(const std::string& trace_path, std::ostream& out, std::ostream& err) {
  TraceFile trace = read_trace(trace_path);
  const TraceHeader header = trace.header;
  const SamplingMode sampling = header.sampling ? parse_sampling_mode(*header.sampling) : SamplingMode::kArgmax;
  const SchedulerConfig sched =
      SchedulerConfig::greedy(header.block_size.value_or(header.length), sampling, header.temperature.value_or(1.0));
  const TimeSchedule schedule = make_uniform_schedule(header.length, header.steps);
  auto predictor = make_replay_predictor(std::move(trace));
  const DeterministicRng rng(0);

  const DecodeResult replayed = decode_static(*predictor, sched, schedule, rng);
  if (header.static_tokens && *header.static_tokens != replayed.tokens) {
    err << "replay-validate: static replay differs from the recorded static tokens\n";
    return 3;
  }
  json doc = {{"trace", trace_path}, {"records_ok", true}, {"static_replay", "ok"}, {"tokens", replayed.tokens}};
  if (header.draft_steps) {
    const DecodeResult fd = decode_freedave(*predictor, sched, schedule, *header.draft_steps, rng);
    if (fd.tokens != replayed.tokens) {
      err << "replay-validate: draft-and-verify replay differs from static replay\n";
      return 3;
    }
    doc["freedave_replay"] = "ok";
    doc["freedave_forward_calls"] = fd.nfe.forward_calls;
  }
  out << doc.dump(2) << "\n";
  return 0;
}

int cmd_record_trace(const std::string& config, std::size_t topk, std::size_t d, const std::string& out_path,
                     std::ostream& out) {
  const RunConfig cfg = select_run(load_run_configs(config), "static", std::nullopt, std::nullopt);
  auto inner = make_predictor(cfg, cfg.seed);
  const std::size_t width = topk == 0 ? static_cast<std::size_t>(inner->vocabulary().size()) : topk;
  RecordingPredictor recorder(*inner, width);
  const SchedulerConfig sched = cfg.scheduler();
  const TimeSchedule schedule = cfg.schedule();
  const DeterministicRng rng(0);
  const DecodeResult reference = decode_static(recorder, sched, schedule, rng);
  if (d > 1) decode_freedave(recorder, sched, schedule, d, rng);

  TraceHeader header;
  header.length = cfg.length;
  header.steps = cfg.steps;
  header.block_size = cfg.block_size;
  header.sampling = to_string(cfg.sampling);
  header.temperature = cfg.temperature;
  header.draft_steps = d;
  header.static_tokens = reference.tokens;
  header.recorder = "dllm record-trace";
  const TraceFile trace = recorder.take_trace(header);
  if (out_path.empty()) {
    out << serialize_trace(trace);
  } else {
    write_trace(trace, out_path);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Masked-diffusion decoding engine: static, threshold and draft-and-verify decoders"};
  app.require_subcommand(1);

  std::string config;
  std::string out_path;
  std::string decoder;
  std::optional<std::size_t> d;
  std::optional<std::uint64_t> seed;
  std::size_t cap = kDefaultPathLabCap;
  std::vector<std::size_t> d_list{1, 2, 4, 8, 16, 32};
  std::string trace_path;
  std::size_t topk = 0;
  std::size_t record_d = 1;

  auto* decode = app.add_subcommand("decode", "Decode one run config");
  decode->add_option("--config", config, "Run config path")->required();
  decode->add_option("--decoder", decoder, "static | threshold | freedave")
      ->check(CLI::IsMember({"static", "threshold", "freedave"}));
  decode->add_option("--d", d, "Draft steps");
  decode->add_option("--seed", seed, "Seed override");
  decode->add_option("--out", out_path, "Output path (stdout if omitted)");

  auto* compare = app.add_subcommand("compare", "Run every decoder of a config against the static reference");
  compare->add_option("--config", config)->required();
  compare->add_option("--out", out_path, "CSV report, or object notation for a .json path")->required();

  auto* pathlab = app.add_subcommand("pathlab", "Brute-force feasible paths and check the verifier");
  pathlab->add_option("--config", config)->required();
  pathlab->add_option("--max-steps", cap, "Cap on the schedule step count");
  pathlab->add_option("--out", out_path)->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep draft steps");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--d-list", d_list)->delimiter(',');
  sweep->add_option("--out", out_path)->required();

  auto* replay = app.add_subcommand("replay-validate", "Validate a trace and its static replay");
  replay->add_option("--trace", trace_path)->required();

  auto* record = app.add_subcommand("record-trace", "Record a trace from a synthetic predictor");
  record->add_option("--config", config)->required();
  record->add_option("--topk", topk, "Row width (0: full vocabulary)");
  record->add_option("--d", record_d, "Also record the states a draft-and-verify run visits");
  record->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*decode) return cmd_decode(config, decoder, d, seed, out_path, out);
    if (*compare) return cmd_compare(config, out_path, out);
    if (*pathlab) return cmd_pathlab(config, cap, out_path, out);
    if (*sweep) return cmd_sweep(config, d_list, out_path, out);
    if (*replay) return cmd_replay_validate(trace_path, out, err);
    if (*record) return cmd_record_trace(config, topk, record_d, out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dllm
