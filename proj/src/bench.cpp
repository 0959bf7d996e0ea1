#include "dllm/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <map>
#include <sstream>

#include "dllm/error.hpp"
#include "dllm/trace.hpp"

namespace dllm {

using nlohmann::json;

std::size_t valid_token_count(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::size_t count = 0;
  for (TokenId t : tokens) {
    if (vocab.eos_id() && t == *vocab.eos_id()) break;
    if (t != vocab.mask_id()) ++count;
  }
  return count;
}

namespace {

double throughput_over_nfe(std::size_t valid, std::uint64_t calls) {
  return calls == 0 ? 0.0 : static_cast<double>(valid) / static_cast<double>(calls);
}

double throughput_over_time(std::size_t valid, double wall_ms) {
  return wall_ms > 0.0 ? static_cast<double>(valid) * 1000.0 / wall_ms : 0.0;
}

double speedup(std::uint64_t reference_calls, std::uint64_t calls) {
  return calls == 0 ? 0.0 : static_cast<double>(reference_calls) / static_cast<double>(calls);
}

bool same_scheduler(const RunConfig& a, const RunConfig& b) {
  return a.block_size == b.block_size && a.sampling == b.sampling && a.temperature == b.temperature;
}

void check_group(const std::vector<RunConfig>& group) {
  require(!group.empty(), "comparison group is empty");
  const RunConfig& first = group.front();
  const json pred = first.to_json().at("predictor");
  for (const RunConfig& cfg : group) {
    if (cfg.to_json().at("predictor") != pred || cfg.length != first.length || cfg.steps != first.steps ||
        cfg.vocab_size != first.vocab_size || cfg.seed != first.seed || cfg.repetitions != first.repetitions) {
      fail(ErrorCode::kConfig, "configs of a comparison group must share predictor, schedule and seed");
    }
  }
}

struct Timed {
  DecodeResult result;
  double wall_ms;
};

Timed run_one(const RunConfig& cfg, Predictor& predictor, const DeterministicRng& rng) {
  const TimeSchedule schedule = cfg.schedule();
  const SchedulerConfig sched = cfg.scheduler();
  predictor.reset_counter();
  const auto start = std::chrono::steady_clock::now();
  DecodeResult result;
  switch (cfg.decoder) {
    case DecoderKind::kStatic:
      result = decode_static(predictor, sched, schedule, rng);
      break;
    case DecoderKind::kThreshold:
      result = decode_threshold(predictor, sched, schedule, rng);
      break;
    case DecoderKind::kFreeDave:
      result = decode_freedave(predictor, sched, schedule, *cfg.draft_steps, rng);
      break;
  }
  const auto stop = std::chrono::steady_clock::now();
  return {std::move(result), std::chrono::duration<double, std::milli>(stop - start).count()};
}

BenchRow make_row(const RunConfig& cfg, const std::string& group, std::uint64_t seed, Timed run,
                  const DecodeResult& reference, const Vocabulary& vocab) {
  BenchRow row;
  row.group = group;
  row.config_digest = cfg.digest();
  row.decoder = cfg.decoder;
  row.draft_steps = cfg.draft_steps;
  row.threshold = cfg.threshold;
  row.seed = seed;
  row.valid_tokens = valid_token_count(run.result.tokens, vocab);
  row.forward_calls = run.result.nfe.forward_calls;
  row.sequence_evaluations = run.result.nfe.sequence_evaluations;
  row.rounds = run.result.steps_taken;
  row.wall_ms = run.wall_ms;
  row.throughput_nfe = throughput_over_nfe(row.valid_tokens, row.forward_calls);
  row.throughput_time = throughput_over_time(row.valid_tokens, row.wall_ms);
  row.nfe_speedup = speedup(reference.nfe.forward_calls, row.forward_calls);
  row.lossless = run.result.tokens == reference.tokens;
  row.peak_memory_proxy = static_cast<std::uint64_t>(run.result.peak_batch) * cfg.length *
                          static_cast<std::uint64_t>(vocab.size());
  row.result = std::move(run.result);
  return row;
}

}  // namespace

BenchReport run_comparison(const std::vector<RunConfig>& group) {
  check_group(group);
  const RunConfig& first = group.front();
  const std::string group_name = first.name.empty() ? first.digest() : first.name;
  RunConfig reference_cfg = first;
  reference_cfg.decoder = DecoderKind::kStatic;
  reference_cfg.draft_steps.reset();
  reference_cfg.threshold.reset();

  BenchReport report;
  for (std::size_t rep = 0; rep < first.repetitions; ++rep) {
    const std::uint64_t seed = first.seed + rep;
    const DeterministicRng rng(seed);
    auto predictor = make_predictor(first, seed);
    const Vocabulary vocab = predictor->vocabulary();
    try {
      Timed reference = run_one(reference_cfg, *predictor, rng);
      const DecodeResult reference_result = reference.result;
      report.rows.push_back(make_row(reference_cfg, group_name, seed, std::move(reference), reference_result, vocab));
      for (const RunConfig& cfg : group) {
        if (cfg.decoder == DecoderKind::kStatic && same_scheduler(cfg, reference_cfg)) continue;
        report.rows.push_back(make_row(cfg, group_name, seed, run_one(cfg, *predictor, rng), reference_result, vocab));
      }
    } catch (const Error& e) {
      throw e.with_context("group " + group_name + " seed " + std::to_string(seed));
    }
  }
  return report;
}

BenchReport sweep_draft_steps(const RunConfig& base, const std::vector<std::size_t>& d_values) {
  if (base.decoder != DecoderKind::kFreeDave) fail(ErrorCode::kConfig, "sweep needs a freedave config");
  require(!d_values.empty(), "sweep needs at least one d");
  BenchReport report;
  for (std::size_t d : d_values) {
    RunConfig cfg = base;
    cfg.draft_steps = d;
    cfg.name = (base.name.empty() ? base.digest() : base.name) + "/d=" + std::to_string(d);
    cfg.validate();
    BenchReport part = run_comparison({cfg});
    for (auto& row : part.rows) report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(const std::string& field, const char* column) {
  T value{};
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || end != field.data() + field.size()) {
    fail(ErrorCode::kConfig, std::string("report column ") + column + ": bad value '" + field + "'");
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

json state_json(const SequenceState& s) { return canonical_tokens(s); }

}  // namespace

std::string report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const BenchRow& r : report.rows) {
    out << r.group << ',' << r.config_digest << ',' << to_string(r.decoder) << ','
        << (r.draft_steps ? std::to_string(*r.draft_steps) : "") << ','
        << (r.threshold ? shortest(*r.threshold) : "") << ',' << r.seed << ',' << r.valid_tokens << ','
        << r.forward_calls << ',' << r.sequence_evaluations << ',' << r.rounds << ',' << shortest(r.wall_ms) << ','
        << shortest(r.throughput_nfe) << ',' << shortest(r.throughput_time) << ',' << shortest(r.nfe_speedup) << ','
        << (r.lossless ? "true" : "false") << ',' << r.peak_memory_proxy << '\n';
  }
  return out.str();
}

BenchReport read_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) fail(ErrorCode::kConfig, "report header mismatch");
  BenchReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 16) fail(ErrorCode::kConfig, "report row has " + std::to_string(f.size()) + " columns");
    BenchRow r;
    r.group = f[0];
    r.config_digest = f[1];
    r.decoder = parse_decoder_kind(f[2]);
    if (!f[3].empty()) r.draft_steps = parse_number<std::size_t>(f[3], "draft_steps");
    if (!f[4].empty()) r.threshold = parse_number<double>(f[4], "threshold");
    r.seed = parse_number<std::uint64_t>(f[5], "seed");
    r.valid_tokens = parse_number<std::size_t>(f[6], "valid_tokens");
    r.forward_calls = parse_number<std::uint64_t>(f[7], "forward_calls");
    r.sequence_evaluations = parse_number<std::uint64_t>(f[8], "sequence_evaluations");
    r.rounds = parse_number<std::size_t>(f[9], "rounds");
    r.wall_ms = parse_number<double>(f[10], "wall_ms");
    r.throughput_nfe = parse_number<double>(f[11], "throughput_nfe");
    r.throughput_time = parse_number<double>(f[12], "throughput_time");
    r.nfe_speedup = parse_number<double>(f[13], "nfe_speedup");
    if (f[14] != "true" && f[14] != "false") fail(ErrorCode::kConfig, "report column lossless: bad value");
    r.lossless = f[14] == "true";
    r.peak_memory_proxy = parse_number<std::uint64_t>(f[15], "peak_memory_proxy");
    report.rows.push_back(std::move(r));
  }

  std::map<std::pair<std::string, std::uint64_t>, std::uint64_t> reference_calls;
  for (const BenchRow& r : report.rows) {
    if (r.decoder == DecoderKind::kStatic) reference_calls.try_emplace({r.group, r.seed}, r.forward_calls);
  }
  for (const BenchRow& r : report.rows) {
    const std::string where = "report row " + r.group + "/" + to_string(r.decoder);
    if (r.throughput_nfe != throughput_over_nfe(r.valid_tokens, r.forward_calls)) {
      fail(ErrorCode::kContractViolation, where + ": throughput_nfe does not recompute");
    }
    if (r.throughput_time != throughput_over_time(r.valid_tokens, r.wall_ms)) {
      fail(ErrorCode::kContractViolation, where + ": throughput_time does not recompute");
    }
    auto ref = reference_calls.find({r.group, r.seed});
    if (ref == reference_calls.end()) fail(ErrorCode::kContractViolation, where + ": no static reference row");
    if (r.nfe_speedup != speedup(ref->second, r.forward_calls)) {
      fail(ErrorCode::kContractViolation, where + ": nfe_speedup does not recompute");
    }
  }
  return report;
}

json to_json(const DecodeResult& result) {
  json path = json::array();
  for (const DecisionSet& d : result.path) {
    json set = json::array();
    for (const Decision& e : d.entries()) set.push_back({e.position, e.token});
    path.push_back(set);
  }
  json rounds = json::array();
  for (const RoundRecord& r : result.rounds) {
    json drafts = json::array();
    json targets = json::array();
    for (const auto& s : r.drafts) drafts.push_back(state_json(s));
    for (const auto& s : r.targets) targets.push_back(state_json(s));
    rounds.push_back({{"start_step", r.start_step},
                      {"draft_count", r.draft_count},
                      {"matched", r.matched},
                      {"accepted_step", r.accepted_step},
                      {"verified", r.verified},
                      {"drafts", drafts},
                      {"targets", targets}});
  }
  return {{"tokens", result.tokens},
          {"path", path},
          {"cut_points", result.cut_points},
          {"rounds", rounds},
          {"nfe", {{"forward_calls", result.nfe.forward_calls}, {"sequence_evaluations", result.nfe.sequence_evaluations}}},
          {"steps_taken", result.steps_taken},
          {"peak_batch", result.peak_batch}};
}

json report_json(const BenchReport& report) {
  json rows = json::array();
  for (const BenchRow& r : report.rows) {
    json row = {{"group", r.group},
                {"config_digest", r.config_digest},
                {"decoder", to_string(r.decoder)},
                {"draft_steps", nullptr},
                {"threshold", nullptr},
                {"seed", r.seed},
                {"valid_tokens", r.valid_tokens},
                {"forward_calls", r.forward_calls},
                {"sequence_evaluations", r.sequence_evaluations},
                {"rounds", r.rounds},
                {"wall_ms", r.wall_ms},
                {"throughput_nfe", r.throughput_nfe},
                {"throughput_time", r.throughput_time},
                {"nfe_speedup", r.nfe_speedup},
                {"lossless", r.lossless},
                {"peak_memory_proxy", r.peak_memory_proxy},
                {"result", to_json(r.result)}};
    if (r.draft_steps) row["draft_steps"] = *r.draft_steps;
    if (r.threshold) row["threshold"] = *r.threshold;
    rows.push_back(std::move(row));
  }
  return {{"format", 1}, {"header", kReportHeader}, {"rows", rows}};
}

}  // namespace dllm
