#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dllm/decoder.hpp"
#include "dllm/run_config.hpp"

namespace dllm {

// Tokens before the first eos, masks excluded.
std::size_t valid_token_count(std::span<const TokenId> tokens, const Vocabulary& vocab);

struct BenchRow {
  std::string group;
  std::string config_digest;
  DecoderKind decoder = DecoderKind::kStatic;
  std::optional<std::size_t> draft_steps;
  std::optional<double> threshold;
  std::uint64_t seed = 0;
  std::size_t valid_tokens = 0;
  std::uint64_t forward_calls = 0;
  std::uint64_t sequence_evaluations = 0;
  std::size_t rounds = 0;
  double wall_ms = 0.0;
  double throughput_nfe = 0.0;
  double throughput_time = 0.0;
  double nfe_speedup = 0.0;
  bool lossless = false;
  std::uint64_t peak_memory_proxy = 0;
  DecodeResult result;  // carried into the object-notation report only
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

// Runs static once per repetition as the reference, then every config of the
// group. Configs must share predictor and schedule.
BenchReport run_comparison(const std::vector<RunConfig>& group);

// One comparison group per d; base.decoder must be freedave.
BenchReport sweep_draft_steps(const RunConfig& base, const std::vector<std::size_t>& d_values);

inline const char* kReportHeader =
    "group,config_digest,decoder,draft_steps,threshold,seed,valid_tokens,forward_calls,sequence_evaluations,"
    "rounds,wall_ms,throughput_nfe,throughput_time,nfe_speedup,lossless,peak_memory_proxy";

std::string report_csv(const BenchReport& report);
// Parses a CSV report and recomputes every derived column; a mismatch throws
// kContractViolation.
BenchReport read_report_csv(const std::string& text);
nlohmann::json report_json(const BenchReport& report);
nlohmann::json to_json(const DecodeResult& result);

}  // namespace dllm
