#pragma once

// Run-config documents (format 1). Shared fields describe the predictor,
// schedule and sampling; "runs" lists decoder selections that form one
// comparison group:
//
//   {
//     "format": 1, "name": "...", "seed": 0, "repetitions": 1,
//     "vocab": {"size": 17, "eos_id": 16},
//     "predictor": {"kind": "table", "sensitivity": 0.5, "target": [...], "seed": 3}
//               | {"kind": "ngram", "corpus": [[...], ...]}
//               | {"kind": "ngram", "synthetic_corpus": {"sequences": 8, "length": 64}}
//               | {"kind": "replay", "trace": "path"},
//     "schedule": {"length": 32, "steps": 32, "block_size": 4},
//     "sampling": {"mode": "argmax" | "stochastic", "temperature": 1.0},
//     "runs": [{"decoder": "static"}, {"decoder": "threshold", "threshold": 0.9},
//              {"decoder": "freedave", "d": 8}]
//   }

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dllm/predictor.hpp"
#include "dllm/schedule.hpp"
#include "dllm/scheduler.hpp"

namespace dllm {

inline constexpr int kRunConfigFormat = 1;

enum class DecoderKind { kStatic, kThreshold, kFreeDave };

std::string to_string(DecoderKind kind);
DecoderKind parse_decoder_kind(const std::string& text);

struct PredictorSpec {
  std::string kind = "table";  // table | ngram | replay
  double sensitivity = 0.0;
  std::vector<TokenId> target;  // empty: drawn from the seed
  std::optional<std::uint64_t> seed;
  std::vector<std::vector<TokenId>> corpus;
  std::size_t corpus_sequences = 0;  // synthetic corpus when corpus is empty
  std::size_t corpus_length = 0;
  std::filesystem::path trace;
};

struct RunConfig {
  std::string name;
  std::int32_t vocab_size = 0;
  std::optional<TokenId> eos_id;
  PredictorSpec predictor;
  std::size_t length = 0;
  std::size_t steps = 0;
  std::size_t block_size = 0;
  SamplingMode sampling = SamplingMode::kArgmax;
  double temperature = 1.0;
  DecoderKind decoder = DecoderKind::kStatic;
  std::optional<std::size_t> draft_steps;  // iff decoder == freedave
  std::optional<double> threshold;         // iff decoder == threshold
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;

  // Throws kConfig when the decoder-specific fields do not line up.
  void validate() const;

  Vocabulary vocabulary() const;
  TimeSchedule schedule() const;
  // Greedy scheduler for static/freedave, threshold scheduler otherwise.
  SchedulerConfig scheduler() const;

  nlohmann::json to_json() const;
  // FNV-1a of the canonical JSON dump.
  std::string digest() const;
};

std::vector<RunConfig> parse_run_configs(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
std::vector<RunConfig> load_run_configs(const std::filesystem::path& path);

// Predictor for one repetition; `seed` feeds table targets/perturbations and
// synthetic corpora unless the predictor entry pins its own seed.
std::unique_ptr<Predictor> make_predictor(const RunConfig& cfg, std::uint64_t seed);

// Random first-order Markov corpus over real tokens.
std::vector<std::vector<TokenId>> make_synthetic_corpus(const Vocabulary& vocab, std::size_t sequences,
                                                        std::size_t length, std::uint64_t seed);

}  // namespace dllm
