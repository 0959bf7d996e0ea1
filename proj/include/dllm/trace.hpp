#pragma once

// FDTRACE1 trace files: recorded (state, step) -> top-k marginals.
//
//   line 1   FDTRACE1
//   line 2   header object: vocab_size, mask_id, eos_id (int or null), length,
//            steps, topk, schedule ("uniform"); optional block_size, sampling,
//            temperature, draft_steps, static_tokens, recorder
//   line 3+  {"key": <hex>, "step": i, "state": [...], "rows": [[pos, [[tok, "p"], ...]], ...]}
//
// The key is FNV-1a 64 (offset 0xcbf29ce484222325, prime 0x100000001b3) over
// the state tokens as little-endian int32 with -1 for mask, printed as 16
// lowercase hex digits. Probabilities are strings in shortest round-trip
// decimal form.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dllm/predictor.hpp"

namespace dllm {

inline constexpr const char* kTraceMagic = "FDTRACE1";

struct TraceHeader {
  std::int32_t vocab_size = 0;
  TokenId mask_id = 0;
  std::optional<TokenId> eos_id;
  std::size_t length = 0;
  std::size_t steps = 0;
  std::size_t topk = 0;
  std::string schedule = "uniform";
  std::optional<std::size_t> block_size;
  std::optional<std::string> sampling;
  std::optional<double> temperature;
  std::optional<std::size_t> draft_steps;
  std::optional<std::vector<TokenId>> static_tokens;
  std::optional<std::string> recorder;
};

struct TraceRow {
  std::size_t position;
  std::vector<std::pair<TokenId, double>> entries;
};

struct TraceRecord {
  std::string key;
  std::size_t step = 0;
  std::vector<std::int32_t> state;  // -1 for mask
  std::vector<TraceRow> rows;
};

struct TraceFile {
  TraceHeader header;
  std::vector<TraceRecord> records;
};

std::vector<std::int32_t> canonical_tokens(const SequenceState& state);
std::string canonical_state_key(std::span<const std::int32_t> canonical);
std::string canonical_state_key(const SequenceState& state);

std::string format_probability(double p);
double parse_probability(const std::string& text);

// Parses and validates. Throws kTraceFormat on bad magic, malformed lines,
// key/state mismatch, duplicate keys, or rows that do not normalize.
TraceFile read_trace(const std::filesystem::path& path);
TraceFile parse_trace(const std::string& text);
void write_trace(const TraceFile& trace, const std::filesystem::path& path);
std::string serialize_trace(const TraceFile& trace);

// Dense row from a sparse record row: listed mass kept, the remaining mass
// spread evenly over unlisted real tokens.
std::vector<double> complete_row(const TraceRow& row, std::int32_t vocab_size);

// Replays a trace as a predictor. Unknown (state, step) -> kTraceMiss naming
// the key.
std::unique_ptr<Predictor> open_replay_predictor(const std::filesystem::path& path);
std::unique_ptr<Predictor> make_replay_predictor(TraceFile trace);

// Wraps a predictor and records each distinct (state, step) query with its
// top-k rows.
class RecordingPredictor : public Predictor {
 public:
  RecordingPredictor(const Predictor& inner, std::size_t topk);

  TraceFile take_trace(TraceHeader header) const;
  std::size_t record_count() const noexcept { return records_.size(); }

 protected:
  MarginalEstimate evaluate(const SequenceState& state, std::size_t step) const override;

 private:
  const Predictor& inner_;
  std::size_t topk_;
  mutable std::map<std::pair<std::string, std::size_t>, TraceRecord> records_;
};

}  // namespace dllm
