#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dllm/decoder.hpp"
#include "dllm/predictor.hpp"
#include "dllm/rng.hpp"
#include "dllm/run_config.hpp"
#include "dllm/schedule.hpp"
#include "dllm/scheduler.hpp"

namespace dllm::testing {

// One randomized decode configuration. sensitivity < 0 selects the n-gram
// predictor over a synthetic corpus.
struct Case {
  std::size_t length = 8;
  std::size_t steps = 8;
  std::int32_t vocab = 5;
  double sensitivity = 0.0;
  SamplingMode sampling = SamplingMode::kArgmax;
  std::size_t draft_steps = 1;
  std::size_t block_size = 8;
  std::uint64_t seed = 0;

  bool ngram() const { return sensitivity < 0.0; }

  std::string describe() const {
    std::ostringstream os;
    os << "L=" << length << " N=" << steps << " V=" << vocab << " pred="
       << (ngram() ? std::string("ngram") : "table(" + std::to_string(sensitivity) + ")")
       << " sampling=" << to_string(sampling) << " d=" << draft_steps << " B=" << block_size << " seed=" << seed;
    return os.str();
  }

  TimeSchedule schedule() const { return make_uniform_schedule(length, steps); }
  SchedulerConfig scheduler() const { return SchedulerConfig::greedy(block_size, sampling); }
  DeterministicRng rng() const { return DeterministicRng(seed); }

  std::unique_ptr<Predictor> predictor() const {
    const Vocabulary v(vocab);
    const DeterministicRng r(seed ^ 0x5eedULL);
    if (ngram()) return make_ngram_predictor(v, make_synthetic_corpus(v, 6, 3 * length, seed));
    std::vector<TokenId> target(length);
    for (std::size_t i = 0; i < length; ++i) target[i] = static_cast<TokenId>(r.bits("target", i) % vocab);
    return make_table_predictor(v, target, sensitivity, seed);
  }
};

inline std::size_t pick(const DeterministicRng& r, std::string_view label, std::size_t index, std::size_t n) {
  return static_cast<std::size_t>(r.bits(label, index) % n);
}

// Draws case `index` of a suite. Lengths, vocabularies, predictors,
// sampling modes, draft steps and block sizes are all mixed.
inline Case random_case(std::uint64_t suite_seed, std::size_t index, std::size_t max_length = 32,
                        std::size_t max_steps = 32) {
  static constexpr double kSensitivities[] = {0.0, 0.25, 0.5, 0.8, 1.0, -1.0};
  static constexpr std::size_t kDrafts[] = {1, 2, 4, 8, 32};
  const DeterministicRng r(suite_seed);
  Case c;
  c.length = 1 + pick(r, "length", index, max_length);
  c.steps = 1 + pick(r, "steps", index, std::min(c.length, max_steps));
  if (pick(r, "full-steps", index, 2) == 0) c.steps = std::min(c.length, max_steps);
  c.vocab = static_cast<std::int32_t>(2 + pick(r, "vocab", index, 16));
  c.sensitivity = kSensitivities[index % 6];
  c.sampling = (index / 6) % 2 == 0 ? SamplingMode::kArgmax : SamplingMode::kStochastic;
  c.draft_steps = kDrafts[(index / 12) % 5];
  const std::size_t blocks[] = {1, 4, c.length};
  c.block_size = blocks[(index / 60) % 3];
  c.seed = r.bits("seed", index);
  return c;
}

inline std::size_t accepted_steps(const DecodeResult& r) {
  std::size_t total = 0;
  for (const RoundRecord& round : r.rounds) total += round.accepted_step - round.start_step;
  return total;
}

inline std::size_t verified_rounds(const DecodeResult& r) {
  std::size_t n = 0;
  for (const RoundRecord& round : r.rounds) n += round.verified ? 1 : 0;
  return n;
}

}  // namespace dllm::testing
