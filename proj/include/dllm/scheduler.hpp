#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dllm/predictor.hpp"
#include "dllm/rng.hpp"
#include "dllm/schedule.hpp"
#include "dllm/sequence.hpp"

namespace dllm {

enum class SchedulerKind { kGreedy, kThreshold };
enum class SamplingMode { kArgmax, kStochastic };

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::kGreedy;
  std::optional<double> threshold;  // iff kind == kThreshold
  BlockLayout layout{1};
  SamplingMode sampling = SamplingMode::kArgmax;
  double temperature = 1.0;

  void validate() const;

  static SchedulerConfig greedy(std::size_t block_size, SamplingMode sampling = SamplingMode::kArgmax,
                                double temperature = 1.0);
  static SchedulerConfig thresholded(double tau, std::size_t block_size,
                                     SamplingMode sampling = SamplingMode::kArgmax, double temperature = 1.0);
};

std::string to_string(SchedulerKind kind);
std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& text);

// Token and confidence picked for one masked slot.
struct Candidate {
  std::size_t position;
  TokenId token;
  double confidence;
};

// Row after temperature scaling: (p / max)^(1/T), renormalized. T == 1 is the
// identity.
std::vector<double> temperature_scale(std::span<const double> row, double temperature);

// Token choice for every row of the estimate: argmax (ties -> lower id) or an
// inverse-CDF draw keyed by (seed, "token", absolute position).
std::vector<Candidate> choose_tokens(const MarginalEstimate& estimate, const SchedulerConfig& cfg,
                                     const DeterministicRng& rng);

// Greedy remasking g(x0, t_i, t_j): exactly unmask_quota(i, j) decisions.
// Blocks are filled left to right; inside a block slots go by confidence
// descending, ties to the lower position.
DecisionSet greedy_schedule(const MarginalEstimate& estimate, const SequenceState& state, std::size_t i,
                            std::size_t j, const TimeSchedule& schedule, const SchedulerConfig& cfg,
                            const DeterministicRng& rng);

// Threshold remasking inside the earliest block that still has masks: every
// slot with confidence >= tau, or the single best slot if none qualifies.
DecisionSet threshold_schedule(const MarginalEstimate& estimate, const SequenceState& state, double tau,
                               const SchedulerConfig& cfg, const DeterministicRng& rng);

}  // namespace dllm
