#pragma once

#include <cstddef>
#include <vector>

#include "dllm/predictor.hpp"
#include "dllm/rng.hpp"
#include "dllm/schedule.hpp"
#include "dllm/scheduler.hpp"
#include "dllm/sequence.hpp"

namespace dllm {

// One draft-and-verify round starting at step `start_step`.
//
// drafts[k-1] is the state at step start+k built from the round's single
// estimate; targets[k-1] is drafts[k-1] advanced one greedy step under its own
// batch estimate. A draft that completes the sequence has no target, so
// targets may be one shorter than drafts. `matched` counts consecutive
// agreements drafts[k] == targets[k-1].
struct RoundRecord {
  std::size_t start_step = 0;
  std::size_t draft_count = 0;
  std::vector<SequenceState> drafts;
  std::vector<SequenceState> targets;
  std::size_t matched = 0;
  std::size_t accepted_step = 0;
  bool verified = true;  // false for the final single-step round, which skips the batch forward
};

struct DecodeResult {
  std::vector<TokenId> tokens;
  std::vector<DecisionSet> path;
  std::vector<RoundRecord> rounds;  // draft-and-verify decoding only
  NfeCounter nfe;
  std::size_t steps_taken = 0;
  std::size_t peak_batch = 1;

  // Step index reached after each path element; starts after step 0.
  std::vector<std::size_t> cut_points;
};

// One greedy step per schedule step; the realized path is the oracle path.
DecodeResult decode_static(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                           const DeterministicRng& rng = DeterministicRng{});

// Threshold-parallel decoding until no mask remains. The step passed to the
// predictor and stored on each state is the iteration count.
DecodeResult decode_threshold(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                              const DeterministicRng& rng = DeterministicRng{});

// Lossless draft-and-verify decoding with up to `draft_steps` drafts per round.
DecodeResult decode_freedave(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                             std::size_t draft_steps, const DeterministicRng& rng = DeterministicRng{});

// Steps advanced by a round: 1 when d == 1, else matched + 1.
std::size_t verifier_h(const RoundRecord& round, std::size_t draft_steps);

// Replays a path from the all-mask state.
SequenceState replay_path(const std::vector<DecisionSet>& path, std::size_t length, TokenId mask_id);

}  // namespace dllm
