#include "dllm/decoder.hpp"

#include <algorithm>
#include <string>

#include "dllm/error.hpp"

namespace dllm {

namespace {

template <typename Fn>
auto with_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(context);
  }
}

void check_scheduler(const SchedulerConfig& cfg, SchedulerKind expected) {
  cfg.validate();
  if (cfg.kind != expected) {
    fail(ErrorCode::kInvalidArgument,
         "decoder needs a " + to_string(expected) + " scheduler, got " + to_string(cfg.kind));
  }
}

}  // namespace

DecodeResult decode_static(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                           const DeterministicRng& rng) {
  check_scheduler(cfg, SchedulerKind::kGreedy);
  const NfeCounter before = predictor.counter();
  const TokenId mask = predictor.vocabulary().mask_id();
  SequenceState state = SequenceState::all_masked(schedule.length(), mask);
  DecodeResult result;
  for (std::size_t i = 0; i < schedule.step_count(); ++i) {
    with_context("static step " + std::to_string(i), [&] {
      const MarginalEstimate estimate = predictor.predict(state, i);
      DecisionSet decisions = greedy_schedule(estimate, state, i, i + 1, schedule, cfg, rng);
      state = apply_decisions(state, decisions, i + 1);
      result.path.push_back(std::move(decisions));
      result.cut_points.push_back(i + 1);
    });
  }
  result.tokens.assign(state.tokens().begin(), state.tokens().end());
  result.nfe = predictor.counter() - before;
  result.steps_taken = result.path.size();
  return result;
}

DecodeResult decode_threshold(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                              const DeterministicRng& rng) {
  check_scheduler(cfg, SchedulerKind::kThreshold);
  const NfeCounter before = predictor.counter();
  const TokenId mask = predictor.vocabulary().mask_id();
  SequenceState state = SequenceState::all_masked(schedule.length(), mask);
  DecodeResult result;
  std::size_t iteration = 0;
  while (!state.complete()) {
    with_context("threshold step " + std::to_string(iteration), [&] {
      const MarginalEstimate estimate = predictor.predict(state, iteration);
      DecisionSet decisions = threshold_schedule(estimate, state, *cfg.threshold, cfg, rng);
      state = apply_decisions(state, decisions, iteration + 1);
      result.path.push_back(std::move(decisions));
      result.cut_points.push_back(iteration + 1);
    });
    ++iteration;
  }
  result.tokens.assign(state.tokens().begin(), state.tokens().end());
  result.nfe = predictor.counter() - before;
  result.steps_taken = result.path.size();
  return result;
}

DecodeResult decode_freedave(Predictor& predictor, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                             std::size_t draft_steps, const DeterministicRng& rng) {
  require(draft_steps >= 1, "draft steps must be at least 1");
  check_scheduler(cfg, SchedulerKind::kGreedy);
  const NfeCounter before = predictor.counter();
  const TokenId mask = predictor.vocabulary().mask_id();
  const std::size_t n = schedule.step_count();

  DecodeResult result;
  SequenceState state = SequenceState::all_masked(schedule.length(), mask);
  MarginalEstimate estimate =
      with_context("initial forward", [&] { return predictor.predict(state, 0); });

  std::size_t i = 0;
  while (i < n) {
    with_context("round at step " + std::to_string(i), [&] {
      RoundRecord round;
      round.start_step = i;
      round.draft_count = std::min(draft_steps, n - i);

      // Drafts: jumps of 1..d_i steps from the single current estimate.
      std::vector<DecisionSet> jumps;
      for (std::size_t k = 1; k <= round.draft_count; ++k) {
        jumps.push_back(greedy_schedule(estimate, state, i, i + k, schedule, cfg, rng));
        round.drafts.push_back(apply_decisions(state, jumps.back(), i + k));
      }

      if (i == n - 1) {
        round.verified = false;
        round.accepted_step = n;
        state = round.drafts.front();
        result.path.push_back(std::move(jumps.front()));
        result.cut_points.push_back(n);
        result.rounds.push_back(std::move(round));
        i = n;
        return;
      }

      // A draft that already completes the sequence has nothing to verify.
      std::size_t batch_size = round.draft_count;
      if (round.drafts.back().complete()) --batch_size;
      std::vector<std::size_t> steps(batch_size);
      for (std::size_t k = 0; k < batch_size; ++k) steps[k] = i + k + 1;
      std::vector<MarginalEstimate> batch =
          predictor.predict_batch(std::span(round.drafts).first(batch_size), steps);
      result.peak_batch = std::max(result.peak_batch, batch_size);

      for (std::size_t k = 0; k < batch_size; ++k) {
        const std::size_t step = i + k + 1;
        const DecisionSet next = greedy_schedule(batch[k], round.drafts[k], step, step + 1, schedule, cfg, rng);
        round.targets.push_back(apply_decisions(round.drafts[k], next, step + 1));
      }

      std::size_t matched = 0;
      for (std::size_t k = 1; k < round.draft_count; ++k) {
        if (round.drafts[k] == round.targets[k - 1]) {
          ++matched;
        } else {
          break;
        }
      }
      round.matched = matched;
      round.accepted_step = i + matched + 1;

      state = round.drafts[matched];
      if (round.accepted_step < n) estimate = std::move(batch[matched]);
      result.path.push_back(std::move(jumps[matched]));
      result.cut_points.push_back(round.accepted_step);
      i = round.accepted_step;
      result.rounds.push_back(std::move(round));
    });
  }

  result.tokens.assign(state.tokens().begin(), state.tokens().end());
  result.nfe = predictor.counter() - before;
  result.steps_taken = result.path.size();
  return result;
}

std::size_t verifier_h(const RoundRecord& round, std::size_t draft_steps) {
  if (draft_steps == 1) return 1;
  return round.matched + 1;
}

SequenceState replay_path(const std::vector<DecisionSet>& path, std::size_t length, TokenId mask_id) {
  SequenceState state = SequenceState::all_masked(length, mask_id);
  for (std::size_t k = 0; k < path.size(); ++k) state = apply_decisions(state, path[k], k + 1);
  return state;
}

}  // namespace dllm
