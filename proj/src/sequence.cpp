#include "dllm/sequence.hpp"

#include <algorithm>
#include <string>

#include "dllm/error.hpp"
#include "dllm/schedule.hpp"

namespace dllm {

DecisionSet::DecisionSet(std::vector<Decision> entries, TokenId mask_id) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    require(entries_[k].token != mask_id, "decision token is the mask id");
    if (k > 0 && entries_[k].position == entries_[k - 1].position) {
      fail(ErrorCode::kInvalidArgument, "duplicate decision position " + std::to_string(entries_[k].position));
    }
  }
}

std::vector<Decision> decision_union(std::span<const Decision> a, std::span<const Decision> b) {
  std::vector<Decision> sa(a.begin(), a.end());
  std::vector<Decision> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<Decision> out;
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
  return out;
}

SequenceState::SequenceState(std::vector<TokenId> tokens, std::size_t step_index, TokenId mask_id)
    : tokens_(std::move(tokens)), step_index_(step_index), mask_id_(mask_id) {}

SequenceState SequenceState::all_masked(std::size_t length, TokenId mask_id) {
  return SequenceState(std::vector<TokenId>(length, mask_id), 0, mask_id);
}

std::size_t SequenceState::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count(tokens_.begin(), tokens_.end(), mask_id_));
}

std::vector<std::size_t> SequenceState::masked_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == mask_id_) out.push_back(i);
  }
  return out;
}

bool SequenceState::conforms_to(const TimeSchedule& schedule) const {
  if (step_index_ > schedule.step_count() || length() != schedule.length()) return false;
  return masked_count() == length() - schedule.revealed_through(step_index_);
}

SequenceState apply_decisions(const SequenceState& state, const DecisionSet& decisions, std::size_t target_step) {
  require(target_step > state.step_index(), "target step must advance the state");
  std::vector<TokenId> tokens(state.tokens().begin(), state.tokens().end());
  for (const Decision& d : decisions.entries()) {
    if (d.position >= tokens.size()) {
      fail(ErrorCode::kContractViolation, "decision position " + std::to_string(d.position) + " out of range");
    }
    if (tokens[d.position] != state.mask_id()) {
      fail(ErrorCode::kContractViolation,
           "decision on unmasked position " + std::to_string(d.position) + " (scheduler contract broken)");
    }
    if (d.token == state.mask_id()) {
      fail(ErrorCode::kContractViolation, "decision writes the mask id");
    }
    tokens[d.position] = d.token;
  }
  return SequenceState(std::move(tokens), target_step, state.mask_id());
}

}  // namespace dllm
