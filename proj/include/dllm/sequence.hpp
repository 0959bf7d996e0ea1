#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dllm/vocabulary.hpp"

namespace dllm {

class TimeSchedule;

struct Decision {
  std::size_t position;
  TokenId token;

  friend auto operator<=>(const Decision&, const Decision&) = default;
};

// Unmask decisions of one jump, kept sorted by position. Positions are
// pairwise distinct and no token is the mask id.
class DecisionSet {
 public:
  DecisionSet() = default;
  DecisionSet(std::vector<Decision> entries, TokenId mask_id);

  std::span<const Decision> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const DecisionSet&, const DecisionSet&) = default;

 private:
  std::vector<Decision> entries_;
};

// Set union of decision lists as sorted (position, token) pairs. Two
// conflicting tokens for one position both survive, so the result is a plain
// list that can be compared against a DecisionSet's entries.
std::vector<Decision> decision_union(std::span<const Decision> a, std::span<const Decision> b);

// Immutable token array at a schedule step; mask_id marks masked slots.
class SequenceState {
 public:
  SequenceState(std::vector<TokenId> tokens, std::size_t step_index, TokenId mask_id);

  static SequenceState all_masked(std::size_t length, TokenId mask_id);

  std::span<const TokenId> tokens() const noexcept { return tokens_; }
  std::size_t length() const noexcept { return tokens_.size(); }
  std::size_t step_index() const noexcept { return step_index_; }
  TokenId mask_id() const noexcept { return mask_id_; }

  bool is_masked(std::size_t position) const { return tokens_.at(position) == mask_id_; }
  std::size_t masked_count() const noexcept;
  std::vector<std::size_t> masked_positions() const;
  bool complete() const noexcept { return masked_count() == 0; }

  // Masked count matches L minus the quota through step_index.
  bool conforms_to(const TimeSchedule& schedule) const;

  // Equality compares tokens only; the step is bookkeeping.
  friend bool operator==(const SequenceState& a, const SequenceState& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<TokenId> tokens_;
  std::size_t step_index_;
  TokenId mask_id_;
};

// New state with decisions written and step advanced. Throws
// kContractViolation when a decision targets an unmasked slot.
SequenceState apply_decisions(const SequenceState& state, const DecisionSet& decisions, std::size_t target_step);

}  // namespace dllm
