#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dllm/sequence.hpp"
#include "dllm/vocabulary.hpp"

namespace dllm {

// Dense categorical rows, one per masked position of the queried state.
class MarginalEstimate {
 public:
  MarginalEstimate() = default;
  MarginalEstimate(std::vector<std::size_t> positions, std::vector<double> probs, std::size_t vocab_size);

  std::span<const std::size_t> positions() const noexcept { return positions_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t row_count() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }

  bool covers(std::size_t position) const;
  // Row for an absolute position; throws if the position is not covered.
  std::span<const double> row(std::size_t position) const;
  std::span<const double> row_at(std::size_t index) const;

  // Max |sum(row) - 1| over all rows.
  double max_normalization_error() const;

  friend bool operator==(const MarginalEstimate&, const MarginalEstimate&) = default;

 private:
  std::vector<std::size_t> positions_;
  std::vector<double> probs_;
  std::size_t vocab_size_ = 0;
};

struct NfeCounter {
  // Predictor invocations; a batch counts once.
  std::uint64_t forward_calls = 0;
  // Sum of batch sizes.
  std::uint64_t sequence_evaluations = 0;

  NfeCounter operator-(const NfeCounter& o) const {
    return {forward_calls - o.forward_calls, sequence_evaluations - o.sequence_evaluations};
  }
  friend bool operator==(const NfeCounter&, const NfeCounter&) = default;
};

// The marginal predictor f(x_t, t). Implementations supply evaluate(); the
// base class owns NFE accounting and input checks. Outputs must depend only on
// (state tokens, step), never on call history or batch composition.
class Predictor {
 public:
  explicit Predictor(Vocabulary vocab) : vocab_(vocab) {}
  virtual ~Predictor() = default;

  Predictor(const Predictor&) = delete;
  Predictor& operator=(const Predictor&) = delete;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  MarginalEstimate predict(const SequenceState& state, std::size_t step);
  std::vector<MarginalEstimate> predict_batch(std::span<const SequenceState> states,
                                              std::span<const std::size_t> steps);

  const NfeCounter& counter() const noexcept { return counter_; }
  void reset_counter() noexcept { counter_ = {}; }

 protected:
  virtual MarginalEstimate evaluate(const SequenceState& state, std::size_t step) const = 0;

  // Lets wrappers evaluate an inner predictor without touching its counter.
  static MarginalEstimate evaluate_inner(const Predictor& inner, const SequenceState& state, std::size_t step) {
    return inner.evaluate(state, step);
  }

 private:
  void check_state(const SequenceState& state) const;

  Vocabulary vocab_;
  NfeCounter counter_;
};

// Synthetic predictor with tunable context sensitivity. Row for masked slot i:
//   (1 - sigma) * base_i + sigma * perturb_i
// base_i peaks at target[i] with mass 0.6 + 0.4 * (i mod 3) / 2; perturb_i is
// drawn from a hash of (seed, i, revealed (position, token) pairs).
std::unique_ptr<Predictor> make_table_predictor(const Vocabulary& vocab, std::vector<TokenId> target,
                                                double sensitivity, std::uint64_t seed);

// Stable hash of the revealed (position, token) pairs of a state, in
// ascending position order, folded onto the seed.
std::uint64_t context_hash(const SequenceState& state, std::uint64_t seed);

// Bidirectional bigram predictor with add-one smoothing:
//   0.4 * P(tok | nearest left) + 0.4 * P_rev(tok | nearest right) + 0.2 * P(tok)
// A missing neighbor moves its weight onto the unigram term.
std::unique_ptr<Predictor> make_ngram_predictor(const Vocabulary& vocab,
                                                const std::vector<std::vector<TokenId>>& corpus, int order = 2);

}  // namespace dllm
