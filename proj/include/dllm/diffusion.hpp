#pragma once

#include "dllm/predictor.hpp"
#include "dllm/rng.hpp"
#include "dllm/schedule.hpp"
#include "dllm/sequence.hpp"

namespace dllm {

// Per-position reverse kernel for a masked slot when stepping t -> s.
struct ReverseTransition {
  double stay_mask_prob;
  double unmask_prob;
};

// Keeps each token with probability alpha_t, otherwise absorbs it into the
// mask. Draws are keyed by position on the "corrupt" stream, so calls at two
// time levels with the same rng nest: the masked set at the larger t contains
// the masked set at the smaller one.
SequenceState forward_corrupt(const SequenceState& x0, double t, const AlphaSchedule& alpha,
                              const DeterministicRng& rng);

// unmask = (alpha_s - alpha_t) / (1 - alpha_t), stay = (1 - alpha_s) / (1 - alpha_t).
ReverseTransition reverse_transition(double t, double s, const AlphaSchedule& alpha);

// One raw ancestral step t -> s: each masked slot unmasks independently with
// the reverse-transition probability and draws its token by inverse CDF.
SequenceState ancestral_sample_step(const SequenceState& state, const MarginalEstimate& estimate, double t, double s,
                                    const AlphaSchedule& alpha, const DeterministicRng& rng);

// Inverse-CDF draw over ascending token ids; u in [0, 1).
TokenId inverse_cdf(std::span<const double> row, double u);

}  // namespace dllm
