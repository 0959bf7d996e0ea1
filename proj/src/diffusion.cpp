#include "dllm/diffusion.hpp"

#include <string>

#include "dllm/error.hpp"

namespace dllm {

TokenId inverse_cdf(std::span<const double> row, double u) {
  require(!row.empty(), "cannot sample from an empty row");
  double total = 0.0;
  for (double p : row) total += p;
  const double target = u * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t tok = 0; tok < row.size(); ++tok) {
    if (row[tok] <= 0.0) continue;
    last_positive = tok;
    cumulative += row[tok];
    if (target < cumulative) return static_cast<TokenId>(tok);
  }
  return static_cast<TokenId>(last_positive);
}

SequenceState forward_corrupt(const SequenceState& x0, double t, const AlphaSchedule& alpha,
                              const DeterministicRng& rng) {
  require(x0.masked_count() == 0, "forward corruption needs a fully unmasked sequence");
  const double keep = alpha(t);
  std::vector<TokenId> tokens(x0.tokens().begin(), x0.tokens().end());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rng.uniform("corrupt", i) >= keep) tokens[i] = x0.mask_id();
  }
  return SequenceState(std::move(tokens), x0.step_index(), x0.mask_id());
}

ReverseTransition reverse_transition(double t, double s, const AlphaSchedule& alpha) {
  require(s >= 0.0 && t <= 1.0, "time levels outside [0, 1]");
  require(s < t, "reverse transition needs s < t");
  const double at = alpha(t);
  const double as = alpha(s);
  if (at >= 1.0) fail(ErrorCode::kInvalidArgument, "degenerate schedule: alpha_t = 1 at t > 0");
  const double denom = 1.0 - at;
  return {(1.0 - as) / denom, (as - at) / denom};
}

SequenceState ancestral_sample_step(const SequenceState& state, const MarginalEstimate& estimate, double t, double s,
                                    const AlphaSchedule& alpha, const DeterministicRng& rng) {
  std::vector<TokenId> tokens(state.tokens().begin(), state.tokens().end());
  if (state.masked_count() == 0) return SequenceState(std::move(tokens), state.step_index() + 1, state.mask_id());
  const ReverseTransition kernel = reverse_transition(t, s, alpha);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != state.mask_id()) continue;
    if (!estimate.covers(i)) {
      fail(ErrorCode::kInvalidArgument, "estimate misses masked position " + std::to_string(i));
    }
    if (rng.uniform("unmask", i) < kernel.unmask_prob) {
      tokens[i] = inverse_cdf(estimate.row(i), rng.uniform("ancestral-token", i));
    }
  }
  return SequenceState(std::move(tokens), state.step_index() + 1, state.mask_id());
}

}  // namespace dllm
