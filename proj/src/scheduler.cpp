#include "dllm/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "dllm/diffusion.hpp"
#include "dllm/error.hpp"

namespace dllm {

void SchedulerConfig::validate() const {
  require(temperature > 0.0 && std::isfinite(temperature), "temperature must be positive");
  if (kind == SchedulerKind::kThreshold) {
    require(threshold.has_value(), "threshold scheduler needs tau");
    require(*threshold > 0.0 && *threshold <= 1.0, "tau must lie in (0, 1]");
  } else {
    require(!threshold.has_value(), "tau is only valid for the threshold scheduler");
  }
}

SchedulerConfig SchedulerConfig::greedy(std::size_t block_size, SamplingMode sampling, double temperature) {
  SchedulerConfig cfg{SchedulerKind::kGreedy, std::nullopt, BlockLayout(block_size), sampling, temperature};
  cfg.validate();
  return cfg;
}

SchedulerConfig SchedulerConfig::thresholded(double tau, std::size_t block_size, SamplingMode sampling,
                                             double temperature) {
  SchedulerConfig cfg{SchedulerKind::kThreshold, tau, BlockLayout(block_size), sampling, temperature};
  cfg.validate();
  return cfg;
}

std::string to_string(SchedulerKind kind) { return kind == SchedulerKind::kGreedy ? "greedy" : "threshold"; }

std::string to_string(SamplingMode mode) { return mode == SamplingMode::kArgmax ? "argmax" : "stochastic"; }

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "argmax" || text == "deterministic-argmax") return SamplingMode::kArgmax;
  if (text == "stochastic" || text == "position-keyed-stochastic") return SamplingMode::kStochastic;
  fail(ErrorCode::kConfig, "unknown sampling mode '" + text + "'");
}

std::vector<double> temperature_scale(std::span<const double> row, double temperature) {
  std::vector<double> out(row.begin(), row.end());
  if (temperature == 1.0 || out.empty()) return out;
  const double peak = *std::max_element(out.begin(), out.end());
  if (peak <= 0.0) return out;
  double total = 0.0;
  for (double& p : out) {
    p = p > 0.0 ? std::pow(p / peak, 1.0 / temperature) : 0.0;
    total += p;
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<Candidate> choose_tokens(const MarginalEstimate& estimate, const SchedulerConfig& cfg,
                                     const DeterministicRng& rng) {
  std::vector<Candidate> out;
  out.reserve(estimate.row_count());
  for (std::size_t k = 0; k < estimate.row_count(); ++k) {
    const std::size_t position = estimate.positions()[k];
    const std::vector<double> row = temperature_scale(estimate.row_at(k), cfg.temperature);
    TokenId token = 0;
    if (cfg.sampling == SamplingMode::kArgmax) {
      // max_element keeps the first maximum: ties go to the lower id.
      token = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    } else {
      token = inverse_cdf(row, rng.uniform("token", position));
    }
    out.push_back({position, token, row[static_cast<std::size_t>(token)]});
  }
  return out;
}

namespace {

void check_alignment(const MarginalEstimate& estimate, const SequenceState& state) {
  require(!estimate.empty(), "empty estimate");
  const auto masked = state.masked_positions();
  require(std::equal(masked.begin(), masked.end(), estimate.positions().begin(), estimate.positions().end()),
          "estimate rows do not match the state's masked positions");
}

// Block ascending, confidence descending, position ascending.
void rank(std::vector<Candidate>& c, const BlockLayout& layout) {
  std::sort(c.begin(), c.end(), [&](const Candidate& a, const Candidate& b) {
    const std::size_t ba = layout.block_of(a.position);
    const std::size_t bb = layout.block_of(b.position);
    if (ba != bb) return ba < bb;
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.position < b.position;
  });
}

DecisionSet to_decisions(std::vector<Candidate>::const_iterator first, std::vector<Candidate>::const_iterator last,
                         TokenId mask_id) {
  std::vector<Decision> entries;
  for (auto it = first; it != last; ++it) entries.push_back({it->position, it->token});
  return DecisionSet(std::move(entries), mask_id);
}

}  // namespace

DecisionSet greedy_schedule(const MarginalEstimate& estimate, const SequenceState& state, std::size_t i,
                            std::size_t j, const TimeSchedule& schedule, const SchedulerConfig& cfg,
                            const DeterministicRng& rng) {
  check_alignment(estimate, state);
  const std::size_t quota = unmask_quota(schedule, i, j);
  if (quota > estimate.row_count()) {
    fail(ErrorCode::kInvalidArgument, "quota " + std::to_string(quota) + " exceeds the " +
                                          std::to_string(estimate.row_count()) + " masked positions");
  }
  auto candidates = choose_tokens(estimate, cfg, rng);
  rank(candidates, cfg.layout);
  return to_decisions(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(quota), state.mask_id());
}

DecisionSet threshold_schedule(const MarginalEstimate& estimate, const SequenceState& state, double tau,
                               const SchedulerConfig& cfg, const DeterministicRng& rng) {
  check_alignment(estimate, state);
  auto candidates = choose_tokens(estimate, cfg, rng);
  rank(candidates, cfg.layout);
  const std::size_t block = cfg.layout.block_of(candidates.front().position);
  auto block_end = std::find_if(candidates.begin(), candidates.end(),
                                [&](const Candidate& c) { return cfg.layout.block_of(c.position) != block; });
  // Within the block the candidates are sorted by confidence, so the passing
  // ones form a prefix.
  auto pass_end = std::find_if(candidates.begin(), block_end, [&](const Candidate& c) { return c.confidence < tau; });
  if (pass_end == candidates.begin()) pass_end = candidates.begin() + 1;
  return to_decisions(candidates.begin(), pass_end, state.mask_id());
}

}  // namespace dllm
