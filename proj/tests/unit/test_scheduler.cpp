#include <doctest.h>

#include <set>

#include "cases.hpp"
#include "dllm/diffusion.hpp"
#include "dllm/decoder.hpp"
#include "dllm/error.hpp"
#include "dllm/scheduler.hpp"

using namespace dllm;

namespace {

constexpr TokenId M = 4;

// Rows over 4 tokens with `conf` on token (position % 4) and the rest spread.
MarginalEstimate with_confidences(const std::vector<std::pair<std::size_t, double>>& confs) {
  std::vector<std::size_t> pos;
  std::vector<double> probs;
  for (auto [p, c] : confs) {
    pos.push_back(p);
    for (std::size_t t = 0; t < 4; ++t) probs.push_back(t == p % 4 ? c : (1.0 - c) / 3.0);
  }
  return MarginalEstimate(pos, probs, 4);
}

SequenceState masked_at(std::size_t L, const std::vector<std::size_t>& masked) {
  std::vector<TokenId> t(L, 0);
  for (std::size_t p : masked) t[p] = M;
  return SequenceState(t, 0, M);
}

std::vector<std::size_t> positions_of(const DecisionSet& d) {
  std::vector<std::size_t> out;
  for (const Decision& e : d.entries()) out.push_back(e.position);
  return out;
}

}  // namespace

TEST_CASE("scheduler config") {
  CHECK_THROWS_AS(SchedulerConfig::greedy(4, SamplingMode::kArgmax, 0.0), Error);
  CHECK_THROWS_AS(SchedulerConfig::thresholded(0.0, 4), Error);
  CHECK_THROWS_AS(SchedulerConfig::thresholded(1.1, 4), Error);
  SchedulerConfig bad = SchedulerConfig::greedy(4);
  bad.threshold = 0.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_sampling_mode("position-keyed-stochastic") == SamplingMode::kStochastic);
  CHECK(parse_sampling_mode("deterministic-argmax") == SamplingMode::kArgmax);
  CHECK_THROWS_AS(parse_sampling_mode("beam"), Error);
}

TEST_CASE("temperature scaling") {
  const std::vector<double> row{0.5, 0.3, 0.2};
  CHECK(temperature_scale(row, 1.0) == row);
  const auto cold = temperature_scale(row, 0.5);
  CHECK(cold[0] == doctest::Approx(0.25 / 0.38));
  const auto hot = temperature_scale(row, 1e6);
  CHECK(hot[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("greedy schedule selection") {
  const auto sched = make_uniform_schedule(4, 4);
  const auto sched2 = make_uniform_schedule(4, 2);
  const DeterministicRng rng(0);
  const auto state = masked_at(4, {0, 1, 2});
  const auto est = with_confidences({{0, 0.3}, {1, 0.9}, {2, 0.5}});
  const auto full = SchedulerConfig::greedy(4);

  SUBCASE("quota 1 picks the top position") {
    const auto d = greedy_schedule(est, state, 0, 1, sched, full, rng);
    REQUIRE(d.size() == 1);
    CHECK(d.entries()[0].position == 1);
    CHECK(d.entries()[0].token == 1);
  }
  SUBCASE("quota 2 picks the top two") {
    CHECK(positions_of(greedy_schedule(est, state, 0, 2, sched, full, rng)) == std::vector<std::size_t>{1, 2});
    CHECK(positions_of(greedy_schedule(est, state, 0, 1, sched2, full, rng)) == std::vector<std::size_t>{1, 2});
  }
  SUBCASE("block priority forces the earliest block first") {
    const auto s = masked_at(4, {0, 2, 3});
    const auto e = with_confidences({{0, 0.1}, {2, 0.9}, {3, 0.8}});
    CHECK(positions_of(greedy_schedule(e, s, 0, 2, sched, SchedulerConfig::greedy(2), rng)) ==
          std::vector<std::size_t>{0, 2});
    CHECK(positions_of(greedy_schedule(e, s, 0, 2, sched, full, rng)) == std::vector<std::size_t>{2, 3});
  }
  SUBCASE("ties go to lower positions") {
    const auto e = with_confidences({{0, 0.4}, {1, 0.4}, {2, 0.4}});
    CHECK(positions_of(greedy_schedule(e, state, 0, 2, sched, full, rng)) == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("argmax ties go to the lower token id") {
    const MarginalEstimate e({0}, {0.1, 0.45, 0.45, 0.0}, 4);
    const auto d = greedy_schedule(e, masked_at(1, {0}), 0, 1, make_uniform_schedule(1, 1), full, rng);
    CHECK(d.entries()[0].token == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(greedy_schedule(est, state, 0, 4, sched, full, rng), Error);
    CHECK_THROWS_AS(greedy_schedule(MarginalEstimate{}, state, 0, 1, sched, full, rng), Error);
    CHECK_THROWS_AS(greedy_schedule(est, masked_at(4, {0, 1}), 0, 1, sched, full, rng), Error);
    CHECK_THROWS_AS(greedy_schedule(est, state, 2, 2, sched, full, rng), Error);
  }
}

TEST_CASE("stochastic token choice is keyed by position only") {
  const MarginalEstimate e({0, 1, 2}, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25}, 4);
  const auto cfg = SchedulerConfig::greedy(3, SamplingMode::kStochastic);
  const DeterministicRng rng(17);
  const auto all = choose_tokens(e, cfg, rng);
  const MarginalEstimate only2({2}, {0.25, 0.25, 0.25, 0.25}, 4);
  CHECK(choose_tokens(only2, cfg, rng)[0].token == all[2].token);
  for (const Candidate& c : all) {
    CHECK(c.token == inverse_cdf(e.row(c.position), rng.uniform("token", c.position)));
    CHECK(c.confidence == 0.25);
  }
}

TEST_CASE("threshold schedule") {
  const DeterministicRng rng(0);
  const auto state = masked_at(3, {0, 1, 2});
  SUBCASE("direct filter") {
    const auto e = with_confidences({{0, 0.95}, {1, 0.2}, {2, 0.97}});
    CHECK(positions_of(threshold_schedule(e, state, 0.9, SchedulerConfig::thresholded(0.9, 3), rng)) ==
          std::vector<std::size_t>{0, 2});
  }
  SUBCASE("fallback to the top position") {
    const auto e = with_confidences({{0, 0.3}, {1, 0.5}, {2, 0.4}});
    CHECK(positions_of(threshold_schedule(e, state, 0.9, SchedulerConfig::thresholded(0.9, 3), rng)) ==
          std::vector<std::size_t>{1});
  }
  SUBCASE("restricted to the earliest block") {
    const auto e = with_confidences({{0, 0.3}, {1, 0.95}, {2, 0.99}});
    CHECK(positions_of(threshold_schedule(e, state, 0.9, SchedulerConfig::thresholded(0.9, 2), rng)) ==
          std::vector<std::size_t>{1});
  }
  SUBCASE("confidence equal to tau passes") {
    const auto e = with_confidences({{0, 0.5}, {1, 0.5}, {2, 0.2}});
    CHECK(threshold_schedule(e, state, 0.5, SchedulerConfig::thresholded(0.5, 3), rng).size() == 2);
  }
}

TEST_CASE("greedy decisions have exactly the quota size and respect block priority") {
  for (std::uint64_t trial = 0; trial < 400; ++trial) {
    const testing::Case c = testing::random_case(0x51, trial, 16);
    auto p = c.predictor();
    const auto sched = c.schedule();
    const auto cfg = c.scheduler();
    const auto rng = c.rng();
    const auto state = SequenceState::all_masked(c.length, p->vocabulary().mask_id());
    const auto est = p->predict(state, 0);
    for (std::size_t j = 1; j <= c.steps; ++j) {
      const auto d = greedy_schedule(est, state, 0, j, sched, cfg, rng);
      REQUIRE(d.size() == unmask_quota(sched, 0, j));
      REQUIRE(d == greedy_schedule(est, state, 0, j, sched, cfg, rng));
      std::set<std::size_t> chosen;
      for (const Decision& e : d.entries()) chosen.insert(e.position);
      std::size_t max_block = 0;
      for (std::size_t pos : chosen) max_block = std::max(max_block, cfg.layout.block_of(pos));
      for (std::size_t pos = 0; pos < c.length; ++pos) {
        if (cfg.layout.block_of(pos) < max_block) REQUIRE(chosen.count(pos) == 1);
      }
    }
  }
}

TEST_CASE("context-free union property (exhaustive, L <= 6)") {
  const SamplingMode modes[] = {SamplingMode::kArgmax, SamplingMode::kStochastic};
  for (std::size_t L = 1; L <= 6; ++L) {
    for (std::size_t N = 1; N <= L; ++N) {
      for (std::size_t B : {std::size_t{1}, std::size_t{2}, L}) {
        for (SamplingMode mode : modes) {
          const Vocabulary v(5);
          std::vector<TokenId> target(L);
          for (std::size_t i = 0; i < L; ++i) target[i] = static_cast<TokenId>((3 * i + 1) % 5);
          auto p = make_table_predictor(v, target, 0.0, 0);
          const auto sched = make_uniform_schedule(L, N);
          const auto cfg = SchedulerConfig::greedy(B, mode);
          const DeterministicRng rng(L * 100 + N);
          const DecodeResult ref = decode_static(*p, cfg, sched, rng);
          SequenceState state = SequenceState::all_masked(L, v.mask_id());
          for (std::size_t i = 0; i < N; ++i) {
            const auto est = p->predict(state, i);
            std::vector<Decision> acc;
            for (std::size_t j = i + 1; j <= N; ++j) {
              const auto step = ref.path[j - 1].entries();
              acc = decision_union(acc, step);
              const auto jump = greedy_schedule(est, state, i, j, sched, cfg, rng);
              REQUIRE(std::vector<Decision>(jump.entries().begin(), jump.entries().end()) == acc);
            }
            state = apply_decisions(state, ref.path[i], i + 1);
          }
        }
      }
    }
  }
}
