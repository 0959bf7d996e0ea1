#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dllm/decoder.hpp"

namespace dllm {

inline constexpr std::size_t kDefaultPathLabCap = 14;

// Cut points 0..N; edge (i, j) iff the direct jump from oracle state i to
// step j makes exactly the union of oracle decisions i..j-1.
class FeasibleGraph {
 public:
  explicit FeasibleGraph(std::size_t step_count);

  // Hand-built graph from an edge list; single-step edges are added.
  static FeasibleGraph from_edges(std::size_t step_count, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t step_count() const noexcept { return step_count_; }
  bool has_edge(std::size_t i, std::size_t j) const;
  void add_edge(std::size_t i, std::size_t j);
  std::size_t edge_count() const;
  bool is_complete() const;
  bool contains_path(const std::vector<std::size_t>& cut_points) const;

  std::vector<SequenceState> oracle_states;      // x_{t_0} .. x_{t_N}
  std::vector<DecisionSet> oracle_decisions;     // I_{t_i -> t_{i+1}}
  std::vector<MarginalEstimate> oracle_estimates;  // f(x_{t_i}) for i < N

 private:
  std::size_t step_count_;
  std::vector<bool> adjacency_;
};

struct PathLabInput {
  Predictor& predictor;
  const SchedulerConfig& cfg;
  const TimeSchedule& schedule;
  DeterministicRng rng{};
  std::size_t cap = kDefaultPathLabCap;
};

FeasibleGraph build_feasible_graph(const PathLabInput& in);

struct OptimalPath {
  std::vector<std::size_t> cut_points;
  std::size_t length = 0;    // number of jumps
  std::size_t max_span = 0;  // largest single jump
};

// Fewest-jump path 0 -> N; among ties, the lexicographically longest-first
// jumps.
OptimalPath optimal_path(const FeasibleGraph& graph);

// Greedy verifier walk from node 0: at each node take the longest run of
// consecutive chain merges (set form), capped by d.
std::vector<std::size_t> greedy_verifier_path(const FeasibleGraph& graph, const SchedulerConfig& cfg,
                                              const TimeSchedule& schedule, std::size_t draft_steps,
                                              const DeterministicRng& rng);
std::vector<std::size_t> greedy_verifier_path(const PathLabInput& in, std::size_t draft_steps);

struct LemmaReport {
  OptimalPath optimal;
  std::vector<std::size_t> greedy_at_span;
  std::vector<std::size_t> greedy_at_length;
  bool agree_at_span = false;
  bool agree_at_length = false;
  bool complete_graph = false;
  bool agree() const { return agree_at_span && agree_at_length; }
};

LemmaReport check_lemma(const FeasibleGraph& graph, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                        const DeterministicRng& rng);
LemmaReport check_lemma(const PathLabInput& in);

nlohmann::json to_json(const FeasibleGraph& graph);
nlohmann::json to_json(const LemmaReport& report);

}  // namespace dllm
