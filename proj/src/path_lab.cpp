#include "dllm/path_lab.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>

#include "dllm/error.hpp"

namespace dllm {

FeasibleGraph::FeasibleGraph(std::size_t step_count)
    : step_count_(step_count), adjacency_((step_count + 1) * (step_count + 1), false) {
  for (std::size_t i = 0; i < step_count_; ++i) add_edge(i, i + 1);
}

FeasibleGraph FeasibleGraph::from_edges(std::size_t step_count,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  FeasibleGraph g(step_count);
  for (auto [i, j] : edges) g.add_edge(i, j);
  return g;
}

bool FeasibleGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i >= j || j > step_count_) return false;
  return adjacency_[i * (step_count_ + 1) + j];
}

void FeasibleGraph::add_edge(std::size_t i, std::size_t j) {
  require(i < j && j <= step_count_, "edge must satisfy i < j <= N");
  adjacency_[i * (step_count_ + 1) + j] = true;
}

std::size_t FeasibleGraph::edge_count() const {
  return static_cast<std::size_t>(std::count(adjacency_.begin(), adjacency_.end(), true));
}

bool FeasibleGraph::is_complete() const {
  return edge_count() == step_count_ * (step_count_ + 1) / 2;
}

bool FeasibleGraph::contains_path(const std::vector<std::size_t>& cut_points) const {
  if (cut_points.size() < 2 || cut_points.front() != 0 || cut_points.back() != step_count_) return false;
  for (std::size_t k = 1; k < cut_points.size(); ++k) {
    if (!has_edge(cut_points[k - 1], cut_points[k])) return false;
  }
  return true;
}

namespace {

std::vector<Decision> oracle_union(const FeasibleGraph& g, std::size_t i, std::size_t j) {
  std::vector<Decision> out;
  for (std::size_t k = i; k < j; ++k) out = decision_union(out, g.oracle_decisions[k].entries());
  return out;
}

bool same_entries(const DecisionSet& d, const std::vector<Decision>& u) {
  return std::equal(d.entries().begin(), d.entries().end(), u.begin(), u.end());
}

}  // namespace

FeasibleGraph build_feasible_graph(const PathLabInput& in) {
  const std::size_t n = in.schedule.step_count();
  if (n > in.cap) {
    fail(ErrorCode::kSizeLimit,
         "path lab step count " + std::to_string(n) + " exceeds the cap of " + std::to_string(in.cap));
  }
  require(in.cfg.kind == SchedulerKind::kGreedy, "path lab needs the greedy scheduler");
  FeasibleGraph g(n);

  SequenceState state = SequenceState::all_masked(in.schedule.length(), in.predictor.vocabulary().mask_id());
  g.oracle_states.push_back(state);
  for (std::size_t i = 0; i < n; ++i) {
    g.oracle_estimates.push_back(in.predictor.predict(state, i));
    g.oracle_decisions.push_back(greedy_schedule(g.oracle_estimates.back(), state, i, i + 1, in.schedule, in.cfg, in.rng));
    state = apply_decisions(state, g.oracle_decisions.back(), i + 1);
    g.oracle_states.push_back(state);
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j <= n; ++j) {
      const DecisionSet direct =
          greedy_schedule(g.oracle_estimates[i], g.oracle_states[i], i, j, in.schedule, in.cfg, in.rng);
      if (same_entries(direct, oracle_union(g, i, j))) g.add_edge(i, j);
    }
  }
  return g;
}

OptimalPath optimal_path(const FeasibleGraph& graph) {
  const std::size_t n = graph.step_count();
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  // BFS backwards from N gives every node's fewest-jump distance to the end.
  std::vector<std::size_t> dist(n + 1, kUnreached);
  dist[n] = 0;
  std::deque<std::size_t> queue{n};
  while (!queue.empty()) {
    const std::size_t w = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < w; ++v) {
      if (graph.has_edge(v, w) && dist[v] == kUnreached) {
        dist[v] = dist[w] + 1;
        queue.push_back(v);
      }
    }
  }

  OptimalPath out;
  out.cut_points.push_back(0);
  std::size_t v = 0;
  while (v < n) {
    std::size_t next = v + 1;
    for (std::size_t w = n; w > v; --w) {
      if (graph.has_edge(v, w) && dist[w] + 1 == dist[v]) {
        next = w;
        break;
      }
    }
    out.max_span = std::max(out.max_span, next - v);
    out.cut_points.push_back(next);
    v = next;
  }
  out.length = out.cut_points.size() - 1;
  return out;
}

std::vector<std::size_t> greedy_verifier_path(const FeasibleGraph& graph, const SchedulerConfig& cfg,
                                              const TimeSchedule& schedule, std::size_t draft_steps,
                                              const DeterministicRng& rng) {
  require(draft_steps >= 1, "draft steps must be at least 1");
  const std::size_t n = graph.step_count();
  require(graph.oracle_states.size() == n + 1, "graph carries no oracle states");
  std::vector<std::size_t> cuts{0};
  std::size_t node = 0;
  while (node < n) {
    const std::size_t dn = std::min(draft_steps, n - node);
    std::size_t matched = 0;
    if (draft_steps >= 2) {
      const MarginalEstimate& estimate = graph.oracle_estimates[node];
      const SequenceState& base = graph.oracle_states[node];
      for (std::size_t i = 1; i < dn; ++i) {
        // I_{n -> n+i+1} == I_{n -> n+i} u I_{n+i -> n+i+1}
        const DecisionSet longer = greedy_schedule(estimate, base, node, node + i + 1, schedule, cfg, rng);
        const DecisionSet shorter = greedy_schedule(estimate, base, node, node + i, schedule, cfg, rng);
        const auto chained = decision_union(shorter.entries(), graph.oracle_decisions[node + i].entries());
        if (!same_entries(longer, chained)) break;
        ++matched;
      }
    }
    node += matched + 1;
    cuts.push_back(node);
  }
  return cuts;
}

std::vector<std::size_t> greedy_verifier_path(const PathLabInput& in, std::size_t draft_steps) {
  const FeasibleGraph graph = build_feasible_graph(in);
  return greedy_verifier_path(graph, in.cfg, in.schedule, draft_steps, in.rng);
}

LemmaReport check_lemma(const FeasibleGraph& graph, const SchedulerConfig& cfg, const TimeSchedule& schedule,
                        const DeterministicRng& rng) {
  LemmaReport report;
  report.optimal = optimal_path(graph);
  report.complete_graph = graph.is_complete();
  report.greedy_at_span = greedy_verifier_path(graph, cfg, schedule, report.optimal.max_span, rng);
  report.greedy_at_length = greedy_verifier_path(graph, cfg, schedule, schedule.length(), rng);
  report.agree_at_span = report.greedy_at_span.size() - 1 == report.optimal.length;
  report.agree_at_length = report.greedy_at_length.size() - 1 == report.optimal.length;
  return report;
}

LemmaReport check_lemma(const PathLabInput& in) {
  const FeasibleGraph graph = build_feasible_graph(in);
  return check_lemma(graph, in.cfg, in.schedule, in.rng);
}

nlohmann::json to_json(const FeasibleGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i <= graph.step_count(); ++i) {
    for (std::size_t j = i + 1; j <= graph.step_count(); ++j) {
      if (graph.has_edge(i, j)) edges.push_back({i, j});
    }
  }
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : graph.oracle_states) {
    nlohmann::json row = nlohmann::json::array();
    for (TokenId t : s.tokens()) row.push_back(t == s.mask_id() ? -1 : t);
    states.push_back(row);
  }
  return {{"steps", graph.step_count()}, {"edges", edges}, {"complete", graph.is_complete()}, {"oracle_states", states}};
}

nlohmann::json to_json(const LemmaReport& report) {
  return {{"optimal_path", report.optimal.cut_points},
          {"optimal_length", report.optimal.length},
          {"optimal_max_span", report.optimal.max_span},
          {"greedy_path_at_span", report.greedy_at_span},
          {"greedy_path_at_length", report.greedy_at_length},
          {"agree_at_span", report.agree_at_span},
          {"agree_at_length", report.agree_at_length},
          {"complete_graph", report.complete_graph},
          {"agree", report.agree()}};
}

}  // namespace dllm
