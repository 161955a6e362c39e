#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "hrsched/core/problem.hpp"

namespace hrsched {

/// Distance graph of a simple temporal network. Node 0 is the origin z
/// (t = 0); task i owns start node 1 + 2i and finish node 2 + 2i.
/// An arc (from, to, weight) encodes  value(to) - value(from) <= weight.
struct DistanceGraph {
  struct Arc {
    int from = 0;
    int to = 0;
    Time weight = 0.0;

    bool operator==(const Arc&) const = default;
  };

  int num_tasks = 0;
  std::vector<Arc> arcs;

  static constexpr int origin() { return 0; }
  static constexpr int start_node(TaskId t) { return 1 + 2 * t; }
  static constexpr int finish_node(TaskId t) { return 2 + 2 * t; }
  int num_nodes() const { return 1 + 2 * num_tasks; }

  /// X - Y <= c
  void add_upper_bound(int x, int y, Time c) { arcs.push_back({y, x, c}); }
  /// X - Y >= c
  void add_lower_bound(int x, int y, Time c) { arcs.push_back({x, y, -c}); }
};

namespace detail {

inline DistanceGraph build_constraint_arcs(const SchedulingProblem& p) {
  DistanceGraph g;
  g.num_tasks = p.num_tasks;
  const int z = DistanceGraph::origin();
  for (TaskId t = 0; t < p.num_tasks; ++t) {
    g.add_lower_bound(DistanceGraph::start_node(t), z, 0.0);
    g.add_lower_bound(DistanceGraph::finish_node(t), DistanceGraph::start_node(t), 0.0);
  }
  for (const auto& [t, d] : p.deadlines) g.add_upper_bound(DistanceGraph::finish_node(t), z, d);
  for (const auto& w : p.waits)
    g.add_lower_bound(DistanceGraph::start_node(w.after), DistanceGraph::finish_node(w.before), w.gap);
  return g;
}

}  // namespace detail

/// STN of the problem's temporal constraints with no assignment fixed:
/// non-negative start times, deadline and wait arcs. Duration arcs are
/// omitted because they depend on the agent.
inline DistanceGraph build_stn(const SchedulingProblem& p, const DurationMatrix& durations) {
  (void)durations;
  return detail::build_constraint_arcs(p);
}

/// STN with the assignment and per-agent order of `s` fixed: each scheduled
/// task gets finish - start == duration(task, agent), and consecutive tasks
/// on one agent are sequenced.
inline DistanceGraph build_stn(const SchedulingProblem& p, const DurationMatrix& durations, const Schedule& s) {
  require_well_formed(p, s);
  DistanceGraph g = detail::build_constraint_arcs(p);
  std::vector<TaskId> last_on_agent(static_cast<std::size_t>(p.num_agents()), -1);
  for (const auto& d : s) {
    const int st = DistanceGraph::start_node(d.task);
    const int fi = DistanceGraph::finish_node(d.task);
    const Time dur = durations.at(d.task, d.agent);
    g.add_upper_bound(fi, st, dur);
    g.add_lower_bound(fi, st, dur);
    if (TaskId prev = last_on_agent[d.agent]; prev >= 0)
      g.add_lower_bound(st, DistanceGraph::finish_node(prev), 0.0);
    last_on_agent[d.agent] = d.task;
  }
  return g;
}

struct ConsistencyResult {
  bool consistent = true;
  /// Node ids of a negative cycle, in arc order, when inconsistent.
  std::vector<int> witness;
  /// Total weight of the witness cycle (negative when inconsistent).
  Time witness_weight = 0.0;
};

/// Bellman-Ford from a virtual source joined to every node with weight 0.
/// The graph is consistent iff no negative cycle exists.
inline ConsistencyResult check_consistency(const DistanceGraph& g) {
  const int n = g.num_nodes();
  std::vector<Time> dist(static_cast<std::size_t>(n), 0.0);
  std::vector<int> pred(static_cast<std::size_t>(n), -1);
  std::vector<Time> pred_weight(static_cast<std::size_t>(n), 0.0);
  constexpr Time eps = 1e-9;

  int last_relaxed = -1;
  for (int pass = 0; pass < n; ++pass) {
    last_relaxed = -1;
    for (const auto& a : g.arcs) {
      if (dist[a.from] + a.weight < dist[a.to] - eps) {
        dist[a.to] = dist[a.from] + a.weight;
        pred[a.to] = a.from;
        pred_weight[a.to] = a.weight;
        last_relaxed = a.to;
      }
    }
    if (last_relaxed < 0) return {};
  }

  // Still relaxing after n passes: walk back n steps to land on the cycle.
  int v = last_relaxed;
  for (int i = 0; i < n; ++i) v = pred[v];
  ConsistencyResult r;
  r.consistent = false;
  int u = v;
  do {
    r.witness.push_back(u);
    r.witness_weight += pred_weight[u];
    u = pred[u];
  } while (u != v);
  std::reverse(r.witness.begin(), r.witness.end());
  return r;
}

}  // namespace hrsched
