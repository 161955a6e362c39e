#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "hrsched/diff/matrix.hpp"
#include "hrsched/env/multiround_env.hpp"
#include "hrsched/temporal/dispatch.hpp"

namespace hrsched {

enum class NodeType { task = 0, agent = 1, state = 2 };
inline constexpr int kNumNodeTypes = 3;

/// Edge types of the scheduling metagraph. Temporal edges mirror the wait
/// arcs of the STN; capability edges join every agent with every task and
/// carry the estimated duration; `assigned` edges appear only once a task
/// has been committed to an agent.
enum class EdgeType {
  temporal = 0,
  temporal_rev,
  task_self,
  agent_self,
  state_self,
  task_to_state,
  agent_to_state,
  state_to_task,
  state_to_agent,
  capability,      // agent -> task
  capability_rev,  // task -> agent
  assigned,        // agent -> task
};
inline constexpr int kNumEdgeTypes = 12;

struct EdgeTypeInfo {
  std::string_view name;
  NodeType src;
  NodeType dst;
  bool has_feature;
};

inline constexpr std::array<EdgeTypeInfo, kNumEdgeTypes> kEdgeTypes{{
    {"temporal", NodeType::task, NodeType::task, true},
    {"temporal_rev", NodeType::task, NodeType::task, true},
    {"task_self", NodeType::task, NodeType::task, false},
    {"agent_self", NodeType::agent, NodeType::agent, false},
    {"state_self", NodeType::state, NodeType::state, false},
    {"task_to_state", NodeType::task, NodeType::state, false},
    {"agent_to_state", NodeType::agent, NodeType::state, false},
    {"state_to_task", NodeType::state, NodeType::task, false},
    {"state_to_agent", NodeType::state, NodeType::agent, false},
    {"capability", NodeType::agent, NodeType::task, true},
    {"capability_rev", NodeType::task, NodeType::agent, true},
    {"assigned", NodeType::agent, NodeType::task, false},
}};

inline const EdgeTypeInfo& edge_info(EdgeType e) { return kEdgeTypes[static_cast<std::size_t>(e)]; }

struct EdgeList {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<double> feature;

  std::size_t size() const { return src.size(); }
  void add(int s, int d, double f = 0.0) {
    src.push_back(s);
    dst.push_back(d);
    feature.push_back(f);
  }
};

inline int task_feature_dim(int num_agents) { return num_agents + 5; }
inline constexpr int kAgentFeatureDim = 5;
inline constexpr int kStateFeatureDim = 4;

/// Typed-node, typed-edge graph of one scheduling observation.
struct HetGraph {
  int num_tasks = 0;
  int num_agents = 0;
  diff::Matrix task_features;
  diff::Matrix agent_features;
  diff::Matrix state_features;
  std::array<EdgeList, kNumEdgeTypes> edges;

  const EdgeList& edges_of(EdgeType e) const { return edges[static_cast<std::size_t>(e)]; }
  EdgeList& edges_of(EdgeType e) { return edges[static_cast<std::size_t>(e)]; }

  int num_nodes(NodeType t) const {
    switch (t) {
      case NodeType::task: return num_tasks;
      case NodeType::agent: return num_agents;
      case NodeType::state: return 1;
    }
    return 0;
  }
  const diff::Matrix& features(NodeType t) const {
    switch (t) {
      case NodeType::task: return task_features;
      case NodeType::agent: return agent_features;
      default: return state_features;
    }
  }
  std::size_t total_edges() const {
    std::size_t n = 0;
    for (const auto& e : edges) n += e.size();
    return n;
  }
};

inline constexpr double kTimeScale = 100.0;

/// Builds the graph for `obs`. `committed` lists decisions already taken
/// (used by the interactive variant): those tasks get an `assigned` edge,
/// their scheduled flag set, and agents report the finish time of their
/// committed work under estimated durations.
///
/// Task features: estimated duration per agent, deadline flag and value,
/// wait in/out degree, scheduled flag. Agent features: robot/human one-hot,
/// mean and min estimated duration, committed load. State features: task
/// count, agent count, round index, scheduled fraction.
inline HetGraph build_het_graph(const Observation& obs, const Schedule& committed = {}) {
  const auto& p = obs.estimated;
  const int n = p.num_tasks;
  const int m = p.num_agents();
  HetGraph g;
  g.num_tasks = n;
  g.num_agents = m;

  std::vector<int> in_deg(static_cast<std::size_t>(n), 0), out_deg(static_cast<std::size_t>(n), 0);
  for (const auto& w : p.waits) {
    ++out_deg[w.before];
    ++in_deg[w.after];
  }
  std::vector<char> scheduled(static_cast<std::size_t>(n), 0);
  for (const auto& d : committed) scheduled[d.task] = 1;

  std::vector<double> load(static_cast<std::size_t>(m), 0.0);
  if (!committed.empty()) {
    const auto tr = simulate_dispatch(p, committed, p.durations);
    for (const auto& d : committed)
      if (tr.finish_times[d.task]) load[d.agent] = std::max(load[d.agent], *tr.finish_times[d.task]);
  }

  g.task_features = diff::Matrix(n, task_feature_dim(m));
  for (TaskId t = 0; t < n; ++t) {
    for (AgentId a = 0; a < m; ++a) g.task_features(t, a) = p.durations.at(t, a) / kTimeScale;
    const auto dl = p.deadline(t);
    g.task_features(t, m) = dl ? 1.0 : 0.0;
    g.task_features(t, m + 1) = dl ? *dl / kTimeScale : 0.0;
    g.task_features(t, m + 2) = in_deg[t];
    g.task_features(t, m + 3) = out_deg[t];
    g.task_features(t, m + 4) = scheduled[t];
  }

  g.agent_features = diff::Matrix(m, kAgentFeatureDim);
  for (AgentId a = 0; a < m; ++a) {
    double sum = 0.0, mn = n > 0 ? p.durations.at(0, a) : 0.0;
    for (TaskId t = 0; t < n; ++t) {
      sum += p.durations.at(t, a);
      mn = std::min(mn, p.durations.at(t, a));
    }
    g.agent_features(a, 0) = p.agent_kind(a) == AgentKind::robot ? 1.0 : 0.0;
    g.agent_features(a, 1) = p.agent_kind(a) == AgentKind::human ? 1.0 : 0.0;
    g.agent_features(a, 2) = n > 0 ? sum / n / kTimeScale : 0.0;
    g.agent_features(a, 3) = mn / kTimeScale;
    g.agent_features(a, 4) = load[a] / kTimeScale;
  }

  g.state_features = diff::Matrix(1, kStateFeatureDim);
  g.state_features(0, 0) = n / 10.0;
  g.state_features(0, 1) = m / 4.0;
  g.state_features(0, 2) = obs.round / 4.0;
  g.state_features(0, 3) = n > 0 ? static_cast<double>(committed.size()) / n : 0.0;

  for (const auto& w : p.waits) {
    g.edges_of(EdgeType::temporal).add(w.before, w.after, w.gap / kMaxWait);
    g.edges_of(EdgeType::temporal_rev).add(w.after, w.before, w.gap / kMaxWait);
  }
  for (TaskId t = 0; t < n; ++t) {
    g.edges_of(EdgeType::task_self).add(t, t);
    g.edges_of(EdgeType::task_to_state).add(t, 0);
    g.edges_of(EdgeType::state_to_task).add(0, t);
  }
  for (AgentId a = 0; a < m; ++a) {
    g.edges_of(EdgeType::agent_self).add(a, a);
    g.edges_of(EdgeType::agent_to_state).add(a, 0);
    g.edges_of(EdgeType::state_to_agent).add(0, a);
  }
  g.edges_of(EdgeType::state_self).add(0, 0);
  for (TaskId t = 0; t < n; ++t) {
    for (AgentId a = 0; a < m; ++a) {
      const double f = p.durations.at(t, a) / kTimeScale;
      g.edges_of(EdgeType::capability).add(a, t, f);
      g.edges_of(EdgeType::capability_rev).add(t, a, f);
    }
  }
  for (const auto& d : committed) g.edges_of(EdgeType::assigned).add(d.agent, d.task);
  return g;
}

}  // namespace hrsched
