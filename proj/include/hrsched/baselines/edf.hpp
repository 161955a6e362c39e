#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "hrsched/env/multiround_env.hpp"

namespace hrsched {

/// Earliest-deadline-first list scheduling on estimated durations.
///
/// Among tasks whose wait predecessors are already placed, picks the one
/// with the earliest deadline (tasks without a deadline come last, ties go
/// to the lower index) and gives it to the agent that frees up first (ties
/// go to the lower agent index).
inline Schedule edf_schedule(const Observation& obs) {
  const auto& p = obs.estimated;
  const int n = p.num_tasks;
  constexpr Time kNoDeadline = std::numeric_limits<Time>::infinity();

  std::vector<std::vector<const WaitConstraint*>> preds(static_cast<std::size_t>(n));
  for (const auto& w : p.waits) preds[w.after].push_back(&w);

  std::vector<char> placed(static_cast<std::size_t>(n), 0);
  std::vector<Time> finish(static_cast<std::size_t>(n), 0.0);
  std::vector<Time> agent_free(static_cast<std::size_t>(p.num_agents()), 0.0);
  Schedule s;

  for (int step = 0; step < n; ++step) {
    TaskId best = -1;
    Time best_deadline = kNoDeadline;
    for (TaskId t = 0; t < n; ++t) {
      if (placed[t]) continue;
      const bool ready = std::all_of(preds[t].begin(), preds[t].end(),
                                     [&](const WaitConstraint* w) { return placed[w->before] != 0; });
      if (!ready) continue;
      const Time d = p.deadline(t).value_or(kNoDeadline);
      if (best < 0 || d < best_deadline) {
        best = t;
        best_deadline = d;
      }
    }
    // The wait relation is acyclic, so some task is always ready.
    if (best < 0) break;

    const auto agent = static_cast<AgentId>(std::min_element(agent_free.begin(), agent_free.end()) -
                                            agent_free.begin());
    Time start = agent_free[agent];
    for (const WaitConstraint* w : preds[best]) start = std::max(start, finish[w->before] + w->gap);
    finish[best] = start + p.durations.at(best, agent);
    agent_free[agent] = finish[best];
    placed[best] = 1;
    s.push_back({best, agent});
  }
  return s;
}

}  // namespace hrsched
