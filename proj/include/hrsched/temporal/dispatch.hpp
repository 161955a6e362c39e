#pragma once

#include <algorithm>
#include <vector>

#include "hrsched/core/problem.hpp"

namespace hrsched {

/// Executes `s` against `p` with earliest-start dispatch. Each agent runs
/// its tasks in schedule order and may idle until wait bounds are met.
///
/// A task is infeasible (and takes no agent time) when one of its wait
/// predecessors has not executed earlier in the sequence, or when it would
/// finish after its deadline. Tasks absent from `s` are infeasible too.
///
/// Throws std::invalid_argument on duplicate tasks or out-of-range ids.
inline ExecutionTrace simulate_dispatch(const SchedulingProblem& p, const Schedule& s,
                                        const DurationMatrix& realized) {
  require_well_formed(p, s);
  const auto n = static_cast<std::size_t>(p.num_tasks);
  ExecutionTrace tr;
  tr.start_times.assign(n, std::nullopt);
  tr.finish_times.assign(n, std::nullopt);
  tr.assigned_agent.assign(n, -1);

  std::vector<std::vector<const WaitConstraint*>> preds(n);
  for (const auto& w : p.waits) preds[w.after].push_back(&w);

  std::vector<Time> agent_free(static_cast<std::size_t>(p.num_agents()), 0.0);
  std::vector<char> executed(n, 0);

  for (const auto& d : s) {
    tr.assigned_agent[d.task] = d.agent;
    Time start = agent_free[d.agent];
    bool ok = true;
    for (const WaitConstraint* w : preds[d.task]) {
      if (!executed[w->before]) {
        ok = false;
        break;
      }
      start = std::max(start, *tr.finish_times[w->before] + w->gap);
    }
    if (!ok) continue;
    const Time finish = start + realized.at(d.task, d.agent);
    if (auto dl = p.deadline(d.task); dl && finish > *dl) continue;
    tr.start_times[d.task] = start;
    tr.finish_times[d.task] = finish;
    agent_free[d.agent] = finish;
    executed[d.task] = 1;
  }

  Time makespan = 0.0;
  for (TaskId t = 0; t < p.num_tasks; ++t) {
    if (executed[t]) {
      tr.feasible_set.push_back(t);
      makespan = std::max(makespan, *tr.finish_times[t]);
    } else {
      tr.infeasible_set.push_back(t);
    }
  }
  if (tr.infeasible_set.empty()) tr.makespan = makespan;
  return tr;
}

/// Largest finish time among executed tasks (0 when none ran). Defined for
/// partially feasible traces, unlike ExecutionTrace::makespan.
inline Time executed_span(const ExecutionTrace& tr) {
  Time span = 0.0;
  for (const auto& f : tr.finish_times)
    if (f) span = std::max(span, *f);
  return span;
}

}  // namespace hrsched
