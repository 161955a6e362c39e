#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrsched {

using TaskId = int;
using AgentId = int;
using Time = double;

inline constexpr Time kMinDuration = 10.0;
inline constexpr Time kMaxDuration = 100.0;
inline constexpr Time kMinWait = 1.0;
inline constexpr Time kMaxWait = 10.0;

inline Time clamp_duration(Time d) { return std::clamp(d, kMinDuration, kMaxDuration); }

enum class AgentKind { robot, human };

/// Dense task x agent matrix of durations, row-major.
class DurationMatrix {
 public:
  DurationMatrix() = default;
  DurationMatrix(int tasks, int agents, Time fill = 0.0)
      : tasks_(tasks), agents_(agents), values_(static_cast<std::size_t>(tasks) * agents, fill) {}

  int tasks() const { return tasks_; }
  int agents() const { return agents_; }

  Time& at(TaskId t, AgentId a) { return values_[index(t, a)]; }
  Time at(TaskId t, AgentId a) const { return values_[index(t, a)]; }

  Time min_over_agents(TaskId t) const {
    Time m = at(t, 0);
    for (AgentId a = 1; a < agents_; ++a) m = std::min(m, at(t, a));
    return m;
  }
  Time max_over_agents(TaskId t) const {
    Time m = at(t, 0);
    for (AgentId a = 1; a < agents_; ++a) m = std::max(m, at(t, a));
    return m;
  }

  const std::vector<Time>& values() const { return values_; }

  bool operator==(const DurationMatrix&) const = default;

 private:
  std::size_t index(TaskId t, AgentId a) const {
    if (t < 0 || t >= tasks_ || a < 0 || a >= agents_)
      throw std::out_of_range("DurationMatrix: (" + std::to_string(t) + ", " + std::to_string(a) +
                              ") outside " + std::to_string(tasks_) + "x" + std::to_string(agents_));
    return static_cast<std::size_t>(t) * agents_ + a;
  }

  int tasks_ = 0;
  int agents_ = 0;
  std::vector<Time> values_;
};

/// start(after) >= finish(before) + gap
struct WaitConstraint {
  TaskId before = 0;
  TaskId after = 0;
  Time gap = 0.0;

  bool operator==(const WaitConstraint&) const = default;
};

/// One round's scheduling input. Agents are numbered robots first, then
/// humans. For humans `durations` holds the round-0 mean.
struct SchedulingProblem {
  int num_tasks = 0;
  int num_robots = 0;
  int num_humans = 0;
  DurationMatrix durations;
  std::map<TaskId, Time> deadlines;  // absolute bound on finish time
  std::vector<WaitConstraint> waits;

  int num_agents() const { return num_robots + num_humans; }
  AgentKind agent_kind(AgentId a) const { return a < num_robots ? AgentKind::robot : AgentKind::human; }

  std::optional<Time> deadline(TaskId t) const {
    auto it = deadlines.find(t);
    if (it == deadlines.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const SchedulingProblem&) const = default;
};

struct ScheduleDecision {
  TaskId task = 0;
  AgentId agent = 0;

  bool operator==(const ScheduleDecision&) const = default;
};

struct Schedule {
  std::vector<ScheduleDecision> decisions;

  std::size_t size() const { return decisions.size(); }
  bool empty() const { return decisions.empty(); }
  void push_back(ScheduleDecision d) { decisions.push_back(d); }
  auto begin() const { return decisions.begin(); }
  auto end() const { return decisions.end(); }

  bool has_duplicate_tasks() const {
    std::vector<TaskId> tasks;
    tasks.reserve(decisions.size());
    for (const auto& d : decisions) tasks.push_back(d.task);
    std::sort(tasks.begin(), tasks.end());
    return std::adjacent_find(tasks.begin(), tasks.end()) != tasks.end();
  }

  bool is_complete(int num_tasks) const {
    if (static_cast<int>(decisions.size()) != num_tasks || has_duplicate_tasks()) return false;
    return std::all_of(decisions.begin(), decisions.end(),
                       [&](const ScheduleDecision& d) { return d.task >= 0 && d.task < num_tasks; });
  }

  bool operator==(const Schedule&) const = default;
};

/// Throws std::invalid_argument if the schedule repeats a task or names an
/// id outside the problem.
inline void require_well_formed(const SchedulingProblem& p, const Schedule& s) {
  for (const auto& d : s) {
    if (d.task < 0 || d.task >= p.num_tasks)
      throw std::invalid_argument("schedule: task id " + std::to_string(d.task) + " out of range");
    if (d.agent < 0 || d.agent >= p.num_agents())
      throw std::invalid_argument("schedule: agent id " + std::to_string(d.agent) + " out of range");
  }
  if (s.has_duplicate_tasks()) throw std::invalid_argument("schedule: duplicate task");
}

/// Result of executing one schedule. Tasks that never ran have no start or
/// finish time and belong to the infeasible set.
struct ExecutionTrace {
  std::vector<std::optional<Time>> start_times;
  std::vector<std::optional<Time>> finish_times;
  std::vector<AgentId> assigned_agent;  // -1 when the schedule omits the task
  std::vector<TaskId> feasible_set;     // ascending
  std::vector<TaskId> infeasible_set;   // ascending
  std::optional<Time> makespan;         // set only when infeasible_set is empty

  bool fully_feasible() const { return infeasible_set.empty(); }

  bool operator==(const ExecutionTrace&) const = default;
};

struct Violation {
  std::string location;
  std::string message;
};

inline bool wait_graph_has_cycle(int num_tasks, const std::vector<WaitConstraint>& waits) {
  std::vector<std::vector<TaskId>> succ(static_cast<std::size_t>(num_tasks));
  for (const auto& w : waits) {
    if (w.before < 0 || w.before >= num_tasks || w.after < 0 || w.after >= num_tasks) continue;
    if (w.before == w.after) continue;  // reported separately as a self-wait
    succ[w.before].push_back(w.after);
  }
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> color(static_cast<std::size_t>(num_tasks), 0);
  std::vector<std::pair<TaskId, std::size_t>> stack;
  for (TaskId root = 0; root < num_tasks; ++root) {
    if (color[root] != 0) continue;
    stack.push_back({root, 0});
    color[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < succ[node].size()) {
        TaskId child = succ[node][next++];
        if (color[child] == 1) return true;
        if (color[child] == 0) {
          color[child] = 1;
          stack.push_back({child, 0});
        }
      } else {
        color[node] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

/// Lists every invariant violation of `p`. An empty result means the
/// problem is well formed.
///
/// Deadlines must lie in [1, 5N]; a deadline raised by the generator to the
/// task's slowest duration is also accepted.
inline std::vector<Violation> validate_problem(const SchedulingProblem& p) {
  std::vector<Violation> out;
  auto add = [&](std::string where, std::string what) { out.push_back({std::move(where), std::move(what)}); };

  if (p.num_tasks < 0) add("num_tasks", "negative task count");
  if (p.num_robots < 0) add("num_robots", "negative robot count");
  if (p.num_humans < 0) add("num_humans", "negative human count");
  if (p.durations.tasks() != p.num_tasks || p.durations.agents() != p.num_agents()) {
    add("durations", "matrix is " + std::to_string(p.durations.tasks()) + "x" +
                         std::to_string(p.durations.agents()) + ", expected " + std::to_string(p.num_tasks) +
                         "x" + std::to_string(p.num_agents()));
    return out;
  }
  for (TaskId t = 0; t < p.num_tasks; ++t) {
    for (AgentId a = 0; a < p.num_agents(); ++a) {
      const Time d = p.durations.at(t, a);
      if (!(d >= kMinDuration && d <= kMaxDuration))
        add("durations[" + std::to_string(t) + "][" + std::to_string(a) + "]", "duration out of [10,100]");
    }
  }
  const Time deadline_cap = 5.0 * p.num_tasks;
  for (const auto& [t, d] : p.deadlines) {
    const std::string where = "deadlines[" + std::to_string(t) + "]";
    if (t < 0 || t >= p.num_tasks) {
      add(where, "deadline on unknown task");
      continue;
    }
    const Time cap = std::max(deadline_cap, p.durations.max_over_agents(t));
    if (!(d >= 1.0 && d <= cap)) add(where, "deadline out of [1,5N]");
  }
  for (std::size_t k = 0; k < p.waits.size(); ++k) {
    const auto& w = p.waits[k];
    const std::string where = "waits[" + std::to_string(k) + "]";
    if (w.before < 0 || w.before >= p.num_tasks || w.after < 0 || w.after >= p.num_tasks)
      add(where, "wait references unknown task");
    else if (w.before == w.after)
      add(where, "self-wait");
    if (!(w.gap >= kMinWait && w.gap <= kMaxWait)) add(where, "wait out of [1,10]");
  }
  if (wait_graph_has_cycle(p.num_tasks, p.waits)) add("waits", "wait relation contains a cycle");
  return out;
}

}  // namespace hrsched
