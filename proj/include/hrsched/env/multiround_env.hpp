#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrsched/core/problem.hpp"
#include "hrsched/temporal/dispatch.hpp"
#include "hrsched/util/rng.hpp"
#include "hrsched/workers/workers.hpp"

namespace hrsched {

/// A problem together with the hidden worker models that drive it.
/// Robot durations are the problem's robot columns; `humans[h]` holds the
/// learning curves of agent num_robots + h.
struct ProblemInstance {
  SchedulingProblem problem;
  std::vector<HumanCurve> humans;

  bool operator==(const ProblemInstance&) const = default;
};

/// Curves that reproduce the problem's round-0 human durations with a fixed
/// asymptote share and learning rate. Used when a problem file carries no
/// curve parameters.
inline std::vector<HumanCurve> default_human_curves(const SchedulingProblem& p, double asymptote_share = 0.5,
                                                    double beta = 0.5) {
  std::vector<HumanCurve> out;
  for (int h = 0; h < p.num_humans; ++h) {
    std::vector<CurveParams> params;
    for (TaskId t = 0; t < p.num_tasks; ++t) {
      const double d0 = p.durations.at(t, p.num_robots + h);
      params.push_back({asymptote_share * d0, (1.0 - asymptote_share) * d0, beta, 0.0, 0.0, 0.0});
    }
    out.emplace_back(std::move(params));
  }
  return out;
}

/// What the scheduler sees: estimated durations plus the observable
/// constraints. Robot entries are exact; human entries are estimates.
struct Observation {
  SchedulingProblem estimated;
  int round = 0;

  const DurationMatrix& estimated_durations() const { return estimated.durations; }
  const std::map<TaskId, Time>& deadlines() const { return estimated.deadlines; }
  const std::vector<WaitConstraint>& waits() const { return estimated.waits; }
  int num_tasks() const { return estimated.num_tasks; }
  int num_agents() const { return estimated.num_agents(); }
  AgentKind agent_kind(AgentId a) const { return estimated.agent_kind(a); }

  bool operator==(const Observation&) const = default;
};

using TaskReward = std::function<double(TaskId, AgentId, Time)>;

inline double negative_duration(TaskId, AgentId, Time duration) { return -duration; }

struct RewardTerms {
  double feasible = 0.0;
  double infeasible = 0.0;
  double total() const { return feasible + infeasible; }
};

/// Round reward split into its two terms. The feasible term sums the
/// per-task reward of executed tasks on their agents. The infeasible term
/// charges every unexecuted task to the single agent whose summed reward
/// over them is worst, scaled by `infeasible_coeff`.
inline RewardTerms round_reward_terms(const ExecutionTrace& trace, const DurationMatrix& realized,
                                      double infeasible_coeff, const TaskReward& reward = negative_duration) {
  RewardTerms r;
  for (TaskId t : trace.feasible_set) {
    const AgentId a = trace.assigned_agent.at(t);
    r.feasible += reward(t, a, realized.at(t, a));
  }
  if (!trace.infeasible_set.empty()) {
    double worst = std::numeric_limits<double>::infinity();
    for (AgentId a = 0; a < realized.agents(); ++a) {
      double sum = 0.0;
      for (TaskId t : trace.infeasible_set) sum += reward(t, a, realized.at(t, a));
      worst = std::min(worst, sum);
    }
    r.infeasible = infeasible_coeff * worst;
  }
  return r;
}

inline double round_reward(const ExecutionTrace& trace, const DurationMatrix& realized, double infeasible_coeff,
                           const TaskReward& reward = negative_duration) {
  return round_reward_terms(trace, realized, infeasible_coeff, reward).total();
}

/// G_t = sum_{t' >= t} gamma^(t' - t) R_t'
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

struct EnvConfig {
  int rounds = 4;
  /// Stochastic humans sample their curve parameters each execution and
  /// are observed through the noisy estimator. Deterministic mode uses the
  /// curve means and exact observations.
  bool stochastic = false;
  double infeasible_coeff = 2.0;
  double gamma = 0.99;
  EstimatorConfig estimator;
  TaskReward task_reward = negative_duration;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  ExecutionTrace info;
  DurationMatrix realized;
};

/// Multi-round environment: every step executes one complete round
/// schedule, pays the round reward and lets humans learn from the tasks they
/// executed.
class MultiRoundEnv {
 public:
  explicit MultiRoundEnv(ProblemInstance instance, EnvConfig config = {})
      : instance_(std::move(instance)), config_(std::move(config)) {
    check_instance(instance_);
    if (config_.rounds < 1) throw std::invalid_argument("EnvConfig: rounds must be >= 1");
    reset(0);
  }

  Observation reset(std::uint64_t seed) {
    seed_ = seed;
    round_ = 0;
    humans_ = instance_.humans;
    for (auto& h : humans_) h.experience.assign(h.tasks.size(), 0);
    estimator_ = EstimatorState(problem().num_humans, problem().num_tasks);
    return observe();
  }

  Observation reset(ProblemInstance instance, std::uint64_t seed) {
    check_instance(instance);
    instance_ = std::move(instance);
    return reset(seed);
  }

  StepResult step(const Schedule& schedule) {
    if (done()) throw std::logic_error("MultiRoundEnv::step: episode already finished");
    require_well_formed(problem(), schedule);

    StepResult out;
    out.realized = realize(schedule);
    out.info = simulate_dispatch(problem(), schedule, out.realized);
    out.reward = round_reward(out.info, out.realized, config_.infeasible_coeff, config_.task_reward);

    for (TaskId t : out.info.feasible_set) {
      const AgentId a = out.info.assigned_agent[t];
      if (problem().agent_kind(a) != AgentKind::human) continue;
      const int h = a - problem().num_robots;
      estimator_.record(h, t, out.realized.at(t, a));
      ++humans_[h].experience[t];
    }
    ++round_;
    out.done = done();
    out.observation = observe();
    return out;
  }

  /// Current observation, recomputed from the round's observation stream.
  Observation observe() const {
    const auto& p = problem();
    Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(round_), 1));
    Observation obs;
    obs.round = round_;
    obs.estimated = p;
    for (TaskId t = 0; t < p.num_tasks; ++t) {
      for (int h = 0; h < p.num_humans; ++h) {
        const AgentId a = p.num_robots + h;
        obs.estimated.durations.at(t, a) =
            config_.stochastic ? estimate_duration(estimator_, config_.estimator, humans_[h], h, t, rng)
                               : human_expected_duration(humans_[h], t);
      }
    }
    return obs;
  }

  /// Durations the humans would take this round if noise were absent;
  /// robots are exact.
  DurationMatrix expected_durations() const {
    DurationMatrix m = problem().durations;
    for (TaskId t = 0; t < problem().num_tasks; ++t)
      for (int h = 0; h < problem().num_humans; ++h)
        m.at(t, problem().num_robots + h) = human_expected_duration(humans_[h], t);
    return m;
  }

  bool done() const { return round_ >= config_.rounds; }
  int round() const { return round_; }
  const SchedulingProblem& problem() const { return instance_.problem; }
  const ProblemInstance& instance() const { return instance_; }
  const EnvConfig& config() const { return config_; }
  const std::vector<HumanCurve>& humans() const { return humans_; }
  const EstimatorState& estimator() const { return estimator_; }

 private:
  static void check_instance(const ProblemInstance& inst) {
    if (auto v = validate_problem(inst.problem); !v.empty())
      throw std::invalid_argument("invalid problem: " + v.front().location + ": " + v.front().message);
    if (static_cast<int>(inst.humans.size()) != inst.problem.num_humans)
      throw std::invalid_argument("ProblemInstance: expected one curve set per human");
    for (const auto& h : inst.humans)
      if (h.num_tasks() != inst.problem.num_tasks)
        throw std::invalid_argument("ProblemInstance: curve set does not cover every task");
  }

  // Durations are drawn task by task in schedule order, then for tasks the
  // schedule omits in index order, from a round-scoped stream.
  DurationMatrix realize(const Schedule& schedule) const {
    const auto& p = problem();
    DurationMatrix m = p.durations;
    if (p.num_humans == 0) return m;
    Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(round_), 2));
    std::vector<char> seen(static_cast<std::size_t>(p.num_tasks), 0);
    auto draw = [&](TaskId t) {
      seen[t] = 1;
      for (int h = 0; h < p.num_humans; ++h)
        m.at(t, p.num_robots + h) = config_.stochastic ? sample_human_duration(humans_[h], t, rng)
                                                       : human_expected_duration(humans_[h], t);
    };
    for (const auto& d : schedule) draw(d.task);
    for (TaskId t = 0; t < p.num_tasks; ++t)
      if (!seen[t]) draw(t);
    return m;
  }

  ProblemInstance instance_;
  EnvConfig config_;
  std::uint64_t seed_ = 0;
  int round_ = 0;
  std::vector<HumanCurve> humans_;
  EstimatorState estimator_;
};

}  // namespace hrsched
