#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrsched/core/problem.hpp"
#include "hrsched/util/rng.hpp"

namespace hrsched {

/// Learning-curve parameters of one human on one task: the mean duration
/// after i completed repetitions is c + k * exp(-beta * i).
struct CurveParams {
  double c = 0.0;
  double k = 0.0;
  double beta = 0.0;
  double sd_c = 0.0;
  double sd_k = 0.0;
  double sd_beta = 0.0;

  bool operator==(const CurveParams&) const = default;
};

/// Per-task learning curves of one human plus their experience counts.
struct HumanCurve {
  std::vector<CurveParams> tasks;
  std::vector<int> experience;

  HumanCurve() = default;
  explicit HumanCurve(std::vector<CurveParams> params)
      : tasks(std::move(params)), experience(tasks.size(), 0) {}

  int num_tasks() const { return static_cast<int>(tasks.size()); }

  bool operator==(const HumanCurve&) const = default;
};

inline double curve_value(double c, double k, double beta, double i) { return c + k * std::exp(-beta * i); }

/// Mean duration of `task` after `iteration` repetitions, before clamping.
inline Time human_mean_duration(const HumanCurve& h, TaskId task, int iteration) {
  if (iteration < 0) throw std::invalid_argument("human_mean_duration: negative iteration");
  const auto& p = h.tasks.at(task);
  return curve_value(p.c, p.k, p.beta, iteration);
}

/// Mean duration at the human's current experience, clamped to the legal
/// duration range. This is what a noise-free execution takes.
inline Time human_expected_duration(const HumanCurve& h, TaskId task) {
  return clamp_duration(human_mean_duration(h, task, h.experience.at(task)));
}

/// Draws perturbed (c, k, beta) from normals around the curve parameters,
/// evaluates the curve at the current experience and clamps the result.
inline Time sample_human_duration(const HumanCurve& h, TaskId task, Rng& rng) {
  const auto& p = h.tasks.at(task);
  const double c = normal(rng, p.c, p.sd_c);
  const double k = normal(rng, p.k, p.sd_k);
  const double beta = normal(rng, p.beta, p.sd_beta);
  return clamp_duration(curve_value(c, k, beta, h.experience.at(task)));
}

/// Fixed per-task robot durations.
struct RobotModel {
  std::vector<Time> durations;

  Time duration(TaskId task) const { return durations.at(task); }

  bool operator==(const RobotModel&) const = default;
};

struct EstimatorConfig {
  double sigma0 = 10.0;  // noise sd at zero repetitions
  double decay = 0.5;    // per-repetition exponential decay of the sd
};

/// Observed durations per (human, task) pair from earlier rounds.
class EstimatorState {
 public:
  EstimatorState() = default;
  EstimatorState(int humans, int tasks)
      : tasks_(tasks), observations_(static_cast<std::size_t>(humans) * tasks) {}

  int repetitions(int human, TaskId task) const { return static_cast<int>(slot(human, task).size()); }
  const std::vector<Time>& observations(int human, TaskId task) const { return slot(human, task); }

  void record(int human, TaskId task, Time observed) { slot(human, task).push_back(observed); }

  bool operator==(const EstimatorState&) const = default;

 private:
  std::vector<Time>& slot(int human, TaskId task) { return observations_.at(index(human, task)); }
  const std::vector<Time>& slot(int human, TaskId task) const { return observations_.at(index(human, task)); }
  std::size_t index(int human, TaskId task) const {
    if (task < 0 || task >= tasks_ || human < 0)
      throw std::out_of_range("EstimatorState: bad (human, task) = (" + std::to_string(human) + ", " +
                              std::to_string(task) + ")");
    return static_cast<std::size_t>(human) * tasks_ + task;
  }

  int tasks_ = 0;
  std::vector<std::vector<Time>> observations_;
};

/// Returns a copy of `e` with one more observation for (human, task).
inline EstimatorState record_execution(EstimatorState e, int human, TaskId task, Time observed) {
  e.record(human, task, observed);
  return e;
}

inline double estimator_sd(const EstimatorConfig& cfg, int repetitions) {
  return cfg.sigma0 * std::exp(-cfg.decay * repetitions);
}

/// Noisy estimate of a human's duration: the true (clamped) mean plus
/// Gaussian noise whose sd shrinks with the pair's repetition count.
inline Time estimate_duration(const EstimatorState& e, const EstimatorConfig& cfg, const HumanCurve& truth,
                              int human, TaskId task, Rng& rng) {
  const double sd = estimator_sd(cfg, e.repetitions(human, task));
  return clamp_duration(normal(rng, human_expected_duration(truth, task), sd));
}

}  // namespace hrsched
