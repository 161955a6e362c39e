#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrsched/baselines/edf.hpp"
#include "hrsched/baselines/ga.hpp"
#include "hrsched/env/multiround_env.hpp"
#include "hrsched/policy/propagator.hpp"

namespace hrsched {

enum class Method { edf, ga, hybridnet, hetgat_interactive };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::edf: return "edf";
    case Method::ga: return "ga";
    case Method::hybridnet: return "hybridnet";
    case Method::hetgat_interactive: return "hetgat-interactive";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::edf, Method::ga, Method::hybridnet, Method::hetgat_interactive})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "' (expected edf, ga, hybridnet or hetgat-interactive)");
}

inline bool is_learned(Method m) { return m == Method::hybridnet || m == Method::hetgat_interactive; }

struct EvalConfig {
  Method method = Method::edf;
  int batch = 8;                 // best-of-batch sampling for hybridnet
  bool stochastic = false;
  std::vector<std::uint64_t> seeds{0};
  int rounds = 4;
  GaConfig ga;
  std::string training_scale;    // label only; empty for heuristics
  std::string dataset_scale;     // label only
};

/// Outcome of one executed round schedule.
struct RoundRecord {
  std::uint64_t seed = 0;
  int problem = 0;
  int round = 0;
  int num_tasks = 0;
  int feasible_tasks = 0;
  bool feasible = false;
  double makespan = 0.0;    // realized; 0 when infeasible
  double worst_case = 0.0;  // sum over tasks of the slowest realized duration

  /// Feasible rounds count their makespan, infeasible ones the worst case.
  double adjusted_makespan() const { return feasible ? makespan : worst_case; }
  bool operator==(const RoundRecord&) const = default;
};

struct EvalResult {
  std::string method;
  std::string training_scale;
  int batch = 0;
  std::string dataset_scale;
  bool stochastic = false;
  std::vector<RoundRecord> rounds;
  /// Wall-clock seconds spent producing schedules, one entry per
  /// (seed, problem) in evaluation order.
  std::vector<double> runtime;
};

inline double worst_case_makespan(const DurationMatrix& realized) {
  double total = 0.0;
  for (TaskId t = 0; t < realized.tasks(); ++t) total += realized.max_over_agents(t);
  return total;
}

/// Runs `cfg.method` for `cfg.rounds` rounds on every problem under every
/// seed. Problem i under seed s uses environment seed derive_seed(s, i) and
/// scheduler randomness derive_seed(s, i, round + 1).
inline EvalResult evaluate(const std::vector<ProblemInstance>& problems, const EvalConfig& cfg,
                           PolicyParameters* params = nullptr) {
  if (is_learned(cfg.method) && params == nullptr)
    throw std::invalid_argument("evaluate: method " + to_string(cfg.method) + " needs a checkpoint");
  if (cfg.method == Method::hetgat_interactive && cfg.stochastic)
    throw std::invalid_argument("evaluate: hetgat-interactive requires a deterministic environment");
  if (cfg.batch < 1) throw std::invalid_argument("evaluate: batch must be >= 1");

  EvalResult res;
  res.method = to_string(cfg.method);
  res.training_scale = cfg.training_scale;
  res.batch = cfg.method == Method::hybridnet ? cfg.batch : 0;
  res.dataset_scale = cfg.dataset_scale;
  res.stochastic = cfg.stochastic;

  EnvConfig env_cfg;
  env_cfg.rounds = cfg.rounds;
  env_cfg.stochastic = cfg.stochastic;

  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t i = 0; i < problems.size(); ++i) {
      MultiRoundEnv env(problems[i], env_cfg);
      Observation obs = env.reset(derive_seed(seed, i));
      double elapsed = 0.0;
      while (!env.done()) {
        Rng rng(derive_seed(seed, i, static_cast<std::uint64_t>(env.round()) + 1));
        const auto t0 = std::chrono::steady_clock::now();
        Schedule s;
        switch (cfg.method) {
          case Method::edf: s = edf_schedule(obs); break;
          case Method::ga: s = ga_schedule(obs, cfg.ga, rng); break;
          case Method::hybridnet: s = sample_best(obs, *params, cfg.batch, rng).schedule; break;
          case Method::hetgat_interactive:
            s = interactive_hetgat_schedule(obs, *params, DecodeMode::greedy, rng, cfg.stochastic).schedule;
            break;
        }
        elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        StepResult r = env.step(s);
        RoundRecord rec;
        rec.seed = seed;
        rec.problem = static_cast<int>(i);
        rec.round = obs.round;
        rec.num_tasks = env.problem().num_tasks;
        rec.feasible_tasks = static_cast<int>(r.info.feasible_set.size());
        rec.feasible = r.info.fully_feasible();
        rec.makespan = r.info.makespan.value_or(0.0);
        rec.worst_case = worst_case_makespan(r.realized);
        res.rounds.push_back(rec);
        obs = std::move(r.observation);
      }
      res.runtime.push_back(elapsed);
    }
  }
  return res;
}

inline nlohmann::json to_json(const RoundRecord& r) {
  return {{"seed", r.seed},         {"problem", r.problem},   {"round", r.round},
          {"num_tasks", r.num_tasks}, {"feasible_tasks", r.feasible_tasks}, {"feasible", r.feasible},
          {"makespan", r.makespan}, {"worst_case", r.worst_case}};
}

inline RoundRecord round_record_from_json(const nlohmann::json& j) {
  RoundRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.problem = j.at("problem").get<int>();
  r.round = j.at("round").get<int>();
  r.num_tasks = j.at("num_tasks").get<int>();
  r.feasible_tasks = j.at("feasible_tasks").get<int>();
  r.feasible = j.at("feasible").get<bool>();
  r.makespan = j.at("makespan").get<double>();
  r.worst_case = j.at("worst_case").get<double>();
  return r;
}

inline nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& x : r.rounds) rounds.push_back(to_json(x));
  return {{"method", r.method},         {"training_scale", r.training_scale}, {"batch", r.batch},
          {"dataset_scale", r.dataset_scale}, {"stochastic", r.stochastic}, {"rounds", rounds},
          {"runtime", r.runtime}};
}

inline EvalResult eval_result_from_json(const nlohmann::json& j) {
  EvalResult r;
  r.method = j.at("method").get<std::string>();
  r.training_scale = j.value("training_scale", "");
  r.batch = j.value("batch", 0);
  r.dataset_scale = j.value("dataset_scale", "");
  r.stochastic = j.value("stochastic", false);
  for (const auto& x : j.at("rounds")) r.rounds.push_back(round_record_from_json(x));
  r.runtime = j.value("runtime", std::vector<double>{});
  return r;
}

}  // namespace hrsched
