#pragma once

#include <string>

#include "hrsched/core/json_io.hpp"
#include "hrsched/env/multiround_env.hpp"

namespace hrsched {

inline json to_json(const CurveParams& c) {
  return json{{"c", c.c}, {"k", c.k}, {"beta", c.beta}, {"sd_c", c.sd_c}, {"sd_k", c.sd_k}, {"sd_beta", c.sd_beta}};
}

inline CurveParams curve_params_from_json(const json& j) {
  return {j.at("c").get<double>(),    j.at("k").get<double>(),    j.at("beta").get<double>(),
          j.value("sd_c", 0.0), j.value("sd_k", 0.0), j.value("sd_beta", 0.0)};
}

/// Problem JSON with an extra "humans" array: one list of per-task curve
/// parameters per human.
inline json to_json(const ProblemInstance& inst) {
  json j = to_json(inst.problem);
  json humans = json::array();
  for (const auto& h : inst.humans) {
    json tasks = json::array();
    for (const auto& c : h.tasks) tasks.push_back(to_json(c));
    humans.push_back(std::move(tasks));
  }
  j["humans"] = std::move(humans);
  return j;
}

inline ProblemInstance instance_from_json(const json& j) {
  ProblemInstance inst;
  inst.problem = problem_from_json(j);
  if (j.contains("humans")) {
    for (const auto& h : j.at("humans")) {
      std::vector<CurveParams> params;
      for (const auto& c : h) params.push_back(curve_params_from_json(c));
      inst.humans.emplace_back(std::move(params));
    }
  } else {
    inst.humans = default_human_curves(inst.problem);
  }
  return inst;
}

inline ProblemInstance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

/// Observation as a nested mapping: durations, deadlines, waits, agent kinds.
inline json to_json(const Observation& obs) {
  json kinds = json::array();
  for (AgentId a = 0; a < obs.num_agents(); ++a)
    kinds.push_back(obs.agent_kind(a) == AgentKind::robot ? "robot" : "human");
  json p = to_json(obs.estimated);
  return json{{"durations", p["durations"]},
              {"deadlines", p["deadlines"]},
              {"waits", p["waits"]},
              {"agent_kinds", kinds},
              {"round", obs.round}};
}

inline json to_json(const StepResult& r) {
  return json{{"observation", to_json(r.observation)},
              {"reward", r.reward},
              {"done", r.done},
              {"info", to_json(r.info)},
              {"realized_durations", to_json(r.realized)}};
}

}  // namespace hrsched
