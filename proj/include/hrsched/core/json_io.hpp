#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hrsched/core/problem.hpp"

namespace hrsched {

using json = nlohmann::json;

inline json to_json(const DurationMatrix& m) {
  json rows = json::array();
  for (TaskId t = 0; t < m.tasks(); ++t) {
    json row = json::array();
    for (AgentId a = 0; a < m.agents(); ++a) row.push_back(m.at(t, a));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Accepts either a list of rows or a flat row-major list.
inline DurationMatrix duration_matrix_from_json(const json& j, int tasks, int agents) {
  DurationMatrix m(tasks, agents);
  if (!j.is_array()) throw std::invalid_argument("durations: expected an array");
  const bool flat = !j.empty() && j.front().is_number();
  if (flat) {
    if (j.size() != static_cast<std::size_t>(tasks) * agents)
      throw std::invalid_argument("durations: expected " + std::to_string(tasks * agents) + " values");
    for (TaskId t = 0; t < tasks; ++t)
      for (AgentId a = 0; a < agents; ++a) m.at(t, a) = j.at(static_cast<std::size_t>(t) * agents + a).get<double>();
    return m;
  }
  if (j.size() != static_cast<std::size_t>(tasks))
    throw std::invalid_argument("durations: expected " + std::to_string(tasks) + " rows");
  for (TaskId t = 0; t < tasks; ++t) {
    const auto& row = j.at(t);
    if (!row.is_array() || row.size() != static_cast<std::size_t>(agents))
      throw std::invalid_argument("durations: row " + std::to_string(t) + " must have " + std::to_string(agents) +
                                  " entries");
    for (AgentId a = 0; a < agents; ++a) m.at(t, a) = row.at(a).get<double>();
  }
  return m;
}

inline json to_json(const SchedulingProblem& p) {
  json deadlines = json::object();
  for (const auto& [t, d] : p.deadlines) deadlines[std::to_string(t)] = d;
  json waits = json::array();
  for (const auto& w : p.waits) waits.push_back(json::array({w.before, w.after, w.gap}));
  return json{{"num_tasks", p.num_tasks},     {"num_robots", p.num_robots}, {"num_humans", p.num_humans},
              {"durations", to_json(p.durations)}, {"deadlines", deadlines},      {"waits", waits}};
}

inline SchedulingProblem problem_from_json(const json& j) {
  SchedulingProblem p;
  p.num_tasks = j.at("num_tasks").get<int>();
  p.num_robots = j.at("num_robots").get<int>();
  p.num_humans = j.at("num_humans").get<int>();
  if (p.num_tasks < 0 || p.num_robots < 0 || p.num_humans < 0)
    throw std::invalid_argument("problem: negative count");
  p.durations = duration_matrix_from_json(j.at("durations"), p.num_tasks, p.num_agents());
  if (j.contains("deadlines")) {
    for (const auto& [key, value] : j.at("deadlines").items()) p.deadlines[std::stoi(key)] = value.get<double>();
  }
  if (j.contains("waits")) {
    for (const auto& w : j.at("waits")) {
      if (!w.is_array() || w.size() != 3) throw std::invalid_argument("waits: entries must be [i, j, w]");
      p.waits.push_back({w.at(0).get<int>(), w.at(1).get<int>(), w.at(2).get<double>()});
    }
  }
  return p;
}

inline json to_json(const Schedule& s) {
  json out = json::array();
  for (const auto& d : s) out.push_back(json::array({d.task, d.agent}));
  return out;
}

inline Schedule schedule_from_json(const json& j) {
  Schedule s;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("schedule: entries must be [task, agent]");
    s.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
  }
  return s;
}

inline json to_json(const ExecutionTrace& tr) {
  auto times = [](const std::vector<std::optional<Time>>& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
    return out;
  };
  return json{{"start_times", times(tr.start_times)},
              {"finish_times", times(tr.finish_times)},
              {"assigned_agent", tr.assigned_agent},
              {"feasible_set", tr.feasible_set},
              {"infeasible_set", tr.infeasible_set},
              {"makespan", tr.makespan ? json(*tr.makespan) : json(nullptr)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hrsched
