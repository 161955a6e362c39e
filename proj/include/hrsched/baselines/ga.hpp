#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "hrsched/baselines/edf.hpp"
#include "hrsched/temporal/dispatch.hpp"
#include "hrsched/util/rng.hpp"

namespace hrsched {

/// Ranking key of a schedule: more executed tasks first, then the shorter
/// span of executed work.
struct ScheduleFitness {
  int feasible = 0;
  Time span = 0.0;

  /// Strictly better under (feasible desc, span asc).
  bool better_than(const ScheduleFitness& o) const {
    if (feasible != o.feasible) return feasible > o.feasible;
    return span < o.span;
  }
  bool operator==(const ScheduleFitness&) const = default;
};

inline ScheduleFitness evaluate_fitness(const SchedulingProblem& p, const Schedule& s, const DurationMatrix& dur) {
  const auto tr = simulate_dispatch(p, s, dur);
  return {static_cast<int>(tr.feasible_set.size()), executed_span(tr)};
}

/// Scores `s` by dispatching it on the observation's estimated durations.
inline ScheduleFitness estimated_fitness(const Observation& obs, const Schedule& s) {
  return evaluate_fitness(obs.estimated, s, obs.estimated.durations);
}

struct GaConfig {
  int generations = 10;
  int population = 90;
  int allocation_mutations = 10;
  int order_mutations = 10;
};

struct GaResult {
  Schedule best;
  ScheduleFitness fitness;
  std::vector<ScheduleFitness> best_per_generation;  // index 0 is the EDF seed
};

/// Genetic post-processing of the EDF schedule with allocation and order
/// swap mutations and elitist truncation selection.
inline GaResult ga_search(const Observation& obs, const GaConfig& cfg, Rng& rng) {
  struct Member {
    Schedule schedule;
    ScheduleFitness fitness;
  };
  auto by_fitness = [](const Member& a, const Member& b) { return a.fitness.better_than(b.fitness); };

  const Schedule seed = edf_schedule(obs);
  GaResult out;
  out.best = seed;
  out.fitness = estimated_fitness(obs, seed);
  out.best_per_generation.push_back(out.fitness);
  const int n = static_cast<int>(seed.size());
  const int agents = obs.num_agents();
  if (cfg.generations <= 0 || n == 0) return out;

  std::vector<Member> pop;
  pop.push_back({seed, out.fitness});
  for (int i = 1; i < cfg.population; ++i) {
    Schedule s = seed;
    if (n >= 2) {
      const int a = uniform_int(rng, 0, n - 1);
      int b = uniform_int(rng, 0, n - 2);
      if (b >= a) ++b;
      std::swap(s.decisions[a], s.decisions[b]);
    }
    pop.push_back({s, estimated_fitness(obs, s)});
  }
  std::stable_sort(pop.begin(), pop.end(), by_fitness);

  for (int g = 0; g < cfg.generations; ++g) {
    const auto parents = static_cast<int>(pop.size());
    std::vector<Member> children;
    for (int m = 0; m < cfg.allocation_mutations && agents >= 2; ++m) {
      Schedule s = pop[uniform_int(rng, 0, parents - 1)].schedule;
      auto& d = s.decisions[uniform_int(rng, 0, n - 1)];
      int a = uniform_int(rng, 0, agents - 2);
      if (a >= d.agent) ++a;
      d.agent = a;
      children.push_back({s, estimated_fitness(obs, s)});
    }
    for (int m = 0; m < cfg.order_mutations && n >= 2; ++m) {
      Schedule s = pop[uniform_int(rng, 0, parents - 1)].schedule;
      const int a = uniform_int(rng, 0, n - 1);
      int b = uniform_int(rng, 0, n - 2);
      if (b >= a) ++b;
      std::swap(s.decisions[a], s.decisions[b]);
      children.push_back({s, estimated_fitness(obs, s)});
    }
    for (auto& c : children) pop.push_back(std::move(c));
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    if (static_cast<int>(pop.size()) > cfg.population) pop.resize(static_cast<std::size_t>(cfg.population));
    out.best_per_generation.push_back(pop.front().fitness);
  }
  out.best = pop.front().schedule;
  out.fitness = pop.front().fitness;
  return out;
}

inline Schedule ga_schedule(const Observation& obs, const GaConfig& cfg, Rng& rng) {
  return ga_search(obs, cfg, rng).best;
}

}  // namespace hrsched
