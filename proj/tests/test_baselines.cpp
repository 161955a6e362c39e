#include <gtest/gtest.h>

#include "hrsched/baselines/edf.hpp"
#include "hrsched/baselines/ga.hpp"
#include "hrsched/probgen/generator.hpp"
#include "support/gen.hpp"

using namespace hrsched;

namespace {

Observation observe(const SchedulingProblem& p) {
  Observation o;
  o.estimated = p;
  return o;
}

}  // namespace

TEST(Edf, OrdersByDeadlineThenIndex) {
  SchedulingProblem p;
  p.num_tasks = 4;
  p.num_robots = 2;
  p.durations = DurationMatrix(4, 2, 10);
  p.durations.at(3, 0) = 50;
  p.deadlines[3] = 20;
  p.deadlines[1] = 30;
  const auto s = edf_schedule(observe(p));
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.decisions[0], (ScheduleDecision{3, 0}));
  EXPECT_EQ(s.decisions[1], (ScheduleDecision{1, 1}));  // agent 1 frees first
  EXPECT_EQ(s.decisions[2], (ScheduleDecision{0, 1}));
  EXPECT_EQ(s.decisions[3], (ScheduleDecision{2, 1}));
}

TEST(Edf, WaitPredecessorPlacedFirst) {
  SchedulingProblem p;
  p.num_tasks = 2;
  p.num_robots = 1;
  p.durations = DurationMatrix(2, 1, 10);
  p.deadlines[0] = 50;
  p.waits.push_back({1, 0, 2});
  const auto s = edf_schedule(observe(p));
  EXPECT_EQ(s.decisions[0].task, 1);
  EXPECT_TRUE(simulate_dispatch(p, s, p.durations).fully_feasible());
}

// Property: complete, duplicate-free, every wait source ahead of its target.
TEST(Edf, CompleteAndRespectsWaitOrder) {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 0, 15), 2, 2, 0.4, 2.0);
    const auto s = edf_schedule(observe(p));
    ASSERT_TRUE(s.is_complete(p.num_tasks));
    std::vector<int> pos(static_cast<std::size_t>(p.num_tasks));
    for (std::size_t k = 0; k < s.size(); ++k) pos[s.decisions[k].task] = static_cast<int>(k);
    for (const auto& w : p.waits) EXPECT_LT(pos[w.before], pos[w.after]);
    EXPECT_EQ(s, edf_schedule(observe(p)));
  }
}

TEST(Ga, ZeroGenerationsReturnsEdf) {
  const auto obs = observe(generate_problem(Scale::small, 3).instance.problem);
  Rng rng(1);
  GaConfig cfg;
  cfg.generations = 0;
  const auto r = ga_search(obs, cfg, rng);
  EXPECT_EQ(r.best, edf_schedule(obs));
  EXPECT_EQ(r.fitness, estimated_fitness(obs, r.best));
}

// Property: never ranks below its EDF seed and the per-generation best never
// gets worse.
TEST(Ga, DominatesSeedAndMonotone) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 1, 12), 2, 2, 0.5, 1.0);
    const auto obs = observe(p);
    GaConfig cfg;
    cfg.generations = 15;
    Rng grng(static_cast<std::uint64_t>(i));
    const auto r = ga_search(obs, cfg, grng);
    const auto seed = estimated_fitness(obs, edf_schedule(obs));
    EXPECT_FALSE(seed.better_than(r.fitness));
    ASSERT_EQ(r.best_per_generation.size(), 16u);
    for (std::size_t g = 1; g < r.best_per_generation.size(); ++g)
      EXPECT_FALSE(r.best_per_generation[g - 1].better_than(r.best_per_generation[g]));
    EXPECT_TRUE(r.best.is_complete(p.num_tasks));
    EXPECT_EQ(r.fitness, estimated_fitness(obs, r.best));
  }
}

TEST(Ga, SameSeedSameResult) {
  const auto obs = observe(generate_problem(Scale::medium, 5).instance.problem);
  GaConfig cfg;
  Rng a(4), b(4);
  EXPECT_EQ(ga_schedule(obs, cfg, a), ga_schedule(obs, cfg, b));
}

TEST(Ga, FindsExhaustiveOptimumOnTinyInstances) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = generate_problem(3, seed).instance.problem;
    GaConfig cfg;
    cfg.generations = 100;
    Rng rng(seed);
    const auto r = ga_search(observe(p), cfg, rng);
    const auto opt = testgen::exhaustive_best(p, p.durations);
    EXPECT_LE(r.fitness.feasible, opt.feasible);
    if (r.fitness.feasible == opt.feasible) EXPECT_GE(r.fitness.span, opt.span);
    hits += r.fitness.feasible == opt.feasible && r.fitness.span == opt.span;
  }
  EXPECT_GE(hits, 8);
}
