#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hrsched/bench/report.hpp"
#include "support/gen.hpp"

using namespace hrsched;

namespace {

// Robot-only instance: realized durations equal the problem's, so the
// oracle can replay the round without the environment.
ProblemInstance robots_only(std::uint64_t seed, int n, double deadline_p) {
  Rng rng(seed);
  ProblemInstance inst;
  inst.problem = testgen::random_problem(rng, n, 3, 0, deadline_p, 0.0);
  inst.humans = default_human_curves(inst.problem);
  return inst;
}

Observation observe(const SchedulingProblem& p) {
  Observation o;
  o.estimated = p;
  return o;
}

RoundRecord rec(std::uint64_t seed, int problem, bool feasible, double makespan, double worst) {
  RoundRecord r;
  r.seed = seed;
  r.problem = problem;
  r.round = 1;
  r.num_tasks = 3;
  r.feasible_tasks = feasible ? 3 : 1;
  r.feasible = feasible;
  r.makespan = feasible ? makespan : 0;
  r.worst_case = worst;
  return r;
}

EvalResult result(const std::string& method, const std::string& scale, std::vector<RoundRecord> rounds,
                  std::vector<double> runtime = {}) {
  EvalResult e;
  e.method = method;
  e.dataset_scale = scale;
  e.rounds = std::move(rounds);
  e.runtime = std::move(runtime);
  return e;
}

}  // namespace

TEST(Evaluate, AllFeasibleRoundsScoreTheirMakespan) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = robots_only(s, 6, 0.0);
    EvalConfig cfg;
    cfg.rounds = 2;
    const auto res = evaluate({inst}, cfg);
    ASSERT_EQ(res.rounds.size(), 2u);
    const auto trace = testgen::tick_oracle(inst.problem, edf_schedule(observe(inst.problem)), inst.problem.durations);
    long span = 0;
    for (const auto& f : trace.finish) {
      ASSERT_TRUE(f.has_value());
      span = std::max(span, *f);
    }
    for (const auto& r : res.rounds) {
      EXPECT_TRUE(r.feasible);
      EXPECT_EQ(r.feasible_tasks, 6);
      EXPECT_EQ(r.adjusted_makespan(), static_cast<double>(span));
    }
  }
}

TEST(Evaluate, AllInfeasibleRoundsScoreWorstCase) {
  auto inst = robots_only(4, 5, 0.0);
  for (TaskId t = 0; t < 5; ++t) inst.problem.deadlines[t] = 1;  // below every duration
  double worst = 0;
  for (TaskId t = 0; t < 5; ++t) {
    double m = 0;
    for (AgentId a = 0; a < 3; ++a) m = std::max(m, inst.problem.durations.at(t, a));
    worst += m;
  }
  for (Method m : {Method::edf, Method::ga}) {
    EvalConfig cfg;
    cfg.method = m;
    cfg.ga.generations = 3;
    cfg.seeds = {1, 2};
    const auto res = evaluate({inst}, cfg);
    ASSERT_EQ(res.rounds.size(), 8u);
    EXPECT_EQ(res.runtime.size(), 2u);
    for (const auto& r : res.rounds) {
      EXPECT_FALSE(r.feasible);
      EXPECT_EQ(r.feasible_tasks, 0);
      EXPECT_EQ(r.makespan, 0);
      EXPECT_EQ(r.adjusted_makespan(), worst);
    }
  }
}

TEST(Evaluate, RecordsAreOrderedAndRepeatable) {
  std::vector<ProblemInstance> ps{robots_only(1, 4, 0.5), robots_only(2, 4, 0.5)};
  EvalConfig cfg;
  cfg.method = Method::ga;
  cfg.ga.generations = 5;
  cfg.seeds = {7, 3};
  cfg.stochastic = true;
  const auto a = evaluate(ps, cfg), b = evaluate(ps, cfg);
  EXPECT_EQ(a.rounds, b.rounds);
  ASSERT_EQ(a.rounds.size(), 16u);
  EXPECT_EQ(a.rounds[0].seed, 7u);
  EXPECT_EQ(a.rounds[4].problem, 1);
  EXPECT_EQ(a.rounds[8].seed, 3u);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.rounds[static_cast<std::size_t>(k)].round, k);
  EXPECT_EQ(a.batch, 0);
}

TEST(Evaluate, RejectsBadConfigs) {
  const std::vector<ProblemInstance> ps{robots_only(1, 3, 0)};
  EvalConfig cfg;
  cfg.method = Method::hybridnet;
  EXPECT_THROW(evaluate(ps, cfg), std::invalid_argument);
  PolicyConfig pc;
  pc.num_agents = 3;
  PolicyParameters params(pc, 1);
  cfg.batch = 0;
  EXPECT_THROW(evaluate(ps, cfg, &params), std::invalid_argument);
  cfg.method = Method::hetgat_interactive;
  cfg.batch = 1;
  cfg.stochastic = true;
  EXPECT_THROW(evaluate(ps, cfg, &params), std::invalid_argument);
  EXPECT_THROW(method_from_string("random"), std::invalid_argument);
  EXPECT_EQ(method_from_string("hetgat-interactive"), Method::hetgat_interactive);
}

TEST(Report, PoolsSeedsAcrossRuns) {
  // seed 1: one feasible round (50), one infeasible (200) -> 50%, 125
  // seed 2: both feasible (40, 60)                         -> 100%, 50
  const auto a = result("edf", "small", {rec(1, 0, true, 50, 90), rec(1, 1, false, 0, 200)}, {0.1, 0.3});
  const auto b = result("edf", "small", {rec(2, 0, true, 40, 90), rec(2, 1, true, 60, 90)}, {0.2, 0.2});
  const auto rows = build_report({a, b});
  ASSERT_EQ(rows.size(), 1u);
  const auto& r = rows[0];
  EXPECT_EQ(r.seeds, 2);
  EXPECT_DOUBLE_EQ(r.feasibility.mean, 75);
  EXPECT_DOUBLE_EQ(*r.feasibility.spread, 25);  // sd 25*sqrt(2), over sqrt(2)
  EXPECT_DOUBLE_EQ(r.adjusted_makespan.mean, 87.5);
  EXPECT_DOUBLE_EQ(*r.adjusted_makespan.spread, 37.5);
  EXPECT_DOUBLE_EQ(r.runtime.mean, 0.2);
  EXPECT_NEAR(*r.runtime.spread, std::sqrt(0.02 / 3), 1e-15);
}

TEST(Report, SingleSeedHasNoSpread) {
  const auto rows = build_report({result("ga", "large", {rec(0, 0, true, 10, 20)}, {0.5})});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].adjusted_makespan.spread.has_value());
  EXPECT_FALSE(rows[0].runtime.spread.has_value());
  std::ostringstream os;
  write_report_csv(os, rows);
  std::string line;
  std::istringstream in(os.str());
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "ga,,,large,0,1,10,,100,,0.5,");
}

TEST(Report, SortedByScaleThenMethod) {
  const auto rows = build_report({result("hybridnet", "small", {rec(0, 0, true, 1, 1)}),
                                  result("edf", "large", {rec(0, 0, true, 1, 1)}),
                                  result("ga", "small", {rec(0, 0, true, 1, 1)}),
                                  result("edf", "medium", {rec(0, 0, true, 1, 1)}),
                                  result("edf", "small", {rec(0, 0, true, 1, 1)})});
  std::vector<std::string> got;
  for (const auto& r : rows) got.push_back(r.dataset_scale + "/" + r.method);
  EXPECT_EQ(got, (std::vector<std::string>{"small/edf", "small/ga", "small/hybridnet", "medium/edf", "large/edf"}));
}

TEST(Report, DuplicateSeedThrows) {
  const auto a = result("edf", "small", {rec(3, 0, true, 1, 1)});
  EXPECT_THROW(build_report({a, a}), std::invalid_argument);
  auto other = a;
  other.stochastic = true;  // different mode is a different row
  EXPECT_NO_THROW(build_report({a, other}));
}

TEST(Report, MeanSemMatchesHandComputation) {
  const auto s = mean_sem({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(s.mean, 5);
  EXPECT_NEAR(*s.spread, std::sqrt(32.0 / 7) / std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(*mean_sd({2, 4, 4, 4, 5, 5, 7, 9}).spread, std::sqrt(32.0 / 7), 1e-15);
  EXPECT_FALSE(mean_sem({}).spread.has_value());
}

TEST(EvalResultJson, RoundTrip) {
  auto e = result("hybridnet", "medium", {rec(5, 2, true, 123.25, 400), rec(5, 3, false, 0, 1e-3 / 3)}, {0.125});
  e.batch = 16;
  e.training_scale = "small";
  const auto back = eval_result_from_json(nlohmann::json::parse(to_json(e).dump()));
  EXPECT_EQ(back.rounds, e.rounds);
  EXPECT_EQ(back.runtime, e.runtime);
  EXPECT_EQ(back.batch, 16);
  EXPECT_EQ(back.training_scale, "small");
  EXPECT_EQ(to_json(back), to_json(e));
}
