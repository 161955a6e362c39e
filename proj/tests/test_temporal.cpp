#include <gtest/gtest.h>

#include <algorithm>

#include "hrsched/temporal/dispatch.hpp"
#include "hrsched/temporal/stn.hpp"
#include "support/gen.hpp"

using namespace hrsched;

namespace {

SchedulingProblem make(int n, int agents, Time dur = 10.0) {
  SchedulingProblem p;
  p.num_tasks = n;
  p.num_robots = agents;
  p.durations = DurationMatrix(n, agents, dur);
  return p;
}

bool has_arc(const DistanceGraph& g, int from, int to, Time w) {
  return std::find(g.arcs.begin(), g.arcs.end(), DistanceGraph::Arc{from, to, w}) != g.arcs.end();
}

}  // namespace

TEST(BuildStn, EmptyProblemHasOnlyOrigin) {
  const auto g = build_stn(make(0, 1), DurationMatrix(0, 1));
  EXPECT_EQ(g.num_nodes(), 1);
  EXPECT_TRUE(g.arcs.empty());
}

TEST(BuildStn, DeadlineArcFromOrigin) {
  auto p = make(1, 1);
  p.deadlines[0] = 50;
  const auto g = build_stn(p, p.durations);
  EXPECT_TRUE(has_arc(g, DistanceGraph::origin(), DistanceGraph::finish_node(0), 50));
}

TEST(BuildStn, WaitIsNegativeArcFromSuccessorStart) {
  auto p = make(2, 1);
  p.waits.push_back({0, 1, 5});
  const auto g = build_stn(p, p.durations);
  EXPECT_TRUE(has_arc(g, DistanceGraph::start_node(1), DistanceGraph::finish_node(0), -5));
}

TEST(BuildStn, BoundEncodingRules) {
  DistanceGraph g;
  g.num_tasks = 1;
  g.add_upper_bound(2, 1, 7);   // x2 - x1 <= 7
  g.add_lower_bound(2, 1, 3);   // x2 - x1 >= 3
  EXPECT_EQ(g.arcs[0], (DistanceGraph::Arc{1, 2, 7}));
  EXPECT_EQ(g.arcs[1], (DistanceGraph::Arc{2, 1, -3}));
}

TEST(BuildStn, DurationArcsOnlyWithAssignment) {
  auto p = make(2, 2);
  p.durations.at(1, 1) = 30;
  const auto free = build_stn(p, p.durations);
  Schedule s;
  s.push_back({1, 1});
  const auto fixed = build_stn(p, p.durations, s);
  const int st = DistanceGraph::start_node(1), fi = DistanceGraph::finish_node(1);
  EXPECT_FALSE(has_arc(free, st, fi, 30));
  EXPECT_TRUE(has_arc(fixed, st, fi, 30));
  EXPECT_TRUE(has_arc(fixed, fi, st, -30));
}

TEST(CheckConsistency, DeadlineShorterThanDuration) {
  auto p = make(1, 1, 30);
  p.deadlines[0] = 20;
  Schedule s;
  s.push_back({0, 0});
  const auto r = check_consistency(build_stn(p, p.durations, s));
  ASSERT_FALSE(r.consistent);
  EXPECT_LT(r.witness_weight, 0);
  auto contains = [&](int v) { return std::find(r.witness.begin(), r.witness.end(), v) != r.witness.end(); };
  EXPECT_TRUE(contains(DistanceGraph::start_node(0)));
  EXPECT_TRUE(contains(DistanceGraph::finish_node(0)));
}

TEST(CheckConsistency, UnconstrainedThreeTasks) {
  const auto p = make(3, 2);
  EXPECT_TRUE(check_consistency(build_stn(p, p.durations)).consistent);
}

TEST(CheckConsistency, ChainWithWaitMissesDeadline) {
  // earliest: t0 in [0,10], t1 starts >= 20, finishes >= 30 > 25
  auto p = make(2, 2, 10);
  p.waits.push_back({0, 1, 10});
  p.deadlines[1] = 25;
  Schedule s;
  s.push_back({0, 0});
  s.push_back({1, 1});
  EXPECT_FALSE(check_consistency(build_stn(p, p.durations, s)).consistent);
  p.deadlines[1] = 30;
  EXPECT_TRUE(check_consistency(build_stn(p, p.durations, s)).consistent);
}

TEST(CheckConsistency, WitnessWeightMatchesArcs) {
  Rng rng(3);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 1, 5), 2, 0, 0.7, 1.0);
    const auto s = testgen::random_schedule(rng, p);
    const auto g = build_stn(p, p.durations, s);
    const auto r = check_consistency(g);
    if (r.consistent) continue;
    ++checked;
    // every consecutive witness pair must be joined by an arc; the cheapest
    // such arcs sum to at most the reported weight
    double total = 0;
    for (std::size_t k = 0; k < r.witness.size(); ++k) {
      const int from = r.witness[k], to = r.witness[(k + 1) % r.witness.size()];
      double best = 1e18;
      for (const auto& a : g.arcs)
        if (a.from == from && a.to == to) best = std::min(best, a.weight);
      ASSERT_LT(best, 1e17) << "no arc " << from << "->" << to;
      total += best;
    }
    EXPECT_LT(total, 0);
  }
  EXPECT_GT(checked, 10);
}

TEST(SimulateDispatch, SerialExecution) {
  auto p = make(2, 1);
  p.durations.at(1, 0) = 20;
  Schedule s;
  s.push_back({0, 0});
  s.push_back({1, 0});
  const auto tr = simulate_dispatch(p, s, p.durations);
  EXPECT_EQ(*tr.start_times[0], 0);
  EXPECT_EQ(*tr.start_times[1], 10);
  EXPECT_EQ(*tr.finish_times[0], 10);
  EXPECT_EQ(*tr.finish_times[1], 30);
  EXPECT_EQ(*tr.makespan, 30);
}

TEST(SimulateDispatch, ParallelExecution) {
  auto p = make(2, 2);
  p.durations.at(1, 1) = 20;
  Schedule s;
  s.push_back({0, 0});
  s.push_back({1, 1});
  EXPECT_EQ(*simulate_dispatch(p, s, p.durations).makespan, 20);
}

TEST(SimulateDispatch, WaitSourceLaterInSequenceIsInfeasible) {
  auto p = make(2, 2);
  p.waits.push_back({0, 1, 3});
  Schedule s;
  s.push_back({1, 0});
  s.push_back({0, 1});
  const auto tr = simulate_dispatch(p, s, p.durations);
  EXPECT_EQ(tr.feasible_set, std::vector<TaskId>{0});
  EXPECT_EQ(tr.infeasible_set, std::vector<TaskId>{1});
  EXPECT_FALSE(tr.makespan);
  EXPECT_EQ(*tr.start_times[0], 0);  // the rejected task took no agent time
}

TEST(SimulateDispatch, IdleForWaitAndDeadlineMiss) {
  auto p = make(3, 2);
  p.waits.push_back({0, 1, 4});
  p.deadlines[2] = 15;
  Schedule s;
  s.push_back({0, 0});
  s.push_back({1, 1});
  s.push_back({2, 1});
  const auto tr = simulate_dispatch(p, s, p.durations);
  EXPECT_EQ(*tr.start_times[1], 14);
  EXPECT_EQ(tr.infeasible_set, std::vector<TaskId>{2});
}

TEST(SimulateDispatch, OmittedTaskInfeasibleAndDuplicatesRejected) {
  const auto p = make(2, 1);
  Schedule s;
  s.push_back({1, 0});
  const auto tr = simulate_dispatch(p, s, p.durations);
  EXPECT_EQ(tr.infeasible_set, std::vector<TaskId>{0});
  EXPECT_EQ(tr.assigned_agent[0], -1);
  s.push_back({1, 0});
  EXPECT_THROW(simulate_dispatch(p, s, p.durations), std::invalid_argument);
}

TEST(SimulateDispatch, MatchesTickOracleOnSmallInstances) {
  Rng rng(1234);
  for (int i = 0; i < 500; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 1, 5), 2, 0, 0.5, 1.5);
    const auto s = testgen::random_schedule(rng, p, uniform01(rng) < 0.8);
    const auto tr = simulate_dispatch(p, s, p.durations);
    const auto ref = testgen::tick_oracle(p, s, p.durations);
    for (TaskId t = 0; t < p.num_tasks; ++t) {
      ASSERT_EQ(tr.start_times[t].has_value(), ref.start[t].has_value()) << "case " << i;
      if (tr.start_times[t]) {
        EXPECT_EQ(*tr.start_times[t], static_cast<Time>(*ref.start[t]));
        EXPECT_EQ(*tr.finish_times[t], static_cast<Time>(*ref.finish[t]));
      }
    }
  }
}

// Property: feasible traces satisfy every constraint, partition the tasks
// and agree with the fixed-assignment STN.
TEST(SimulateDispatch, TraceInvariants) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 1, 8), uniform_int(rng, 1, 2), uniform_int(rng, 0, 2));
    const auto s = testgen::random_schedule(rng, p, uniform01(rng) < 0.8);
    const auto tr = simulate_dispatch(p, s, p.durations);
    std::vector<TaskId> all(tr.feasible_set);
    all.insert(all.end(), tr.infeasible_set.begin(), tr.infeasible_set.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(static_cast<int>(all.size()), p.num_tasks);
    for (TaskId t = 0; t < p.num_tasks; ++t) ASSERT_EQ(all[t], t);

    for (TaskId t : tr.feasible_set) {
      EXPECT_EQ(*tr.finish_times[t], *tr.start_times[t] + p.durations.at(t, tr.assigned_agent[t]));
      EXPECT_GE(*tr.start_times[t], 0);
      if (auto d = p.deadline(t)) EXPECT_LE(*tr.finish_times[t], *d);
    }
    for (const auto& w : p.waits)
      if (tr.finish_times[w.after]) {
        ASSERT_TRUE(tr.finish_times[w.before]);
        EXPECT_GE(*tr.start_times[w.after], *tr.finish_times[w.before] + w.gap);
      }
    if (tr.fully_feasible()) {
      EXPECT_TRUE(check_consistency(build_stn(p, p.durations, s)).consistent);
      EXPECT_EQ(*tr.makespan, executed_span(tr));
    }
    EXPECT_EQ(tr, simulate_dispatch(p, s, p.durations));
  }
}

TEST(SimulateDispatch, AppendingNeverLowersSpan) {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 2, 8), 2, 1);
    const auto full = testgen::random_schedule(rng, p);
    Schedule prefix;
    Time prev = 0;
    for (const auto& d : full) {
      prefix.push_back(d);
      const Time span = executed_span(simulate_dispatch(p, prefix, p.durations));
      EXPECT_GE(span, prev);
      prev = span;
    }
  }
}
