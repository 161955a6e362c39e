// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   acceptance [--only name[,name...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrsched/bench/evaluate.hpp"
#include "hrsched/bench/report.hpp"
#include "hrsched/probgen/generator.hpp"
#include "hrsched/train/trainer.hpp"
#include "support/gen.hpp"
#include "support/gradcheck.hpp"
#include "support/policy_check.hpp"

namespace fs = std::filesystem;
using namespace hrsched;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- shared fixtures -------------------------------------------------------

constexpr std::uint64_t kDatasetSeed = 1;
constexpr std::uint64_t kTrainSeed = 3;

const std::vector<ProblemInstance>& smoke_train() {
  static const auto v = generate_problems(Scale::small, 50, kDatasetSeed, "train");
  return v;
}
const std::vector<ProblemInstance>& smoke_test() {
  static const auto v = generate_problems(Scale::small, 50, kDatasetSeed, "test");
  return v;
}

TrainConfig smoke_config() {
  TrainConfig c;  // step baseline, batch 8, deterministic
  c.epochs = 2000;
  c.seed = kTrainSeed;
  return c;
}

struct Trained {
  PolicyParameters untrained;
  PolicyParameters params;
  double seconds = 0;
  bool diverged = false;
};

const Trained& trained() {
  static const Trained t = [] {
    const TrainConfig cfg = smoke_config();
    TrainerState s = make_trainer_state(cfg);
    Trained out{s.params, s.params};
    const auto t0 = Clock::now();
    out.diverged = train(s, smoke_train(), cfg).diverged;
    out.seconds = seconds_since(t0);
    out.params = s.params;
    return out;
  }();
  return t;
}

double feasibility(const EvalResult& r) {
  double f = 0;
  for (const auto& x : r.rounds) f += x.feasible ? 1 : 0;
  return 100.0 * f / static_cast<double>(r.rounds.size());
}

EvalResult eval_method(const std::vector<ProblemInstance>& ps, Method m, PolicyParameters* params = nullptr,
                       int batch = 8, std::vector<std::uint64_t> seeds = {0}) {
  EvalConfig cfg;
  cfg.method = m;
  cfg.batch = batch;
  cfg.seeds = std::move(seeds);
  return evaluate(ps, cfg, params);
}

// ---- criteria --------------------------------------------------------------

Outcome stn_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240501);
  int agree = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const int robots = uniform_int(rng, 0, 2);
    const auto q = testgen::random_problem(rng, uniform_int(rng, 1, 5), robots, 2 - robots, 0.5, 1.5);
    const auto s = testgen::random_schedule(rng, q, uniform01(rng) < 0.8);
    const auto tr = simulate_dispatch(q, s, q.durations);
    const auto ref = testgen::tick_oracle(q, s, q.durations);
    bool same = true;
    for (TaskId t = 0; t < q.num_tasks; ++t) same = same && tr.start_times[t].has_value() == ref.start[t].has_value();
    agree += same ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  return {agree == n && secs < 60, fmt("%d/%d instances agree, %.2f s (limit 60 s)", agree, n, secs)};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(7);
  double prim = 0, lstm = 0, e2e = 0;
  int checked = 0;
  bool stable = true;
  for (const auto& c : testgen::primitive_op_cases())
    for (int rep = 0; rep < 3; ++rep) {
      const auto r = c.run(rng);
      prim = std::max(prim, r.max_rel_err);
      checked += r.checked;
    }
  for (int rep = 0; rep < 5; ++rep) {
    const auto r = testgen::lstm_chain_gradcheck(rng);
    lstm = std::max(lstm, r.max_rel_err);
    checked += r.checked;
  }
  // 3 tasks, 2 agents: every entry of a small policy, sampled entries of the
  // full-size one
  PolicyConfig small;
  small.num_agents = 2;
  small.hidden = 8;
  small.heads = 2;
  small.lstm = 4;
  small.selector_hidden = 6;
  PolicyConfig full;
  full.num_agents = 2;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto obs = testgen::toy_observation(seed, 3, 1, 1);
    PolicyParameters a(small, seed);
    const auto ra = testgen::policy_gradcheck(a, obs, seed + 10);
    PolicyParameters b(full, seed);
    const auto rb = testgen::policy_gradcheck(b, obs, seed + 10, 4);
    e2e = std::max({e2e, ra.result.max_rel_err, rb.result.max_rel_err});
    stable = stable && ra.schedule_stable && rb.schedule_stable;
    checked += ra.result.checked + rb.result.checked;
  }
  const double secs = seconds_since(t0);
  const bool pass = prim < 1e-5 && lstm < 1e-4 && e2e < 1e-4 && stable && secs < 300;
  return {pass, fmt("max rel err ops %.2e (<1e-5), lstm chains %.2e, end-to-end %.2e (<1e-4); %d entries, %.1f s "
                    "(limit 300 s)",
                    prim, lstm, e2e, checked, secs)};
}

// Reward recomputed from the definition: executed tasks pay their own
// duration, the rest are charged to the agent for which they cost most.
double reward_by_definition(const SchedulingProblem& p, const ExecutionTrace& tr, const DurationMatrix& d,
                            double C) {
  double feasible = 0;
  for (TaskId t = 0; t < p.num_tasks; ++t)
    if (tr.finish_times[t]) feasible += -d.at(t, tr.assigned_agent[t]);
  double charge = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (AgentId a = 0; a < p.num_agents(); ++a) {
    double cost = 0;
    for (TaskId t = 0; t < p.num_tasks; ++t)
      if (!tr.finish_times[t]) {
        cost += d.at(t, a);
        any = true;
      }
    charge = std::max(charge, cost);
  }
  return any ? feasible + C * -charge : feasible;
}

Outcome reward_arithmetic() {
  Rng rng(31);
  int exact = 0, with_infeasible = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = testgen::random_problem(rng, uniform_int(rng, 1, 10), uniform_int(rng, 1, 2),
                                           uniform_int(rng, 1, 2), 0.5, 1.0);
    DurationMatrix realized = p.durations;
    for (TaskId t = 0; t < p.num_tasks; ++t)
      for (AgentId a = 0; a < p.num_agents(); ++a)
        realized.at(t, a) = clamp_duration(realized.at(t, a) + normal(rng, 0.0, 7.0));
    const auto s = testgen::random_schedule(rng, p, uniform01(rng) < 0.8);
    const auto tr = simulate_dispatch(p, s, realized);
    with_infeasible += tr.infeasible_set.empty() ? 0 : 1;
    exact += round_reward(tr, realized, 2.0) == reward_by_definition(p, tr, realized, 2.0) ? 1 : 0;
  }
  return {exact == 100, fmt("%d/100 traces exactly equal (C = 2.0; %d with infeasible tasks)", exact,
                            with_infeasible)};
}

double sample_sd(const std::vector<double>& v) {
  double m = 0, q = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) q += (x - m) * (x - m);
  return std::sqrt(q / static_cast<double>(v.size() - 1));
}

Outcome learning_curves() {
  int ordered = 0, above_c = 0, sd_ok = 0;
  long samples = 0, out_of_range = 0;
  double worst_sd_ratio = 0;
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    auto inst = generate_problem(Scale::small, 5000 + static_cast<std::uint64_t>(i)).instance;
    HumanCurve h = inst.humans[static_cast<std::size_t>(i % 2)];
    const TaskId task = i % h.num_tasks();
    const double c = h.tasks[task].c;
    auto empirical_mean = [&](int iteration) {
      h.experience[task] = iteration;
      double m = 0;
      const int draws = 10000;
      for (int k = 0; k < draws; ++k) {
        const Time d = sample_human_duration(h, task, rng);
        ++samples;
        if (d < kMinDuration || d > kMaxDuration) ++out_of_range;
        m += d / draws;
      }
      return m;
    };
    const double m0 = empirical_mean(0), m3 = empirical_mean(3);
    for (int it : {1, 2, 5, 10}) empirical_mean(it);
    ordered += human_mean_duration(h, task, 3) < human_mean_duration(h, task, 0) && m3 < m0 ? 1 : 0;
    above_c += human_mean_duration(h, task, 3) >= c && m3 >= c ? 1 : 0;

    h.experience[task] = 0;
    EstimatorConfig ecfg;
    EstimatorState fresh(2, h.num_tasks()), practiced(2, h.num_tasks());
    for (int r = 0; r < 3; ++r) practiced.record(0, task, human_expected_duration(h, task));
    std::vector<double> e0, e3;
    for (int k = 0; k < 100000; ++k) {
      e0.push_back(estimate_duration(fresh, ecfg, h, 0, task, rng));
      e3.push_back(estimate_duration(practiced, ecfg, h, 0, task, rng));
    }
    const double s0 = sample_sd(e0), s3 = sample_sd(e3);
    sd_ok += s3 < s0 ? 1 : 0;
    worst_sd_ratio = std::max(worst_sd_ratio, s3 / s0);
  }
  const bool pass = ordered == 100 && above_c == 100 && out_of_range == 0 && sd_ok == 100;
  return {pass, fmt("mean(i=3) < mean(i=0): %d/100, mean(i=3) >= c: %d/100, %ld/%ld samples outside [10,100], "
                    "estimator sd(r=3) < sd(r=0): %d/100 (worst ratio %.3f, 1e5 draws)",
                    ordered, above_c, out_of_range, samples, sd_ok, worst_sd_ratio)};
}

Outcome edf_trend() {
  double f[3];
  const Scale scales[3] = {Scale::small, Scale::medium, Scale::large};
  for (int i = 0; i < 3; ++i)
    f[i] = feasibility(eval_method(generate_problems(scales[i], 200, 777, "test"), Method::edf));
  const bool pass = f[0] > f[1] && f[1] > f[2] && f[0] > 40 && f[2] < 10;
  return {pass, fmt("feasibility small %.2f%% > medium %.2f%% > large %.2f%% (need small > 40, large < 10)", f[0], f[1],
                    f[2])};
}

Outcome ga_dominance() {
  int problems = 0, below_seed = 0;
  auto check = [&](const Observation& obs, const GaResult& r) {
    ++problems;
    const ScheduleFitness seed = estimated_fitness(obs, edf_schedule(obs));
    if (seed.better_than(r.fitness)) ++below_seed;
  };
  for (Scale s : {Scale::small, Scale::medium, Scale::large}) {
    for (const auto& inst : generate_problems(s, 100, 4242, "test")) {
      Observation obs;
      obs.estimated = inst.problem;
      Rng rng(derive_seed(9, static_cast<std::uint64_t>(problems)));
      check(obs, ga_search(obs, GaConfig{}, rng));
    }
  }
  int optimal = 0;
  const int n = 50;
  for (int i = 0; i < n; ++i) {
    const int tasks = 3 + i % 3;
    const auto inst = generate_problem(tasks, 9000 + static_cast<std::uint64_t>(i)).instance;
    Observation obs;
    obs.estimated = inst.problem;
    GaConfig cfg;
    cfg.generations = 200;
    Rng rng(derive_seed(10, static_cast<std::uint64_t>(i)));
    const GaResult r = ga_search(obs, cfg, rng);
    check(obs, r);
    const auto best = testgen::exhaustive_best(inst.problem, inst.problem.durations);
    if (r.fitness.feasible == best.feasible && r.fitness.span == best.span) ++optimal;
  }
  const bool pass = below_seed == 0 && optimal * 100 >= 80 * n;
  return {pass, fmt("below EDF seed on %d/%d problems; exhaustive optimum reached on %d/%d <=5-task instances "
                    "(%.0f%%, need >= 80%%)",
                    below_seed, problems, optimal, n, 100.0 * optimal / n)};
}

Outcome training_smoke() {
  const auto& t = trained();
  PolicyParameters before = t.untrained, after = t.params;
  const double f0 = feasibility(eval_method(smoke_test(), Method::hybridnet, &before));
  const double f1 = feasibility(eval_method(smoke_test(), Method::hybridnet, &after));
  const double fe = feasibility(eval_method(smoke_test(), Method::edf));
  const bool pass = !t.diverged && f1 - f0 >= 15 && f1 > fe && t.seconds <= 7200;
  return {pass, fmt("feasibility untrained %.2f%% -> trained %.2f%% (+%.2f pp, need >= 15), EDF %.2f%%; "
                    "2000 epochs in %.0f s%s",
                    f0, f1, f1 - f0, fe, t.seconds, t.diverged ? " (diverged)" : "")};
}

Outcome batched_sampling() {
  PolicyParameters p = trained().params;
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  const auto r8 = build_report({eval_method(smoke_test(), Method::hybridnet, &p, 8, seeds)});
  const auto r16 = build_report({eval_method(smoke_test(), Method::hybridnet, &p, 16, seeds)});
  const double m8 = r8[0].adjusted_makespan.mean, m16 = r16[0].adjusted_makespan.mean;
  return {m16 <= m8, fmt("mean adjusted makespan best-of-16 %.2f <= best-of-8 %.2f over %zu seeds", m16, m8,
                         seeds.size())};
}

// Seconds per schedule, best of `reps` passes over the problems.
double per_schedule(const std::vector<Observation>& obs, const std::function<void(const Observation&)>& run,
                    int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    for (const auto& o : obs) run(o);
    best = std::min(best, seconds_since(t0) / static_cast<double>(obs.size()));
  }
  return best;
}

Outcome propagator_speed() {
  PolicyParameters params(PolicyConfig{}, 1);
  auto observations = [](const std::vector<ProblemInstance>& ps) {
    std::vector<Observation> out;
    for (const auto& p : ps) out.push_back(Observation{p.problem, 0});
    return out;
  };
  auto ratio = [&](const std::vector<Observation>& obs, double* one, double* inter) {
    Rng rng(1);
    *one = per_schedule(obs, [&](const Observation& o) { generate_schedule(o, params, DecodeMode::greedy, rng); }, 3);
    *inter = per_schedule(
        obs, [&](const Observation& o) { interactive_hetgat_schedule(o, params, DecodeMode::greedy, rng, false); }, 3);
    return *inter / *one;
  };
  double a, b;
  const double medium = ratio(observations(generate_problems(Scale::medium, 10, 55, "test")), &a, &b);
  std::string detail = fmt("medium: %.2f ms vs %.2f ms (%.1fx, need >= 2); by N:", a * 1e3, b * 1e3, medium);
  std::vector<double> by_n;
  for (int n : {10, 20, 40}) {
    std::vector<ProblemInstance> ps;
    for (std::uint64_t s = 0; s < 5; ++s) ps.push_back(generate_problem(n, 100 + s).instance);
    by_n.push_back(ratio(observations(ps), &a, &b));
    detail += fmt(" %d -> %.1fx", n, by_n.back());
  }
  const bool grows = by_n[0] < by_n[1] && by_n[1] < by_n[2];
  return {medium >= 2 && grows, detail};
}

Outcome zero_shot() {
  PolicyParameters p = trained().params;
  const auto large = generate_problems(Scale::large, 100, 888, "test");
  int rounds = 0, complete = 0;
  for (std::size_t i = 0; i < large.size(); ++i) {
    MultiRoundEnv env(large[i]);
    Observation obs = env.reset(derive_seed(0, i));
    Rng rng(derive_seed(1, i));
    while (!env.done()) {
      const Schedule s = sample_best(obs, p, 8, rng).schedule;
      std::set<TaskId> seen;
      bool ok = static_cast<int>(s.size()) == obs.num_tasks();
      for (const auto& d : s) ok = ok && d.task >= 0 && d.task < obs.num_tasks() && seen.insert(d.task).second;
      ++rounds;
      complete += ok ? 1 : 0;
      obs = env.step(s).observation;
    }
  }
  const double fh = feasibility(eval_method(large, Method::hybridnet, &p));
  const double fe = feasibility(eval_method(large, Method::edf));
  const bool pass = complete == rounds && fh > fe;
  return {pass, fmt("%d/%d large-scale schedules complete and duplicate-free; feasibility small-trained %.2f%% vs "
                    "EDF %.2f%%",
                    complete, rounds, fh, fe)};
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// gen -> train -> eval in `dir`; returns every produced artifact concatenated.
std::string pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  const auto m = generate_dataset(Scale::small, 20, 10, 2025, dir / "data");
  std::string out;
  for (const auto& e : m.problems) out += slurp(dir / "data" / e.file);
  out += slurp(dir / "data" / "manifest.json");

  const Dataset ds = load_dataset(dir / "data");
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.seed = 11;
  TrainerState s = make_trainer_state(cfg);
  std::ostringstream log;
  write_log_header(log);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) { write_log_row(log, e); };
  train(s, ds.train, cfg, hooks);
  out += log.str();
  out += trainer_checkpoint(s, cfg).dump();

  PolicyParameters p = load_policy(nlohmann::json::parse(trainer_checkpoint(s, cfg).dump()));
  EvalConfig ec;
  ec.method = Method::hybridnet;
  ec.seeds = {0, 1};
  auto res = to_json(evaluate(ds.test, ec, &p));
  res.erase("runtime");  // wall clock
  out += res.dump();
  return out;
}

Outcome determinism() {
  const std::string a = pipeline("acceptance_work/run_a");
  const std::string b = pipeline("acceptance_work/run_b");
  std::size_t diff_at = 0;
  while (diff_at < std::min(a.size(), b.size()) && a[diff_at] == b[diff_at]) ++diff_at;
  return {a == b, a == b ? fmt("gen -> train 100 epochs -> eval: %zu bytes of artifacts identical", a.size())
                         : fmt("artifacts differ at byte %zu", diff_at)};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const Criterion all[] = {
      {"stn-oracle-equivalence", stn_oracle},  {"gradient-suite", gradient_suite},
      {"reward-arithmetic", reward_arithmetic}, {"learning-curves", learning_curves},
      {"edf-scale-trend", edf_trend},           {"ga-dominance", ga_dominance},
      {"training-smoke", training_smoke},       {"batched-sampling", batched_sampling},
      {"propagator-speed", propagator_speed},   {"zero-shot-scalability", zero_shot},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
