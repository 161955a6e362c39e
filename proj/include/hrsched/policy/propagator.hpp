#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hrsched/baselines/ga.hpp"
#include "hrsched/policy/encoder.hpp"

namespace hrsched {

enum class DecodeMode { sample, greedy };

struct LstmState {
  diff::Var h;
  diff::Var c;
};

/// Standard LSTM cell on [h_prev || x]:
///   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c)
inline LstmState lstm_step(diff::Var h_prev, diff::Var c_prev, diff::Var x, diff::Var weight, diff::Var bias) {
  using namespace diff;
  const int hidden = h_prev.value().cols();
  if (c_prev.value().cols() != hidden || weight.value().cols() != 4 * hidden)
    throw std::invalid_argument("lstm_step: state " + to_string(h_prev.shape()) + ", cell " +
                                to_string(c_prev.shape()) + ", weight " + to_string(weight.shape()));
  Var gates = add(matmul(concat_cols({h_prev, x}), weight), bias);
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, 2 * hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, 3 * hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
  Var c = add(mul(f, c_prev), mul(i, g));
  return {mul(o, tanh(c)), c};
}

inline LstmState lstm_step(const LstmState& prev, diff::Var x, const LstmParams& lp, BoundParams& P) {
  return lstm_step(prev.h, prev.c, x, P[lp.weight], P[lp.bias]);
}

inline diff::Var linear(diff::Var x, const LinearParams& lp, BoundParams& P) {
  return diff::add(diff::matmul(x, P[lp.weight]), P[lp.bias]);
}

struct Selection {
  int index = -1;
  diff::Var log_prob;          // [1 x 1]
  std::vector<double> probs;   // full distribution over the candidates
  diff::Var entropy;           // [1 x 1], -sum p log p
};

namespace policy_detail {

inline int choose(const std::vector<double>& probs, DecodeMode mode, Rng& rng) {
  if (mode == DecodeMode::greedy)
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  return sample_categorical(rng, probs);
}

inline Selection select_from_logits(diff::Var logits, DecodeMode mode, Rng& rng) {
  diff::Var logp = diff::log_softmax(logits);
  Selection s;
  for (double v : logp.value().values()) s.probs.push_back(std::exp(v));
  s.index = choose(s.probs, mode, rng);
  s.log_prob = diff::pick(logp, s.index, 0);
  s.entropy = diff::scale(diff::sum(diff::mul(diff::exp(logp), logp)), -1.0);
  return s;
}

}  // namespace policy_detail

/// pi(agent | state) = softmax over agents of f_a([h_agent || h_state]).
/// `agents` is [M x lstm], `state` is [1 x lstm].
inline Selection select_agent(diff::Var state, diff::Var agents, BoundParams& P, Rng& rng, DecodeMode mode) {
  using namespace diff;
  const auto sel = P.params().agent_selector();
  Var shared = add(matmul(state, P[sel.w_state]), P[sel.b1]);
  Var hidden = leaky_relu(add(matmul(agents, P[sel.w_agent]), shared), 0.2);
  return policy_detail::select_from_logits(linear(hidden, sel.out, P), mode, rng);
}

/// Task scores share the first-layer projection of every task embedding;
/// it is computed once per schedule.
struct TaskScorer {
  diff::Var projected;  // [N x selector_hidden]
};

inline TaskScorer make_task_scorer(diff::Var tasks, BoundParams& P) {
  return {diff::matmul(tasks, P[P.params().task_selector().w_task])};
}

/// pi(task | agent, state) = softmax over the unscheduled tasks of
/// f_task([h_task || h_agent || h_state]). Each task's score depends only
/// on its own embedding; scheduled tasks are not candidates at all.
/// The returned index is a task id.
inline Selection select_task(const TaskScorer& scorer, const std::vector<TaskId>& unscheduled, diff::Var agent,
                             diff::Var state, BoundParams& P, Rng& rng, DecodeMode mode) {
  using namespace diff;
  if (unscheduled.empty()) throw std::invalid_argument("select_task: no unscheduled tasks");
  const auto sel = P.params().task_selector();
  Var shared = add(add(matmul(agent, P[sel.w_agent]), matmul(state, P[sel.w_state])), P[sel.b1]);
  Var hidden = leaky_relu(add(gather_rows(scorer.projected, unscheduled), shared), 0.2);
  Selection s = policy_detail::select_from_logits(linear(hidden, sel.out, P), mode, rng);
  s.index = unscheduled[static_cast<std::size_t>(s.index)];
  return s;
}

inline Selection select_task(diff::Var tasks, const std::vector<TaskId>& unscheduled, diff::Var agent,
                             diff::Var state, BoundParams& P, Rng& rng, DecodeMode mode) {
  return select_task(make_task_scorer(tasks, P), unscheduled, agent, state, P, rng, mode);
}

struct GeneratedSchedule {
  Schedule schedule;
  diff::Var log_prob;                 // sum over decisions of log pi_agent + log pi_task
  diff::Var entropy;                  // summed entropy of every decision's distribution
  std::vector<double> agent_log_probs;
  std::vector<double> task_log_probs;
  int encoder_calls = 0;
};

/// Initial propagator state projected from the encoder output.
struct PropagatorInit {
  std::vector<LstmState> agents;
  LstmState state;
};

inline PropagatorInit init_propagator(const Encoding& enc, BoundParams& P) {
  PropagatorInit init;
  const auto& pp = P.params();
  diff::Var ah = linear(enc.agents, pp.agent_h0(), P);
  diff::Var ac = linear(enc.agents, pp.agent_c0(), P);
  const int m = enc.agents.value().rows();
  for (int a = 0; a < m; ++a) init.agents.push_back({diff::slice_rows(ah, a, a + 1), diff::slice_rows(ac, a, a + 1)});
  init.state = {linear(enc.state, pp.state_h0(), P), linear(enc.state, pp.state_c0(), P)};
  return init;
}

/// Decodes a full schedule from one encoding without touching the
/// environment: pick an agent, pick a task for it, then advance the state
/// LSTM and the chosen agent's LSTM on [h_task || h_agent].
inline GeneratedSchedule decode_schedule(const Encoding& enc, BoundParams& P, DecodeMode mode, Rng& rng) {
  using namespace diff;
  GeneratedSchedule out;
  const int n = enc.tasks.value().rows();
  if (n == 0) {
    out.log_prob = P.tape().constant(Matrix(1, 1, 0.0));
    out.entropy = out.log_prob;
    return out;
  }
  PropagatorInit st = init_propagator(enc, P);
  TaskScorer scorer = make_task_scorer(enc.tasks, P);
  std::vector<TaskId> unscheduled(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) unscheduled[static_cast<std::size_t>(t)] = t;

  std::vector<Var> terms, entropies;
  while (!unscheduled.empty()) {
    std::vector<Var> agent_rows;
    for (const auto& a : st.agents) agent_rows.push_back(a.h);
    Selection a = select_agent(st.state.h, concat_rows(agent_rows), P, rng, mode);
    Selection t = select_task(scorer, unscheduled, st.agents[a.index].h, st.state.h, P, rng, mode);
    out.schedule.push_back({t.index, a.index});
    out.agent_log_probs.push_back(a.log_prob.scalar());
    out.task_log_probs.push_back(t.log_prob.scalar());
    terms.push_back(a.log_prob);
    terms.push_back(t.log_prob);
    entropies.push_back(a.entropy);
    entropies.push_back(t.entropy);
    unscheduled.erase(std::find(unscheduled.begin(), unscheduled.end(), t.index));
    if (unscheduled.empty()) break;

    Var x = concat_cols({slice_rows(enc.tasks, t.index, t.index + 1), st.agents[a.index].h});
    st.state = lstm_step(st.state, x, P.params().state_lstm(), P);
    st.agents[a.index] = lstm_step(st.agents[a.index], x, P.params().agent_lstm(), P);
  }
  out.log_prob = sum(concat_rows(terms));
  out.entropy = sum(concat_rows(entropies));
  return out;
}

inline GeneratedSchedule generate_schedule(const Observation& obs, BoundParams& P, DecodeMode mode, Rng& rng) {
  if (obs.num_agents() != P.config().num_agents)
    throw std::invalid_argument("policy built for " + std::to_string(P.config().num_agents) +
                                " agents, observation has " + std::to_string(obs.num_agents()));
  const Encoding enc = encode(build_het_graph(obs), P);
  GeneratedSchedule g = decode_schedule(enc, P, mode, rng);
  g.encoder_calls = 1;
  return g;
}

/// Gradient-free convenience overload.
inline GeneratedSchedule generate_schedule(const Observation& obs, PolicyParameters& params, DecodeMode mode,
                                           Rng& rng) {
  diff::Tape tape(false);
  BoundParams P(tape, params);
  GeneratedSchedule g = generate_schedule(obs, P, mode, rng);
  g.log_prob = {};
  g.entropy = {};
  return g;
}

struct BestOfResult {
  Schedule schedule;
  ScheduleFitness fitness;
  int chosen = 0;
  std::vector<ScheduleFitness> candidates;
};

/// Samples `batch` schedules from one encoding and keeps the one ranking
/// best by (estimated executed tasks desc, estimated span asc); the first
/// such sample wins ties. Sample k draws from its own stream derived from a
/// single value taken from `rng`, so a smaller batch sees a prefix of a
/// larger batch's samples.
inline BestOfResult sample_best(const Observation& obs, PolicyParameters& params, int batch, Rng& rng) {
  if (batch < 1) throw std::invalid_argument("sample_best: batch must be >= 1");
  const std::uint64_t base = rng();
  diff::Tape tape(false);
  BoundParams P(tape, params);
  const Encoding enc = encode(build_het_graph(obs), P);
  BestOfResult best;
  for (int k = 0; k < batch; ++k) {
    Rng sub(derive_seed(base, static_cast<std::uint64_t>(k)));
    Schedule s = decode_schedule(enc, P, DecodeMode::sample, sub).schedule;
    const ScheduleFitness f = estimated_fitness(obs, s);
    best.candidates.push_back(f);
    if (k == 0 || f.better_than(best.fitness)) {
      best.schedule = std::move(s);
      best.fitness = f;
      best.chosen = k;
    }
  }
  return best;
}

/// Variant without the recurrent propagator: after every decision the graph
/// is rebuilt with the committed assignments and encoded again. It needs to
/// observe consequences mid-schedule, so it only runs on deterministic
/// environments.
inline GeneratedSchedule interactive_hetgat_schedule(const Observation& obs, BoundParams& P, DecodeMode mode,
                                                     Rng& rng, bool stochastic_env) {
  using namespace diff;
  if (stochastic_env)
    throw std::invalid_argument("interactive HetGAT scheduling requires a deterministic environment");
  GeneratedSchedule out;
  const int n = obs.num_tasks();
  std::vector<TaskId> unscheduled(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) unscheduled[static_cast<std::size_t>(t)] = t;
  std::vector<Var> terms, entropies;
  while (!unscheduled.empty()) {
    const Encoding enc = encode(build_het_graph(obs, out.schedule), P);
    ++out.encoder_calls;
    PropagatorInit st = init_propagator(enc, P);
    std::vector<Var> agent_rows;
    for (const auto& a : st.agents) agent_rows.push_back(a.h);
    Selection a = select_agent(st.state.h, concat_rows(agent_rows), P, rng, mode);
    Selection t = select_task(enc.tasks, unscheduled, st.agents[a.index].h, st.state.h, P, rng, mode);
    out.schedule.push_back({t.index, a.index});
    out.agent_log_probs.push_back(a.log_prob.scalar());
    out.task_log_probs.push_back(t.log_prob.scalar());
    terms.push_back(a.log_prob);
    terms.push_back(t.log_prob);
    entropies.push_back(a.entropy);
    entropies.push_back(t.entropy);
    unscheduled.erase(std::find(unscheduled.begin(), unscheduled.end(), t.index));
  }
  out.log_prob = terms.empty() ? P.tape().constant(Matrix(1, 1, 0.0)) : sum(concat_rows(terms));
  out.entropy = entropies.empty() ? P.tape().constant(Matrix(1, 1, 0.0)) : sum(concat_rows(entropies));
  return out;
}

inline GeneratedSchedule interactive_hetgat_schedule(const Observation& obs, PolicyParameters& params,
                                                     DecodeMode mode, Rng& rng, bool stochastic_env) {
  diff::Tape tape(false);
  BoundParams P(tape, params);
  GeneratedSchedule g = interactive_hetgat_schedule(obs, P, mode, rng, stochastic_env);
  g.log_prob = {};
  g.entropy = {};
  return g;
}

}  // namespace hrsched
