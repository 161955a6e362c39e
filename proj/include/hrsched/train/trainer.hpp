#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrsched/diff/adam.hpp"
#include "hrsched/diff/checkpoint.hpp"
#include "hrsched/env/multiround_env.hpp"
#include "hrsched/policy/propagator.hpp"

namespace hrsched {

/// One batch element: the summed log-probability of each round's schedule
/// and the discounted return from that round on.
struct EpisodeRecord {
  std::vector<diff::Var> round_log_probs;
  std::vector<double> returns;
  std::vector<diff::Var> round_entropies;  // only read when entropy_coeff > 0
};

/// Accumulates the REINFORCE estimate of -grad J into the parameters the
/// log-probabilities were recorded against:
///   -(1/B) * sum_b sum_t (G_bt - baseline_t) * grad log pi(schedule_bt)
/// `baseline` holds one value per round, or one per (episode, round) laid
/// out episode-major. A positive `entropy_coeff` also subtracts
/// entropy_coeff/B times each round's decision entropy from the loss.
/// Returns the advantages used.
inline std::vector<std::vector<double>> compute_policy_gradient(const std::vector<EpisodeRecord>& episodes,
                                                                const std::vector<double>& baseline,
                                                                double entropy_coeff = 0.0) {
  if (episodes.empty()) throw std::invalid_argument("compute_policy_gradient: empty batch");
  const std::size_t rounds = episodes.front().returns.size();
  const std::size_t b = episodes.size();
  for (const auto& e : episodes)
    if (e.returns.size() != rounds || e.round_log_probs.size() != rounds)
      throw std::invalid_argument("compute_policy_gradient: every episode needs one log-prob and one return per round");
  if (entropy_coeff > 0)
    for (const auto& e : episodes)
      if (e.round_entropies.size() != rounds)
        throw std::invalid_argument("compute_policy_gradient: entropy bonus needs one entropy per round");
  const bool per_episode = baseline.size() == b * rounds;
  if (baseline.size() != rounds && !per_episode)
    throw std::invalid_argument("compute_policy_gradient: baseline has " + std::to_string(baseline.size()) +
                                " entries, expected " + std::to_string(rounds) + " or " +
                                std::to_string(b * rounds));

  std::vector<std::vector<double>> adv(b, std::vector<double>(rounds));
  // Terms are grouped per tape; each tape is walked backward once.
  std::map<diff::Tape*, std::vector<diff::Var>> terms;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < rounds; ++t) {
      adv[i][t] = episodes[i].returns[t] - (per_episode ? baseline[i * rounds + t] : baseline[t]);
      const diff::Var lp = episodes[i].round_log_probs[t];
      if (entropy_coeff > 0 && episodes[i].round_entropies[t].tape != nullptr) {
        const diff::Var h = episodes[i].round_entropies[t];
        terms[h.tape].push_back(diff::scale(h, -entropy_coeff / static_cast<double>(b)));
      }
      if (adv[i][t] == 0.0 || lp.tape == nullptr) continue;
      terms[lp.tape].push_back(diff::scale(lp, -adv[i][t] / static_cast<double>(b)));
    }
  }
  for (auto& [tape, vars] : terms) tape->backward(diff::sum(diff::concat_rows(vars)));
  return adv;
}

/// Per-round mean return across the batch.
inline std::vector<double> step_based_baseline(const std::vector<std::vector<double>>& returns) {
  if (returns.size() < 2) throw std::invalid_argument("step_based_baseline: batch size must be >= 2");
  std::vector<double> base(returns.front().size(), 0.0);
  for (const auto& r : returns) {
    if (r.size() != base.size()) throw std::invalid_argument("step_based_baseline: ragged returns");
    for (std::size_t t = 0; t < r.size(); ++t) base[t] += r[t];
  }
  for (double& v : base) v /= static_cast<double>(returns.size());
  return base;
}

/// Rolls the greedy policy through a fresh episode of `instance` and returns
/// its per-round discounted returns.
inline std::vector<double> greedy_rollout_baseline(const ProblemInstance& instance, const EnvConfig& env_cfg,
                                                   std::uint64_t env_seed, PolicyParameters& greedy) {
  MultiRoundEnv env(instance, env_cfg);
  Observation obs = env.reset(env_seed);
  Rng unused(0);
  std::vector<double> rewards;
  while (!env.done()) {
    const auto g = generate_schedule(obs, greedy, DecodeMode::greedy, unused);
    StepResult r = env.step(g.schedule);
    rewards.push_back(r.reward);
    obs = r.observation;
  }
  return discounted_returns(rewards, env_cfg.gamma);
}

enum class BaselineKind { step, greedy };

inline BaselineKind baseline_from_string(const std::string& s) {
  if (s == "step") return BaselineKind::step;
  if (s == "greedy") return BaselineKind::greedy;
  throw std::invalid_argument("unknown baseline '" + s + "' (expected step or greedy)");
}
inline std::string to_string(BaselineKind b) { return b == BaselineKind::step ? "step" : "greedy"; }

struct TrainConfig {
  int epochs = 2000;
  int batch = 8;
  BaselineKind baseline = BaselineKind::step;
  int greedy_refresh = 500;
  std::uint64_t seed = 0;
  diff::AdamConfig adam;
  EnvConfig env;
  PolicyConfig policy;
  double grad_clip = 0.0;          // rescale gradients to at most this norm; 0 disables
  double entropy_bonus = 10.0;     // weight of the decision entropy in the objective; 0 is plain REINFORCE
  double grad_ceiling = 1e6;       // divergence guard threshold
  int divergence_patience = 100;   // consecutive epochs above the ceiling before aborting
  int checkpoint_every = 0;        // 0: only at the end
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"baseline", to_string(c.baseline)},
          {"greedy_refresh", c.greedy_refresh},
          {"seed", c.seed},
          {"lr", c.adam.lr},
          {"weight_decay", c.adam.weight_decay},
          {"lr_decay", c.adam.lr_decay},
          {"lr_decay_every", c.adam.lr_decay_every},
          {"rounds", c.env.rounds},
          {"stochastic", c.env.stochastic},
          {"infeasible_coeff", c.env.infeasible_coeff},
          {"gamma", c.env.gamma},
          {"grad_clip", c.grad_clip},
          {"entropy_bonus", c.entropy_bonus},
          {"grad_ceiling", c.grad_ceiling},
          {"divergence_patience", c.divergence_patience},
          {"checkpoint_every", c.checkpoint_every},
          {"policy", to_json(c.policy)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const char* known[] = {"epochs", "batch", "baseline", "greedy_refresh", "seed", "lr", "weight_decay",
                                "lr_decay", "lr_decay_every", "rounds", "stochastic", "infeasible_coeff", "gamma",
                                "grad_clip", "entropy_bonus", "grad_ceiling", "divergence_patience", "checkpoint_every", "policy",
                                "dataset", "out_dir", "resume"};
  for (const auto& [k, v] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) == std::end(known))
      throw std::invalid_argument("train config: unknown key '" + k + "'");
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.baseline = baseline_from_string(j.value("baseline", to_string(c.baseline)));
  c.greedy_refresh = j.value("greedy_refresh", c.greedy_refresh);
  c.seed = j.value("seed", c.seed);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
  c.adam.lr_decay = j.value("lr_decay", c.adam.lr_decay);
  c.adam.lr_decay_every = j.value("lr_decay_every", c.adam.lr_decay_every);
  c.env.rounds = j.value("rounds", c.env.rounds);
  c.env.stochastic = j.value("stochastic", c.env.stochastic);
  c.env.infeasible_coeff = j.value("infeasible_coeff", c.env.infeasible_coeff);
  c.env.gamma = j.value("gamma", c.env.gamma);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.entropy_bonus = j.value("entropy_bonus", c.entropy_bonus);
  c.grad_ceiling = j.value("grad_ceiling", c.grad_ceiling);
  c.divergence_patience = j.value("divergence_patience", c.divergence_patience);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  if (j.contains("policy")) c.policy = policy_config_from_json(j.at("policy"));
  if (c.epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (c.batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
  if (c.baseline == BaselineKind::step && c.batch < 2)
    throw std::invalid_argument("train config: step baseline needs batch >= 2");
  if (!(c.grad_clip >= 0)) throw std::invalid_argument("train config: grad_clip must be >= 0");
  if (!(c.entropy_bonus >= 0)) throw std::invalid_argument("train config: entropy_bonus must be >= 0");
  if (c.greedy_refresh < 1) throw std::invalid_argument("train config: greedy_refresh must be >= 1");
  return c;
}

struct EpochLog {
  int epoch = 0;
  double mean_return = 0.0;   // undiscounted episode reward, batch mean
  double feasibility = 0.0;   // fraction of fully feasible round schedules
  double lr = 0.0;
  double grad_norm = 0.0;
};

inline void write_log_header(std::ostream& os) { os << "epoch,return,feasibility,lr,grad_norm\n"; }
inline void write_log_row(std::ostream& os, const EpochLog& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.mean_return, r.feasibility, r.lr,
                r.grad_norm);
  os << buf;
}

/// Learner, frozen greedy copy and optimizer; everything a resumed run needs.
struct TrainerState {
  PolicyParameters params;
  PolicyParameters greedy;
  diff::AdamState adam;
  int epoch = 0;            // epochs completed
  int over_ceiling = 0;     // consecutive epochs with grad norm above the ceiling
};

inline TrainerState make_trainer_state(const TrainConfig& cfg) {
  TrainerState s;
  s.params = PolicyParameters(cfg.policy, derive_seed(cfg.seed, 0x696e6974ULL));
  s.greedy = s.params;
  s.adam = diff::make_adam_state(s.params.all());
  return s;
}

inline nlohmann::json trainer_checkpoint(const TrainerState& s, const TrainConfig& cfg,
                                         const nlohmann::json& extra_meta = {}) {
  nlohmann::json meta = extra_meta.is_null() ? nlohmann::json::object() : extra_meta;
  meta["epoch"] = s.epoch;
  meta["over_ceiling"] = s.over_ceiling;
  meta["policy"] = to_json(cfg.policy);
  meta["train_config"] = to_json(cfg);
  if (cfg.baseline == BaselineKind::greedy) meta["greedy"] = diff::checkpoint_to_json(s.greedy.all());
  return diff::checkpoint_to_json(s.params.all(), meta, &s.adam);
}

inline PolicyConfig checkpoint_policy_config(const nlohmann::json& ckpt) {
  const auto& meta = ckpt.at("meta");
  return meta.contains("policy") ? policy_config_from_json(meta.at("policy")) : PolicyConfig{};
}

/// Loads parameters only, for evaluation.
inline PolicyParameters load_policy(const nlohmann::json& ckpt) {
  PolicyParameters p(checkpoint_policy_config(ckpt), 0);
  diff::load_checkpoint_json(ckpt, p.all());
  return p;
}

inline TrainerState load_trainer_state(const nlohmann::json& ckpt, const TrainConfig& cfg) {
  if (checkpoint_policy_config(ckpt) != cfg.policy)
    throw std::invalid_argument("resume: checkpoint policy config differs from the training config");
  TrainerState s = make_trainer_state(cfg);
  diff::load_checkpoint_json(ckpt, s.params.all(), &s.adam);
  const auto& meta = ckpt.at("meta");
  s.epoch = meta.value("epoch", 0);
  s.over_ceiling = meta.value("over_ceiling", 0);
  if (meta.contains("greedy"))
    diff::load_checkpoint_json(meta.at("greedy"), s.greedy.all());
  else
    s.greedy = s.params;
  return s;
}

struct EpochOutcome {
  EpochLog log;
  std::vector<std::vector<double>> returns;     // [batch][round], discounted
  std::vector<std::vector<double>> advantages;  // [batch][round]
};

/// Rolls out one batch on `instance`, accumulates the policy gradient into
/// s.params (gradients are zeroed first) and returns the statistics. The
/// optimizer is not stepped.
inline EpochOutcome rollout_and_gradient(TrainerState& s, const TrainConfig& cfg, const ProblemInstance& instance,
                                         std::uint64_t epoch_seed) {
  diff::zero_grads(s.params.all());
  const int B = cfg.batch;
  const int R = cfg.env.rounds;
  std::vector<MultiRoundEnv> envs;
  std::vector<Observation> obs;
  envs.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    envs.emplace_back(instance, cfg.env);
    obs.push_back(envs.back().reset(derive_seed(epoch_seed, 1, static_cast<std::uint64_t>(b))));
  }
  std::vector<Rng> rngs;
  for (int b = 0; b < B; ++b) rngs.emplace_back(derive_seed(epoch_seed, 2, static_cast<std::uint64_t>(b)));

  std::deque<diff::Tape> tapes;  // one per round, alive until backward
  std::vector<EpisodeRecord> episodes(static_cast<std::size_t>(B));
  std::vector<std::vector<double>> rewards(static_cast<std::size_t>(B));
  int feasible_rounds = 0;

  for (int r = 0; r < R; ++r) {
    diff::Tape& tape = tapes.emplace_back(true);
    BoundParams P(tape, s.params);
    // Batch members that observe the same thing share one encoding.
    std::vector<std::pair<const Observation*, Encoding>> cache;
    for (int b = 0; b < B; ++b) {
      const Observation& o = obs[static_cast<std::size_t>(b)];
      const Encoding* enc = nullptr;
      for (const auto& [co, ce] : cache)
        if (co->round == o.round && co->estimated.durations.values() == o.estimated.durations.values()) enc = &ce;
      if (!enc) {
        cache.emplace_back(&o, encode(build_het_graph(o), P));
        enc = &cache.back().second;
      }
      GeneratedSchedule g = decode_schedule(*enc, P, DecodeMode::sample, rngs[static_cast<std::size_t>(b)]);
      episodes[static_cast<std::size_t>(b)].round_log_probs.push_back(g.log_prob);
      episodes[static_cast<std::size_t>(b)].round_entropies.push_back(g.entropy);
      StepResult res = envs[static_cast<std::size_t>(b)].step(g.schedule);
      rewards[static_cast<std::size_t>(b)].push_back(res.reward);
      if (res.info.fully_feasible()) ++feasible_rounds;
      obs[static_cast<std::size_t>(b)] = std::move(res.observation);
    }
  }

  EpochOutcome out;
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    auto& e = episodes[static_cast<std::size_t>(b)];
    e.returns = discounted_returns(rewards[static_cast<std::size_t>(b)], cfg.env.gamma);
    out.returns.push_back(e.returns);
    for (double v : rewards[static_cast<std::size_t>(b)]) total += v;
  }
  std::vector<double> base;
  if (cfg.baseline == BaselineKind::step) {
    base = step_based_baseline(out.returns);
  } else {
    // Each batch member is compared with the greedy policy on its own
    // environment stream.
    for (int b = 0; b < B; ++b) {
      auto g = greedy_rollout_baseline(instance, cfg.env, derive_seed(epoch_seed, 1, static_cast<std::uint64_t>(b)),
                                       s.greedy);
      base.insert(base.end(), g.begin(), g.end());
    }
  }
  out.advantages = compute_policy_gradient(episodes, base, cfg.entropy_bonus);
  out.log.mean_return = total / B;
  out.log.feasibility = static_cast<double>(feasible_rounds) / (B * R);
  out.log.grad_norm = diff::gradient_norm(s.params.all());
  return out;
}

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const TrainerState&)> on_checkpoint;
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool diverged = false;
};

/// Trains `s` on `problems` until s.epoch == cfg.epochs. Epoch e draws its
/// problem and all randomness from derive_seed(cfg.seed, e), so a resumed
/// run continues exactly where an uninterrupted one would be.
inline TrainResult train(TrainerState& s, const std::vector<ProblemInstance>& problems, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
  if (problems.empty()) throw std::invalid_argument("train: no training problems");
  for (const auto& p : problems)
    if (p.problem.num_agents() != cfg.policy.num_agents)
      throw std::invalid_argument("train: problem agent count differs from the policy's");
  TrainResult res;
  while (s.epoch < cfg.epochs) {
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(s.epoch));
    Rng pick(derive_seed(epoch_seed, 0));
    const auto& inst = problems[static_cast<std::size_t>(uniform_int(pick, 0, static_cast<int>(problems.size()) - 1))];

    EpochOutcome o = rollout_and_gradient(s, cfg, inst, epoch_seed);
    o.log.epoch = s.epoch;
    o.log.lr = diff::scheduled_lr(cfg.adam, s.epoch);
    if (!std::isfinite(o.log.grad_norm) || o.log.grad_norm > cfg.grad_ceiling) {
      ++s.over_ceiling;
    } else {
      s.over_ceiling = 0;
    }
    if (cfg.grad_clip > 0) diff::clip_grad_norm(s.params.all(), cfg.grad_clip);
    if (std::isfinite(o.log.grad_norm)) diff::adam_step(s.params.all(), s.adam, cfg.adam, o.log.lr);
    ++s.epoch;
    if (cfg.baseline == BaselineKind::greedy && s.epoch % cfg.greedy_refresh == 0) s.greedy.copy_values_from(s.params);

    res.log.push_back(o.log);
    if (hooks.on_epoch) hooks.on_epoch(o.log);
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && s.epoch % cfg.checkpoint_every == 0)
      hooks.on_checkpoint(s);
    if (s.over_ceiling >= cfg.divergence_patience) {
      res.diverged = true;
      break;
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(s);
  return res;
}

}  // namespace hrsched
