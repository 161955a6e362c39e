#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrsched/diff/tape.hpp"
#include "hrsched/policy/het_graph.hpp"
#include "hrsched/util/rng.hpp"

namespace hrsched {

struct PolicyConfig {
  int num_agents = 4;
  int hidden = 64;          // encoder output width
  int heads = 8;
  int layers = 3;           // all but the last concatenate heads; the last averages
  int lstm = 32;            // LSTM cell size
  int selector_hidden = 64;
  double attention_slope = 0.2;

  bool operator==(const PolicyConfig&) const = default;
};

inline nlohmann::json to_json(const PolicyConfig& c) {
  return {{"num_agents", c.num_agents}, {"hidden", c.hidden},       {"heads", c.heads},
          {"layers", c.layers},         {"lstm", c.lstm},           {"selector_hidden", c.selector_hidden},
          {"attention_slope", c.attention_slope}};
}

inline PolicyConfig policy_config_from_json(const nlohmann::json& j) {
  PolicyConfig c;
  c.num_agents = j.value("num_agents", c.num_agents);
  c.hidden = j.value("hidden", c.hidden);
  c.heads = j.value("heads", c.heads);
  c.layers = j.value("layers", c.layers);
  c.lstm = j.value("lstm", c.lstm);
  c.selector_hidden = j.value("selector_hidden", c.selector_hidden);
  c.attention_slope = j.value("attention_slope", c.attention_slope);
  return c;
}

/// Parameter indices of one edge type inside one encoder layer.
struct EdgeParams {
  int weight = -1;      // [in_src x heads*head_dim]
  int att_src = -1;     // [1 x heads*head_dim], scores transformed source features
  int att_dst = -1;     // [in_dst x heads], scores raw destination features
  int feat_msg = -1;    // [1 x heads*head_dim], edge feature added to the message
  int feat_att = -1;    // [1 x heads], edge feature added to the score
};

struct LayerParams {
  std::array<int, kNumNodeTypes> in_dim{};
  int heads = 0;
  int head_dim = 0;
  bool concat = true;
  std::array<EdgeParams, kNumEdgeTypes> edges{};
  std::array<int, kNumNodeTypes> bias{};  // [1 x out]

  int out_dim() const { return concat ? heads * head_dim : head_dim; }
};

struct LinearParams {
  int weight = -1;
  int bias = -1;
};

struct LstmParams {
  int weight = -1;  // [(hidden + input) x 4*hidden], gate blocks i, f, g, o
  int bias = -1;    // [1 x 4*hidden]
  int hidden = 0;
  int input = 0;
};

/// All trainable weights of the policy. Parameters live in one flat vector
/// so the whole set copies by value; the layout records their indices.
class PolicyParameters {
 public:
  PolicyParameters() = default;

  /// Uniform fan-in initialization; LSTM forget-gate biases start at +1.
  PolicyParameters(const PolicyConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.hidden % cfg.heads != 0) throw std::invalid_argument("PolicyConfig: heads must divide hidden");
    if (cfg.layers < 1) throw std::invalid_argument("PolicyConfig: need at least one encoder layer");
    Rng rng(derive_seed(seed, 0x706f6c6963ULL));

    std::array<int, kNumNodeTypes> in{task_feature_dim(cfg.num_agents), kAgentFeatureDim, kStateFeatureDim};
    for (int l = 0; l < cfg.layers; ++l) {
      LayerParams lp;
      lp.in_dim = in;
      lp.heads = cfg.heads;
      lp.concat = l + 1 < cfg.layers;
      lp.head_dim = lp.concat ? cfg.hidden / cfg.heads : cfg.hidden;
      const int width = lp.heads * lp.head_dim;
      const std::string prefix = "encoder." + std::to_string(l) + ".";
      for (int e = 0; e < kNumEdgeTypes; ++e) {
        const auto& info = kEdgeTypes[static_cast<std::size_t>(e)];
        const int src_in = in[static_cast<std::size_t>(info.src)];
        const int dst_in = in[static_cast<std::size_t>(info.dst)];
        const std::string ep = prefix + std::string(info.name) + ".";
        auto& idx = lp.edges[static_cast<std::size_t>(e)];
        idx.weight = add(ep + "weight", src_in, width, src_in, rng);
        idx.att_src = add(ep + "att_src", 1, width, lp.head_dim, rng);
        idx.att_dst = add(ep + "att_dst", dst_in, lp.heads, dst_in, rng);
        if (info.has_feature) {
          idx.feat_msg = add(ep + "feat_msg", 1, width, 1, rng);
          idx.feat_att = add(ep + "feat_att", 1, lp.heads, 1, rng);
        }
      }
      for (int t = 0; t < kNumNodeTypes; ++t)
        lp.bias[static_cast<std::size_t>(t)] = add(prefix + "bias." + std::to_string(t), 1, lp.out_dim(), 0, rng);
      layers_.push_back(lp);
      in = {lp.out_dim(), lp.out_dim(), lp.out_dim()};
    }

    const int h = cfg.hidden;
    agent_h0_ = linear("propagator.agent_h0", h, cfg.lstm, rng);
    agent_c0_ = linear("propagator.agent_c0", h, cfg.lstm, rng);
    state_h0_ = linear("propagator.state_h0", h, cfg.lstm, rng);
    state_c0_ = linear("propagator.state_c0", h, cfg.lstm, rng);
    agent_lstm_ = lstm("propagator.agent_lstm", h + cfg.lstm, cfg.lstm, rng);
    state_lstm_ = lstm("propagator.state_lstm", h + cfg.lstm, cfg.lstm, rng);

    const int sh = cfg.selector_hidden;
    // agent selector on [h_agent || h_state]
    agent_sel_agent_ = add("agent_selector.l1.agent", cfg.lstm, sh, 2 * cfg.lstm, rng);
    agent_sel_state_ = add("agent_selector.l1.state", cfg.lstm, sh, 2 * cfg.lstm, rng);
    agent_sel_b1_ = add("agent_selector.l1.bias", 1, sh, 0, rng);
    agent_sel_out_ = linear("agent_selector.l2", sh, 1, rng);
    // task selector on [h_task || h_agent || h_state]
    task_sel_task_ = add("task_selector.l1.task", h, sh, h + 2 * cfg.lstm, rng);
    task_sel_agent_ = add("task_selector.l1.agent", cfg.lstm, sh, h + 2 * cfg.lstm, rng);
    task_sel_state_ = add("task_selector.l1.state", cfg.lstm, sh, h + 2 * cfg.lstm, rng);
    task_sel_b1_ = add("task_selector.l1.bias", 1, sh, 0, rng);
    task_sel_out_ = linear("task_selector.l2", sh, 1, rng);
  }

  const PolicyConfig& config() const { return cfg_; }
  std::span<diff::Parameter> all() { return params_; }
  std::span<const diff::Parameter> all() const { return params_; }
  diff::Parameter& operator[](int i) { return params_.at(static_cast<std::size_t>(i)); }
  const diff::Parameter& operator[](int i) const { return params_.at(static_cast<std::size_t>(i)); }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  const std::vector<LayerParams>& layers() const { return layers_; }
  LinearParams agent_h0() const { return agent_h0_; }
  LinearParams agent_c0() const { return agent_c0_; }
  LinearParams state_h0() const { return state_h0_; }
  LinearParams state_c0() const { return state_c0_; }
  LstmParams agent_lstm() const { return agent_lstm_; }
  LstmParams state_lstm() const { return state_lstm_; }

  struct AgentSelector {
    int w_agent, w_state, b1;
    LinearParams out;
  };
  struct TaskSelector {
    int w_task, w_agent, w_state, b1;
    LinearParams out;
  };
  AgentSelector agent_selector() const { return {agent_sel_agent_, agent_sel_state_, agent_sel_b1_, agent_sel_out_}; }
  TaskSelector task_selector() const {
    return {task_sel_task_, task_sel_agent_, task_sel_state_, task_sel_b1_, task_sel_out_};
  }

  /// Copies values (not gradients) from `other`, which must share the layout.
  void copy_values_from(const PolicyParameters& other) {
    if (other.params_.size() != params_.size()) throw std::invalid_argument("copy_values_from: layout mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
  }

 private:
  int add(const std::string& name, int rows, int cols, int fan_in, Rng& rng) {
    diff::Matrix m(rows, cols);
    if (fan_in > 0) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
    }
    params_.emplace_back(name, std::move(m));
    return static_cast<int>(params_.size()) - 1;
  }

  LinearParams linear(const std::string& name, int in, int out, Rng& rng) {
    return {add(name + ".weight", in, out, in, rng), add(name + ".bias", 1, out, in, rng)};
  }

  LstmParams lstm(const std::string& name, int input, int hidden, Rng& rng) {
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    p.weight = add(name + ".weight", hidden + input, 4 * hidden, hidden, rng);
    p.bias = add(name + ".bias", 1, 4 * hidden, hidden, rng);
    auto& b = params_.back().value;
    for (int j = 0; j < hidden; ++j) b(0, hidden + j) = 1.0;
    return p;
  }

  PolicyConfig cfg_;
  std::vector<diff::Parameter> params_;
  std::vector<LayerParams> layers_;
  LinearParams agent_h0_, agent_c0_, state_h0_, state_c0_;
  LstmParams agent_lstm_, state_lstm_;
  int agent_sel_agent_ = -1, agent_sel_state_ = -1, agent_sel_b1_ = -1;
  LinearParams agent_sel_out_;
  int task_sel_task_ = -1, task_sel_agent_ = -1, task_sel_state_ = -1, task_sel_b1_ = -1;
  LinearParams task_sel_out_;
};

/// Lazily binds parameters of a PolicyParameters set onto one tape.
class BoundParams {
 public:
  BoundParams(diff::Tape& tape, PolicyParameters& params)
      : tape_(tape), params_(params), vars_(params.all().size()) {}

  diff::Var operator[](int i) {
    auto& v = vars_.at(static_cast<std::size_t>(i));
    if (v.tape == nullptr) v = tape_.param(params_[i]);
    return v;
  }

  diff::Tape& tape() { return tape_; }
  PolicyParameters& params() { return params_; }
  const PolicyConfig& config() const { return params_.config(); }

 private:
  diff::Tape& tape_;
  PolicyParameters& params_;
  std::vector<diff::Var> vars_;
};

}  // namespace hrsched
