#pragma once

#include <array>
#include <optional>

#include "hrsched/diff/ops.hpp"
#include "hrsched/policy/het_graph.hpp"
#include "hrsched/policy/parameters.hpp"

namespace hrsched {

/// Node embeddings produced by the graph encoder.
struct Encoding {
  diff::Var tasks;   // [N x hidden]
  diff::Var agents;  // [M x hidden]
  diff::Var state;   // [1 x hidden]
};

/// One heterogeneous graph attention layer. For every edge type: transform
/// source features, score each edge with leaky-relu additive attention,
/// normalize scores over the destination's in-edges of that type, and sum
/// the weighted messages. Destinations then add up the contributions of all
/// edge types. Heads are concatenated or averaged per the layer setting.
inline std::array<diff::Var, kNumNodeTypes> hetgat_layer(const HetGraph& g, const LayerParams& lp,
                                                         const std::array<diff::Var, kNumNodeTypes>& x,
                                                         BoundParams& P, bool last) {
  using namespace diff;
  Tape& tape = P.tape();
  const int heads = lp.heads;
  std::array<std::optional<Var>, kNumNodeTypes> acc;

  for (int e = 0; e < kNumEdgeTypes; ++e) {
    const EdgeList& el = g.edges[static_cast<std::size_t>(e)];
    if (el.size() == 0) continue;
    const auto& info = kEdgeTypes[static_cast<std::size_t>(e)];
    const auto& idx = lp.edges[static_cast<std::size_t>(e)];
    const auto s = static_cast<std::size_t>(info.src);
    const auto d = static_cast<std::size_t>(info.dst);
    const int n_dst = g.num_nodes(info.dst);

    Var z = matmul(x[s], P[idx.weight]);
    Var src_score = head_dot(z, P[idx.att_src], heads);
    Var dst_score = matmul(x[d], P[idx.att_dst]);
    Var score = add(gather_rows(src_score, el.src), gather_rows(dst_score, el.dst));
    Var msg = gather_rows(z, el.src);
    if (info.has_feature) {
      Var f = tape.constant(Matrix(static_cast<int>(el.size()), 1, el.feature));
      score = add(score, matmul(f, P[idx.feat_att]));
      msg = add(msg, matmul(f, P[idx.feat_msg]));
    }
    Var alpha = segment_softmax(leaky_relu(score, P.config().attention_slope), el.dst, n_dst);
    Var agg = scatter_add_rows(head_scale(msg, alpha, heads), el.dst, n_dst);
    acc[d] = acc[d] ? add(*acc[d], agg) : agg;
  }

  std::array<Var, kNumNodeTypes> out;
  for (std::size_t t = 0; t < kNumNodeTypes; ++t) {
    Var h = acc[t] ? *acc[t]
                   : tape.constant(Matrix(g.num_nodes(static_cast<NodeType>(t)), lp.heads * lp.head_dim));
    if (!lp.concat) h = head_mean(h, heads);
    h = add(h, P[lp.bias[t]]);
    out[t] = last ? h : elu(h);
  }
  return out;
}

/// Stacks the encoder layers over the graph's node features.
inline Encoding encode(const HetGraph& g, BoundParams& P) {
  diff::Tape& tape = P.tape();
  std::array<diff::Var, kNumNodeTypes> x{tape.constant(g.task_features), tape.constant(g.agent_features),
                                         tape.constant(g.state_features)};
  const auto& layers = P.params().layers();
  for (std::size_t l = 0; l < layers.size(); ++l) x = hetgat_layer(g, layers[l], x, P, l + 1 == layers.size());
  return {x[0], x[1], x[2]};
}

}  // namespace hrsched
