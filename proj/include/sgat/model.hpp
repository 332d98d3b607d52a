#ifndef SGAT_MODEL_HPP
#define SGAT_MODEL_HPP

#include <vector>

#include "sgat/graph.hpp"
#include "sgat/graph_ops.hpp"
#include "sgat/hard_concrete.hpp"
#include "sgat/tensor.hpp"

namespace sgat {

// Where per-edge gate logits come from: a free parameter per edge of the
// training graph, or a generator computing them from endpoint features
// (usable on edges never seen in training).
enum class GateMode { transductive, inductive };

struct ForwardOptions {
  bool training = false;
  double dropout_input = 0.0;
  double dropout_attn = 0.0;
  // Test hook: fixed uniform draws for the gate noise (size = non-self edges).
  const std::vector<double>* fixed_gate_noise = nullptr;
};

// --- SGAT -------------------------------------------------------------------

struct SgatConfig {
  int in_dim = 0;
  int hidden_dim = 8;
  int n_classes = 0;
  int heads = 2;
  int layers = 2;
  GateMode gate_mode = GateMode::inductive;
  HardConcreteParams hc;
  double log_alpha_init_mean = 2.0;  // gates start near-open
  double log_alpha_init_std = 0.01;
};

struct SgatModel {
  SgatConfig cfg;
  // weights[layer][head]; hidden layers concatenate head outputs, the final
  // layer averages them into n_classes columns.
  std::vector<std::vector<Tensor>> weights;
  Tensor log_alpha;  // transductive only: one row per non-self edge
  Tensor gen_b;      // inductive only: 2*hidden_dim x 1
  int n_gates = 0;   // non-self edge count the model was built for

  std::vector<Tensor> parameters() const;
  // Weight matrices plus gen_b; excludes log_alpha (see regularized_loss).
  std::vector<Tensor> l2_parameters() const;
  void zero_grad() const;
};

SgatModel make_sgat_model(const SgatConfig& cfg, const Graph& g, RngStream& rng);

struct ForwardResult {
  Tensor logits;
  Tensor log_alpha;       // gate logits used this pass (E_ns x 1)
  Tensor gates;           // per-edge gate values incl. self-loops (E x 1)
  Tensor attention;       // row-normalized coefficients (E x 1)
  Tensor attention_used;  // tensor consumed by aggregations (post attn-dropout)
  // storage id of the edge-weight tensor each (layer, head) aggregation
  // consumed; all entries must be identical.
  std::vector<const void*> aggregation_inputs;
};

// Gate logits of every non-self edge from the generator:
// concat of projected endpoint features times gen_b, projection = head 0 of
// layer 0 (shared storage, so gradients flow into that weight matrix too).
Tensor generate_log_alpha(Tape& tape, const SgatModel& model, const Graph& g,
                          const Tensor& X);

// Gate logits the forward pass consumes: the transductive parameter itself,
// or the generator output shifted so gates start near-open at init.
Tensor gate_logits(Tape& tape, const SgatModel& model, const Graph& g,
                   const Tensor& X);

// Row-normalized sparse attention over gate values (E x 1, self-loops = 1).
Tensor sparse_attention(Tape& tape, const Graph& g, const Tensor& gate_values);

// Full model forward. Training mode samples gates from the hard concrete
// distribution and applies dropout; eval mode uses the deterministic gate and
// no dropout. One gate vector is computed per call and shared by every
// (layer, head) aggregation.
ForwardResult sgat_forward(Tape& tape, const SgatModel& model, const Graph& g,
                           const Tensor& X, const ForwardOptions& opts,
                           RngStream& rng);

// --- GCN baseline -------------------------------------------------------------

struct GcnModel {
  Tensor w0, w1;
  std::vector<Tensor> parameters() const { return {w0, w1}; }
  void zero_grad() const;
};

GcnModel make_gcn_model(int in_dim, int hidden_dim, int n_classes, RngStream& rng);

// Symmetrically normalized adjacency weights, one value per CSR edge:
// w(i,j) = 1/sqrt(deg(i)*deg(j)) with degrees counting self-loops.
Tensor gcn_edge_weights(const Graph& g);

Tensor gcn_forward(Tape& tape, const GcnModel& model, const Graph& g,
                   const Tensor& X, const Tensor& norm_weights,
                   const ForwardOptions& opts, RngStream& rng);

// --- GAT baseline -------------------------------------------------------------

struct GatModel {
  int layers = 2;
  int heads = 2;
  std::vector<std::vector<Tensor>> weights;    // [layer][head]
  std::vector<std::vector<Tensor>> attn_src;   // [layer][head], out_dim x 1
  std::vector<std::vector<Tensor>> attn_dst;
  std::vector<Tensor> parameters() const;
  void zero_grad() const;
};

GatModel make_gat_model(int in_dim, int hidden_dim, int n_classes, int heads,
                        int layers, RngStream& rng);

struct GatForwardResult {
  Tensor logits;
  // attention[layer][head]: per-edge coefficients after the per-row softmax
  // (before attention dropout).
  std::vector<std::vector<Tensor>> attention;
};

// Dense multi-head attention baseline. Edges with keep[e] == 0 are excluded
// from every aggregation (used by the top-k pruning baseline); pass an empty
// vector to use the whole graph.
GatForwardResult gat_forward(Tape& tape, const GatModel& model, const Graph& g,
                             const Tensor& X, const ForwardOptions& opts,
                             RngStream& rng,
                             const std::vector<uint8_t>& keep_edges = {});

// Feature tensor of a graph (n_nodes x feature_dim leaf).
Tensor feature_tensor(const Graph& g);

}  // namespace sgat

#endif  // SGAT_MODEL_HPP
