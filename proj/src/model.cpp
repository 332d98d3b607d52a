#include "sgat/model.hpp"

#include <cmath>
#include <string>

namespace sgat {

namespace {

int layer_in_dim(const SgatConfig& cfg, int layer) {
  return layer == 0 ? cfg.in_dim : cfg.heads * cfg.hidden_dim;
}

int layer_out_dim(const SgatConfig& cfg, int layer) {
  return layer == cfg.layers - 1 ? cfg.n_classes : cfg.hidden_dim;
}

// Average of per-head tensors (same shape).
Tensor head_average(Tape& tape, const std::vector<Tensor>& heads) {
  Tensor acc = heads[0];
  for (size_t k = 1; k < heads.size(); ++k) acc = add(tape, acc, heads[k]);
  return heads.size() > 1 ? scale(tape, acc, 1.0 / double(heads.size())) : acc;
}

Tensor head_concat(Tape& tape, const std::vector<Tensor>& heads) {
  Tensor acc = heads[0];
  for (size_t k = 1; k < heads.size(); ++k) acc = concat_cols(tape, acc, heads[k]);
  return acc;
}

}  // namespace

Tensor feature_tensor(const Graph& g) {
  if (g.feature_dim <= 0) {
    throw ContractError("feature_tensor: graph has no features");
  }
  return Tensor::from(g.n_nodes, g.feature_dim, g.features);
}

// --- SGAT ---------------------------------------------------------------------

std::vector<Tensor> SgatModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& layer : weights)
    for (const auto& w : layer) out.push_back(w);
  if (cfg.gate_mode == GateMode::transductive) out.push_back(log_alpha);
  else out.push_back(gen_b);
  return out;
}

std::vector<Tensor> SgatModel::l2_parameters() const {
  std::vector<Tensor> out;
  for (const auto& layer : weights)
    for (const auto& w : layer) out.push_back(w);
  if (cfg.gate_mode == GateMode::inductive) out.push_back(gen_b);
  return out;
}

void SgatModel::zero_grad() const {
  for (auto& p : parameters()) const_cast<Tensor&>(p).zero_grad();
}

SgatModel make_sgat_model(const SgatConfig& cfg, const Graph& g, RngStream& rng) {
  if (cfg.in_dim <= 0 || cfg.n_classes <= 0 || cfg.layers < 1 || cfg.heads < 1) {
    throw ContractError("make_sgat_model: bad dimensions in config");
  }
  if (cfg.in_dim != g.feature_dim) {
    throw DimensionError("make_sgat_model: config in_dim " +
                         std::to_string(cfg.in_dim) + " != graph feature dim " +
                         std::to_string(g.feature_dim));
  }
  cfg.hc.check();
  SgatModel m;
  m.cfg = cfg;
  m.n_gates = g.n_non_self_edges();
  m.weights.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    for (int k = 0; k < cfg.heads; ++k) {
      m.weights[l].push_back(
          glorot_uniform(layer_in_dim(cfg, l), layer_out_dim(cfg, l), rng));
    }
  }
  if (cfg.gate_mode == GateMode::transductive) {
    m.log_alpha =
        randn(m.n_gates, 1, cfg.log_alpha_init_mean, cfg.log_alpha_init_std, rng);
  } else {
    // the projection used by the generator is weights[0][0] itself
    m.gen_b = glorot_uniform(2 * layer_out_dim(cfg, 0), 1, rng);
  }
  return m;
}

Tensor generate_log_alpha(Tape& tape, const SgatModel& model, const Graph& g,
                          const Tensor& X) {
  if (model.cfg.gate_mode != GateMode::inductive) {
    throw ContractError("generate_log_alpha: model is not inductive");
  }
  Tensor proj = matmul(tape, X, model.weights[0][0]);
  std::vector<int> src(g.n_non_self_edges()), dst(g.n_non_self_edges());
  for (int k = 0; k < g.n_non_self_edges(); ++k) {
    const int e = g.non_self_edge_ids[k];
    src[k] = g.edge_src[e];
    dst[k] = g.col_idx[e];
  }
  Tensor endpoints = concat_cols(tape, gather_rows(tape, proj, src),
                                 gather_rows(tape, proj, dst));
  return matmul(tape, endpoints, model.gen_b);
}

Tensor gate_logits(Tape& tape, const SgatModel& model, const Graph& g,
                   const Tensor& X) {
  if (model.cfg.gate_mode == GateMode::transductive) return model.log_alpha;
  // shift the generator output so gates start near-open at init, matching the
  // transductive initialization
  return affine(tape, generate_log_alpha(tape, model, g, X), 1.0,
                model.cfg.log_alpha_init_mean);
}

Tensor sparse_attention(Tape& tape, const Graph& g, const Tensor& gate_values) {
  if (gate_values.rows() != g.n_edges() || gate_values.cols() != 1) {
    throw DimensionError("sparse_attention: expected " +
                         std::to_string(g.n_edges()) + "x1 gate column");
  }
  for (int e = 0; e < g.n_edges(); ++e) {
    const double v = gate_values.values()[e];
    if (v < 0.0 || v > 1.0) {
      throw ContractError("sparse_attention: gate outside [0,1] at edge " +
                          std::to_string(e));
    }
    if (g.is_self_loop(e) && v != 1.0) {
      throw ContractError("sparse_attention: self-loop gate must be 1 at edge " +
                          std::to_string(e));
    }
  }
  return edge_row_normalize(tape, g, gate_values);
}

ForwardResult sgat_forward(Tape& tape, const SgatModel& model, const Graph& g,
                           const Tensor& X, const ForwardOptions& opts,
                           RngStream& rng) {
  const SgatConfig& cfg = model.cfg;
  if (X.rows() != g.n_nodes || X.cols() != cfg.in_dim) {
    throw DimensionError("sgat_forward: X is " + std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()) + ", model expects " +
                         std::to_string(g.n_nodes) + "x" + std::to_string(cfg.in_dim));
  }
  if (cfg.gate_mode == GateMode::transductive && model.n_gates != g.n_non_self_edges()) {
    throw StructuralError("sgat_forward: model has " + std::to_string(model.n_gates) +
                          " gates but graph has " +
                          std::to_string(g.n_non_self_edges()) + " non-self edges");
  }

  ForwardResult res;
  res.log_alpha = gate_logits(tape, model, g, X);

  Tensor z_non_self;
  if (opts.training) {
    std::vector<double> u;
    if (opts.fixed_gate_noise) {
      u = *opts.fixed_gate_noise;
    } else {
      u.resize(g.n_non_self_edges());
      for (auto& v : u) v = rng.uniform_open();
    }
    z_non_self = sample_gates(tape, res.log_alpha, u, cfg.hc);
  } else {
    // deterministic gate = the sampling transform with zero noise logit
    std::vector<double> half(g.n_non_self_edges(), 0.5);
    z_non_self = sample_gates(tape, res.log_alpha, half, cfg.hc);
  }
  res.gates = expand_gates_with_self_loops(tape, g, z_non_self);
  res.attention = edge_row_normalize(tape, g, res.gates);
  res.attention_used =
      opts.training ? dropout(tape, res.attention, opts.dropout_attn, true, rng)
                    : res.attention;

  Tensor h = X;
  for (int l = 0; l < cfg.layers; ++l) {
    Tensor h_in = dropout(tape, h, opts.dropout_input, opts.training, rng);
    std::vector<Tensor> head_out;
    for (int k = 0; k < cfg.heads; ++k) {
      Tensor p = matmul(tape, h_in, model.weights[l][k]);
      head_out.push_back(spmm_aggregate(tape, g, res.attention_used, p));
      res.aggregation_inputs.push_back(res.attention_used.id());
    }
    if (l == cfg.layers - 1) {
      h = head_average(tape, head_out);
    } else {
      h = relu(tape, head_concat(tape, head_out));
    }
  }
  res.logits = h;
  return res;
}

// --- GCN ------------------------------------------------------------------------

void GcnModel::zero_grad() const {
  for (auto& p : parameters()) const_cast<Tensor&>(p).zero_grad();
}

GcnModel make_gcn_model(int in_dim, int hidden_dim, int n_classes, RngStream& rng) {
  GcnModel m;
  m.w0 = glorot_uniform(in_dim, hidden_dim, rng);
  m.w1 = glorot_uniform(hidden_dim, n_classes, rng);
  return m;
}

Tensor gcn_edge_weights(const Graph& g) {
  std::vector<double> inv_sqrt_deg(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i)
    inv_sqrt_deg[i] = 1.0 / std::sqrt(double(g.row_end(i) - g.row_begin(i)));
  Tensor w = Tensor::zeros(g.n_edges(), 1);
  for (int e = 0; e < g.n_edges(); ++e)
    w.values()[e] = inv_sqrt_deg[g.edge_src[e]] * inv_sqrt_deg[g.col_idx[e]];
  return w;
}

Tensor gcn_forward(Tape& tape, const GcnModel& model, const Graph& g,
                   const Tensor& X, const Tensor& norm_weights,
                   const ForwardOptions& opts, RngStream& rng) {
  Tensor h0 = dropout(tape, X, opts.dropout_input, opts.training, rng);
  Tensor h1 = relu(tape, spmm_aggregate(tape, g, norm_weights,
                                        matmul(tape, h0, model.w0)));
  Tensor h1d = dropout(tape, h1, opts.dropout_input, opts.training, rng);
  return spmm_aggregate(tape, g, norm_weights, matmul(tape, h1d, model.w1));
}

// --- GAT ------------------------------------------------------------------------

std::vector<Tensor> GatModel::parameters() const {
  std::vector<Tensor> out;
  for (int l = 0; l < layers; ++l)
    for (int k = 0; k < heads; ++k) {
      out.push_back(weights[l][k]);
      out.push_back(attn_src[l][k]);
      out.push_back(attn_dst[l][k]);
    }
  return out;
}

void GatModel::zero_grad() const {
  for (auto& p : parameters()) const_cast<Tensor&>(p).zero_grad();
}

GatModel make_gat_model(int in_dim, int hidden_dim, int n_classes, int heads,
                        int layers, RngStream& rng) {
  GatModel m;
  m.layers = layers;
  m.heads = heads;
  m.weights.resize(layers);
  m.attn_src.resize(layers);
  m.attn_dst.resize(layers);
  for (int l = 0; l < layers; ++l) {
    const int din = l == 0 ? in_dim : heads * hidden_dim;
    const int dout = l == layers - 1 ? n_classes : hidden_dim;
    for (int k = 0; k < heads; ++k) {
      m.weights[l].push_back(glorot_uniform(din, dout, rng));
      m.attn_src[l].push_back(glorot_uniform(dout, 1, rng));
      m.attn_dst[l].push_back(glorot_uniform(dout, 1, rng));
    }
  }
  return m;
}

GatForwardResult gat_forward(Tape& tape, const GatModel& model, const Graph& g,
                             const Tensor& X, const ForwardOptions& opts,
                             RngStream& rng, const std::vector<uint8_t>& keep_edges) {
  GatForwardResult res;
  res.attention.resize(model.layers);
  Tensor h = X;
  for (int l = 0; l < model.layers; ++l) {
    Tensor h_in = dropout(tape, h, opts.dropout_input, opts.training, rng);
    std::vector<Tensor> head_out;
    for (int k = 0; k < model.heads; ++k) {
      Tensor p = matmul(tape, h_in, model.weights[l][k]);
      // score(i,j) = leaky_relu(a_src . p_i + a_dst . p_j)
      Tensor s_src = matmul(tape, p, model.attn_src[l][k]);
      Tensor s_dst = matmul(tape, p, model.attn_dst[l][k]);
      Tensor score = leaky_relu(
          tape,
          add(tape, gather_node_to_edges(tape, g, s_src, EdgeEnd::source),
              gather_node_to_edges(tape, g, s_dst, EdgeEnd::target)),
          0.2);
      Tensor coeff = edge_row_softmax(tape, g, score, keep_edges);
      res.attention[l].push_back(coeff);
      Tensor coeff_used =
          opts.training ? dropout(tape, coeff, opts.dropout_attn, true, rng) : coeff;
      head_out.push_back(spmm_aggregate(tape, g, coeff_used, p));
    }
    if (l == model.layers - 1) {
      h = head_average(tape, head_out);
    } else {
      h = relu(tape, head_concat(tape, head_out));
    }
  }
  res.logits = h;
  return res;
}

}  // namespace sgat
