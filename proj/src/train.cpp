#include "sgat/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgat {

void TrainConfig::check() const {
  if (!(lr > 0.0)) throw ContractError("train config: lr must be > 0");
  if (lambda < 0.0) throw ContractError("train config: lambda must be >= 0");
  if (l2 < 0.0) throw ContractError("train config: l2 must be >= 0");
  if (epochs < 0) throw ContractError("train config: epochs must be >= 0");
  if (dropout_input < 0.0 || dropout_input >= 1.0 || dropout_attn < 0.0 ||
      dropout_attn >= 1.0) {
    throw ContractError("train config: dropout probabilities must be in [0,1)");
  }
  if (heads < 1 || layers < 1 || hidden < 1) {
    throw ContractError("train config: heads/layers/hidden must be >= 1");
  }
  hc.check();
}

// --- Adam -------------------------------------------------------------------------

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr) {
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw DimensionError("adam_step: buffer size mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

Adam::Adam(std::vector<Tensor> params, double lr)
    : params_(std::move(params)), states_(params_.size()), lr_(lr) {}

void Adam::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    adam_step(params_[i].values(), params_[i].grad(), states_[i], lr_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

// --- loss and metrics ----------------------------------------------------------------

Tensor regularized_loss(Tape& tape, const Tensor& logits,
                        const std::vector<int>& labels,
                        const std::vector<uint8_t>& train_mask,
                        const Tensor& log_alpha, double lambda,
                        const HardConcreteParams& hc, double l2,
                        const std::vector<Tensor>& l2_params) {
  Tensor loss = masked_cross_entropy(tape, logits, labels, train_mask);
  if (lambda > 0.0) {
    if (!log_alpha.defined()) {
      throw ContractError("regularized_loss: lambda > 0 but no gate logits");
    }
    loss = add(tape, loss, scale(tape, l0_penalty(tape, log_alpha, hc), lambda));
  }
  if (l2 > 0.0 && !l2_params.empty()) {
    Tensor reg = sum_squares(tape, l2_params[0]);
    for (size_t i = 1; i < l2_params.size(); ++i)
      reg = add(tape, reg, sum_squares(tape, l2_params[i]));
    loss = add(tape, loss, scale(tape, reg, l2));
  }
  return loss;
}

double accuracy_from_logits(const Tensor& logits, const std::vector<int>& labels,
                            const std::vector<uint8_t>& mask) {
  const int n = logits.rows(), c = logits.cols();
  int total = 0, correct = 0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++total;
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    if (best == labels[i]) ++correct;
  }
  if (total == 0) throw ContractError("accuracy: empty mask");
  return double(correct) / double(total);
}

double evaluate(const SgatModel& model, const Graph& g,
                const std::vector<uint8_t>& mask) {
  Tape tape(false);
  RngStream rng(0);  // eval path draws nothing
  ForwardOptions opts;
  ForwardResult res = sgat_forward(tape, model, g, feature_tensor(g), opts, rng);
  return accuracy_from_logits(res.logits, g.labels, mask);
}

// --- shared training helpers -----------------------------------------------------------

namespace {

bool any_set(const std::vector<uint8_t>& m) {
  return std::any_of(m.begin(), m.end(), [](uint8_t b) { return b != 0; });
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> s;
  s.reserve(params.size());
  for (const auto& p : params) s.push_back(p.values());
  return s;
}

void restore(std::vector<Tensor>& params, const std::vector<std::vector<double>>& s) {
  for (size_t i = 0; i < params.size(); ++i) params[i].values() = s[i];
}

// Tracks best validation accuracy and the parameter snapshot to keep.
struct Selector {
  bool use_val;
  int patience;
  double best_val = -1.0;
  int best_epoch = -1;
  int stale = 0;
  std::vector<std::vector<double>> best_params;

  Selector(bool use_val_, int patience_) : use_val(use_val_), patience(patience_) {}

  // returns false when training should stop
  bool observe(int epoch, double val_acc, const std::vector<Tensor>& params) {
    if (!use_val) {
      best_epoch = epoch;
      return true;
    }
    if (val_acc > best_val) {
      best_val = val_acc;
      best_epoch = epoch;
      best_params = snapshot(params);
      stale = 0;
    } else {
      ++stale;
    }
    return patience <= 0 || stale < patience;
  }

  void finalize(std::vector<Tensor>& params) {
    if (use_val && !best_params.empty()) restore(params, best_params);
  }
};

int count_kept_edges(const Graph& g, const std::vector<double>& log_alpha,
                     const HardConcreteParams& hc) {
  int kept = g.n_nodes;  // self-loops are always 1
  for (double la : log_alpha)
    if (deterministic_gate(la, hc) > 0.0) ++kept;
  return kept;
}

}  // namespace

// --- SGAT training ------------------------------------------------------------------------

TrainResult train_sgat(const Graph& g, const TrainConfig& cfg) {
  cfg.check();
  if (!any_set(g.train_mask)) throw ContractError("train: empty train mask");
  RngStream rng(cfg.seed);

  SgatConfig mc;
  mc.in_dim = g.feature_dim;
  mc.hidden_dim = cfg.hidden;
  mc.n_classes = *std::max_element(g.labels.begin(), g.labels.end()) + 1;
  mc.heads = cfg.heads;
  mc.layers = cfg.layers;
  mc.gate_mode = cfg.gate_mode;
  mc.hc = cfg.hc;
  mc.log_alpha_init_mean = cfg.gate_init_mean;
  SgatModel model = make_sgat_model(mc, g, rng);

  std::vector<Tensor> params = model.parameters();
  Adam opt(params, cfg.lr);
  const Tensor X = feature_tensor(g);
  const bool use_val = any_set(g.val_mask);
  const bool use_test = any_set(g.test_mask);
  Selector sel(use_val && !cfg.select_last, cfg.patience);

  TrainResult out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    ForwardOptions train_opts;
    train_opts.training = true;
    train_opts.dropout_input = cfg.dropout_input;
    train_opts.dropout_attn = cfg.dropout_attn;
    ForwardResult fr = sgat_forward(tape, model, g, X, train_opts, rng);
    Tensor loss = regularized_loss(tape, fr.logits, g.labels, g.train_mask,
                                   fr.log_alpha, cfg.lambda, cfg.hc, cfg.l2,
                                   model.l2_parameters());
    opt.zero_grad();
    tape.backward(loss);
    opt.step();

    Tape eval_tape(false);
    RngStream eval_rng(0);
    ForwardResult ev = sgat_forward(eval_tape, model, g, X, ForwardOptions{}, eval_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.item();
    rec.train_acc = accuracy_from_logits(ev.logits, g.labels, g.train_mask);
    rec.val_acc = use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
    rec.test_acc = use_test ? accuracy_from_logits(ev.logits, g.labels, g.test_mask) : 0.0;
    rec.kept_edges = count_kept_edges(g, ev.log_alpha.values(), cfg.hc);
    out.log.push_back(rec);

    if (!sel.observe(epoch, rec.val_acc, params)) break;
  }
  sel.finalize(params);
  out.best_epoch = sel.best_epoch;

  Tape eval_tape(false);
  RngStream eval_rng(0);
  ForwardResult ev = sgat_forward(eval_tape, model, g, X, ForwardOptions{}, eval_rng);
  out.train_acc = accuracy_from_logits(ev.logits, g.labels, g.train_mask);
  out.val_acc = use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
  out.test_acc = use_test ? accuracy_from_logits(ev.logits, g.labels, g.test_mask) : 0.0;
  out.kept_edges = count_kept_edges(g, ev.log_alpha.values(), cfg.hc);
  const int ns = g.n_non_self_edges();
  out.removed_fraction =
      ns > 0 ? double(ns - (out.kept_edges - g.n_nodes)) / double(ns) : 0.0;
  out.model = std::move(model);
  return out;
}

// --- GCN training --------------------------------------------------------------------------

GcnTrainResult train_gcn(const Graph& g, const TrainConfig& cfg) {
  cfg.check();
  if (!any_set(g.train_mask)) throw ContractError("train: empty train mask");
  RngStream rng(cfg.seed);
  const int n_classes = *std::max_element(g.labels.begin(), g.labels.end()) + 1;
  GcnModel model = make_gcn_model(g.feature_dim, cfg.hidden, n_classes, rng);
  const Tensor norm = gcn_edge_weights(g);
  const Tensor X = feature_tensor(g);
  std::vector<Tensor> params = model.parameters();
  Adam opt(params, cfg.lr);
  const bool use_val = any_set(g.val_mask);
  const bool use_test = any_set(g.test_mask);
  Selector sel(use_val, cfg.patience);

  GcnTrainResult out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    ForwardOptions opts;
    opts.training = true;
    opts.dropout_input = cfg.dropout_input;
    Tensor logits = gcn_forward(tape, model, g, X, norm, opts, rng);
    Tensor loss = regularized_loss(tape, logits, g.labels, g.train_mask, Tensor{},
                                   0.0, cfg.hc, cfg.l2, params);
    opt.zero_grad();
    tape.backward(loss);
    opt.step();

    Tape et(false);
    RngStream er(0);
    Tensor ev = gcn_forward(et, model, g, X, norm, ForwardOptions{}, er);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.item();
    rec.train_acc = accuracy_from_logits(ev, g.labels, g.train_mask);
    rec.val_acc = use_val ? accuracy_from_logits(ev, g.labels, g.val_mask) : 0.0;
    rec.test_acc = use_test ? accuracy_from_logits(ev, g.labels, g.test_mask) : 0.0;
    rec.kept_edges = g.n_edges();
    out.log.push_back(rec);
    if (!sel.observe(epoch, rec.val_acc, params)) break;
  }
  sel.finalize(params);
  out.best_epoch = sel.best_epoch;
  Tape et(false);
  RngStream er(0);
  Tensor ev = gcn_forward(et, model, g, X, norm, ForwardOptions{}, er);
  out.val_acc = use_val ? accuracy_from_logits(ev, g.labels, g.val_mask) : 0.0;
  out.test_acc = use_test ? accuracy_from_logits(ev, g.labels, g.test_mask) : 0.0;
  out.model = std::move(model);
  return out;
}

// --- GAT training ---------------------------------------------------------------------------

GatTrainResult train_gat(const Graph& g, const TrainConfig& cfg,
                         const std::vector<uint8_t>& keep_edges) {
  cfg.check();
  if (!any_set(g.train_mask)) throw ContractError("train: empty train mask");
  RngStream rng(cfg.seed);
  const int n_classes = *std::max_element(g.labels.begin(), g.labels.end()) + 1;
  GatModel model =
      make_gat_model(g.feature_dim, cfg.hidden, n_classes, cfg.heads, cfg.layers, rng);
  const Tensor X = feature_tensor(g);
  std::vector<Tensor> params = model.parameters();
  Adam opt(params, cfg.lr);
  const bool use_val = any_set(g.val_mask);
  const bool use_test = any_set(g.test_mask);
  Selector sel(use_val, cfg.patience);

  GatTrainResult out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    ForwardOptions opts;
    opts.training = true;
    opts.dropout_input = cfg.dropout_input;
    opts.dropout_attn = cfg.dropout_attn;
    GatForwardResult fr = gat_forward(tape, model, g, X, opts, rng, keep_edges);
    Tensor loss = regularized_loss(tape, fr.logits, g.labels, g.train_mask, Tensor{},
                                   0.0, cfg.hc, cfg.l2, params);
    opt.zero_grad();
    tape.backward(loss);
    opt.step();

    Tape et(false);
    RngStream er(0);
    GatForwardResult ev = gat_forward(et, model, g, X, ForwardOptions{}, er, keep_edges);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.item();
    rec.train_acc = accuracy_from_logits(ev.logits, g.labels, g.train_mask);
    rec.val_acc = use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
    rec.test_acc = use_test ? accuracy_from_logits(ev.logits, g.labels, g.test_mask) : 0.0;
    rec.kept_edges = g.n_edges();
    out.log.push_back(rec);
    if (!sel.observe(epoch, rec.val_acc, params)) break;
  }
  sel.finalize(params);
  out.best_epoch = sel.best_epoch;
  Tape et(false);
  RngStream er(0);
  GatForwardResult ev = gat_forward(et, model, g, X, ForwardOptions{}, er, keep_edges);
  out.val_acc = use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
  out.test_acc = use_test ? accuracy_from_logits(ev.logits, g.labels, g.test_mask) : 0.0;
  out.model = std::move(model);
  return out;
}

double evaluate_gat(const GatModel& model, const Graph& g,
                    const std::vector<uint8_t>& mask,
                    const std::vector<uint8_t>& keep_edges) {
  Tape tape(false);
  RngStream rng(0);
  GatForwardResult res =
      gat_forward(tape, model, g, feature_tensor(g), ForwardOptions{}, rng, keep_edges);
  return accuracy_from_logits(res.logits, g.labels, mask);
}

// --- top-k pruning baseline ---------------------------------------------------------------------

namespace {

// Mean over heads of layer-0 attention, per non-self edge.
std::vector<double> layer0_edge_scores(const GatModel& model, const Graph& g) {
  Tape tape(false);
  RngStream rng(0);
  GatForwardResult res =
      gat_forward(tape, model, g, feature_tensor(g), ForwardOptions{}, rng);
  std::vector<double> score(g.n_non_self_edges(), 0.0);
  for (int k = 0; k < model.heads; ++k) {
    const auto& att = res.attention[0][k].values();
    for (int i = 0; i < g.n_non_self_edges(); ++i)
      score[i] += att[g.non_self_edge_ids[i]];
  }
  for (auto& s : score) s /= double(model.heads);
  return score;
}

// keep mask (over all edges) dropping the k smallest-scored non-self edges;
// ties break by edge id ascending.
std::vector<uint8_t> drop_smallest(const Graph& g, const std::vector<double>& score,
                                   int n_drop) {
  std::vector<int> order(g.n_non_self_edges());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] < score[b]; });
  std::vector<uint8_t> keep(g.n_edges(), 1);
  for (int i = 0; i < n_drop; ++i)
    keep[g.non_self_edge_ids[order[i]]] = 0;
  return keep;
}

}  // namespace

TopkResult topk_prune_baseline(const Graph& g, double k_fraction,
                               const TrainConfig& cfg) {
  if (k_fraction < 0.0 || k_fraction >= 1.0) {
    throw InputError("topk_prune_baseline: k_fraction must be in [0,1), got " +
                     std::to_string(k_fraction));
  }
  cfg.check();
  const int n_drop = int(k_fraction * g.n_non_self_edges());
  TopkResult out;
  out.edges_removed = n_drop;

  // Schedule 1: re-rank and drop the current smallest-k set at every epoch.
  {
    RngStream rng(cfg.seed);
    const int n_classes = *std::max_element(g.labels.begin(), g.labels.end()) + 1;
    GatModel model = make_gat_model(g.feature_dim, cfg.hidden, n_classes, cfg.heads,
                                    cfg.layers, rng);
    const Tensor X = feature_tensor(g);
    std::vector<Tensor> params = model.parameters();
    Adam opt(params, cfg.lr);
    const bool use_val = any_set(g.val_mask);
    Selector sel(use_val, cfg.patience);
    std::vector<uint8_t> keep(g.n_edges(), 1);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      if (n_drop > 0) keep = drop_smallest(g, layer0_edge_scores(model, g), n_drop);
      Tape tape;
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_input = cfg.dropout_input;
      opts.dropout_attn = cfg.dropout_attn;
      GatForwardResult fr = gat_forward(tape, model, g, X, opts, rng, keep);
      Tensor loss = regularized_loss(tape, fr.logits, g.labels, g.train_mask,
                                     Tensor{}, 0.0, cfg.hc, cfg.l2, params);
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      Tape et(false);
      RngStream er(0);
      GatForwardResult ev = gat_forward(et, model, g, X, ForwardOptions{}, er, keep);
      const double val =
          use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
      if (!sel.observe(epoch, val, params)) break;
    }
    sel.finalize(params);
    if (n_drop > 0) keep = drop_smallest(g, layer0_edge_scores(model, g), n_drop);
    out.acc_pruned_from_start = evaluate_gat(model, g, g.test_mask, keep);
    std::vector<uint8_t> keep_ns(g.n_non_self_edges(), 1);
    for (int i = 0; i < g.n_non_self_edges(); ++i)
      keep_ns[i] = keep[g.non_self_edge_ids[i]];
    out.pruned = keep_edges(g, keep_ns);
  }

  // Schedule 2: train dense to convergence, prune once, fine-tune on the subset.
  {
    GatTrainResult dense = train_gat(g, cfg);
    std::vector<uint8_t> keep(g.n_edges(), 1);
    if (n_drop > 0) keep = drop_smallest(g, layer0_edge_scores(dense.model, g), n_drop);

    RngStream rng(cfg.seed + 1);
    const Tensor X = feature_tensor(g);
    std::vector<Tensor> params = dense.model.parameters();
    Adam opt(params, cfg.lr);
    const bool use_val = any_set(g.val_mask);
    Selector sel(use_val, cfg.patience);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Tape tape;
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_input = cfg.dropout_input;
      opts.dropout_attn = cfg.dropout_attn;
      GatForwardResult fr = gat_forward(tape, dense.model, g, X, opts, rng, keep);
      Tensor loss = regularized_loss(tape, fr.logits, g.labels, g.train_mask,
                                     Tensor{}, 0.0, cfg.hc, cfg.l2, params);
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      Tape et(false);
      RngStream er(0);
      GatForwardResult ev =
          gat_forward(et, dense.model, g, X, ForwardOptions{}, er, keep);
      const double val =
          use_val ? accuracy_from_logits(ev.logits, g.labels, g.val_mask) : 0.0;
      if (!sel.observe(epoch, val, params)) break;
    }
    sel.finalize(params);
    out.acc_pruned_after_convergence = evaluate_gat(dense.model, g, g.test_mask, keep);
    if (out.acc_pruned_after_convergence > out.acc_pruned_from_start) {
      std::vector<uint8_t> keep_ns(g.n_non_self_edges(), 1);
      for (int i = 0; i < g.n_non_self_edges(); ++i)
        keep_ns[i] = keep[g.non_self_edge_ids[i]];
      out.pruned = keep_edges(g, keep_ns);
    }
  }

  if (out.acc_pruned_after_convergence > out.acc_pruned_from_start) {
    out.best_acc = out.acc_pruned_after_convergence;
    out.best_schedule = "after-convergence";
  } else {
    out.best_acc = out.acc_pruned_from_start;
    out.best_schedule = "from-start";
  }
  return out;
}

}  // namespace sgat
