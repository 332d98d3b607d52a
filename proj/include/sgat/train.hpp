#ifndef SGAT_TRAIN_HPP
#define SGAT_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sgat/graph.hpp"
#include "sgat/model.hpp"

namespace sgat {

struct TrainConfig {
  double lambda = 0.0;   // weight of the expected-L0 edge penalty
  double lr = 1e-2;
  int epochs = 300;
  double l2 = 5e-4;
  double dropout_input = 0.0;
  double dropout_attn = 0.0;
  uint64_t seed = 0;
  int heads = 2;
  int layers = 2;
  int hidden = 8;
  int patience = 100;  // early-stop epochs without val improvement; <=0 disables
  bool select_last = false;  // keep the final epoch instead of the best-val epoch
  GateMode gate_mode = GateMode::inductive;
  double gate_init_mean = 2.0;  // initial gate logit level (large values pin gates open)
  HardConcreteParams hc;

  void check() const;
};

// --- Adam ---------------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Single bias-corrected update of one parameter buffer.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr);

class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  double lr_;
};

// --- loss and metrics -----------------------------------------------------------

// mean cross-entropy over train-mask nodes
//   + lambda * sum of gate-open probabilities
//   + l2 * sum of squared entries over l2_params.
// log_alpha may be undefined when lambda == 0.
Tensor regularized_loss(Tape& tape, const Tensor& logits,
                        const std::vector<int>& labels,
                        const std::vector<uint8_t>& train_mask,
                        const Tensor& log_alpha, double lambda,
                        const HardConcreteParams& hc, double l2,
                        const std::vector<Tensor>& l2_params);

// Argmax-match fraction over masked nodes; prediction ties break to the
// lowest class id.
double accuracy_from_logits(const Tensor& logits, const std::vector<int>& labels,
                            const std::vector<uint8_t>& mask);

double evaluate(const SgatModel& model, const Graph& g,
                const std::vector<uint8_t>& mask);

// --- training loops ----------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
  int kept_edges = 0;  // nonzeros of the deterministic mask, incl. self-loops
};

struct TrainResult {
  SgatModel model;  // parameters restored to the selected epoch
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double train_acc = 0.0;
  int kept_edges = 0;
  double removed_fraction = 0.0;  // zeros of the mask over non-self edges
};

// Model selected at max validation accuracy (first maximum). Graphs without
// validation nodes keep the final epoch. Fully reproducible from cfg.seed.
TrainResult train_sgat(const Graph& g, const TrainConfig& cfg);

struct GcnTrainResult {
  GcnModel model;
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double val_acc = 0.0, test_acc = 0.0;
};

GcnTrainResult train_gcn(const Graph& g, const TrainConfig& cfg);

struct GatTrainResult {
  GatModel model;
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double val_acc = 0.0, test_acc = 0.0;
};

// keep_edges (optional) restricts every aggregation to a fixed edge subset.
GatTrainResult train_gat(const Graph& g, const TrainConfig& cfg,
                         const std::vector<uint8_t>& keep_edges = {});

double evaluate_gat(const GatModel& model, const Graph& g,
                    const std::vector<uint8_t>& mask,
                    const std::vector<uint8_t>& keep_edges = {});

// --- top-k attention pruning baseline ------------------------------------------------

struct TopkResult {
  double acc_pruned_from_start = 0.0;
  double acc_pruned_after_convergence = 0.0;
  double best_acc = 0.0;
  std::string best_schedule;        // "from-start" or "after-convergence"
  SparsifiedGraph pruned;           // from the best schedule
  int edges_removed = 0;            // floor(k * non-self edges)
};

// Removes the k-fraction of non-self edges with the smallest dense attention
// (mean over heads at layer 0, ties by edge id ascending) under two
// schedules, and reports the better one:
//   from-start: the smallest-k set is recomputed every epoch while training;
//   after-convergence: train dense, prune once, then fine-tune on the pruned set.
TopkResult topk_prune_baseline(const Graph& g, double k_fraction,
                               const TrainConfig& cfg);

}  // namespace sgat

#endif  // SGAT_TRAIN_HPP
