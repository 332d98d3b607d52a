#ifndef SGAT_ANALYSIS_HPP
#define SGAT_ANALYSIS_HPP

#include <string>
#include <vector>

#include "sgat/graph.hpp"
#include "sgat/model.hpp"
#include "sgat/train.hpp"

namespace sgat {

enum class RemovalStrategy { top_desc, bottom_desc, random_k };

std::string to_string(RemovalStrategy s);
RemovalStrategy removal_strategy_from_string(const std::string& s);

struct RemovalPoint {
  double fraction = 0.0;
  double accuracy = 0.0;
  int edges_removed = 0;
};

// Per-edge gate logits of a trained model, evaluated on g (generator run for
// inductive models), in non-self edge order.
std::vector<double> edge_log_alphas(const SgatModel& model, const Graph& g);

// Accuracy after removing a fraction of non-self edges chosen by strategy:
// top_desc removes the highest-log-alpha edges first, bottom_desc the lowest,
// random_k a uniform sample. Exactly floor(fraction * non-self edges) edges
// go per point. With retrain, a fresh model is trained on each pruned graph;
// otherwise the given model is evaluated as-is.
std::vector<RemovalPoint> removal_strategy_curve(
    const SgatModel& model, const Graph& g, RemovalStrategy strategy,
    const std::vector<double>& fractions, bool retrain, const TrainConfig& cfg,
    uint64_t seed);

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  int count = 0;
};

// Per-edge variance of the layers*heads attention coefficients of a trained
// dense-attention model, as a fixed-width histogram over [0, max].
std::vector<HistogramBin> attention_variance_histogram(const GatModel& model,
                                                       const Graph& g,
                                                       double bin_width = 0.002);

// Variances themselves (one per edge, self-loops included).
std::vector<double> attention_variances(const GatModel& model, const Graph& g);

struct LambdaPoint {
  double lambda = 0.0;
  double accuracy = 0.0;
  double removed_pct = 0.0;
};

std::vector<LambdaPoint> lambda_sweep(const Graph& g, const std::vector<double>& grid,
                                      const TrainConfig& base);

struct HeadPoint {
  int heads = 0;
  double accuracy = 0.0;
  double removed_pct = 0.0;
};

std::vector<HeadPoint> head_sweep(const Graph& g, const std::vector<int>& grid,
                                  const TrainConfig& base);

// --- CSV emission -----------------------------------------------------------

void write_removal_curve_csv(const std::string& path,
                             const std::vector<std::pair<RemovalStrategy,
                                                         std::vector<RemovalPoint>>>& curves);
void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins);
void write_lambda_sweep_csv(const std::string& path, const std::vector<LambdaPoint>& rows);
void write_head_sweep_csv(const std::string& path, const std::vector<HeadPoint>& rows);

}  // namespace sgat

#endif  // SGAT_ANALYSIS_HPP
