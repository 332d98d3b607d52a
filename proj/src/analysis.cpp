#include "sgat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sgat/rng.hpp"

namespace sgat {

std::string to_string(RemovalStrategy s) {
  switch (s) {
    case RemovalStrategy::top_desc: return "top-desc";
    case RemovalStrategy::bottom_desc: return "bottom-desc";
    case RemovalStrategy::random_k: return "random";
  }
  return "?";
}

RemovalStrategy removal_strategy_from_string(const std::string& s) {
  if (s == "top-desc") return RemovalStrategy::top_desc;
  if (s == "bottom-desc") return RemovalStrategy::bottom_desc;
  if (s == "random") return RemovalStrategy::random_k;
  throw InputError("unknown removal strategy '" + s +
                   "' (expected top-desc | bottom-desc | random)");
}

std::vector<double> edge_log_alphas(const SgatModel& model, const Graph& g) {
  if (model.cfg.gate_mode == GateMode::transductive) {
    if (model.n_gates != g.n_non_self_edges()) {
      throw StructuralError("edge_log_alphas: model gate count " +
                            std::to_string(model.n_gates) + " != graph non-self edges " +
                            std::to_string(g.n_non_self_edges()));
    }
    return model.log_alpha.values();
  }
  Tape tape(false);
  return gate_logits(tape, model, g, feature_tensor(g)).values();
}

namespace {

// Non-self edge positions to drop, by strategy. Ties break by edge id.
std::vector<int> removal_order(const std::vector<double>& scores,
                               RemovalStrategy strategy, uint64_t seed) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  switch (strategy) {
    case RemovalStrategy::top_desc:
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return scores[a] > scores[b]; });
      break;
    case RemovalStrategy::bottom_desc:
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return scores[a] < scores[b]; });
      break;
    case RemovalStrategy::random_k: {
      RngStream rng(seed);
      std::shuffle(order.begin(), order.end(), rng.engine());
      break;
    }
  }
  return order;
}

// Model view usable on a pruned graph: transductive gate logits are carried
// over to the surviving edges, inductive models regenerate them.
SgatModel remap_to(const SgatModel& model, const Graph& orig,
                   const SparsifiedGraph& pruned) {
  SgatModel m = model;
  if (model.cfg.gate_mode == GateMode::transductive) {
    const Graph& h = pruned.graph;
    std::vector<double> vals(h.n_non_self_edges());
    for (int k = 0; k < h.n_non_self_edges(); ++k) {
      const int orig_edge = pruned.orig_edge_id[h.non_self_edge_ids[k]];
      vals[k] = model.log_alpha.values()[orig.edge_to_non_self[orig_edge]];
    }
    const int n_vals = int(vals.size());
    m.log_alpha = Tensor::from(n_vals, 1, std::move(vals), true);
    m.n_gates = h.n_non_self_edges();
  }
  return m;
}

}  // namespace

std::vector<RemovalPoint> removal_strategy_curve(
    const SgatModel& model, const Graph& g, RemovalStrategy strategy,
    const std::vector<double>& fractions, bool retrain, const TrainConfig& cfg,
    uint64_t seed) {
  for (double f : fractions) {
    if (f < 0.0 || f >= 1.0) {
      throw InputError("removal fraction must be in [0,1), got " + std::to_string(f));
    }
  }
  const std::vector<double> scores = edge_log_alphas(model, g);
  const std::vector<int> order = removal_order(scores, strategy, seed);

  std::vector<RemovalPoint> out;
  for (double f : fractions) {
    const int n_remove = int(f * g.n_non_self_edges());
    std::vector<uint8_t> keep(g.n_non_self_edges(), 1);
    for (int i = 0; i < n_remove; ++i) keep[order[i]] = 0;
    SparsifiedGraph pruned = keep_edges(g, keep);

    RemovalPoint pt;
    pt.fraction = f;
    pt.edges_removed = n_remove;
    if (retrain) {
      TrainConfig rc = cfg;
      rc.seed = seed;
      pt.accuracy = train_sgat(pruned.graph, rc).test_acc;
    } else {
      SgatModel view = remap_to(model, g, pruned);
      pt.accuracy = evaluate(view, pruned.graph, pruned.graph.test_mask);
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<double> attention_variances(const GatModel& model, const Graph& g) {
  Tape tape(false);
  RngStream rng(0);
  GatForwardResult res =
      gat_forward(tape, model, g, feature_tensor(g), ForwardOptions{}, rng);
  const int sets = model.layers * model.heads;
  std::vector<double> var(g.n_edges(), 0.0);
  for (int e = 0; e < g.n_edges(); ++e) {
    double s = 0.0, s2 = 0.0;
    for (int l = 0; l < model.layers; ++l)
      for (int k = 0; k < model.heads; ++k) {
        const double a = res.attention[l][k].values()[e];
        s += a;
        s2 += a * a;
      }
    const double m = s / sets;
    var[e] = std::max(0.0, s2 / sets - m * m);
  }
  return var;
}

std::vector<HistogramBin> attention_variance_histogram(const GatModel& model,
                                                       const Graph& g,
                                                       double bin_width) {
  if (!(bin_width > 0.0)) throw InputError("histogram bin width must be > 0");
  const std::vector<double> var = attention_variances(model, g);
  const double mx = *std::max_element(var.begin(), var.end());
  const int n_bins = std::max(1, int(mx / bin_width) + 1);
  std::vector<HistogramBin> bins(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    bins[b].lo = b * bin_width;
    bins[b].hi = (b + 1) * bin_width;
  }
  for (double v : var) {
    int b = std::min(n_bins - 1, int(v / bin_width));
    ++bins[b].count;
  }
  return bins;
}

std::vector<LambdaPoint> lambda_sweep(const Graph& g, const std::vector<double>& grid,
                                      const TrainConfig& base) {
  if (grid.empty()) throw InputError("lambda sweep: empty grid");
  std::vector<LambdaPoint> out;
  for (double lam : grid) {
    TrainConfig cfg = base;
    cfg.lambda = lam;
    TrainResult r = train_sgat(g, cfg);
    out.push_back({lam, r.test_acc, 100.0 * r.removed_fraction});
  }
  return out;
}

std::vector<HeadPoint> head_sweep(const Graph& g, const std::vector<int>& grid,
                                  const TrainConfig& base) {
  if (grid.empty()) throw InputError("head sweep: empty grid");
  std::vector<HeadPoint> out;
  for (int k : grid) {
    TrainConfig cfg = base;
    cfg.heads = k;
    TrainResult r = train_sgat(g, cfg);
    out.push_back({k, r.test_acc, 100.0 * r.removed_fraction});
  }
  return out;
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out.precision(10);
  return out;
}

}  // namespace

void write_removal_curve_csv(
    const std::string& path,
    const std::vector<std::pair<RemovalStrategy, std::vector<RemovalPoint>>>& curves) {
  auto out = open_csv(path);
  out << "strategy,fraction,edges_removed,accuracy\n";
  for (const auto& [strategy, points] : curves)
    for (const auto& p : points)
      out << to_string(strategy) << "," << p.fraction << "," << p.edges_removed
          << "," << p.accuracy << "\n";
}

void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins) {
  auto out = open_csv(path);
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins) out << b.lo << "," << b.hi << "," << b.count << "\n";
}

void write_lambda_sweep_csv(const std::string& path, const std::vector<LambdaPoint>& rows) {
  auto out = open_csv(path);
  out << "lambda,accuracy,removed_pct\n";
  for (const auto& r : rows)
    out << r.lambda << "," << r.accuracy << "," << r.removed_pct << "\n";
}

void write_head_sweep_csv(const std::string& path, const std::vector<HeadPoint>& rows) {
  auto out = open_csv(path);
  out << "heads,accuracy,removed_pct\n";
  for (const auto& r : rows)
    out << r.heads << "," << r.accuracy << "," << r.removed_pct << "\n";
}

}  // namespace sgat
