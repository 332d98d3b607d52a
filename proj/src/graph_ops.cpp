#include "sgat/graph_ops.hpp"

#include <cmath>
#include <string>

namespace sgat {

namespace {

void check_edge_column(const char* op, const Graph& g, const Tensor& t) {
  if (t.rows() != g.n_edges() || t.cols() != 1) {
    throw DimensionError(std::string(op) + ": expected " +
                         std::to_string(g.n_edges()) + "x1 edge column, got " +
                         std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
}

Tensor make_output(Tape& tape, int rows, int cols) {
  Tensor t = Tensor::zeros(rows, cols);
  if (tape.recording()) t.node()->leaf = false;
  return t;
}

}  // namespace

Tensor spmm_aggregate(Tape& tape, const Graph& g, Tensor edge_weights,
                      Tensor h) {
  check_edge_column("spmm_aggregate", g, edge_weights);
  if (h.rows() != g.n_nodes) {
    throw DimensionError("spmm_aggregate: h has " + std::to_string(h.rows()) +
                         " rows for " + std::to_string(g.n_nodes) + " nodes");
  }
  const int d = h.cols();
  Tensor out = make_output(tape, g.n_nodes, d);
  for (int i = 0; i < g.n_nodes; ++i) {
    double* orow = out.values().data() + size_t(i) * d;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e) {
      const int j = g.col_idx[e];
      if (j < 0 || j >= g.n_nodes) {
        throw StructuralError("spmm_aggregate: corrupt CSR at edge " + std::to_string(e));
      }
      const double w = edge_weights.values()[e];
      if (w == 0.0) continue;
      const double* hrow = h.values().data() + size_t(j) * d;
      for (int c = 0; c < d; ++c) orow[c] += w * hrow[c];
    }
  }
  tape.record(out, [&g, edge_weights, h, out, d]() mutable {
    auto& gw = edge_weights.grad();
    auto& gh = h.grad();
    const auto& go = out.grad();
    for (int i = 0; i < g.n_nodes; ++i) {
      const double* gorow = go.data() + size_t(i) * d;
      for (int e = g.row_begin(i); e < g.row_end(i); ++e) {
        const int j = g.col_idx[e];
        const double* hrow = h.values().data() + size_t(j) * d;
        double* ghrow = gh.data() + size_t(j) * d;
        const double w = edge_weights.values()[e];
        double acc = 0.0;
        for (int c = 0; c < d; ++c) {
          acc += gorow[c] * hrow[c];
          ghrow[c] += w * gorow[c];
        }
        gw[e] += acc;
      }
    }
  });
  return out;
}

Tensor edge_row_normalize(Tape& tape, const Graph& g, Tensor gates) {
  check_edge_column("edge_row_normalize", g, gates);
  Tensor out = make_output(tape, g.n_edges(), 1);
  auto row_sums = std::make_shared<std::vector<double>>(g.n_nodes, 0.0);
  for (int i = 0; i < g.n_nodes; ++i) {
    double s = 0.0;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e) s += gates.values()[e];
    if (!(s > 0.0)) {
      throw ContractError("edge_row_normalize: non-positive row sum at node " +
                          std::to_string(i) + " (self-loop gate must be 1)");
    }
    (*row_sums)[i] = s;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e)
      out.values()[e] = gates.values()[e] / s;
  }
  tape.record(out, [&g, gates, out, row_sums]() mutable {
    auto& gz = gates.grad();
    const auto& go = out.grad();
    for (int i = 0; i < g.n_nodes; ++i) {
      const double s = (*row_sums)[i];
      double dot = 0.0;
      for (int e = g.row_begin(i); e < g.row_end(i); ++e)
        dot += go[e] * out.values()[e];
      for (int e = g.row_begin(i); e < g.row_end(i); ++e)
        gz[e] += (go[e] - dot) / s;
    }
  });
  return out;
}

Tensor edge_row_softmax(Tape& tape, const Graph& g, Tensor scores,
                        const std::vector<uint8_t>& keep) {
  check_edge_column("edge_row_softmax", g, scores);
  if (!keep.empty() && int(keep.size()) != g.n_edges()) {
    throw DimensionError("edge_row_softmax: keep length != n_edges");
  }
  auto kept = [&](int e) { return keep.empty() || keep[e]; };
  Tensor out = make_output(tape, g.n_edges(), 1);
  for (int i = 0; i < g.n_nodes; ++i) {
    double mx = -1e300;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e)
      if (kept(e)) mx = std::max(mx, scores.values()[e]);
    if (mx == -1e300) {
      throw ContractError("edge_row_softmax: node " + std::to_string(i) +
                          " has no kept edges");
    }
    double z = 0.0;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e)
      if (kept(e)) z += std::exp(scores.values()[e] - mx);
    for (int e = g.row_begin(i); e < g.row_end(i); ++e)
      out.values()[e] = kept(e) ? std::exp(scores.values()[e] - mx) / z : 0.0;
  }
  tape.record(out, [&g, scores, out, keep]() mutable {
    auto kept2 = [&](int e) { return keep.empty() || keep[e]; };
    auto& gs = scores.grad();
    const auto& go = out.grad();
    for (int i = 0; i < g.n_nodes; ++i) {
      double dot = 0.0;
      for (int e = g.row_begin(i); e < g.row_end(i); ++e)
        if (kept2(e)) dot += go[e] * out.values()[e];
      for (int e = g.row_begin(i); e < g.row_end(i); ++e)
        if (kept2(e)) gs[e] += out.values()[e] * (go[e] - dot);
    }
  });
  return out;
}

Tensor gather_node_to_edges(Tape& tape, const Graph& g, Tensor x, EdgeEnd end) {
  if (x.rows() != g.n_nodes || x.cols() != 1) {
    throw DimensionError("gather_node_to_edges: expected " +
                         std::to_string(g.n_nodes) + "x1 node column");
  }
  Tensor out = make_output(tape, g.n_edges(), 1);
  const bool src = end == EdgeEnd::source;
  for (int e = 0; e < g.n_edges(); ++e)
    out.values()[e] = x.values()[src ? g.edge_src[e] : g.col_idx[e]];
  tape.record(out, [&g, x, out, src]() mutable {
    auto& gx = x.grad();
    const auto& go = out.grad();
    for (int e = 0; e < g.n_edges(); ++e)
      gx[src ? g.edge_src[e] : g.col_idx[e]] += go[e];
  });
  return out;
}

Tensor expand_gates_with_self_loops(Tape& tape, const Graph& g, Tensor z_non_self) {
  if (z_non_self.rows() != g.n_non_self_edges() || z_non_self.cols() != 1) {
    throw DimensionError("expand_gates_with_self_loops: expected " +
                         std::to_string(g.n_non_self_edges()) + "x1, got " +
                         std::to_string(z_non_self.rows()) + "x" +
                         std::to_string(z_non_self.cols()));
  }
  Tensor out = make_output(tape, g.n_edges(), 1);
  for (int e = 0; e < g.n_edges(); ++e) {
    const int k = g.edge_to_non_self[e];
    out.values()[e] = k < 0 ? 1.0 : z_non_self.values()[k];
  }
  tape.record(out, [&g, z_non_self, out]() mutable {
    auto& gz = z_non_self.grad();
    const auto& go = out.grad();
    for (int e = 0; e < g.n_edges(); ++e) {
      const int k = g.edge_to_non_self[e];
      if (k >= 0) gz[k] += go[e];
    }
  });
  return out;
}

}  // namespace sgat
