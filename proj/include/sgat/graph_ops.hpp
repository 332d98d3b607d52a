#ifndef SGAT_GRAPH_OPS_HPP
#define SGAT_GRAPH_OPS_HPP

#include "sgat/graph.hpp"
#include "sgat/tensor.hpp"

namespace sgat {

// Weighted neighbor aggregation: out[i] = sum over edges e=(i->j) of
// edge_weights[e] * h[j]. Differentiable in both edge_weights and h.
Tensor spmm_aggregate(Tape& tape, const Graph& g, Tensor edge_weights,
                      Tensor h);

// Row-wise normalization of per-edge gate values (E x 1): each edge weight is
// divided by the sum over its source node's outgoing edges. The self-loop
// gate pinned at 1 keeps every denominator >= 1.
Tensor edge_row_normalize(Tape& tape, const Graph& g, Tensor gates);

// Softmax over each source node's outgoing edges (E x 1 scores). Edges with
// keep[e] == 0 get coefficient 0 and are excluded from the normalization;
// pass an empty keep vector to use all edges.
Tensor edge_row_softmax(Tape& tape, const Graph& g, Tensor scores,
                        const std::vector<uint8_t>& keep = {});

enum class EdgeEnd { source, target };

// Per-edge copy of a per-node scalar column (n x 1 -> E x 1).
Tensor gather_node_to_edges(Tape& tape, const Graph& g, Tensor x, EdgeEnd end);

// Expand per-non-self-edge values (E_ns x 1) to a full per-edge column
// (E x 1) with self-loop entries fixed at 1 (no gradient through them).
Tensor expand_gates_with_self_loops(Tape& tape, const Graph& g, Tensor z_non_self);

}  // namespace sgat

#endif  // SGAT_GRAPH_OPS_HPP
