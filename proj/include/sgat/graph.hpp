#ifndef SGAT_GRAPH_HPP
#define SGAT_GRAPH_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "sgat/error.hpp"

namespace sgat {

// Directed graph in CSR form. Every node carries exactly one self-loop edge;
// an edge (i,j) and its reverse (j,i) are distinct entries with their own
// edge ids. Immutable after construction.
struct Graph {
  int n_nodes = 0;
  int feature_dim = 0;
  std::vector<int> row_ptr;            // len n_nodes+1
  std::vector<int> col_idx;            // len n_edges, sorted within each row
  std::vector<int> edge_src;           // source node of each edge
  std::vector<int> self_loop_edge_id;  // per node, index into col_idx
  std::vector<double> features;        // n_nodes * feature_dim, row-major
  std::vector<int> labels;             // -1 = unlabeled
  std::vector<uint8_t> train_mask, val_mask, test_mask;

  // derived at construction
  std::vector<int> non_self_edge_ids;  // ascending edge ids
  std::vector<int> edge_to_non_self;   // -1 for self-loops

  int n_edges() const { return int(col_idx.size()); }
  int n_non_self_edges() const { return int(non_self_edge_ids.size()); }
  bool is_self_loop(int e) const { return edge_to_non_self[e] < 0; }

  int row_begin(int i) const { return row_ptr[i]; }
  int row_end(int i) const { return row_ptr[i + 1]; }

  void validate() const;
  void finalize();  // fills edge_src, self_loop_edge_id, non-self maps
};

struct ConstructionReport {
  int input_edges = 0;
  int duplicates_removed = 0;
  int self_loops_added = 0;
};

Graph from_edge_list(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                     std::vector<double> features, int feature_dim,
                     std::vector<int> labels,
                     std::vector<uint8_t> train_mask = {},
                     std::vector<uint8_t> val_mask = {},
                     std::vector<uint8_t> test_mask = {},
                     ConstructionReport* report = nullptr);

// Per-edge gate values in [0,1]; self-loop entries are pinned to 1.
struct EdgeMask {
  std::vector<double> values;

  void check_against(const Graph& g) const;
};

struct HomophilyReport {
  double value = 0.0;
  int isolated_nodes = 0;  // nodes whose only edge is the self-loop
};

// Mean over nodes of the fraction of non-self neighbors sharing the node's
// label. Isolated nodes contribute 1.0 and are counted in the report.
// Requires every label to be known.
double homophily(const Graph& g, HomophilyReport* report = nullptr);

struct SparsifiedGraph {
  Graph graph;
  std::vector<int> orig_edge_id;  // per new edge, the edge id in the source graph
  int removed_non_self_edges = 0;
  double removed_fraction = 0.0;  // over non-self edges
};

// New graph keeping self-loops plus edges with mask value > 0.
SparsifiedGraph apply_mask_threshold(const Graph& g, const EdgeMask& mask);

// New graph keeping self-loops plus the non-self edges listed in `keep`
// (original edge ids).
SparsifiedGraph keep_edges(const Graph& g, const std::vector<uint8_t>& keep_non_self);

struct DegreeStats {
  double mean_non_self_degree = 0.0;
  int n_edges = 0;  // including self-loops
};

DegreeStats degree_stats(const Graph& g);

}  // namespace sgat

#endif  // SGAT_GRAPH_HPP
