#include "sgat/graph.hpp"

#include <algorithm>
#include <string>

namespace sgat {

void Graph::finalize() {
  const int m = n_edges();
  edge_src.assign(m, 0);
  self_loop_edge_id.assign(n_nodes, -1);
  non_self_edge_ids.clear();
  edge_to_non_self.assign(m, -1);
  for (int i = 0; i < n_nodes; ++i) {
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      edge_src[e] = i;
      if (col_idx[e] == i) {
        self_loop_edge_id[i] = e;
      } else {
        edge_to_non_self[e] = int(non_self_edge_ids.size());
        non_self_edge_ids.push_back(e);
      }
    }
  }
}

void Graph::validate() const {
  if (int(row_ptr.size()) != n_nodes + 1 || row_ptr[0] != 0 ||
      row_ptr[n_nodes] != n_edges()) {
    throw StructuralError("graph: corrupt CSR row_ptr");
  }
  for (int i = 0; i < n_nodes; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw StructuralError("graph: row_ptr not monotone");
    bool self = false;
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const int j = col_idx[e];
      if (j < 0 || j >= n_nodes) {
        throw StructuralError("graph: col_idx out of bounds at edge " + std::to_string(e));
      }
      if (e > row_ptr[i] && col_idx[e - 1] >= j) {
        throw StructuralError("graph: duplicate or unsorted neighbors in row " +
                              std::to_string(i));
      }
      if (j == i) self = true;
    }
    if (!self) throw StructuralError("graph: node " + std::to_string(i) + " has no self-loop");
    if (self_loop_edge_id[i] < 0 || col_idx[self_loop_edge_id[i]] != i ||
        edge_src[self_loop_edge_id[i]] != i) {
      throw StructuralError("graph: bad self_loop_edge_id for node " + std::to_string(i));
    }
  }
  const size_t n = size_t(n_nodes);
  if (!train_mask.empty() || !val_mask.empty() || !test_mask.empty()) {
    for (size_t i = 0; i < n; ++i) {
      int in = 0;
      if (!train_mask.empty() && train_mask[i]) ++in;
      if (!val_mask.empty() && val_mask[i]) ++in;
      if (!test_mask.empty() && test_mask[i]) ++in;
      if (in > 1) {
        throw StructuralError("graph: masks overlap at node " + std::to_string(i));
      }
    }
  }
}

Graph from_edge_list(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                     std::vector<double> features, int feature_dim,
                     std::vector<int> labels, std::vector<uint8_t> train_mask,
                     std::vector<uint8_t> val_mask, std::vector<uint8_t> test_mask,
                     ConstructionReport* report) {
  if (n_nodes <= 0) throw InputError("from_edge_list: n_nodes must be positive");
  ConstructionReport rep;
  rep.input_edges = int(edges.size());

  std::vector<std::vector<int>> adj(n_nodes);
  int line = 0;
  for (const auto& [s, d] : edges) {
    ++line;
    if (s < 0 || s >= n_nodes || d < 0 || d >= n_nodes) {
      throw InputError("edge " + std::to_string(line) + " (" + std::to_string(s) +
                       " -> " + std::to_string(d) + ") out of range for " +
                       std::to_string(n_nodes) + " nodes");
    }
    adj[s].push_back(d);
  }
  for (int i = 0; i < n_nodes; ++i) {
    auto& nb = adj[i];
    std::sort(nb.begin(), nb.end());
    const size_t before = nb.size();
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    rep.duplicates_removed += int(before - nb.size());
    if (!std::binary_search(nb.begin(), nb.end(), i)) {
      nb.insert(std::lower_bound(nb.begin(), nb.end(), i), i);
      ++rep.self_loops_added;
    }
  }

  Graph g;
  g.n_nodes = n_nodes;
  g.feature_dim = feature_dim;
  g.row_ptr.assign(n_nodes + 1, 0);
  for (int i = 0; i < n_nodes; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + int(adj[i].size());
  g.col_idx.reserve(g.row_ptr[n_nodes]);
  for (int i = 0; i < n_nodes; ++i)
    g.col_idx.insert(g.col_idx.end(), adj[i].begin(), adj[i].end());

  if (!features.empty() && int(features.size()) != n_nodes * feature_dim) {
    throw InputError("from_edge_list: feature buffer size " +
                     std::to_string(features.size()) + " != n_nodes*feature_dim");
  }
  g.features = std::move(features);
  if (labels.empty()) labels.assign(n_nodes, -1);
  if (int(labels.size()) != n_nodes) {
    throw InputError("from_edge_list: labels length != n_nodes");
  }
  g.labels = std::move(labels);
  auto fix_mask = [&](std::vector<uint8_t>& m) {
    if (m.empty()) m.assign(n_nodes, 0);
    if (int(m.size()) != n_nodes) throw InputError("from_edge_list: mask length != n_nodes");
  };
  fix_mask(train_mask);
  fix_mask(val_mask);
  fix_mask(test_mask);
  g.train_mask = std::move(train_mask);
  g.val_mask = std::move(val_mask);
  g.test_mask = std::move(test_mask);

  g.finalize();
  g.validate();
  if (report) *report = rep;
  return g;
}

void EdgeMask::check_against(const Graph& g) const {
  if (int(values.size()) != g.n_edges()) {
    throw DimensionError("edge mask length " + std::to_string(values.size()) +
                         " != n_edges " + std::to_string(g.n_edges()));
  }
  for (int e = 0; e < g.n_edges(); ++e) {
    const double v = values[e];
    if (v < 0.0 || v > 1.0) {
      throw ContractError("edge mask value outside [0,1] at edge " + std::to_string(e));
    }
    if (g.is_self_loop(e) && v != 1.0) {
      throw ContractError("edge mask must be 1 on self-loop edge " + std::to_string(e));
    }
  }
}

double homophily(const Graph& g, HomophilyReport* report) {
  for (int i = 0; i < g.n_nodes; ++i) {
    if (g.labels[i] < 0) {
      throw ContractError("homophily: node " + std::to_string(i) + " has unknown label");
    }
  }
  HomophilyReport rep;
  double acc = 0.0;
  for (int i = 0; i < g.n_nodes; ++i) {
    int neighbors = 0, same = 0;
    for (int e = g.row_begin(i); e < g.row_end(i); ++e) {
      const int j = g.col_idx[e];
      if (j == i) continue;
      ++neighbors;
      if (g.labels[j] == g.labels[i]) ++same;
    }
    if (neighbors == 0) {
      ++rep.isolated_nodes;
      acc += 1.0;
    } else {
      acc += double(same) / double(neighbors);
    }
  }
  rep.value = acc / double(g.n_nodes);
  if (report) *report = rep;
  return rep.value;
}

namespace {

SparsifiedGraph rebuild_keeping(const Graph& g, const std::vector<uint8_t>& keep_edge) {
  SparsifiedGraph out;
  Graph& h = out.graph;
  h.n_nodes = g.n_nodes;
  h.feature_dim = g.feature_dim;
  h.features = g.features;
  h.labels = g.labels;
  h.train_mask = g.train_mask;
  h.val_mask = g.val_mask;
  h.test_mask = g.test_mask;
  h.row_ptr.assign(g.n_nodes + 1, 0);
  int removed = 0;
  for (int i = 0; i < g.n_nodes; ++i) {
    h.row_ptr[i] = int(h.col_idx.size());
    for (int e = g.row_begin(i); e < g.row_end(i); ++e) {
      if (g.is_self_loop(e) || keep_edge[e]) {
        h.col_idx.push_back(g.col_idx[e]);
        out.orig_edge_id.push_back(e);
      } else {
        ++removed;
      }
    }
  }
  h.row_ptr[g.n_nodes] = int(h.col_idx.size());
  h.finalize();
  h.validate();
  out.removed_non_self_edges = removed;
  out.removed_fraction =
      g.n_non_self_edges() > 0 ? double(removed) / double(g.n_non_self_edges()) : 0.0;
  return out;
}

}  // namespace

SparsifiedGraph apply_mask_threshold(const Graph& g, const EdgeMask& mask) {
  if (int(mask.values.size()) != g.n_edges()) {
    throw DimensionError("apply_mask_threshold: mask length " +
                         std::to_string(mask.values.size()) + " != n_edges " +
                         std::to_string(g.n_edges()));
  }
  std::vector<uint8_t> keep(g.n_edges(), 0);
  for (int e = 0; e < g.n_edges(); ++e) keep[e] = mask.values[e] > 0.0;
  return rebuild_keeping(g, keep);
}

SparsifiedGraph keep_edges(const Graph& g, const std::vector<uint8_t>& keep_non_self) {
  if (int(keep_non_self.size()) != g.n_non_self_edges()) {
    throw DimensionError("keep_edges: keep length != non-self edge count");
  }
  std::vector<uint8_t> keep(g.n_edges(), 0);
  for (int k = 0; k < g.n_non_self_edges(); ++k)
    keep[g.non_self_edge_ids[k]] = keep_non_self[k];
  return rebuild_keeping(g, keep);
}

DegreeStats degree_stats(const Graph& g) {
  DegreeStats s;
  s.n_edges = g.n_edges();
  s.mean_non_self_degree = double(g.n_non_self_edges()) / double(g.n_nodes);
  return s;
}

}  // namespace sgat
