#ifndef SGAT_DATA_HPP
#define SGAT_DATA_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgat/graph.hpp"

namespace sgat {

enum class SplitPolicy {
  fixed,            // read splits.txt
  random_60_20_20,  // per-class 60/20/20
  per_class_20      // 20 train per class, 500 val, 1000 test
};

std::string to_string(SplitPolicy p);
SplitPolicy split_policy_from_string(const std::string& s);

struct DatasetSpec {
  std::string name;
  std::string dir;  // holds edges.txt, features.txt, labels.txt [, splits.txt, meta.txt]
  SplitPolicy policy = SplitPolicy::fixed;
  bool symmetrize = true;      // meta.txt "directed=1" overrides to false
  bool row_normalize = true;   // rows scaled to sum 1 where nonzero
  uint64_t split_seed = 0;
};

struct LoadReport {
  int nodes = 0;
  int raw_edges = 0;        // lines in edges.txt
  int processed_edges = 0;  // directed CSR edges incl. self-loops
  int features = 0;
  int classes = 0;
  bool row_normalized = false;
  std::optional<double> homophily;  // set when every node is labeled
  ConstructionReport construction;
};

Graph load_dataset(const DatasetSpec& spec, LoadReport* report = nullptr);

// Writes edges.txt / features.txt / labels.txt / splits.txt / meta.txt so the
// graph reloads identically under SplitPolicy::fixed with symmetrize off.
void write_dataset(const Graph& g, const std::string& dir);

// Zachary's karate club: 34 nodes, 78 undirected friendships, two factions.
// Nodes 0 and 33 are the labeled training nodes, everything else is test;
// features are one-hot node identity.
Graph karate_club();

struct SynthConfig {
  int n_nodes = 300;
  int n_classes = 3;
  double homophily_target = 0.8;  // in [0,1]
  double mean_degree = 10.0;      // non-self, directed (symmetrized pairs count twice)
  double feature_noise = 1.0;
  double degree_skew = 0.0;  // lognormal sigma of per-node degree propensity
  uint64_t seed = 0;
  int feature_dim = 0;  // 0 -> n_classes
};

// Planted-partition graph whose measured homophily lands within 0.05 of the
// target, with class-conditioned Gaussian features and a stratified
// 60/20/20 split.
Graph synth_graph(const SynthConfig& cfg);

// --- dataset registry -------------------------------------------------------

struct RegistryEntry {
  std::string kind;  // "files", "karate", "synth"
  DatasetSpec spec;
  SynthConfig synth;
};

// Built-in names: karate, synth-assort, synth-dis, plus file-backed entries
// for the shipped data/ directory layout.
std::map<std::string, RegistryEntry> default_registry();

// Registry file: one entry per line, "name dir policy", '#' comments allowed.
void merge_registry_file(std::map<std::string, RegistryEntry>& reg,
                         const std::string& path);

Graph load_by_name(const std::map<std::string, RegistryEntry>& reg,
                   const std::string& name, uint64_t seed,
                   LoadReport* report = nullptr);

}  // namespace sgat

#endif  // SGAT_DATA_HPP
