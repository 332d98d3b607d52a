#include "sgat/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sgat/rng.hpp"

namespace sgat {

namespace fs = std::filesystem;

std::string to_string(SplitPolicy p) {
  switch (p) {
    case SplitPolicy::fixed: return "fixed";
    case SplitPolicy::random_60_20_20: return "random-60-20-20";
    case SplitPolicy::per_class_20: return "per-class-20";
  }
  return "?";
}

SplitPolicy split_policy_from_string(const std::string& s) {
  if (s == "fixed") return SplitPolicy::fixed;
  if (s == "random-60-20-20") return SplitPolicy::random_60_20_20;
  if (s == "per-class-20") return SplitPolicy::per_class_20;
  throw InputError("unknown split policy '" + s +
                   "' (expected fixed | random-60-20-20 | per-class-20)");
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw InputError(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

bool skippable(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> read_edges(const std::string& path, int* raw_count) {
  auto in = open_or_fail(path);
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream ss(line);
    int s, d;
    if (!(ss >> s >> d)) parse_fail(path, lineno, "expected 'src dst'");
    std::string rest;
    if (ss >> rest) parse_fail(path, lineno, "trailing tokens after 'src dst'");
    edges.emplace_back(s, d);
  }
  if (raw_count) *raw_count = int(edges.size());
  return edges;
}

std::vector<int> read_labels(const std::string& path) {
  auto in = open_or_fail(path);
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream ss(line);
    int y;
    if (!(ss >> y)) parse_fail(path, lineno, "expected one integer label");
    if (y < -1) parse_fail(path, lineno, "label must be >= -1");
    labels.push_back(y);
  }
  return labels;
}

std::vector<double> read_features(const std::string& path, int* dim_out, int* rows_out) {
  auto in = open_or_fail(path);
  std::vector<double> values;
  std::string line;
  int lineno = 0, dim = -1, rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream ss(line);
    double v;
    int d = 0;
    while (ss >> v) {
      values.push_back(v);
      ++d;
    }
    if (!ss.eof()) parse_fail(path, lineno, "non-numeric feature value");
    if (d == 0) parse_fail(path, lineno, "empty feature row");
    if (dim < 0) dim = d;
    if (d != dim) {
      parse_fail(path, lineno, "feature row has " + std::to_string(d) +
                                   " values, expected " + std::to_string(dim));
    }
    ++rows;
  }
  *dim_out = std::max(dim, 0);
  *rows_out = rows;
  return values;
}

void read_splits(const std::string& path, int n_nodes, std::vector<uint8_t>& train,
                 std::vector<uint8_t>& val, std::vector<uint8_t>& test) {
  auto in = open_or_fail(path);
  train.assign(n_nodes, 0);
  val.assign(n_nodes, 0);
  test.assign(n_nodes, 0);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    std::vector<uint8_t>* target = nullptr;
    if (key == "train") target = &train;
    else if (key == "val") target = &val;
    else if (key == "test") target = &test;
    else parse_fail(path, lineno, "expected line to start with train|val|test");
    int id;
    while (ss >> id) {
      if (id < 0 || id >= n_nodes)
        parse_fail(path, lineno, "node id " + std::to_string(id) + " out of range");
      (*target)[id] = 1;
    }
    if (!ss.eof()) parse_fail(path, lineno, "non-integer node id");
  }
}

std::map<std::string, std::string> read_meta(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) return kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(path, lineno, "expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void row_normalize_features(std::vector<double>& feats, int n, int d) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += feats[size_t(i) * d + j];
    if (s != 0.0) {
      for (int j = 0; j < d; ++j) feats[size_t(i) * d + j] /= s;
    }
  }
}

// Stratified split over labeled nodes; fractions are per class.
void stratified_split(const std::vector<int>& labels, int n_classes, RngStream& rng,
                      double f_train, double f_val, std::vector<uint8_t>& train,
                      std::vector<uint8_t>& val, std::vector<uint8_t>& test) {
  const int n = int(labels.size());
  train.assign(n, 0);
  val.assign(n, 0);
  test.assign(n, 0);
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i)
      if (labels[i] == c) ids.push_back(i);
    std::shuffle(ids.begin(), ids.end(), rng.engine());
    const int n_train = int(std::round(f_train * ids.size()));
    const int n_val = int(std::round(f_val * ids.size()));
    for (size_t k = 0; k < ids.size(); ++k) {
      if (int(k) < n_train) train[ids[k]] = 1;
      else if (int(k) < n_train + n_val) val[ids[k]] = 1;
      else test[ids[k]] = 1;
    }
  }
}

// 20 labeled nodes per class for training, then 500 validation and 1000 test
// nodes drawn from the remaining labeled nodes.
void per_class_20_split(const std::vector<int>& labels, int n_classes, RngStream& rng,
                        std::vector<uint8_t>& train, std::vector<uint8_t>& val,
                        std::vector<uint8_t>& test) {
  const int n = int(labels.size());
  train.assign(n, 0);
  val.assign(n, 0);
  test.assign(n, 0);
  std::vector<int> rest;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i)
      if (labels[i] == c) ids.push_back(i);
    std::shuffle(ids.begin(), ids.end(), rng.engine());
    for (size_t k = 0; k < ids.size(); ++k) {
      if (k < 20) train[ids[k]] = 1;
      else rest.push_back(ids[k]);
    }
  }
  std::shuffle(rest.begin(), rest.end(), rng.engine());
  for (size_t k = 0; k < rest.size(); ++k) {
    if (k < 500) val[rest[k]] = 1;
    else if (k < 1500) test[rest[k]] = 1;
  }
}

}  // namespace

Graph load_dataset(const DatasetSpec& spec, LoadReport* report) {
  const fs::path dir(spec.dir);
  LoadReport rep;

  std::vector<int> labels = read_labels((dir / "labels.txt").string());
  const int n_nodes = int(labels.size());
  if (n_nodes == 0) throw InputError(spec.dir + ": labels.txt is empty");

  int feat_dim = 0, feat_rows = 0;
  std::vector<double> feats =
      read_features((dir / "features.txt").string(), &feat_dim, &feat_rows);
  if (feat_rows != n_nodes) {
    throw InputError(spec.dir + ": features.txt has " + std::to_string(feat_rows) +
                     " rows but labels.txt has " + std::to_string(n_nodes));
  }

  int n_classes = 0;
  for (int y : labels) n_classes = std::max(n_classes, y + 1);
  if (n_classes == 0) throw InputError(spec.dir + ": no labeled nodes");

  std::vector<std::pair<int, int>> edges =
      read_edges((dir / "edges.txt").string(), &rep.raw_edges);

  bool symmetrize = spec.symmetrize;
  auto meta = read_meta((dir / "meta.txt").string());
  if (auto it = meta.find("directed"); it != meta.end()) {
    symmetrize = it->second != "1" && it->second != "true";
  }
  if (symmetrize) {
    const size_t m = edges.size();
    edges.reserve(2 * m);
    for (size_t i = 0; i < m; ++i) edges.emplace_back(edges[i].second, edges[i].first);
  }

  if (spec.row_normalize) row_normalize_features(feats, n_nodes, feat_dim);

  std::vector<uint8_t> train, val, test;
  RngStream rng(spec.split_seed);
  switch (spec.policy) {
    case SplitPolicy::fixed:
      read_splits((dir / "splits.txt").string(), n_nodes, train, val, test);
      break;
    case SplitPolicy::random_60_20_20:
      stratified_split(labels, n_classes, rng, 0.6, 0.2, train, val, test);
      break;
    case SplitPolicy::per_class_20:
      per_class_20_split(labels, n_classes, rng, train, val, test);
      break;
  }

  Graph g = from_edge_list(n_nodes, edges, std::move(feats), feat_dim,
                           std::move(labels), std::move(train), std::move(val),
                           std::move(test), &rep.construction);
  rep.nodes = g.n_nodes;
  rep.processed_edges = g.n_edges();
  rep.features = feat_dim;
  rep.classes = n_classes;
  rep.row_normalized = spec.row_normalize;
  if (std::all_of(g.labels.begin(), g.labels.end(), [](int y) { return y >= 0; })) {
    rep.homophily = homophily(g);
  }
  if (report) *report = rep;
  return g;
}

void write_dataset(const Graph& g, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path p(dir);
  {
    std::ofstream out(p / "edges.txt");
    for (int e = 0; e < g.n_edges(); ++e) {
      if (g.is_self_loop(e)) continue;  // re-added on load
      out << g.edge_src[e] << " " << g.col_idx[e] << "\n";
    }
  }
  {
    std::ofstream out(p / "features.txt");
    out.precision(17);
    for (int i = 0; i < g.n_nodes; ++i) {
      for (int j = 0; j < g.feature_dim; ++j) {
        if (j) out << " ";
        out << g.features[size_t(i) * g.feature_dim + j];
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(p / "labels.txt");
    for (int y : g.labels) out << y << "\n";
  }
  {
    std::ofstream out(p / "splits.txt");
    auto write_mask = [&](const char* key, const std::vector<uint8_t>& m) {
      out << key;
      for (int i = 0; i < g.n_nodes; ++i)
        if (!m.empty() && m[i]) out << " " << i;
      out << "\n";
    };
    write_mask("train", g.train_mask);
    write_mask("val", g.val_mask);
    write_mask("test", g.test_mask);
  }
  {
    std::ofstream out(p / "meta.txt");
    out << "directed=1\n";
  }
}

Graph karate_club() {
  // 0-indexed friendship pairs of the 34-member club.
  static const int pairs[78][2] = {
      {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},
      {0, 8},   {0, 10},  {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},
      {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},  {1, 17},
      {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},
      {2, 13},  {2, 27},  {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},
      {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},  {6, 16},  {8, 30},
      {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32},
      {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32},
      {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33}, {24, 25},
      {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
      {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33},
      {32, 33}};
  // Faction each member joined after the split (0 = instructor's side,
  // 1 = administrator's side).
  static const int faction[34] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0,
                                  0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1,
                                  1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const int n = 34;
  std::vector<std::pair<int, int>> edges;
  edges.reserve(2 * 78);
  for (const auto& pr : pairs) {
    edges.emplace_back(pr[0], pr[1]);
    edges.emplace_back(pr[1], pr[0]);
  }
  std::vector<double> feats(size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) feats[size_t(i) * n + i] = 1.0;
  std::vector<int> labels(faction, faction + n);
  std::vector<uint8_t> train(n, 0), val(n, 0), test(n, 1);
  train[0] = train[33] = 1;
  test[0] = test[33] = 0;
  return from_edge_list(n, edges, std::move(feats), n, std::move(labels),
                        std::move(train), std::move(val), std::move(test));
}

namespace {

Graph synth_attempt(const SynthConfig& cfg, double effective_h, RngStream& rng) {
  const int n = cfg.n_nodes, C = cfg.n_classes;
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[i] = i % C;

  // Each undirected pair contributes one outgoing edge per endpoint, so the
  // expected pair count per node equals the directed mean degree, split into
  // same-class and cross-class mass according to the effective homophily.
  const double intra_deg = effective_h * cfg.mean_degree;
  const double inter_deg = (1.0 - effective_h) * cfg.mean_degree;
  const double class_size = double(n) / C;
  const double p_in = class_size > 1.0 ? std::min(1.0, intra_deg / (class_size - 1.0)) : 0.0;
  const double p_out = std::min(1.0, inter_deg / (double(n) - class_size));

  // degree-corrected variant: per-node propensities scale pair probabilities
  std::vector<double> prop(n, 1.0);
  if (cfg.degree_skew > 0.0) {
    double mean = 0.0;
    for (auto& w : prop) {
      w = std::exp(rng.normal(0.0, cfg.degree_skew));
      mean += w / n;
    }
    for (auto& w : prop) w /= mean;
  }

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p = label[i] == label[j] ? p_in : p_out;
      p = std::min(1.0, p * prop[i] * prop[j]);
      if (p > 0.0 && rng.uniform() < p) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }
  // keep every node connected so extreme targets stay exact
  std::vector<int> deg(n, 0);
  for (const auto& [s, d] : edges) ++deg[s];
  for (int i = 0; i < n; ++i) {
    if (deg[i] > 0) continue;
    const bool same = cfg.homophily_target >= 0.5;
    int j = i;
    for (int tries = 0; tries < 1000 && j == i; ++tries) {
      const int cand = rng.index(n);
      if (cand != i && (label[cand] == label[i]) == same) j = cand;
    }
    if (j == i) j = (i + 1) % n;  // degenerate class layout
    edges.emplace_back(i, j);
    edges.emplace_back(j, i);
  }

  const int d = cfg.feature_dim > 0 ? cfg.feature_dim : C;
  std::vector<double> feats(size_t(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      feats[size_t(i) * d + j] =
          (j == label[i] % d ? 1.0 : 0.0) + rng.normal(0.0, cfg.feature_noise);

  std::vector<uint8_t> train, val, test;
  stratified_split(label, C, rng, 0.6, 0.2, train, val, test);
  return from_edge_list(n, edges, std::move(feats), d, std::move(label),
                        std::move(train), std::move(val), std::move(test));
}

}  // namespace

Graph synth_graph(const SynthConfig& cfg) {
  if (cfg.homophily_target < 0.0 || cfg.homophily_target > 1.0) {
    throw InputError("synth_graph: homophily target must be in [0,1]");
  }
  if (cfg.n_classes < 2 || cfg.n_nodes < cfg.n_classes) {
    throw InputError("synth_graph: need >= 2 classes and n_nodes >= n_classes");
  }
  if (cfg.mean_degree <= 0.0 || cfg.mean_degree >= cfg.n_nodes) {
    throw InputError("synth_graph: infeasible mean degree");
  }
  RngStream rng(cfg.seed);
  double effective_h = cfg.homophily_target;
  Graph g;
  for (int attempt = 0; attempt < 30; ++attempt) {
    g = synth_attempt(cfg, effective_h, rng);
    const double h = homophily(g);
    if (std::abs(h - cfg.homophily_target) <= 0.05) return g;
    // nudge the planted mix toward the target and retry
    effective_h = std::clamp(effective_h + (cfg.homophily_target - h) * 0.7, 0.0, 1.0);
  }
  throw InputError("synth_graph: could not reach homophily target " +
                   std::to_string(cfg.homophily_target) +
                   " (degree/size combination infeasible)");
}

// --- registry ------------------------------------------------------------------

std::map<std::string, RegistryEntry> default_registry() {
  std::map<std::string, RegistryEntry> reg;
  {
    RegistryEntry e;
    e.kind = "karate";
    reg["karate"] = e;
  }
  auto add_files = [&](const std::string& name, SplitPolicy policy) {
    RegistryEntry e;
    e.kind = "files";
    e.spec.name = name;
    e.spec.dir = "data/" + name;
    e.spec.policy = policy;
    reg[name] = e;
  };
  add_files("cora", SplitPolicy::per_class_20);
  add_files("citeseer", SplitPolicy::per_class_20);
  add_files("pubmed", SplitPolicy::per_class_20);
  add_files("texas", SplitPolicy::random_60_20_20);
  add_files("cornell", SplitPolicy::random_60_20_20);
  add_files("wisconsin", SplitPolicy::random_60_20_20);
  {
    RegistryEntry e;
    e.kind = "synth";
    e.synth.n_nodes = 1000;
    e.synth.n_classes = 5;
    e.synth.homophily_target = 0.8;
    e.synth.mean_degree = 15.0;
    e.synth.feature_noise = 1.3;
    reg["synth-assort"] = e;
  }
  {
    RegistryEntry e;
    e.kind = "synth";
    e.synth.n_nodes = 400;
    e.synth.n_classes = 5;
    e.synth.homophily_target = 0.1;
    e.synth.mean_degree = 10.0;
    e.synth.feature_noise = 0.8;
    reg["synth-dis"] = e;
  }
  return reg;
}

void merge_registry_file(std::map<std::string, RegistryEntry>& reg,
                         const std::string& path) {
  auto in = open_or_fail(path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream ss(line);
    std::string name, dir, policy;
    if (!(ss >> name >> dir >> policy)) {
      parse_fail(path, lineno, "expected 'name dir policy'");
    }
    RegistryEntry e;
    e.kind = "files";
    e.spec.name = name;
    e.spec.dir = dir;
    e.spec.policy = split_policy_from_string(policy);
    reg[name] = e;
  }
}

Graph load_by_name(const std::map<std::string, RegistryEntry>& reg,
                   const std::string& name, uint64_t seed, LoadReport* report) {
  auto it = reg.find(name);
  if (it == reg.end()) {
    std::string known;
    for (const auto& [k, v] : reg) known += (known.empty() ? "" : ", ") + k;
    throw InputError("unknown dataset '" + name + "'; registered: " + known);
  }
  const RegistryEntry& e = it->second;
  if (e.kind == "karate") {
    Graph g = karate_club();
    if (report) {
      report->nodes = g.n_nodes;
      report->raw_edges = 156;
      report->processed_edges = g.n_edges();
      report->features = g.feature_dim;
      report->classes = 2;
      report->homophily = homophily(g);
    }
    return g;
  }
  if (e.kind == "synth") {
    SynthConfig sc = e.synth;
    sc.seed = seed;
    Graph g = synth_graph(sc);
    if (report) {
      report->nodes = g.n_nodes;
      report->processed_edges = g.n_edges();
      report->features = g.feature_dim;
      report->classes = sc.n_classes;
      report->homophily = homophily(g);
    }
    return g;
  }
  DatasetSpec spec = e.spec;
  spec.split_seed = seed;
  return load_dataset(spec, report);
}

}  // namespace sgat
