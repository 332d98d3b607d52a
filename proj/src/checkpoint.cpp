#include "sgat/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace sgat {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"values", t.values()}};
}

Tensor tensor_from_json(const json& j, bool requires_grad) {
  return Tensor::from(j.at("rows").get<int>(), j.at("cols").get<int>(),
                      j.at("values").get<std::vector<double>>(), requires_grad);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const SgatModel& m = ckpt.model;
  json j;
  j["format"] = "sgat-checkpoint";
  j["version"] = 1;
  j["dataset"] = ckpt.dataset;
  j["config"] = {
      {"lambda", ckpt.config.lambda},
      {"lr", ckpt.config.lr},
      {"epochs", ckpt.config.epochs},
      {"l2", ckpt.config.l2},
      {"dropout_input", ckpt.config.dropout_input},
      {"dropout_attn", ckpt.config.dropout_attn},
      {"seed", ckpt.config.seed},
      {"heads", ckpt.config.heads},
      {"layers", ckpt.config.layers},
      {"hidden", ckpt.config.hidden},
      {"patience", ckpt.config.patience},
      {"gate_mode",
       ckpt.config.gate_mode == GateMode::transductive ? "transductive" : "inductive"},
  };
  j["model"] = {
      {"in_dim", m.cfg.in_dim},
      {"hidden_dim", m.cfg.hidden_dim},
      {"n_classes", m.cfg.n_classes},
      {"heads", m.cfg.heads},
      {"layers", m.cfg.layers},
      {"gate_mode",
       m.cfg.gate_mode == GateMode::transductive ? "transductive" : "inductive"},
      {"hc", {{"beta", m.cfg.hc.beta}, {"gamma", m.cfg.hc.gamma}, {"zeta", m.cfg.hc.zeta}}},
      {"n_gates", m.n_gates},
  };
  json weights = json::array();
  for (const auto& layer : m.weights) {
    json lw = json::array();
    for (const auto& w : layer) lw.push_back(tensor_to_json(w));
    weights.push_back(lw);
  }
  j["weights"] = weights;
  if (m.cfg.gate_mode == GateMode::transductive) {
    j["log_alpha"] = tensor_to_json(m.log_alpha);
  } else {
    j["gen_b"] = tensor_to_json(m.gen_b);
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint to " + path);
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InputError("checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "sgat-checkpoint") {
    throw InputError("checkpoint " + path + ": not an sgat checkpoint file");
  }
  if (j.value("version", -1) != 1) {
    throw InputError("checkpoint " + path + ": unsupported version");
  }
  Checkpoint ckpt;
  ckpt.dataset = j.value("dataset", "");
  const json& c = j.at("config");
  ckpt.config.lambda = c.at("lambda").get<double>();
  ckpt.config.lr = c.at("lr").get<double>();
  ckpt.config.epochs = c.at("epochs").get<int>();
  ckpt.config.l2 = c.at("l2").get<double>();
  ckpt.config.dropout_input = c.at("dropout_input").get<double>();
  ckpt.config.dropout_attn = c.at("dropout_attn").get<double>();
  ckpt.config.seed = c.at("seed").get<uint64_t>();
  ckpt.config.heads = c.at("heads").get<int>();
  ckpt.config.layers = c.at("layers").get<int>();
  ckpt.config.hidden = c.at("hidden").get<int>();
  ckpt.config.patience = c.at("patience").get<int>();
  ckpt.config.gate_mode = c.at("gate_mode").get<std::string>() == "transductive"
                              ? GateMode::transductive
                              : GateMode::inductive;

  const json& mj = j.at("model");
  SgatModel& m = ckpt.model;
  m.cfg.in_dim = mj.at("in_dim").get<int>();
  m.cfg.hidden_dim = mj.at("hidden_dim").get<int>();
  m.cfg.n_classes = mj.at("n_classes").get<int>();
  m.cfg.heads = mj.at("heads").get<int>();
  m.cfg.layers = mj.at("layers").get<int>();
  m.cfg.gate_mode = mj.at("gate_mode").get<std::string>() == "transductive"
                        ? GateMode::transductive
                        : GateMode::inductive;
  m.cfg.hc.beta = mj.at("hc").at("beta").get<double>();
  m.cfg.hc.gamma = mj.at("hc").at("gamma").get<double>();
  m.cfg.hc.zeta = mj.at("hc").at("zeta").get<double>();
  m.n_gates = mj.at("n_gates").get<int>();

  for (const auto& lw : j.at("weights")) {
    std::vector<Tensor> layer;
    for (const auto& w : lw) layer.push_back(tensor_from_json(w, true));
    m.weights.push_back(std::move(layer));
  }
  if (int(m.weights.size()) != m.cfg.layers) {
    throw StructuralError("checkpoint " + path + ": layer count mismatch");
  }
  if (m.cfg.gate_mode == GateMode::transductive) {
    m.log_alpha = tensor_from_json(j.at("log_alpha"), true);
    if (m.log_alpha.rows() != m.n_gates) {
      throw StructuralError("checkpoint " + path + ": log_alpha size mismatch");
    }
  } else {
    m.gen_b = tensor_from_json(j.at("gen_b"), true);
  }
  return ckpt;
}

}  // namespace sgat
