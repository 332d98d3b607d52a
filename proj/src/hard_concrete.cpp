#include "sgat/hard_concrete.hpp"

#include <cmath>
#include <string>

namespace sgat {

namespace {

double sigmoid_stable(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

void HardConcreteParams::check() const {
  if (!(beta > 0.0)) throw ContractError("hard concrete: beta must be > 0");
  if (!(gamma < 0.0)) throw ContractError("hard concrete: gamma must be < 0");
  if (!(zeta > 1.0)) throw ContractError("hard concrete: zeta must be > 1");
}

double HardConcreteParams::penalty_offset() const {
  return beta * std::log(-gamma / zeta);
}

Tensor sample_gates(Tape& tape, const Tensor& log_alpha,
                    const std::vector<double>& u, const HardConcreteParams& p) {
  p.check();
  if (u.size() != log_alpha.size()) {
    throw DimensionError("sample_gates: " + std::to_string(u.size()) +
                         " noise draws for " + std::to_string(log_alpha.size()) +
                         " gates");
  }
  for (double v : u) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DomainError("sample_gates: u must lie strictly inside (0,1), got " +
                        std::to_string(v));
    }
  }
  // noise logits are constants on the tape
  Tensor noise = Tensor::zeros(log_alpha.rows(), log_alpha.cols());
  for (size_t i = 0; i < u.size(); ++i)
    noise.values()[i] = std::log(u[i]) - std::log(1.0 - u[i]);
  const double stretch = p.zeta - p.gamma;
  Tensor pre = affine(tape, add(tape, noise, log_alpha), 1.0 / p.beta, 0.0);
  Tensor s = affine(tape, sigmoid(tape, pre), stretch, p.gamma);
  return clamp01(tape, s);
}

Tensor l0_penalty(Tape& tape, const Tensor& log_alpha, const HardConcreteParams& p) {
  p.check();
  return sum(tape, sigmoid(tape, affine(tape, log_alpha, 1.0, -p.penalty_offset())));
}

double deterministic_gate(double log_alpha, const HardConcreteParams& p) {
  // written as *(1/beta) to stay bit-identical with the tape path
  const double s =
      sigmoid_stable(log_alpha * (1.0 / p.beta)) * (p.zeta - p.gamma) + p.gamma;
  return std::min(1.0, std::max(0.0, s));
}

std::vector<double> deterministic_mask(const std::vector<double>& log_alpha,
                                       const HardConcreteParams& p) {
  p.check();
  std::vector<double> out(log_alpha.size());
  for (size_t i = 0; i < log_alpha.size(); ++i)
    out[i] = deterministic_gate(log_alpha[i], p);
  return out;
}

double gate_open_probability(double log_alpha, const HardConcreteParams& p) {
  return sigmoid_stable(log_alpha - p.penalty_offset());
}

}  // namespace sgat
