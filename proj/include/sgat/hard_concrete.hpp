#ifndef SGAT_HARD_CONCRETE_HPP
#define SGAT_HARD_CONCRETE_HPP

#include <vector>

#include "sgat/tensor.hpp"

namespace sgat {

// Stretched-and-clipped binary concrete distribution constants.
struct HardConcreteParams {
  double beta = 2.0 / 3.0;   // temperature
  double gamma = -0.1;       // stretch lower bound, < 0
  double zeta = 1.1;         // stretch upper bound, > 1

  void check() const;
  // Offset beta*log(-gamma/zeta) used by the expected-L0 term.
  double penalty_offset() const;
};

// One relaxed binary gate per entry of log_alpha, driven by the uniform
// draws u (same shape, all strictly inside (0,1)):
//   s = sigmoid((log u - log(1-u) + log_alpha) / beta) * (zeta-gamma) + gamma
//   z = min(1, max(0, s))
// Differentiable in log_alpha wherever the clamp is inactive.
Tensor sample_gates(Tape& tape, const Tensor& log_alpha,
                    const std::vector<double>& u, const HardConcreteParams& p);

// Sum over entries of sigmoid(log_alpha - beta*log(-gamma/zeta)); each
// summand is the probability that the corresponding gate is nonzero.
Tensor l0_penalty(Tape& tape, const Tensor& log_alpha, const HardConcreteParams& p);

// Test-time gate: min(1, max(0, sigmoid(log_alpha/beta)*(zeta-gamma)+gamma)).
// Pure value computation, no tape.
std::vector<double> deterministic_mask(const std::vector<double>& log_alpha,
                                       const HardConcreteParams& p);
double deterministic_gate(double log_alpha, const HardConcreteParams& p);

// Probability that a sampled gate is nonzero (the penalty summand).
double gate_open_probability(double log_alpha, const HardConcreteParams& p);

}  // namespace sgat

#endif  // SGAT_HARD_CONCRETE_HPP
