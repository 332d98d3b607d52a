#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sgat/graph_ops.hpp"
#include "sgat/hard_concrete.hpp"
#include "sgat/model.hpp"
#include "sgat/train.hpp"
#include "testutil.hpp"

using namespace sgat;

namespace {

double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// gate value for one (log_alpha, u) pair, straight from the definition
double gate_of(double log_alpha, double u, const HardConcreteParams& p) {
  const double s =
      sigma((std::log(u) - std::log(1.0 - u) + log_alpha) / p.beta) * (p.zeta - p.gamma) +
      p.gamma;
  return std::min(1.0, std::max(0.0, s));
}

}  // namespace

TEST_CASE("sample_gates analytic points") {
  HardConcreteParams p;
  Tape tape;

  // log alpha = 0, u = 0.5: the noise logit vanishes, s = 0.5*1.2 - 0.1
  Tensor la0 = Tensor::scalar(0.0, true);
  Tensor z0 = sample_gates(tape, la0, {0.5}, p);
  CHECK(z0.item() == doctest::Approx(0.5).epsilon(1e-15));

  // saturation
  Tensor la_hi = Tensor::scalar(1e3, true);
  CHECK(sample_gates(tape, la_hi, {0.37}, p).item() == 1.0);

  CHECK_THROWS_AS(sample_gates(tape, la0, {0.0}, p), DomainError);
  CHECK_THROWS_AS(sample_gates(tape, la0, {1.0}, p), DomainError);
}

TEST_CASE("sample_gates mean matches quadrature oracle") {
  HardConcreteParams p;
  const double log_alpha = 1.0;
  // E[z] over u ~ U(0,1), by quadrature on the closed-form gate
  const double expected = testutil::simpson(
      [&](double u) { return gate_of(log_alpha, u, p); }, 1e-9, 1.0 - 1e-9, 20000);

  RngStream rng(123);
  Tape tape(false);
  Tensor la = Tensor::scalar(log_alpha);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    acc += sample_gates(tape, la, {rng.uniform_open()}, p).item();
  }
  CHECK(std::abs(acc / n - expected) < 1e-2);
}

TEST_CASE("l0_penalty analytic values") {
  HardConcreteParams p;
  Tape tape;

  // at the sigmoid midpoint the summand is exactly 1/2
  Tensor mid = Tensor::scalar(p.penalty_offset(), true);
  CHECK(l0_penalty(tape, mid, p).item() == doctest::Approx(0.5).epsilon(1e-12));

  // default constants, log alpha = 0
  const double direct = sigma(-(2.0 / 3.0) * std::log(0.1 / 1.1));
  Tensor zero = Tensor::scalar(0.0, true);
  CHECK(l0_penalty(tape, zero, p).item() == doctest::Approx(direct).epsilon(1e-12));
  CHECK(direct == doctest::Approx(0.8318).epsilon(1e-3));
}

TEST_CASE("l0_penalty equals Monte-Carlo nonzero fraction") {
  HardConcreteParams p;
  for (double log_alpha : {-2.0, 0.0, 2.0}) {
    RngStream rng(uint64_t(log_alpha * 7 + 100));
    int nonzero = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      if (gate_of(log_alpha, rng.uniform_open(), p) != 0.0) ++nonzero;
    }
    const double frac = double(nonzero) / n;
    CHECK(std::abs(frac - gate_open_probability(log_alpha, p)) < 1e-2);
  }
}

TEST_CASE("l0_penalty gradient matches finite differences tightly") {
  HardConcreteParams p;
  RngStream rng(5);
  Tensor la = randn(7, 1, 0.0, 1.5, rng);
  Tape tape;
  Tensor loss = l0_penalty(tape, la, p);
  tape.backward(loss);
  auto res = testutil::grad_check({la}, [&]() {
    Tape t(false);
    return l0_penalty(t, la, p).item();
  }, 1e-6);
  CHECK(res.max_err < 1e-6);
}

TEST_CASE("deterministic_mask analytic points") {
  HardConcreteParams p;
  CHECK(deterministic_gate(0.0, p) == doctest::Approx(0.5).epsilon(1e-15));
  // sigmoid(-3)*1.2 - 0.1 < 0 -> clipped to zero, edge removable
  CHECK(deterministic_gate(-2.0, p) == 0.0);
  CHECK(deterministic_gate(5.0, p) == 1.0);

  std::vector<double> la{-2.0, 0.0, 5.0};
  std::vector<double> m = deterministic_mask(la, p);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m[2] == 1.0);
}

TEST_CASE("gates are nondecreasing in log alpha") {
  HardConcreteParams p;
  for (double u : {0.05, 0.3, 0.5, 0.8, 0.97}) {
    double prev = -1.0;
    for (double la = -6.0; la <= 6.0; la += 0.05) {
      const double z = gate_of(la, u, p);
      CHECK(z >= prev);
      prev = z;
    }
  }
  double prev = -1.0;
  for (double la = -6.0; la <= 6.0; la += 0.05) {
    const double z = deterministic_gate(la, p);
    CHECK(z >= prev);
    prev = z;
  }
}

TEST_CASE("deterministic mask is stable across calls") {
  HardConcreteParams p;
  RngStream rng(9);
  std::vector<double> la(50);
  for (auto& v : la) v = rng.normal(-1.0, 1.5);
  std::vector<double> m1 = deterministic_mask(la, p);
  std::vector<double> m2 = deterministic_mask(la, p);
  CHECK(m1 == m2);
  // the removed set is exactly the zero-valued entries
  for (size_t i = 0; i < la.size(); ++i) {
    CHECK((m1[i] == 0.0) == (la[i] < p.beta * std::log(-p.gamma / p.zeta) ||
                             deterministic_gate(la[i], p) == 0.0));
  }
}

TEST_CASE("parameter validation") {
  HardConcreteParams bad;
  bad.gamma = 0.1;
  CHECK_THROWS_AS(bad.check(), ContractError);
  bad = HardConcreteParams{};
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.check(), ContractError);
  bad = HardConcreteParams{};
  bad.zeta = 0.9;
  CHECK_THROWS_AS(bad.check(), ContractError);
}

// The stochastic relaxation never undershoots the best binary mask: the
// minimum over all 2^E gate assignments of the regularized loss is bounded
// above by the expected loss under independent Bernoulli gates.
TEST_CASE("binary minimum bounded by Bernoulli expectation") {
  Graph g = testutil::random_test_graph(5, 0.35, 3, 2, 77);
  const int E = g.n_non_self_edges();
  REQUIRE(E <= 10);
  REQUIRE(E >= 3);

  RngStream rng(8);
  SgatConfig mc;
  mc.in_dim = 3;
  mc.hidden_dim = 4;
  mc.n_classes = 2;
  mc.heads = 1;
  mc.layers = 2;
  mc.gate_mode = GateMode::transductive;
  SgatModel model = make_sgat_model(mc, g, rng);
  for (auto& v : model.log_alpha.values()) v = rng.normal(0.0, 1.0);

  const double lambda = 0.05;
  // cross-entropy of the eval forward with an explicit binary gate vector
  auto loss_with_gates = [&](const std::vector<double>& z_ns) {
    Tape t(false);
    Tensor z = Tensor::from(E, 1, z_ns);
    Tensor gates = expand_gates_with_self_loops(t, g, z);
    Tensor att = edge_row_normalize(t, g, gates);
    Tensor h = feature_tensor(g);
    for (int l = 0; l < mc.layers; ++l) {
      Tensor p = matmul(t, h, model.weights[l][0]);
      Tensor agg = spmm_aggregate(t, g, att, p);
      h = l + 1 < mc.layers ? relu(t, agg) : agg;
    }
    return masked_cross_entropy(t, h, g.labels, g.train_mask).item();
  };

  double best = 1e300;
  for (int bits = 0; bits < (1 << E); ++bits) {
    std::vector<double> z(E);
    double l0 = 0.0;
    for (int e = 0; e < E; ++e) {
      z[e] = (bits >> e) & 1 ? 1.0 : 0.0;
      l0 += z[e];
    }
    best = std::min(best, loss_with_gates(z) + lambda * l0);
  }

  // Monte-Carlo expectation under z_e ~ Ber(pi_e), pi from the gate-open
  // probabilities; the penalty term is lambda * sum(pi) exactly.
  HardConcreteParams p;
  std::vector<double> pi(E);
  double pi_sum = 0.0;
  for (int e = 0; e < E; ++e) {
    pi[e] = gate_open_probability(model.log_alpha.values()[e], p);
    pi_sum += pi[e];
  }
  const int trials = 4000;
  double acc = 0.0, acc2 = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    std::vector<double> z(E);
    for (int e = 0; e < E; ++e) z[e] = rng.uniform() < pi[e] ? 1.0 : 0.0;
    const double v = loss_with_gates(z);
    acc += v;
    acc2 += v * v;
  }
  const double mc_mean = acc / trials + lambda * pi_sum;
  const double var = std::max(0.0, acc2 / trials - (acc / trials) * (acc / trials));
  const double mc_err = 3.0 * std::sqrt(var / trials);
  CHECK(best <= mc_mean + mc_err);
}
