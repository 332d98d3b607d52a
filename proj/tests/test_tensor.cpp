#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sgat/graph_ops.hpp"
#include "sgat/tensor.hpp"
#include "testutil.hpp"

using namespace sgat;

TEST_CASE("matmul identity and 1x1") {
  Tape tape;
  Tensor I = Tensor::from(2, 2, {1, 0, 0, 1});
  Tensor B = Tensor::from(2, 2, {3, 4, 5, 6});
  Tensor C = matmul(tape, I, B);
  CHECK(C.values() == std::vector<double>{3, 4, 5, 6});

  Tensor a = Tensor::from(1, 2, {1, 2});
  Tensor b = Tensor::from(2, 1, {3, 4});
  CHECK(matmul(tape, a, b).item() == doctest::Approx(11.0).epsilon(1e-15));

  CHECK_THROWS_AS(matmul(tape, a, a), DimensionError);
}

TEST_CASE("matmul gradient matches finite differences") {
  RngStream rng(7);
  Tensor A = randn(3, 4, 0.0, 1.0, rng);
  Tensor B = randn(4, 2, 0.0, 1.0, rng);
  auto loss_fn = [&]() {
    Tape t(false);
    return sum(t, sigmoid(t, matmul(t, A, B))).item();
  };
  Tape tape;
  Tensor loss = sum(tape, sigmoid(tape, matmul(tape, A, B)));
  tape.backward(loss);
  auto res = testutil::grad_check({A, B}, loss_fn, 1e-5);
  CHECK(res.coords == 20);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("elementwise op suite gradients, 100 seeds") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed);
    Tensor a = randn(3, 4, 0.0, 1.0, rng);
    Tensor b = randn(3, 4, 0.0, 1.0, rng);
    // keep relu/leaky kink inputs away from 0 so the difference quotient is valid
    for (auto& v : a.values())
      if (std::abs(v) < 0.05) v += v >= 0 ? 0.1 : -0.1;
    auto forward = [&](Tape& t) {
      Tensor s1 = mul(t, sigmoid(t, a), relu(t, b));
      Tensor s2 = exp(t, scale(t, a, 0.3));
      Tensor s3 = log(t, affine(t, sigmoid(t, b), 0.9, 0.05));
      Tensor s4 = row_softmax(t, concat_cols(t, a, b));
      Tensor s5 = leaky_relu(t, a, 0.2);
      Tensor acc = add(t, sum(t, s1), mean(t, s2));
      acc = add(t, acc, sum(t, s3));
      acc = add(t, acc, sum(t, mul(t, s4, s4)));
      acc = add(t, acc, sum(t, s5));
      return sub(t, acc, sum(t, mul(t, a, b)));
    };
    Tape tape;
    Tensor loss = forward(tape);
    tape.backward(loss);
    auto loss_fn = [&]() {
      Tape t(false);
      return forward(t).item();
    };
    auto res = testutil::grad_check({a, b}, loss_fn, 1e-5);
    CHECK_MESSAGE(res.max_err < 1e-4, "seed ", seed, " err ", res.max_err);
  }
}

TEST_CASE("elementwise basics") {
  Tape tape;
  CHECK(sigmoid(tape, Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));

  Tensor sm = row_softmax(tape, Tensor::from(1, 2, {0, 0}));
  CHECK(sm.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sm.values()[1] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(log(tape, Tensor::scalar(0.0)), DomainError);
  CHECK_THROWS_AS(log(tape, Tensor::scalar(-1.0)), DomainError);
}

TEST_CASE("row_softmax rows sum to 1") {
  RngStream rng(3);
  Tensor x = randn(17, 9, 0.0, 3.0, rng);
  Tape tape;
  Tensor y = row_softmax(tape, x);
  for (int i = 0; i < y.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < y.cols(); ++j) s += y.at(i, j);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("clamp01 zeroes gradient in clipped regions") {
  Tape tape;
  Tensor x = Tensor::from(1, 3, {-0.5, 0.5, 1.5}, true);
  Tensor loss = sum(tape, clamp01(tape, x));
  tape.backward(loss);
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("dropout contract") {
  RngStream rng(11);
  Tensor x = randn(20, 20, 1.0, 1.0, rng);
  Tape tape;
  Tensor eval_out = dropout(tape, x, 0.5, false, rng);
  CHECK(eval_out.id() == x.id());  // identity map in eval mode

  // training mode preserves expectation within 1% over many trials
  const double p = 0.3;
  double acc = 0.0;
  const int trials = 250;  // 250 * 400 entries = 1e5 samples
  for (int t = 0; t < trials; ++t) {
    Tensor d = dropout(tape, x, p, true, rng);
    for (double v : d.values()) acc += v;
  }
  double reference = 0.0;
  for (double v : x.values()) reference += v;
  acc /= trials;
  CHECK(std::abs(acc - reference) / std::abs(reference) < 0.01);

  CHECK_THROWS_AS(dropout(tape, x, 1.0, true, rng), ContractError);
}

TEST_CASE("backward on sum gives all-ones and accumulates") {
  RngStream rng(5);
  Tensor w = randn(3, 3, 0.0, 1.0, rng);
  Tape tape;
  Tensor loss = sum(tape, w);
  tape.backward(loss);
  for (double g : w.grad()) CHECK(g == 1.0);
  tape.backward(loss);  // no zeroing: gradients double exactly
  for (double g : w.grad()) CHECK(g == 2.0);
  w.zero_grad();
  tape.backward(loss);
  for (double g : w.grad()) CHECK(g == 1.0);

  Tensor not_scalar = Tensor::zeros(2, 2);
  CHECK_THROWS_AS(tape.backward(not_scalar), ContractError);
}

TEST_CASE("forward determinism within a build") {
  auto run = [](uint64_t seed) {
    RngStream rng(seed);
    Tensor a = randn(4, 4, 0.0, 1.0, rng);
    Tape t;
    Tensor out = row_softmax(t, matmul(t, sigmoid(t, a), a));
    return out.values();
  };
  CHECK(run(42) == run(42));
}

// --- sparse aggregation ------------------------------------------------------

TEST_CASE("spmm_aggregate examples") {
  // single node with self-loop, weight 1
  Graph g1 = from_edge_list(1, {}, {5.0}, 1, {0});
  Tape tape;
  Tensor out1 = spmm_aggregate(tape, g1, Tensor::from(1, 1, {1.0}),
                               Tensor::from(1, 1, {5.0}));
  CHECK(out1.item() == 5.0);

  // 2 nodes: edges in CSR order (0,0) (0,1) (1,1)
  Graph g2 = from_edge_list(2, {{0, 1}}, {}, 0, {});
  Tensor w = Tensor::from(3, 1, {0.5, 0.5, 1.0});
  Tensor h = Tensor::from(2, 1, {2.0, 4.0});
  Tensor out2 = spmm_aggregate(tape, g2, w, h);
  CHECK(out2.values() == std::vector<double>{3.0, 4.0});
}

TEST_CASE("spmm_aggregate gradient matches finite differences") {
  Graph g = testutil::random_test_graph(5, 0.5, 3, 2, 99);
  RngStream rng(1);
  Tensor w = randn(g.n_edges(), 1, 0.5, 0.2, rng);
  Tensor h = randn(g.n_nodes, 3, 0.0, 1.0, rng);
  auto forward = [&](Tape& t) {
    return sum(t, sigmoid(t, spmm_aggregate(t, g, w, h)));
  };
  Tape tape;
  Tensor loss = forward(tape);
  tape.backward(loss);
  auto res = testutil::grad_check({w, h}, [&]() {
    Tape t(false);
    return forward(t).item();
  }, 1e-5);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("edge_row_normalize and edge_row_softmax gradients") {
  Graph g = testutil::random_test_graph(6, 0.4, 2, 2, 123);
  RngStream rng(2);
  Tensor gates = Tensor::zeros(g.n_edges(), 1, true);
  for (auto& v : gates.values()) v = 0.2 + 0.7 * rng.uniform();
  Tensor scores = randn(g.n_edges(), 1, 0.0, 1.0, rng);
  auto forward = [&](Tape& t) {
    Tensor q = edge_row_normalize(t, g, gates);
    Tensor s = edge_row_softmax(t, g, scores);
    return add(t, sum(t, mul(t, q, q)), sum(t, mul(t, s, s)));
  };
  Tape tape;
  Tensor loss = forward(tape);
  tape.backward(loss);
  auto res = testutil::grad_check({gates, scores}, [&]() {
    Tape t(false);
    return forward(t).item();
  }, 1e-6);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("gather and expand ops") {
  Graph g = from_edge_list(3, {{0, 1}, {1, 2}, {2, 0}}, {}, 0, {});
  Tape tape;
  Tensor x = Tensor::from(3, 1, {10, 20, 30});
  Tensor src = gather_node_to_edges(tape, g, x, EdgeEnd::source);
  Tensor dst = gather_node_to_edges(tape, g, x, EdgeEnd::target);
  for (int e = 0; e < g.n_edges(); ++e) {
    CHECK(src.values()[e] == x.values()[g.edge_src[e]]);
    CHECK(dst.values()[e] == x.values()[g.col_idx[e]]);
  }

  Tensor z = Tensor::from(g.n_non_self_edges(), 1,
                          std::vector<double>(g.n_non_self_edges(), 0.25));
  Tensor full = expand_gates_with_self_loops(tape, g, z);
  for (int e = 0; e < g.n_edges(); ++e)
    CHECK(full.values()[e] == (g.is_self_loop(e) ? 1.0 : 0.25));
}

TEST_CASE("spmm rejects corrupt CSR") {
  Graph g = from_edge_list(3, {{0, 1}, {1, 2}}, {}, 0, {});
  g.col_idx[1] = 99;  // corrupt a neighbor id behind validate()'s back
  Tape tape;
  Tensor w = Tensor::full(g.n_edges(), 1, 1.0);
  Tensor h = Tensor::zeros(3, 2);
  CHECK_THROWS_AS(spmm_aggregate(tape, g, w, h), StructuralError);
}

TEST_CASE("masked cross entropy equals ln C on uniform logits") {
  Tape tape;
  Tensor logits = Tensor::zeros(4, 7);
  std::vector<int> labels{0, 1, 2, 3};
  std::vector<uint8_t> mask{1, 1, 1, 0};
  Tensor loss = masked_cross_entropy(tape, logits, labels, mask);
  CHECK(loss.item() == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  std::vector<uint8_t> empty(4, 0);
  CHECK_THROWS_AS(masked_cross_entropy(tape, logits, labels, empty), ContractError);
}
