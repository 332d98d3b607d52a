#include "sgat/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace sgat {

namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

Tensor make_output(Tape& tape, int rows, int cols) {
  Tensor t = Tensor::zeros(rows, cols);
  if (tape.recording()) t.node()->leaf = false;
  return t;
}

void check_same_shape(const char* op, Tensor a, Tensor b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->rows = rows;
  t.node_->cols = cols;
  t.node_->values.assign(size_t(rows) * cols, 0.0);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
  Tensor t = zeros(rows, cols, requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values,
                    bool requires_grad) {
  if (values.size() != size_t(rows) * cols) {
    throw DimensionError("Tensor::from: " + std::to_string(values.size()) +
                         " values for shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  Tensor t = zeros(rows, cols, requires_grad);
  t.node_->values = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(1, 1, {value}, requires_grad);
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ContractError("item(): tensor is " + shape_str(*this) + ", not 1x1");
  }
  return node_->values[0];
}

std::vector<double>& Tensor::grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>(*node_);
  t.node_->leaf = true;
  return t;
}

// --- Tape -------------------------------------------------------------------

void Tape::record(Tensor output, std::function<void()> backward) {
  if (!recording_) return;
  outputs_.push_back(output.shared_node());
  ops_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " +
                        std::to_string(loss.rows()) + "x" +
                        std::to_string(loss.cols()));
  }
  // Intermediate gradients are per-call scratch; only leaves accumulate.
  for (auto& n : outputs_) {
    if (n->grad.empty()) n->grad.assign(n->values.size(), 0.0);
    else std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

// --- ops ---------------------------------------------------------------------

Tensor matmul(Tape& tape, Tensor a, Tensor b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + shape_str(a) + " * " +
                         shape_str(b));
  }
  const int n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out = make_output(tape, n, m);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* ov = out.values().data();
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[size_t(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv + size_t(p) * m;
      double* orow = ov + size_t(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  tape.record(out, [a, b, out, n, k, m]() mutable {
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    const auto& av2 = a.values();
    const auto& bv2 = b.values();
    // dA = dC * B^T
    for (int i = 0; i < n; ++i)
      for (int p = 0; p < k; ++p) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j)
          acc += go[size_t(i) * m + j] * bv2[size_t(p) * m + j];
        ga[size_t(i) * k + p] += acc;
      }
    // dB = A^T * dC
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          acc += av2[size_t(i) * k + p] * go[size_t(i) * m + j];
        gb[size_t(p) * m + j] += acc;
      }
  });
  return out;
}

Tensor add(Tape& tape, Tensor a, Tensor b) {
  check_same_shape("add", a, b);
  Tensor out = make_output(tape, a.rows(), a.cols());
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = a.values()[i] + b.values()[i];
  tape.record(out, [a, b, out]() mutable {
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
  return out;
}

Tensor sub(Tape& tape, Tensor a, Tensor b) {
  check_same_shape("sub", a, b);
  Tensor out = make_output(tape, a.rows(), a.cols());
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = a.values()[i] - b.values()[i];
  tape.record(out, [a, b, out]() mutable {
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  });
  return out;
}

Tensor mul(Tape& tape, Tensor a, Tensor b) {
  check_same_shape("mul", a, b);
  Tensor out = make_output(tape, a.rows(), a.cols());
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = a.values()[i] * b.values()[i];
  tape.record(out, [a, b, out]() mutable {
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * b.values()[i];
      gb[i] += go[i] * a.values()[i];
    }
  });
  return out;
}

Tensor scale(Tape& tape, Tensor x, double k) {
  return affine(tape, x, k, 0.0);
}

Tensor affine(Tape& tape, Tensor x, double k, double b) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i) out.values()[i] = x.values()[i] * k + b;
  tape.record(out, [x, out, k]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * k;
  });
  return out;
}

Tensor sigmoid(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = x.values()[i];
    // evaluate on the non-overflowing side
    out.values()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                               : std::exp(v) / (1.0 + std::exp(v));
  }
  tape.record(out, [x, out]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i) {
      const double y = out.values()[i];
      gx[i] += go[i] * y * (1.0 - y);
    }
  });
  return out;
}

Tensor relu(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
  tape.record(out, [x, out]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i)
      if (x.values()[i] > 0.0) gx[i] += go[i];
  });
  return out;
}

Tensor leaky_relu(Tape& tape, Tensor x, double negative_slope) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = x.values()[i];
    out.values()[i] = v > 0.0 ? v : negative_slope * v;
  }
  tape.record(out, [x, out, negative_slope]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i)
      gx[i] += go[i] * (x.values()[i] > 0.0 ? 1.0 : negative_slope);
  });
  return out;
}

Tensor exp(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i) out.values()[i] = std::exp(x.values()[i]);
  tape.record(out, [x, out]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * out.values()[i];
  });
  return out;
}

Tensor log(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = x.values()[i];
    if (v <= 0.0) {
      throw DomainError("log: non-positive input " + std::to_string(v));
    }
    out.values()[i] = std::log(v);
  }
  tape.record(out, [x, out]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] / x.values()[i];
  });
  return out;
}

Tensor clamp01(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, x.rows(), x.cols());
  for (size_t i = 0; i < out.size(); ++i)
    out.values()[i] = std::min(1.0, std::max(0.0, x.values()[i]));
  tape.record(out, [x, out]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i) {
      const double v = x.values()[i];
      if (v > 0.0 && v < 1.0) gx[i] += go[i];
    }
  });
  return out;
}

Tensor concat_cols(Tape& tape, Tensor a, Tensor b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
  const int n = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = make_output(tape, n, ca + cb);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = a.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = b.at(i, j);
  }
  tape.record(out, [a, b, out, n, ca, cb]() mutable {
    auto& ga = a.grad();
    auto& gb = b.grad();
    const auto& go = out.grad();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < ca; ++j) ga[size_t(i) * ca + j] += go[size_t(i) * (ca + cb) + j];
      for (int j = 0; j < cb; ++j) gb[size_t(i) * cb + j] += go[size_t(i) * (ca + cb) + ca + j];
    }
  });
  return out;
}

Tensor row_softmax(Tape& tape, Tensor x) {
  const int n = x.rows(), c = x.cols();
  Tensor out = make_output(tape, n, c);
  for (int i = 0; i < n; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(x.at(i, j) - mx);
    for (int j = 0; j < c; ++j) out.at(i, j) = std::exp(x.at(i, j) - mx) / z;
  }
  tape.record(out, [x, out, n, c]() mutable {
    auto& gx = x.grad();
    const auto& go = out.grad();
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += go[size_t(i) * c + j] * out.at(i, j);
      for (int j = 0; j < c; ++j)
        gx[size_t(i) * c + j] += out.at(i, j) * (go[size_t(i) * c + j] - dot);
    }
  });
  return out;
}

Tensor dropout(Tape& tape, Tensor x, double p, bool training, RngStream& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: p must be in [0,1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  Tensor out = make_output(tape, x.rows(), x.cols());
  auto mask = std::make_shared<std::vector<uint8_t>>(x.size());
  const double inv_keep = 1.0 / (1.0 - p);
  for (size_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.uniform() >= p;
    (*mask)[i] = keep;
    out.values()[i] = keep ? x.values()[i] * inv_keep : 0.0;
  }
  tape.record(out, [x, out, mask, inv_keep]() mutable {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (size_t i = 0; i < go.size(); ++i)
      if ((*mask)[i]) gx[i] += go[i] * inv_keep;
  });
  return out;
}

Tensor sum(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, 1, 1);
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  out.values()[0] = acc;
  tape.record(out, [x, out]() mutable {
    const double g = out.grad()[0];
    auto& gx = x.grad();
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
  return out;
}

Tensor mean(Tape& tape, Tensor x) {
  Tensor out = make_output(tape, 1, 1);
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv_n = 1.0 / double(x.size());
  out.values()[0] = acc * inv_n;
  tape.record(out, [x, out, inv_n]() mutable {
    const double g = out.grad()[0] * inv_n;
    auto& gx = x.grad();
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
  return out;
}

Tensor masked_cross_entropy(Tape& tape, Tensor logits,
                            const std::vector<int>& labels,
                            const std::vector<uint8_t>& mask) {
  const int n = logits.rows(), c = logits.cols();
  if (int(labels.size()) != n || int(mask.size()) != n) {
    throw DimensionError("masked_cross_entropy: labels/mask length != rows");
  }
  int m = 0;
  for (uint8_t b : mask) m += b ? 1 : 0;
  if (m == 0) throw ContractError("masked_cross_entropy: empty mask");

  // softmax rows cached for the backward rule
  auto probs = std::make_shared<std::vector<double>>(size_t(n) * c, 0.0);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || y >= c) {
      throw ContractError("masked_cross_entropy: label " + std::to_string(y) +
                          " out of range at node " + std::to_string(i));
    }
    double mx = logits.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - mx);
    for (int j = 0; j < c; ++j)
      (*probs)[size_t(i) * c + j] = std::exp(logits.at(i, j) - mx) / z;
    loss += std::log(z) + mx - logits.at(i, y);
  }
  Tensor out = make_output(tape, 1, 1);
  out.values()[0] = loss / m;
  tape.record(out, [logits, out, probs, labels, mask, n, c, m]() mutable {
    const double g = out.grad()[0] / m;
    auto& gl = logits.grad();
    for (int i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      for (int j = 0; j < c; ++j) {
        const double indicator = (j == labels[i]) ? 1.0 : 0.0;
        gl[size_t(i) * c + j] += g * ((*probs)[size_t(i) * c + j] - indicator);
      }
    }
  });
  return out;
}

Tensor gather_rows(Tape& tape, Tensor x, const std::vector<int>& index) {
  const int d = x.cols();
  const int m = int(index.size());
  for (int r : index) {
    if (r < 0 || r >= x.rows()) {
      throw StructuralError("gather_rows: row " + std::to_string(r) +
                            " out of bounds for " + std::to_string(x.rows()));
    }
  }
  Tensor out = make_output(tape, m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) out.at(i, j) = x.at(index[i], j);
  tape.record(out, [x, out, index, m, d]() mutable {
    auto& gx = x.grad();
    const auto& go = out.grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j)
        gx[size_t(index[i]) * d + j] += go[size_t(i) * d + j];
  });
  return out;
}

Tensor sum_squares(Tape& tape, Tensor x) {
  return sum(tape, mul(tape, x, x));
}

Tensor glorot_uniform(int rows, int cols, RngStream& rng) {
  Tensor t = Tensor::zeros(rows, cols, true);
  const double limit = std::sqrt(6.0 / double(rows + cols));
  for (auto& v : t.values()) v = (rng.uniform() * 2.0 - 1.0) * limit;
  return t;
}

Tensor randn(int rows, int cols, double mean, double stddev, RngStream& rng) {
  Tensor t = Tensor::zeros(rows, cols, true);
  for (auto& v : t.values()) v = rng.normal(mean, stddev);
  return t;
}

}  // namespace sgat
