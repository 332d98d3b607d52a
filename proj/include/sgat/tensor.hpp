#ifndef SGAT_TENSOR_HPP
#define SGAT_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sgat/error.hpp"
#include "sgat/rng.hpp"

namespace sgat {

namespace detail {
struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  std::vector<double> grad;  // lazily sized
  bool requires_grad = false;
  bool leaf = true;  // false for op outputs recorded on a tape
};
}  // namespace detail

// Dense 2-D double matrix with aliasing handle semantics: copying a Tensor
// copies the handle, not the storage. Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double value, bool requires_grad = false);
  static Tensor from(int rows, int cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  size_t size() const { return node_->values.size(); }

  double at(int r, int c) const { return node_->values[size_t(r) * node_->cols + c]; }
  double& at(int r, int c) { return node_->values[size_t(r) * node_->cols + c]; }
  double item() const;  // value of a 1x1 tensor

  std::vector<double>& values() { return node_->values; }
  const std::vector<double>& values() const { return node_->values; }

  // Gradient buffer, allocated (zero-filled) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool is_leaf() const { return node_->leaf; }

  Tensor clone() const;

  // Stable identity of the underlying storage, for structural assertions.
  const void* id() const { return node_.get(); }

  detail::TensorNode* node() const { return node_.get(); }
  std::shared_ptr<detail::TensorNode> shared_node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Reverse-mode tape. Ops append a backward closure as they execute, so the
// list is topologically ordered by construction; backward() replays it in
// exact reverse order. Leaf gradients accumulate across backward() calls
// until explicitly zeroed; intermediate gradients are reset per call.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool r) { recording_ = r; }
  size_t size() const { return ops_.size(); }

  void record(Tensor output, std::function<void()> backward);
  void backward(const Tensor& loss);

 private:
  bool recording_ = true;
  std::vector<std::function<void()>> ops_;
  std::vector<std::shared_ptr<detail::TensorNode>> outputs_;
};

// --- dense ops ------------------------------------------------------------

Tensor matmul(Tape& tape, Tensor a, Tensor b);
Tensor add(Tape& tape, Tensor a, Tensor b);
Tensor sub(Tape& tape, Tensor a, Tensor b);
Tensor mul(Tape& tape, Tensor a, Tensor b);
Tensor scale(Tape& tape, Tensor x, double k);
// x*k + b, elementwise with scalar k and b.
Tensor affine(Tape& tape, Tensor x, double k, double b);
Tensor sigmoid(Tape& tape, Tensor x);
Tensor relu(Tape& tape, Tensor x);
Tensor leaky_relu(Tape& tape, Tensor x, double negative_slope);
Tensor exp(Tape& tape, Tensor x);
Tensor log(Tape& tape, Tensor x);
// min(1, max(0, x)); zero gradient where clipped.
Tensor clamp01(Tape& tape, Tensor x);
Tensor concat_cols(Tape& tape, Tensor a, Tensor b);
Tensor row_softmax(Tape& tape, Tensor x);
// Training mode zeroes entries with probability p and scales survivors by
// 1/(1-p); eval mode is the identity map.
Tensor dropout(Tape& tape, Tensor x, double p, bool training, RngStream& rng);
Tensor sum(Tape& tape, Tensor x);
Tensor mean(Tape& tape, Tensor x);

// Mean cross-entropy over nodes selected by mask; labels give the target
// class per row of logits. Stable log-sum-exp inside.
Tensor masked_cross_entropy(Tape& tape, Tensor logits,
                            const std::vector<int>& labels,
                            const std::vector<uint8_t>& mask);

// Gather rows of x (n x d) into a (index.size() x d) tensor; backward
// scatter-adds into the source rows.
Tensor gather_rows(Tape& tape, Tensor x, const std::vector<int>& index);

// sum of squares, as a composition helper for L2 terms.
Tensor sum_squares(Tape& tape, Tensor x);

// --- initializers ----------------------------------------------------------

Tensor glorot_uniform(int rows, int cols, RngStream& rng);
Tensor randn(int rows, int cols, double mean, double stddev, RngStream& rng);

}  // namespace sgat

#endif  // SGAT_TENSOR_HPP
