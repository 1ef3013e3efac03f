#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

// Minimal reverse-mode autodiff over dense 64-bit float tensors. A Tape owns
// the nodes of one computation; Tensor is a cheap handle into it. A tape and
// its tensors are a single-owner unit: never share one across threads.
// Independent tapes may run concurrently.
namespace agsam {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily by Tape::backward
  bool requires_grad = false;
  const char* op = "leaf";
  // Pulls this node's grad into its parents. Gradients accumulate
  // additively; parents are visited in a fixed order for reproducibility.
  std::function<void(TensorNode&)> backward;
};

class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::span<const double> value() const { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  // value of a single-element tensor
  double scalar() const;

  TensorNode* node() const { return node_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return node_ != nullptr; }

 private:
  friend class Tape;
  Tensor(TensorNode* node, Tape* tape) : node_(node), tape_(tape) {}

  TensorNode* node_ = nullptr;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Shape shape, std::vector<double> value,
              bool requires_grad = false);
  Tensor leaf(Shape shape, std::span<const double> value,
              bool requires_grad = false);

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse creation
  // order; every requires_grad leaf ends up holding its gradient.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }

  Tensor record(Shape shape, std::vector<double> value, const char* op,
                bool requires_grad, std::function<void(TensorNode&)> bwd);

 private:
  std::vector<std::unique_ptr<TensorNode>> nodes_;
};

// forward ops; results are recorded on the operands' tape
Tensor matmul(const Tensor& a, const Tensor& b);
// same shape, or [rows,cols] + [cols] broadcast over the leading batch axis
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor scale(const Tensor& x, double c);
// logits [rows,classes], labels in [0,classes); returns the scalar mean loss
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace agsam
