#include "agsam/tensor.hpp"

#include <stdexcept>

#include "agsam/kernels.hpp"

namespace agsam {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (const std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += "]";
  return out;
}

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a) + " vs " + shape_str(b));
}

Tape* common_tape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.tape() != b.tape())
    throw std::invalid_argument(std::string(op) +
                                ": operands belong to different tapes");
  return a.tape();
}

}  // namespace

double Tensor::scalar() const {
  if (numel() != 1)
    throw std::invalid_argument("scalar: tensor has shape " +
                                shape_str(shape()));
  return node_->value[0];
}

Tensor Tape::leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  if (shape_numel(shape) != value.size())
    throw std::invalid_argument("leaf: shape " + shape_str(shape) +
                                " does not match data length " +
                                std::to_string(value.size()));
  auto node = std::make_unique<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Tensor(nodes_.back().get(), this);
}

Tensor Tape::leaf(Shape shape, std::span<const double> value,
                  bool requires_grad) {
  return leaf(std::move(shape), std::vector<double>(value.begin(), value.end()),
              requires_grad);
}

Tensor Tape::record(Shape shape, std::vector<double> value, const char* op,
                    bool requires_grad,
                    std::function<void(TensorNode&)> bwd) {
  auto node = std::make_unique<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->op = op;
  node->backward = std::move(bwd);
  nodes_.push_back(std::move(node));
  return Tensor(nodes_.back().get(), this);
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this)
    throw std::invalid_argument("backward: loss not recorded on this tape");
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, has shape " +
                                shape_str(loss.shape()));
  for (auto& node : nodes_) node->grad.assign(node->value.size(), 0.0);
  loss.node()->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorNode& node = **it;
    if (node.backward) node.backward(node);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape("matmul", a, b);
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, n);

  TensorNode* an = a.node();
  TensorNode* bn = b.node();
  const bool rg = an->requires_grad || bn->requires_grad;
  return tape->record(
      {m, n}, std::move(out), "matmul", rg, [an, bn, m, k, n](TensorNode& y) {
        // dA = dY B^T, dB = A^T dY
        std::vector<double> tmp(m * k);
        kernels::matmul_nt(y.grad.data(), bn->value.data(), tmp.data(), m, n,
                           k);
        kernels::axpy(1.0, tmp.data(), an->grad.data(), m * k);
        std::vector<double> tmpb(k * n);
        kernels::matmul_tn(an->value.data(), y.grad.data(), tmpb.data(), m, k,
                           n);
        kernels::axpy(1.0, tmpb.data(), bn->grad.data(), k * n);
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape("add", a, b);
  TensorNode* an = a.node();
  TensorNode* bn = b.node();
  const bool rg = an->requires_grad || bn->requires_grad;

  if (a.shape() == b.shape()) {
    std::vector<double> out(a.numel());
    kernels::add(a.value().data(), b.value().data(), out.data(), out.size());
    return tape->record(a.shape(), std::move(out), "add", rg,
                        [an, bn](TensorNode& y) {
                          kernels::axpy(1.0, y.grad.data(), an->grad.data(),
                                        y.grad.size());
                          kernels::axpy(1.0, y.grad.data(), bn->grad.data(),
                                        y.grad.size());
                        });
  }
  if (a.shape().size() == 2 && b.shape().size() == 1 &&
      a.shape()[1] == b.shape()[0]) {
    const std::size_t rows = a.shape()[0], cols = a.shape()[1];
    std::vector<double> out(rows * cols);
    kernels::add_rowwise(a.value().data(), b.value().data(), out.data(), rows,
                         cols);
    return tape->record(a.shape(), std::move(out), "add", rg,
                        [an, bn, rows, cols](TensorNode& y) {
                          kernels::axpy(1.0, y.grad.data(), an->grad.data(),
                                        rows * cols);
                          kernels::col_sums_accum(y.grad.data(),
                                                  bn->grad.data(), rows, cols);
                        });
  }
  shape_error("add", a.shape(), b.shape());
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape("mul", a, b);
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  kernels::mul(a.value().data(), b.value().data(), out.data(), out.size());
  TensorNode* an = a.node();
  TensorNode* bn = b.node();
  const bool rg = an->requires_grad || bn->requires_grad;
  return tape->record(a.shape(), std::move(out), "mul", rg,
                      [an, bn](TensorNode& y) {
                        const std::size_t n = y.grad.size();
                        for (std::size_t i = 0; i < n; ++i) {
                          an->grad[i] += y.grad[i] * bn->value[i];
                          bn->grad[i] += y.grad[i] * an->value[i];
                        }
                      });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  kernels::relu(x.value().data(), out.data(), out.size());
  TensorNode* xn = x.node();
  return x.tape()->record(x.shape(), std::move(out), "relu",
                          xn->requires_grad, [xn](TensorNode& y) {
                            kernels::relu_backward(xn->value.data(),
                                                   y.grad.data(),
                                                   xn->grad.data(),
                                                   y.grad.size());
                          });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.numel());
  kernels::tanh(x.value().data(), out.data(), out.size());
  TensorNode* xn = x.node();
  return x.tape()->record(x.shape(), std::move(out), "tanh",
                          xn->requires_grad, [xn](TensorNode& y) {
                            kernels::tanh_backward(y.value.data(),
                                                   y.grad.data(),
                                                   xn->grad.data(),
                                                   y.grad.size());
                          });
}

Tensor sum(const Tensor& x) {
  TensorNode* xn = x.node();
  std::vector<double> out{kernels::sum_leftright(x.value())};
  return x.tape()->record({1}, std::move(out), "sum", xn->requires_grad,
                          [xn](TensorNode& y) {
                            const double g = y.grad[0];
                            const std::size_t n = xn->grad.size();
                            for (std::size_t i = 0; i < n; ++i)
                              xn->grad[i] += g;
                          });
}

Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.numel());
  kernels::scale(x.value().data(), c, out.data(), out.size());
  TensorNode* xn = x.node();
  return x.tape()->record(x.shape(), std::move(out), "scale",
                          xn->requires_grad, [xn, c](TensorNode& y) {
                            kernels::axpy(c, y.grad.data(), xn->grad.data(),
                                          y.grad.size());
                          });
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             std::span<const int> labels) {
  if (logits.shape().size() != 2)
    throw std::invalid_argument("softmax_cross_entropy: logits must be rank 2, got " +
                                shape_str(logits.shape()));
  const std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
  if (labels.size() != rows)
    throw std::invalid_argument(
        "softmax_cross_entropy: " + std::to_string(labels.size()) +
        " labels for " + std::to_string(rows) + " rows");
  for (std::size_t r = 0; r < rows; ++r)
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= cols)
      throw std::invalid_argument(
          "softmax_cross_entropy: label " + std::to_string(labels[r]) +
          " at row " + std::to_string(r) + " outside [0," +
          std::to_string(cols) + ")");

  auto probs = std::make_shared<std::vector<double>>(rows * cols);
  std::vector<double> row_loss(rows);
  kernels::softmax_xent_rows(logits.value().data(), labels.data(), rows, cols,
                             row_loss.data(), probs->data());
  const double mean_loss =
      kernels::pairwise_sum(row_loss) / static_cast<double>(rows);

  TensorNode* ln = logits.node();
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.tape()->record(
      {1}, {mean_loss}, "softmax_cross_entropy", ln->requires_grad,
      [ln, probs, lab = std::move(lab), rows, cols](TensorNode& y) {
        const double g = y.grad[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* pr = probs->data() + r * cols;
          double* dl = ln->grad.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) dl[c] += g * pr[c];
          dl[static_cast<std::size_t>(lab[r])] -= g;
        }
      });
}

}  // namespace agsam
