#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "agsam/rng.hpp"
#include "agsam/tensor.hpp"

using namespace agsam;

TEST_CASE("relu forward") {
  Tape tape;
  Tensor x = tape.leaf({3}, std::vector<double>{-1.0, 0.0, 2.0});
  Tensor y = relu(x);
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 0.0);
  CHECK(y.value()[2] == 2.0);
}

TEST_CASE("uniform logits give ln 2") {
  Tape tape;
  Tensor logits = tape.leaf({1, 2}, std::vector<double>{0.0, 0.0});
  const std::vector<int> labels{0};
  Tensor loss = softmax_cross_entropy(logits, labels);
  CHECK(loss.scalar() == doctest::Approx(0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("matmul identity and shape errors") {
  Tape tape;
  Tensor a = tape.leaf({2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor eye = tape.leaf({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor y = matmul(a, eye);
  CHECK(y.value()[0] == 1.0);
  CHECK(y.value()[1] == 2.0);
  CHECK(y.value()[2] == 3.0);
  CHECK(y.value()[3] == 4.0);

  Tensor bad = tape.leaf({3, 2}, std::vector<double>(6, 0.0));
  CHECK_THROWS_WITH_AS(matmul(a, bad),
                       "matmul: shape mismatch [2,2] vs [3,2]",
                       std::invalid_argument);
  CHECK_THROWS_AS(add(a, bad), std::invalid_argument);
}

TEST_CASE("label out of range is rejected") {
  Tape tape;
  Tensor logits = tape.leaf({1, 2}, std::vector<double>{0.0, 0.0});
  const std::vector<int> labels{2};
  CHECK_THROWS_AS(softmax_cross_entropy(logits, labels),
                  std::invalid_argument);
}

TEST_CASE("backward of quadratic sum") {
  // loss = sum(theta * theta) / 2 at theta = [3,4] -> grad = [3,4]
  Tape tape;
  Tensor theta = tape.leaf({2}, std::vector<double>{3.0, 4.0}, true);
  Tensor loss = scale(sum(mul(theta, theta)), 0.5);
  tape.backward(loss);
  CHECK(theta.grad()[0] == 3.0);
  CHECK(theta.grad()[1] == 4.0);
}

TEST_CASE("constant loss leaves zero grads") {
  Tape tape;
  Tensor theta = tape.leaf({2}, std::vector<double>{1.0, 2.0}, true);
  Tensor c = tape.leaf({1}, std::vector<double>{5.0});
  Tensor loss = sum(c);
  tape.backward(loss);
  CHECK(theta.grad()[0] == 0.0);
  CHECK(theta.grad()[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Tensor theta = tape.leaf({2}, std::vector<double>{1.0, 2.0}, true);
  Tensor y = mul(theta, theta);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("gradient accumulates across branches") {
  // loss = sum(x*x) + sum(x) -> grad = 2x + 1, both branches contribute
  Tape tape;
  Tensor x = tape.leaf({3}, std::vector<double>{1.0, -2.0, 0.5}, true);
  Tensor loss = add(sum(mul(x, x)), sum(x));
  tape.backward(loss);
  CHECK(x.grad()[0] == 2.0 * 1.0 + 1.0);
  CHECK(x.grad()[1] == 2.0 * -2.0 + 1.0);
  CHECK(x.grad()[2] == 2.0 * 0.5 + 1.0);
}

namespace {

// builds a tiny randomized expression covering every op (cross-entropy plus
// a quadratic penalty through mul/sum/scale) and returns the scalar loss,
// for finite differencing against backward()
double eval_expr(const std::vector<double>& w, const std::vector<double>& b,
                 const std::vector<double>& x, const std::vector<int>& labels,
                 std::size_t rows, std::size_t in, std::size_t out,
                 bool use_tanh, std::vector<double>* grad_w = nullptr,
                 std::vector<double>* grad_b = nullptr) {
  Tape tape;
  Tensor xs = tape.leaf({rows, in}, x);
  Tensor ws = tape.leaf({in, out}, w, true);
  Tensor bs = tape.leaf({out}, b, true);
  Tensor h = add(matmul(xs, ws), bs);
  h = use_tanh ? tanh(h) : relu(h);
  Tensor pre = tape.leaf({out, out}, std::vector<double>(out * out, 0.1), false);
  Tensor logits = matmul(h, pre);
  Tensor penalty = scale(sum(mul(ws, ws)), 0.01);
  Tensor loss = add(softmax_cross_entropy(logits, labels), penalty);
  if (grad_w) {
    tape.backward(loss);
    grad_w->assign(ws.grad().begin(), ws.grad().end());
    grad_b->assign(bs.grad().begin(), bs.grad().end());
  }
  return loss.scalar();
}

}  // namespace

TEST_CASE("autodiff matches central finite differences on composed ops") {
  SplitMix64 rng(2024);
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t rows = 1 + rng.next_below(4);
    const std::size_t in = 1 + rng.next_below(4);
    const std::size_t out = 2 + rng.next_below(3);
    const bool use_tanh = (instance % 2) == 0;
    std::vector<double> w(in * out), b(out), x(rows * in);
    for (double& v : w) v = 0.5 * rng.next_gaussian();
    for (double& v : b) v = 0.5 * rng.next_gaussian();
    for (double& v : x) v = rng.next_gaussian();
    std::vector<int> labels(rows);
    for (int& l : labels) l = static_cast<int>(rng.next_below(out));

    std::vector<double> gw, gb;
    eval_expr(w, b, x, labels, rows, in, out, use_tanh, &gw, &gb);

    double max_rel = 0.0;
    auto probe = [&](std::vector<double>& vec, std::size_t i, double ad) {
      const double h = 1e-6 * (1.0 + std::abs(vec[i]));
      const double keep = vec[i];
      vec[i] = keep + h;
      const double up = eval_expr(w, b, x, labels, rows, in, out, use_tanh);
      vec[i] = keep - h;
      const double dn = eval_expr(w, b, x, labels, rows, in, out, use_tanh);
      vec[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double rel = std::abs(ad - fd) / std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, rel);
    };
    for (std::size_t i = 0; i < w.size(); ++i) probe(w, i, gw[i]);
    for (std::size_t i = 0; i < b.size(); ++i) probe(b, i, gb[i]);
    CHECK(max_rel < 1e-5);
  }
}

TEST_CASE("tape replay is bitwise deterministic") {
  auto run_once = [](std::vector<double>* grad) {
    SplitMix64 rng(5150);
    std::vector<double> w(12), x(8);
    for (double& v : w) v = rng.next_gaussian();
    for (double& v : x) v = rng.next_gaussian();
    Tape tape;
    Tensor ws = tape.leaf({4, 3}, w, true);
    Tensor xs = tape.leaf({2, 4}, x);
    const std::vector<int> labels{0, 2};
    Tensor loss = softmax_cross_entropy(tanh(matmul(xs, ws)), labels);
    tape.backward(loss);
    grad->assign(ws.grad().begin(), ws.grad().end());
    return loss.scalar();
  };
  std::vector<double> g1, g2;
  const double l1 = run_once(&g1);
  const double l2 = run_once(&g2);
  CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}
