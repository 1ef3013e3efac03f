#include <doctest.h>
#include <omp.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "agsam/kernels.hpp"
#include "agsam/mlp.hpp"
#include "agsam/rng.hpp"

namespace kernels = agsam::kernels;
using agsam::SplitMix64;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  SplitMix64 rng(seed);
  for (double& x : v) x = rng.next_gaussian();
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("omp kernels are bitwise identical to the serial reference") {
  // sizes straddle the parallel grain threshold
  for (const std::size_t m : {3, 64, 150}) {
    const std::size_t k = m + 1, n = m + 2;
    const auto a = random_vec(m * k, 1000 + m);
    const auto b = random_vec(k * n, 2000 + m);

    std::vector<double> y_ref(m * n), y_par(m * n);
    kernels::ref::matmul(a.data(), b.data(), y_ref.data(), m, k, n);
    kernels::par::matmul(a.data(), b.data(), y_par.data(), m, k, n);
    CHECK(bitwise_equal(y_ref, y_par));

    std::vector<double> nt_ref(m * k), nt_par(m * k);
    const auto c = random_vec(m * n, 3000 + m);
    const auto d = random_vec(k * n, 4000 + m);
    kernels::ref::matmul_nt(c.data(), d.data(), nt_ref.data(), m, n, k);
    kernels::par::matmul_nt(c.data(), d.data(), nt_par.data(), m, n, k);
    CHECK(bitwise_equal(nt_ref, nt_par));

    std::vector<double> tn_ref(k * n), tn_par(k * n);
    kernels::ref::matmul_tn(a.data(), c.data(), tn_ref.data(), m, k, n);
    kernels::par::matmul_tn(a.data(), c.data(), tn_par.data(), m, k, n);
    CHECK(bitwise_equal(tn_ref, tn_par));
  }

  const std::size_t n = 20000;
  const auto x = random_vec(n, 5);
  const auto g = random_vec(n, 6);
  std::vector<double> r1(n), r2(n);
  kernels::ref::relu(x.data(), r1.data(), n);
  kernels::par::relu(x.data(), r2.data(), n);
  CHECK(bitwise_equal(r1, r2));

  std::vector<double> t1(n), t2(n);
  kernels::ref::tanh(x.data(), t1.data(), n);
  kernels::par::tanh(x.data(), t2.data(), n);
  CHECK(bitwise_equal(t1, t2));

  std::vector<double> dx1(n, 0.25), dx2(n, 0.25);
  kernels::ref::tanh_backward(t1.data(), g.data(), dx1.data(), n);
  kernels::par::tanh_backward(t2.data(), g.data(), dx2.data(), n);
  CHECK(bitwise_equal(dx1, dx2));

  const std::size_t rows = 300, cols = 40;
  const auto logits = random_vec(rows * cols, 77);
  std::vector<int> labels(rows);
  SplitMix64 lrng(88);
  for (int& l : labels) l = static_cast<int>(lrng.next_below(cols));
  std::vector<double> loss1(rows), loss2(rows), p1(rows * cols), p2(rows * cols);
  kernels::ref::softmax_xent_rows(logits.data(), labels.data(), rows, cols,
                                  loss1.data(), p1.data());
  kernels::par::softmax_xent_rows(logits.data(), labels.data(), rows, cols,
                                  loss2.data(), p2.data());
  CHECK(bitwise_equal(loss1, loss2));
  CHECK(bitwise_equal(p1, p2));

  std::vector<double> cs1(cols, 0.0), cs2(cols, 0.0);
  kernels::ref::col_sums_accum(logits.data(), cs1.data(), rows, cols);
  kernels::par::col_sums_accum(logits.data(), cs2.data(), rows, cols);
  CHECK(bitwise_equal(cs1, cs2));
}

TEST_CASE("matmul identity") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> eye{1, 0, 0, 1};
  std::vector<double> y(4);
  kernels::matmul(a.data(), eye.data(), y.data(), 2, 2, 2);
  CHECK(y == a);
}

TEST_CASE("reduction policies") {
  const auto x = random_vec(1537, 9);
  const double lr = kernels::sum_leftright(x);
  const double pw = kernels::pairwise_sum(x);
  // different association, same value up to rounding
  CHECK(pw == doctest::Approx(lr).epsilon(1e-12));

  // pairwise sum is independent of where the data sits in memory
  std::vector<double> shifted(x.begin() + 1, x.end());
  shifted.insert(shifted.begin(), x[0]);
  CHECK(kernels::pairwise_sum(shifted) == pw);

  CHECK(kernels::dot(x, x) == doctest::Approx(kernels::norm_sq(x)));
  CHECK(kernels::norm(std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0));
}

TEST_CASE("global dispatch honors the parallel switch") {
  const auto a = random_vec(64 * 64, 21);
  const auto b = random_vec(64 * 64, 22);
  std::vector<double> y1(64 * 64), y2(64 * 64);
  kernels::set_parallel(false);
  kernels::matmul(a.data(), b.data(), y1.data(), 64, 64, 64);
  kernels::set_parallel(true);
  kernels::matmul(a.data(), b.data(), y2.data(), 64, 64, 64);
  CHECK(bitwise_equal(y1, y2));
}

TEST_CASE("gradients are independent of the OpenMP thread count") {
  // sizes chosen above every parallel grain so the omp paths actually run
  const agsam::MlpSpec spec{{2, 64, 64, 3}, agsam::Activation::kTanh, 9};
  const agsam::ParamVector theta = agsam::init_model(spec);
  agsam::Batch batch;
  batch.rows = 512;
  batch.dim = 2;
  batch.features.resize(batch.rows * 2);
  SplitMix64 rng(31);
  for (double& v : batch.features) v = rng.next_gaussian();
  batch.labels.resize(batch.rows);
  for (int& l : batch.labels) l = static_cast<int>(rng.next_below(3));

  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const agsam::BatchGradEval one = agsam::batch_loss(spec, theta, batch);
  omp_set_num_threads(std::max(2, before));
  const agsam::BatchGradEval many = agsam::batch_loss(spec, theta, batch);
  omp_set_num_threads(before);

  CHECK(std::memcmp(&one.loss, &many.loss, sizeof(double)) == 0);
  CHECK(bitwise_equal(
      std::vector<double>(one.grad.values().begin(), one.grad.values().end()),
      std::vector<double>(many.grad.values().begin(),
                          many.grad.values().end())));
}
