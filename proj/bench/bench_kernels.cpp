// Timing comparison between the serial reference kernels and the OpenMP
// ones, plus a whole-pipeline batch-gradient case. Outputs are also checked
// for bitwise agreement while timing.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "agsam/kernels.hpp"
#include "agsam/mlp.hpp"
#include "agsam/rng.hpp"

using agsam::SplitMix64;
namespace kernels = agsam::kernels;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int reps, const auto& fn) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void fill(std::vector<double>& v, SplitMix64& rng) {
  for (double& x : v) x = rng.next_gaussian();
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n, int reps) {
  SplitMix64 rng(7);
  std::vector<double> a(m * k), b(k * n), y_ref(m * n), y_par(m * n);
  fill(a, rng);
  fill(b, rng);
  const double t_ref = time_ms(
      reps, [&] { kernels::ref::matmul(a.data(), b.data(), y_ref.data(), m, k, n); });
  const double t_par = time_ms(
      reps, [&] { kernels::par::matmul(a.data(), b.data(), y_par.data(), m, k, n); });
  const bool same =
      std::memcmp(y_ref.data(), y_par.data(), y_ref.size() * sizeof(double)) == 0;
  std::printf("matmul %4zux%-4zux%-4zu  serial %8.3f ms   omp %8.3f ms   speedup %4.2fx  bitwise %s\n",
              m, k, n, t_ref, t_par, t_ref / t_par, same ? "ok" : "MISMATCH");
}

void bench_batch_grad(std::size_t rows, int reps) {
  agsam::MlpSpec spec{{2, 64, 64, 2}, agsam::Activation::kRelu, 3};
  agsam::ParamVector theta = agsam::init_model(spec);
  agsam::Batch batch;
  batch.rows = rows;
  batch.dim = 2;
  batch.features.resize(rows * 2);
  batch.labels.resize(rows);
  SplitMix64 rng(11);
  fill(batch.features, rng);
  for (std::size_t i = 0; i < rows; ++i)
    batch.labels[i] = static_cast<int>(rng.next_below(2));

  kernels::set_parallel(false);
  const double t_ref =
      time_ms(reps, [&] { (void)agsam::batch_loss(spec, theta, batch); });
  kernels::set_parallel(true);
  const double t_par =
      time_ms(reps, [&] { (void)agsam::batch_loss(spec, theta, batch); });
  std::printf("batch_loss rows=%-5zu  serial %8.3f ms   omp %8.3f ms   speedup %4.2fx\n",
              rows, t_ref, t_par, t_ref / t_par);
}

}  // namespace

int main() {
  std::printf("kernel timings (mean per call)\n");
  bench_matmul(64, 64, 64, 200);
  bench_matmul(256, 256, 256, 20);
  bench_matmul(512, 512, 512, 5);
  bench_batch_grad(256, 50);
  bench_batch_grad(2048, 10);
  return 0;
}
