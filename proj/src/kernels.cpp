#include "agsam/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>

namespace agsam::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// work thresholds below which the omp if-clause keeps a loop serial:
// flops for matmuls, elements otherwise (higher for memory-bound loops,
// lower where each element pays for a libm call)
constexpr std::int64_t kMatmulGrain = 1 << 18;
constexpr std::int64_t kElemGrain = 1 << 15;
constexpr std::int64_t kMathGrain = 1 << 13;

inline void matmul_row(const double* a, const double* b, double* y,
                       std::size_t i, std::size_t k, std::size_t n) {
  double* yi = y + i * n;
  const double* ai = a + i * k;
  for (std::size_t j = 0; j < n; ++j) yi[j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double aip = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) yi[j] += aip * bp[j];
  }
}

inline void matmul_nt_row(const double* a, const double* b, double* y,
                          std::size_t i, std::size_t n, std::size_t k) {
  const double* ai = a + i * n;
  double* yi = y + i * k;
  for (std::size_t j = 0; j < k; ++j) {
    const double* bj = b + j * n;
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
    yi[j] = acc;
  }
}

inline void matmul_tn_row(const double* a, const double* b, double* y,
                          std::size_t i, std::size_t m, std::size_t k,
                          std::size_t n) {
  // y[i,:] = sum_r a[r,i] * b[r,:], r ascending
  double* yi = y + i * n;
  for (std::size_t j = 0; j < n; ++j) yi[j] = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double ari = a[r * k + i];
    const double* br = b + r * n;
    for (std::size_t j = 0; j < n; ++j) yi[j] += ari * br[j];
  }
}

inline void xent_row(const double* logits, const int* labels, std::size_t r,
                     std::size_t cols, double* row_loss, double* probs) {
  const double* lr = logits + r * cols;
  double* pr = probs + r * cols;
  double m = lr[0];
  for (std::size_t c = 1; c < cols; ++c) m = lr[c] > m ? lr[c] : m;
  double s = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    pr[c] = std::exp(lr[c] - m);
    s += pr[c];
  }
  const double inv = 1.0 / s;
  for (std::size_t c = 0; c < cols; ++c) pr[c] *= inv;
  row_loss[r] = std::log(s) + m - lr[static_cast<std::size_t>(labels[r])];
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool enabled) {
  g_parallel.store(enabled, std::memory_order_relaxed);
}

// ---------------------------------------------------------------- ref ----

namespace ref {

void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_row(a, b, y, i, k, n);
}

void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) matmul_nt_row(a, b, y, i, n, k);
}

void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k; ++i) matmul_tn_row(a, b, y, i, m, k, n);
}

void relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

void tanh(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

void add(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      y[r * cols + c] = a[r * cols + c] + bias[c];
}

void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += dy[r * cols + c];
    dbias[c] += acc;
  }
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void scale(const double* x, double c, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = c * x[i];
}

void axpy(double c, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += c * x[i];
}

void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs) {
  for (std::size_t r = 0; r < rows; ++r)
    xent_row(logits, labels, r, cols, row_loss, probs);
}

}  // namespace ref

// ---------------------------------------------------------------- par ----

namespace par {

void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n) {
  if (static_cast<std::int64_t>(m * k * n) <= kMatmulGrain) {
    ref::matmul(a, b, y, m, k, n);
    return;
  }
  const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i)
    matmul_row(a, b, y, static_cast<std::size_t>(i), k, n);
}

void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k) {
  if (static_cast<std::int64_t>(m * n * k) <= kMatmulGrain) {
    ref::matmul_nt(a, b, y, m, n, k);
    return;
  }
  const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i)
    matmul_nt_row(a, b, y, static_cast<std::size_t>(i), n, k);
}

void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n) {
  if (static_cast<std::int64_t>(k * m * n) <= kMatmulGrain) {
    ref::matmul_tn(a, b, y, m, k, n);
    return;
  }
  const std::int64_t rows = static_cast<std::int64_t>(k);
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i)
    matmul_tn_row(a, b, y, static_cast<std::size_t>(i), m, k, n);
}

void relu(const double* x, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::relu(x, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::relu_backward(x, dy, dx, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

void tanh(const double* x, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kMathGrain) {
    ref::tanh(x, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kMathGrain) {
    ref::tanh_backward(y, dy, dx, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

void add(const double* a, const double* b, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::add(a, b, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] = a[i] + b[i];
}

void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols) {
  if (static_cast<std::int64_t>(rows * cols) <= kElemGrain) {
    ref::add_rowwise(a, bias, y, rows, cols);
    return;
  }
  const std::int64_t r_end = static_cast<std::int64_t>(rows);
#pragma omp parallel for
  for (std::int64_t r = 0; r < r_end; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      y[r * static_cast<std::int64_t>(cols) + c] =
          a[r * static_cast<std::int64_t>(cols) + c] + bias[c];
}

void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols) {
  if (static_cast<std::int64_t>(rows * cols) <= kElemGrain) {
    ref::col_sums_accum(dy, dbias, rows, cols);
    return;
  }
  const std::int64_t c_end = static_cast<std::int64_t>(cols);
#pragma omp parallel for
  for (std::int64_t c = 0; c < c_end; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
      acc += dy[r * cols + static_cast<std::size_t>(c)];
    dbias[c] += acc;
  }
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::mul(a, b, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] = a[i] * b[i];
}

void scale(const double* x, double c, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::scale(x, c, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] = c * x[i];
}

void axpy(double c, const double* x, double* y, std::size_t n) {
  if (static_cast<std::int64_t>(n) <= kElemGrain) {
    ref::axpy(c, x, y, n);
    return;
  }
  const std::int64_t len = static_cast<std::int64_t>(n);
#pragma omp parallel for
  for (std::int64_t i = 0; i < len; ++i) y[i] += c * x[i];
}

void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs) {
  if (static_cast<std::int64_t>(rows * cols) <= kMathGrain) {
    ref::softmax_xent_rows(logits, labels, rows, cols, row_loss, probs);
    return;
  }
  const std::int64_t r_end = static_cast<std::int64_t>(rows);
#pragma omp parallel for
  for (std::int64_t r = 0; r < r_end; ++r)
    xent_row(logits, labels, static_cast<std::size_t>(r), cols, row_loss,
             probs);
}

}  // namespace par

// ----------------------------------------------------------- dispatch ----

#define AGSAM_DISPATCH(fn, ...)             \
  do {                                      \
    if (parallel_enabled())                 \
      par::fn(__VA_ARGS__);                 \
    else                                    \
      ref::fn(__VA_ARGS__);                 \
  } while (0)

void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n) {
  AGSAM_DISPATCH(matmul, a, b, y, m, k, n);
}
void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k) {
  AGSAM_DISPATCH(matmul_nt, a, b, y, m, n, k);
}
void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n) {
  AGSAM_DISPATCH(matmul_tn, a, b, y, m, k, n);
}
void relu(const double* x, double* y, std::size_t n) {
  AGSAM_DISPATCH(relu, x, y, n);
}
void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n) {
  AGSAM_DISPATCH(relu_backward, x, dy, dx, n);
}
void tanh(const double* x, double* y, std::size_t n) {
  AGSAM_DISPATCH(tanh, x, y, n);
}
void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n) {
  AGSAM_DISPATCH(tanh_backward, y, dy, dx, n);
}
void add(const double* a, const double* b, double* y, std::size_t n) {
  AGSAM_DISPATCH(add, a, b, y, n);
}
void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols) {
  AGSAM_DISPATCH(add_rowwise, a, bias, y, rows, cols);
}
void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols) {
  AGSAM_DISPATCH(col_sums_accum, dy, dbias, rows, cols);
}
void mul(const double* a, const double* b, double* y, std::size_t n) {
  AGSAM_DISPATCH(mul, a, b, y, n);
}
void scale(const double* x, double c, double* y, std::size_t n) {
  AGSAM_DISPATCH(scale, x, c, y, n);
}
void axpy(double c, const double* x, double* y, std::size_t n) {
  AGSAM_DISPATCH(axpy, c, x, y, n);
}
void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs) {
  AGSAM_DISPATCH(softmax_xent_rows, logits, labels, rows, cols, row_loss,
                 probs);
}

#undef AGSAM_DISPATCH

// --------------------------------------------------------- reductions ----

double sum_leftright(std::span<const double> x) {
  double acc = 0.0;
  for (const double v : x) acc += v;
  return acc;
}

namespace {
double pairwise_sum_impl(const double* x, std::size_t n) {
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(x, half) + pairwise_sum_impl(x + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> x) {
  return pairwise_sum_impl(x.data(), x.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return dot(a.subspan(0, half), b.subspan(0, half)) +
         dot(a.subspan(half), b.subspan(half));
}

double norm_sq(std::span<const double> x) { return dot(x, x); }

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace agsam::kernels
