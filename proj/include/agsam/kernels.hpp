#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the tensor and parameter-vector layers.
//
// Every kernel has a serial reference implementation (kernels::ref) and an
// OpenMP one (kernels::par). The parallel versions split work only across
// independent output elements; the per-element arithmetic and accumulation
// order are shared with the reference, so both produce bitwise-identical
// results for any thread count. The unprefixed entry points dispatch on a
// process-wide switch (default: parallel).
//
// Scalar reductions are not parallelized: sum_leftright is the fixed
// left-to-right tape order, pairwise_sum is the fixed-tree policy used for
// batch means, dots and norms.
namespace agsam::kernels {

bool parallel_enabled();
void set_parallel(bool enabled);

namespace ref {
// y[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n);
// y[m,k] = a[m,n] * b[k,n]^T
void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k);
// y[k,n] = a[m,k]^T * b[m,n]
void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n);
void tanh(const double* x, double* y, std::size_t n);
// dx += dy * (1 - y^2), y = tanh(x)
void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n);
void add(const double* a, const double* b, double* y, std::size_t n);
// y[r,c] = a[r,c] + bias[c]
void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols);
// dbias[c] += sum_r dy[r,c], rows accumulated in ascending order
void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols);
void mul(const double* a, const double* b, double* y, std::size_t n);
void scale(const double* x, double c, double* y, std::size_t n);
// y += c * x
void axpy(double c, const double* x, double* y, std::size_t n);
// Row-wise stable softmax + cross-entropy. Writes per-row loss and the
// softmax probabilities (kept for the backward pass).
void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs);
}  // namespace ref

namespace par {
void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k);
void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n);
void tanh(const double* x, double* y, std::size_t n);
void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n);
void add(const double* a, const double* b, double* y, std::size_t n);
void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols);
void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols);
void mul(const double* a, const double* b, double* y, std::size_t n);
void scale(const double* x, double c, double* y, std::size_t n);
void axpy(double c, const double* x, double* y, std::size_t n);
void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs);
}  // namespace par

void matmul(const double* a, const double* b, double* y, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* y, std::size_t m,
               std::size_t n, std::size_t k);
void matmul_tn(const double* a, const double* b, double* y, std::size_t m,
               std::size_t k, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_backward(const double* x, const double* dy, double* dx,
                   std::size_t n);
void tanh(const double* x, double* y, std::size_t n);
void tanh_backward(const double* y, const double* dy, double* dx,
                   std::size_t n);
void add(const double* a, const double* b, double* y, std::size_t n);
void add_rowwise(const double* a, const double* bias, double* y,
                 std::size_t rows, std::size_t cols);
void col_sums_accum(const double* dy, double* dbias, std::size_t rows,
                    std::size_t cols);
void mul(const double* a, const double* b, double* y, std::size_t n);
void scale(const double* x, double c, double* y, std::size_t n);
void axpy(double c, const double* x, double* y, std::size_t n);
void softmax_xent_rows(const double* logits, const int* labels,
                       std::size_t rows, std::size_t cols, double* row_loss,
                       double* probs);

// fixed left-to-right accumulation (tape-sum order)
double sum_leftright(std::span<const double> x);
// fixed-tree pairwise accumulation (batch means, dots, norms)
double pairwise_sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> x);
double norm(std::span<const double> x);

}  // namespace agsam::kernels
