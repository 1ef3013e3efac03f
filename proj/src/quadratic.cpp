#include "agsam/quadratic.hpp"

#include <stdexcept>

#include "agsam/kernels.hpp"
#include "agsam/rng.hpp"

namespace agsam {

ParamVector make_param_vector(std::vector<double> values) {
  auto layout = flat_layout(values.size());
  return ParamVector(std::move(layout), std::move(values));
}

QuadraticLoss::QuadraticLoss(std::vector<double> matrix,
                             std::vector<double> center)
    : matrix_(std::move(matrix)), center_(std::move(center)) {
  const std::size_t d = center_.size();
  if (matrix_.size() != d * d)
    throw std::invalid_argument("QuadraticLoss: matrix is not dim x dim");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (matrix_[i * d + j] != matrix_[j * d + i])
        throw std::invalid_argument("QuadraticLoss: matrix not symmetric");
}

double QuadraticLoss::value(const ParamVector& theta) const {
  const std::size_t d = dim();
  std::vector<double> r(d);
  for (std::size_t i = 0; i < d; ++i) r[i] = theta[i] - center_[i];
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += matrix_[i * d + j] * r[j];
    acc += r[i] * row;
  }
  return 0.5 * acc;
}

ParamVector QuadraticLoss::grad(const ParamVector& theta) const {
  const std::size_t d = dim();
  ParamVector g = ParamVector::zeros(theta.layout());
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      acc += matrix_[i * d + j] * (theta[j] - center_[j]);
    g[i] = acc;
  }
  return g;
}

ParamVector QuadraticLoss::hess_vec(const ParamVector& v) const {
  const std::size_t d = dim();
  ParamVector out = ParamVector::zeros(v.layout());
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += matrix_[i * d + j] * v[j];
    out[i] = acc;
  }
  return out;
}

QuadraticLoss QuadraticLoss::diagonal(std::vector<double> diag,
                                      std::vector<double> center) {
  const std::size_t d = diag.size();
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = diag[i];
  return QuadraticLoss(std::move(m), std::move(center));
}

QuadraticLoss QuadraticLoss::random_spd(std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> m(dim * dim);
  for (double& v : m) v = rng.next_gaussian();
  std::vector<double> a(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k)
        acc += m[k * dim + i] * m[k * dim + j];
      a[i * dim + j] = acc / static_cast<double>(dim);
    }
  for (std::size_t i = 0; i < dim; ++i) a[i * dim + i] += 0.1;
  std::vector<double> center(dim);
  for (double& v : center) v = rng.next_gaussian();
  return QuadraticLoss(std::move(a), std::move(center));
}

QuadraticLoss QuadraticLoss::random_symmetric(std::size_t dim,
                                              std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> m(dim * dim);
  for (double& v : m) v = rng.next_gaussian();
  std::vector<double> a(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      a[i * dim + j] = 0.5 * (m[i * dim + j] + m[j * dim + i]);
  std::vector<double> center(dim);
  for (double& v : center) v = rng.next_gaussian();
  return QuadraticLoss(std::move(a), std::move(center));
}

}  // namespace agsam
