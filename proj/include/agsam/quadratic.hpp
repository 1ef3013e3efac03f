#pragma once

#include <cstdint>
#include <vector>

#include "agsam/param_vector.hpp"

namespace agsam {

// L(theta) = 1/2 (theta - c)^T A (theta - c) with symmetric A. Gradient and
// Hessian-vector products are closed-form, which makes these the exact
// oracles for the optimizer and congruence checks.
class QuadraticLoss {
 public:
  QuadraticLoss(std::vector<double> matrix, std::vector<double> center);

  std::size_t dim() const { return center_.size(); }
  const std::vector<double>& matrix() const { return matrix_; }

  double value(const ParamVector& theta) const;
  ParamVector grad(const ParamVector& theta) const;
  ParamVector hess_vec(const ParamVector& v) const;

  static QuadraticLoss diagonal(std::vector<double> diag,
                                std::vector<double> center);
  // A = M^T M / dim + 0.1 I, strictly positive definite
  static QuadraticLoss random_spd(std::size_t dim, std::uint64_t seed);
  // A = (M + M^T)/2, generically indefinite
  static QuadraticLoss random_symmetric(std::size_t dim, std::uint64_t seed);

 private:
  std::vector<double> matrix_;  // dim x dim, symmetric
  std::vector<double> center_;
};

ParamVector make_param_vector(std::vector<double> values);

}  // namespace agsam
