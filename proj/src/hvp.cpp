#include "agsam/hvp.hpp"

#include <cmath>
#include <stdexcept>

namespace agsam {

ParamVector hvp(const GradFn& grad_fn, const ParamVector& theta,
                const ParamVector& v) {
  const double v_norm = v.norm();
  if (v_norm == 0.0)
    throw std::invalid_argument("hvp: direction has zero norm");
  const double h =
      std::sqrt(0x1.0p-52) * (1.0 + theta.norm()) / v_norm;

  ParamVector plus = theta;
  plus.axpy(h, v);
  ParamVector minus = theta;
  minus.axpy(-h, v);

  ParamVector result = grad_fn(plus);
  result -= grad_fn(minus);
  result *= 1.0 / (2.0 * h);
  return result;
}

}  // namespace agsam
