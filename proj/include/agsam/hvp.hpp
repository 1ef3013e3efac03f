#pragma once

#include "agsam/mlp.hpp"
#include "agsam/param_vector.hpp"

namespace agsam {

// H(theta) * v by central differencing of first-order gradients:
//
//   (grad(theta + h v) - grad(theta - h v)) / (2 h),
//   h = sqrt(2^-52) * (1 + ||theta||) / ||v||
//
// Exact (to rounding) on quadratics. Throws if ||v|| == 0.
ParamVector hvp(const GradFn& grad_fn, const ParamVector& theta,
                const ParamVector& v);

}  // namespace agsam
