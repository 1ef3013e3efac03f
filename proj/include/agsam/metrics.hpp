#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "agsam/mlp.hpp"
#include "agsam/optim.hpp"
#include "agsam/param_vector.hpp"

namespace agsam::metrics {

struct CosineRecord {
  std::uint64_t step = 0;
  std::optional<double> cosine_b;  // cos(grad_t(theta_l), grad_v(theta_v_l))
  std::optional<double> cosine_a;  // same pair one update later
  std::optional<double> change;    // (cosine_a - cosine_b) / cosine_a
};

// cosine_b from step l quantities, cosine_a from step l+1 quantities. Any
// gradient norm below 1e-12 leaves the affected fields absent, as does
// |cosine_a| <= 1e-12 for the change ratio.
CosineRecord cosine_metrics(const optim::StepTrace& trace_l,
                            const optim::StepTrace& trace_l1,
                            std::uint64_t step);

struct SpectrumRecord {
  std::vector<double> eigenvalues;  // descending |lambda|, signed values
  std::vector<int> iterations_used;
};

// Power iteration on the finite-difference Hessian-vector operator, with
// rank-one deflation after each converged pair. Convergence: successive
// Rayleigh quotients within 1e-6 relative, or 1000 iterations.
SpectrumRecord top_eigenvalues(const GradFn& grad_fn, const ParamVector& theta,
                               int k_top, std::uint64_t seed = 0);

struct LandscapeSlice {
  int resolution = 0;  // n; the grid is (2n+1) x (2n+1)
  double extent = 0.0;
  ParamVector dir1;
  ParamVector dir2;
  std::vector<double> grid;  // row-major over i, then j, both in [-n, n]

  double at(int i, int j) const;
};

// Loss surface through theta spanned by two random directions. The raw
// Gaussian directions are rescaled segment-by-segment to the parameter
// segment norms, then Gram-Schmidt orthogonalized and unit-normalized.
// Cell (i,j) holds loss(theta + (i*extent/n) d1 + (j*extent/n) d2);
// cells are evaluated in parallel, one forward pass each.
LandscapeSlice landscape_slice(const ValueFn& loss_fn, const ParamVector& theta,
                               double extent, int resolution,
                               std::uint64_t seed);

// header "i,j,u,v,loss"
void write_slice_csv(const std::filesystem::path& path,
                     const LandscapeSlice& slice);
// header "rank,eigenvalue,iterations"
void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumRecord& record);

}  // namespace agsam::metrics
