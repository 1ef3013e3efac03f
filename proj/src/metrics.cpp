#include "agsam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "agsam/csv.hpp"
#include "agsam/hvp.hpp"
#include "agsam/kernels.hpp"
#include "agsam/rng.hpp"

namespace agsam::metrics {

namespace {

constexpr double kNormGuard = 1e-12;

std::optional<double> cosine(const ParamVector& a, const ParamVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= kNormGuard || nb <= kNormGuard) return std::nullopt;
  return a.dot(b) / (na * nb);
}

}  // namespace

CosineRecord cosine_metrics(const optim::StepTrace& trace_l,
                            const optim::StepTrace& trace_l1,
                            std::uint64_t step) {
  if (trace_l.grad_t_theta.layout() &&
      trace_l1.grad_t_theta.layout() &&
      !(*trace_l.grad_t_theta.layout() == *trace_l1.grad_t_theta.layout()))
    throw std::invalid_argument("cosine_metrics: traces use different layouts");

  CosineRecord rec;
  rec.step = step;
  rec.cosine_b = cosine(trace_l.grad_t_theta, trace_l.grad_v_tilde_v);
  rec.cosine_a = cosine(trace_l1.grad_t_theta, trace_l1.grad_v_tilde_v);
  if (rec.cosine_a && rec.cosine_b && std::abs(*rec.cosine_a) > kNormGuard)
    rec.change = (*rec.cosine_a - *rec.cosine_b) / *rec.cosine_a;
  return rec;
}

// ------------------------------------------------------------ spectrum ----

SpectrumRecord top_eigenvalues(const GradFn& grad_fn, const ParamVector& theta,
                               int k_top, std::uint64_t seed) {
  if (k_top <= 0)
    throw std::invalid_argument("top_eigenvalues: k_top must be positive");
  if (static_cast<std::size_t>(k_top) > theta.size())
    throw std::invalid_argument(
        "top_eigenvalues: k_top " + std::to_string(k_top) +
        " exceeds parameter count " + std::to_string(theta.size()));

  SpectrumRecord rec;
  std::vector<ParamVector> basis;
  std::vector<double> lambdas;

  // H v with converged pairs projected out
  const auto deflated = [&](const ParamVector& v) {
    ParamVector w = hvp(grad_fn, theta, v);
    for (std::size_t i = 0; i < basis.size(); ++i)
      w.axpy(-lambdas[i] * basis[i].dot(v), basis[i]);
    return w;
  };

  // plain power loop on sign*H + shift*I; stops when successive Rayleigh
  // quotients of the shifted operator are within 1e-6 relative, or at the
  // iteration cap
  const auto power_loop = [&](ParamVector& v, double sign, double shift,
                              int max_iter, int& iters) {
    double rayleigh = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < max_iter; ++iter) {
      ParamVector w = deflated(v);
      if (sign != 1.0) w *= sign;
      if (shift != 0.0) w.axpy(shift, v);
      rayleigh = v.dot(w);
      const double wn = w.norm();
      if (wn < 1e-300) {  // operator annihilates v; remaining spectrum is 0
        rayleigh = 0.0;
        ++iter;
        break;
      }
      w *= 1.0 / wn;
      v = std::move(w);
      if (std::abs(rayleigh - prev) <
          1e-6 * std::max(std::abs(rayleigh), 1e-30)) {
        ++iter;
        break;
      }
      prev = rayleigh;
    }
    iters += iter;
    return rayleigh;
  };

  SplitMix64 rng(SplitMix64::derive(seed, Stream::kSpectrum));
  for (int rank = 0; rank < k_top; ++rank) {
    ParamVector v = ParamVector::zeros(theta.layout());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.next_gaussian();
    v *= 1.0 / v.norm();

    int iters = 0;
    double rayleigh = power_loop(v, 1.0, 0.0, 1000, iters);

    // A near-equal opposite-sign pair makes the plain iteration oscillate.
    // Polishing on sign*H + shift*I sends the dominant signed eigenvalue to
    // a well-separated positive one; for already-converged pairs the stop
    // rule fires immediately and the value is unchanged.
    if (rayleigh != 0.0) {
      const double sign = rayleigh >= 0.0 ? 1.0 : -1.0;
      const double shift = 1.25 * std::abs(rayleigh);
      const double shifted = power_loop(v, sign, shift, 1000, iters);
      rayleigh = sign * (shifted - shift);
    }

    rec.eigenvalues.push_back(rayleigh);
    rec.iterations_used.push_back(iters);
    basis.push_back(v);
    lambdas.push_back(rayleigh);
  }

  // deflation wobble can reorder near-equal magnitudes; restore the
  // descending-|lambda| contract
  std::vector<std::size_t> order(rec.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(rec.eigenvalues[a]) > std::abs(rec.eigenvalues[b]);
  });
  SpectrumRecord sorted;
  for (const std::size_t i : order) {
    sorted.eigenvalues.push_back(rec.eigenvalues[i]);
    sorted.iterations_used.push_back(rec.iterations_used[i]);
  }
  return sorted;
}

// ------------------------------------------------------------- slices ----

double LandscapeSlice::at(int i, int j) const {
  const int n = resolution;
  const int side = 2 * n + 1;
  return grid[static_cast<std::size_t>(i + n) * side +
              static_cast<std::size_t>(j + n)];
}

LandscapeSlice landscape_slice(const ValueFn& loss_fn,
                               const ParamVector& theta, double extent,
                               int resolution, std::uint64_t seed) {
  if (extent <= 0.0)
    throw std::invalid_argument("landscape_slice: extent must be positive");
  if (resolution < 1)
    throw std::invalid_argument("landscape_slice: resolution must be >= 1");

  const auto segments = theta.layout()->segments();
  ParamVector d1, d2;
  bool ok = false;
  for (std::uint64_t attempt = 0; attempt < 10 && !ok; ++attempt) {
    SplitMix64 rng(SplitMix64::derive(
        SplitMix64::derive(seed, Stream::kSliceDirections), attempt));
    ParamVector a = ParamVector::zeros(theta.layout());
    ParamVector b = ParamVector::zeros(theta.layout());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.next_gaussian();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.next_gaussian();

    // rescale each segment to the matching parameter-segment norm;
    // zero-norm parameter segments keep the raw Gaussian draw
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const double target = kernels::norm(theta.segment(s));
      if (target == 0.0) continue;
      for (ParamVector* d : {&a, &b}) {
        auto seg = d->segment(s);
        const double n = kernels::norm(seg);
        if (n == 0.0) continue;
        const double f = target / n;
        for (double& v : seg) v *= f;
      }
    }

    const double na = a.norm();
    if (na < kNormGuard) continue;
    a *= 1.0 / na;
    b.axpy(-a.dot(b), a);
    const double nb = b.norm();
    if (nb < kNormGuard) continue;
    b *= 1.0 / nb;
    d1 = std::move(a);
    d2 = std::move(b);
    ok = true;
  }
  if (!ok)
    throw std::runtime_error(
        "landscape_slice: could not draw independent directions in 10 tries");

  LandscapeSlice slice;
  slice.resolution = resolution;
  slice.extent = extent;
  slice.dir1 = d1;
  slice.dir2 = d2;
  const int n = resolution;
  const int side = 2 * n + 1;
  slice.grid.assign(static_cast<std::size_t>(side) * side, 0.0);
  const double step = extent / static_cast<double>(n);

#pragma omp parallel for schedule(dynamic)
  for (int cell = 0; cell < side * side; ++cell) {
    const int i = cell / side - n;
    const int j = cell % side - n;
    ParamVector point = theta;
    point.axpy(static_cast<double>(i) * step, d1);
    point.axpy(static_cast<double>(j) * step, d2);
    slice.grid[static_cast<std::size_t>(cell)] = loss_fn(point);
  }
  return slice;
}

void write_slice_csv(const std::filesystem::path& path,
                     const LandscapeSlice& slice) {
  std::ofstream f(path);
  if (!f)
    throw std::runtime_error("write_slice_csv: cannot open " + path.string());
  f << "i,j,u,v,loss\n";
  const int n = slice.resolution;
  const double step = slice.extent / static_cast<double>(n);
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      f << i << "," << j << "," << csv::format(i * step) << ","
        << csv::format(j * step) << "," << csv::format(slice.at(i, j)) << "\n";
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumRecord& record) {
  std::ofstream f(path);
  if (!f)
    throw std::runtime_error("write_spectrum_csv: cannot open " +
                             path.string());
  f << "rank,eigenvalue,iterations\n";
  for (std::size_t r = 0; r < record.eigenvalues.size(); ++r)
    f << (r + 1) << "," << csv::format(record.eigenvalues[r]) << ","
      << record.iterations_used[r] << "\n";
}

}  // namespace agsam::metrics
