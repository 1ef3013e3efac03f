#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "agsam/batch.hpp"
#include "agsam/param_vector.hpp"

namespace agsam {

enum class Activation { kRelu, kTanh };

// Fully-connected classifier: widths = input, hidden..., output.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::kRelu;
  std::uint64_t init_seed = 0;

  void validate() const;
  std::size_t param_count() const;
  LayoutPtr layout() const;  // layer{i}.weight / layer{i}.bias segments
};

// Kaiming-style scaled-uniform weights (bound sqrt(6/fan_in)), zero biases.
// Bit-identical for identical init_seed.
ParamVector init_model(const MlpSpec& spec);

struct BatchEval {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct BatchGradEval {
  double loss = 0.0;
  double accuracy = 0.0;
  ParamVector grad;
};

// Mean cross-entropy and accuracy over the batch; argmax ties break toward
// the lowest class index.
BatchEval batch_eval(const MlpSpec& spec, const ParamVector& theta,
                     const Batch& batch);

// Same, plus d(mean loss)/d(theta) on theta's layout.
BatchGradEval batch_loss(const MlpSpec& spec, const ParamVector& theta,
                         const Batch& batch);

// Scalar loss field over parameters, with its gradient. The probes built
// from batch_loss construct a fresh tape per call, so they are safe to
// evaluate from concurrent threads.
using ValueFn = std::function<double(const ParamVector&)>;
using GradFn = std::function<ParamVector(const ParamVector&)>;

ValueFn make_value_fn(const MlpSpec& spec, Batch batch);
GradFn make_grad_fn(const MlpSpec& spec, Batch batch);

}  // namespace agsam
