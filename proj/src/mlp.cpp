#include "agsam/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "agsam/rng.hpp"
#include "agsam/tensor.hpp"

namespace agsam {

void MlpSpec::validate() const {
  if (layer_widths.size() < 2)
    throw std::invalid_argument("MlpSpec: need at least input and output widths");
  for (const std::size_t w : layer_widths)
    if (w == 0) throw std::invalid_argument("MlpSpec: zero layer width");
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
    n += layer_widths[l] * layer_widths[l + 1] + layer_widths[l + 1];
  return n;
}

LayoutPtr MlpSpec::layout() const {
  validate();
  std::vector<Segment> segments;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    const std::size_t in = layer_widths[l], out = layer_widths[l + 1];
    const std::string base = "layer" + std::to_string(l);
    segments.push_back({base + ".weight", offset, in * out});
    offset += in * out;
    segments.push_back({base + ".bias", offset, out});
    offset += out;
  }
  return std::make_shared<const ParamLayout>(std::move(segments));
}

ParamVector init_model(const MlpSpec& spec) {
  spec.validate();
  ParamVector theta = ParamVector::zeros(spec.layout());
  SplitMix64 rng(SplitMix64::derive(spec.init_seed, Stream::kModelInit));
  std::size_t seg = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(spec.layer_widths[l]));
    auto w = theta.segment(seg);
    for (double& v : w) v = bound * (2.0 * rng.next_unit() - 1.0);
    seg += 2;  // bias segment stays zero
  }
  return theta;
}

namespace {

struct ForwardResult {
  Tensor loss;
  double accuracy = 0.0;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
};

ForwardResult forward(Tape& tape, const MlpSpec& spec,
                      const ParamVector& theta, const Batch& batch,
                      bool with_grad) {
  if (batch.rows == 0)
    throw std::invalid_argument("batch_loss: empty batch");
  if (batch.dim != spec.layer_widths.front())
    throw std::invalid_argument(
        "batch_loss: feature width " + std::to_string(batch.dim) +
        " does not match model input width " +
        std::to_string(spec.layer_widths.front()));
  if (theta.size() != spec.param_count())
    throw std::invalid_argument("batch_loss: parameter vector has " +
                                std::to_string(theta.size()) + " values, model needs " +
                                std::to_string(spec.param_count()));

  ForwardResult r;
  Tensor h = tape.leaf({batch.rows, batch.dim},
                       std::span<const double>(batch.features));
  const std::size_t n_layers = spec.layer_widths.size() - 1;
  std::size_t seg = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = spec.layer_widths[l];
    const std::size_t out = spec.layer_widths[l + 1];
    Tensor w = tape.leaf({in, out}, theta.segment(seg), with_grad);
    Tensor b = tape.leaf({out}, theta.segment(seg + 1), with_grad);
    seg += 2;
    r.weights.push_back(w);
    r.biases.push_back(b);
    h = add(matmul(h, w), b);
    if (l + 1 < n_layers)
      h = spec.activation == Activation::kRelu ? relu(h) : agsam::tanh(h);
  }

  // accuracy from raw logits, lowest index wins ties
  const std::size_t classes = spec.layer_widths.back();
  std::size_t correct = 0;
  for (std::size_t row = 0; row < batch.rows; ++row) {
    const double* lr = h.value().data() + row * classes;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (lr[c] > lr[best]) best = c;
    if (best == static_cast<std::size_t>(batch.labels[row])) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(batch.rows);
  r.loss = softmax_cross_entropy(h, batch.labels);
  return r;
}

}  // namespace

BatchEval batch_eval(const MlpSpec& spec, const ParamVector& theta,
                     const Batch& batch) {
  Tape tape;
  ForwardResult r = forward(tape, spec, theta, batch, false);
  return {r.loss.scalar(), r.accuracy};
}

BatchGradEval batch_loss(const MlpSpec& spec, const ParamVector& theta,
                         const Batch& batch) {
  Tape tape;
  ForwardResult r = forward(tape, spec, theta, batch, true);
  tape.backward(r.loss);

  ParamVector grad = ParamVector::zeros(theta.layout());
  std::size_t seg = 0;
  for (std::size_t l = 0; l < r.weights.size(); ++l) {
    auto wg = r.weights[l].grad();
    auto ws = grad.segment(seg);
    std::copy(wg.begin(), wg.end(), ws.begin());
    auto bg = r.biases[l].grad();
    auto bs = grad.segment(seg + 1);
    std::copy(bg.begin(), bg.end(), bs.begin());
    seg += 2;
  }
  return {r.loss.scalar(), r.accuracy, std::move(grad)};
}

ValueFn make_value_fn(const MlpSpec& spec, Batch batch) {
  return [spec, batch = std::move(batch)](const ParamVector& theta) {
    return batch_eval(spec, theta, batch).loss;
  };
}

GradFn make_grad_fn(const MlpSpec& spec, Batch batch) {
  return [spec, batch = std::move(batch)](const ParamVector& theta) {
    return batch_loss(spec, theta, batch).grad;
  };
}

}  // namespace agsam
