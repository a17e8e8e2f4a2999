#include "osrlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace osrlab {

void MlpSpec::validate() const {
  if (widths.size() < 3) throw InvalidArgument("MLP needs input, at least one hidden layer, and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw InvalidArgument("MLP layer widths must be positive");
  }
  if (penultimate_width() < 2) throw InvalidArgument("penultimate width must be >= 2");
  if (class_count() < 2) throw InvalidArgument("MLP needs at least 2 output classes");
}

MlpSpec ModelParams::spec() const {
  MlpSpec s;
  if (layers.empty()) return s;
  s.widths.push_back(layers.front().weights.cols());
  for (const auto& layer : layers) s.widths.push_back(layer.weights.rows());
  return s;
}

std::size_t ModelParams::weight_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size();
  return n;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.layers.reserve(layers.size());
  for (const auto& layer : layers) {
    z.layers.push_back({Matrix(layer.weights.rows(), layer.weights.cols()), std::vector<double>(layer.bias.size(), 0.0)});
  }
  return z;
}

ModelParams init_model(const MlpSpec& spec, RngStream rng) {
  spec.validate();
  ModelParams params;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : layer.weights.values()) w = rng.normal(0.0, stddev);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

// Per-layer outputs of a batch forward pass. outputs[0] is the input;
// outputs[l + 1] is layer l's output (post-rectifier for hidden layers,
// raw logits for the last).
struct BatchActivations {
  std::vector<Matrix> outputs;

  const Matrix& logits() const { return outputs.back(); }
  const Matrix& penultimate() const { return outputs[outputs.size() - 2]; }
};

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

BatchActivations forward_batch(const ModelParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw InvalidArgument("model has no layers");
  if (inputs.cols() != params.layers.front().weights.cols()) {
    throw DimensionMismatch(params.layers.front().weights.cols(), inputs.cols());
  }
  BatchActivations acts;
  acts.outputs.reserve(params.layers.size() + 1);
  acts.outputs.push_back(inputs);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const Matrix wt = transpose(layer.weights);  // in x out
    const Matrix& in = acts.outputs.back();
    Matrix out(in.rows(), layer.weights.rows());
    const bool hidden = l + 1 < params.layers.size();
    for (std::size_t b = 0; b < in.rows(); ++b) {
      auto z = out.row(b);
      std::copy(layer.bias.begin(), layer.bias.end(), z.begin());
      auto x = in.row(b);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto w = wt.row(i);
        for (std::size_t o = 0; o < z.size(); ++o) z[o] += xi * w[o];
      }
      if (hidden) {
        for (double& v : z) v = v > 0.0 ? v : 0.0;
      }
    }
    acts.outputs.push_back(std::move(out));
  }
  return acts;
}

// log-softmax of one row into `out`.
void log_softmax_row(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_sum = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_sum;
}

double mean_cross_entropy(const Matrix& logits, const Matrix& targets, Matrix* probabilities) {
  if (targets.rows() != logits.rows()) throw DimensionMismatch(logits.rows(), targets.rows());
  if (targets.cols() != logits.cols()) throw DimensionMismatch(logits.cols(), targets.cols());
  std::vector<double> logp(logits.cols());
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    log_softmax_row(logits.row(b), logp);
    auto t = targets.row(b);
    for (std::size_t k = 0; k < logp.size(); ++k) {
      if (t[k] != 0.0) total -= t[k] * logp[k];
    }
    if (probabilities) {
      auto p = probabilities->row(b);
      for (std::size_t k = 0; k < logp.size(); ++k) p[k] = std::exp(logp[k]);
    }
  }
  return total / static_cast<double>(logits.rows());
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

void check_same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.layers.size() != b.layers.size()) throw DimensionMismatch(a.layers.size(), b.layers.size());
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weights.size() != b.layers[l].weights.size() || a.layers[l].bias.size() != b.layers[l].bias.size()) {
      throw DimensionMismatch("parameter shapes differ at layer " + std::to_string(l));
    }
  }
}

constexpr std::size_t kEvalChunk = 256;

template <class Fn>
void for_each_chunk(const Dataset& ds, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
    const std::size_t stop = std::min(ds.size(), start + kEvalChunk);
    idx.resize(stop - start);
    for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
    fn(make_batch(ds, idx), start);
  }
}

}  // namespace

RealVector softmax(std::span<const double> logits) {
  if (logits.empty()) throw EmptyInput("softmax");
  RealVector out(logits.size());
  log_softmax_row(logits, out);
  for (double& v : out) v = std::exp(v);
  return out;
}

ForwardResult forward(const ModelParams& params, std::span<const double> input) {
  Matrix x(1, input.size());
  std::copy(input.begin(), input.end(), x.row(0).begin());
  const auto acts = forward_batch(params, x);
  ForwardResult r;
  r.penultimate.assign(acts.penultimate().row(0).begin(), acts.penultimate().row(0).end());
  r.logits.assign(acts.logits().row(0).begin(), acts.logits().row(0).end());
  r.probabilities = softmax(r.logits);
  return r;
}

double batch_loss(const ModelParams& params, const Matrix& inputs, const Matrix& targets) {
  const auto acts = forward_batch(params, inputs);
  return mean_cross_entropy(acts.logits(), targets, nullptr);
}

LossAndGradient backward(const ModelParams& params, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() == 0) throw EmptyInput("backward on empty batch");
  const auto acts = forward_batch(params, inputs);
  const Matrix& logits = acts.logits();
  Matrix delta(logits.rows(), logits.cols());
  LossAndGradient out;
  out.loss = mean_cross_entropy(logits, targets, &delta);
  const double inv_batch = 1.0 / static_cast<double>(inputs.rows());
  // d loss / d logits = (p - t) / B
  for (std::size_t b = 0; b < delta.rows(); ++b) {
    auto d = delta.row(b);
    auto t = targets.row(b);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (d[k] - t[k]) * inv_batch;
  }

  out.grad = params.zeros_like();
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Matrix& in = acts.outputs[l];
    auto& g = out.grad.layers[l];
    for (std::size_t b = 0; b < delta.rows(); ++b) {
      auto d = delta.row(b);
      auto x = in.row(b);
      for (std::size_t o = 0; o < d.size(); ++o) {
        const double dz = d[o];
        g.bias[o] += dz;
        if (dz == 0.0) continue;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < x.size(); ++i) gw[i] += dz * x[i];
      }
    }
    if (l == 0) break;
    const Matrix& w = params.layers[l].weights;
    Matrix prev(delta.rows(), w.cols());
    for (std::size_t b = 0; b < delta.rows(); ++b) {
      auto d = delta.row(b);
      auto p = prev.row(b);
      for (std::size_t o = 0; o < d.size(); ++o) {
        const double dz = d[o];
        if (dz == 0.0) continue;
        auto wr = w.row(o);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += dz * wr[i];
      }
      // rectifier derivative read from the post-activation value
      auto a = in.row(b);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(a[i] > 0.0)) p[i] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return out;
}

double cosine_lr(double eta0, std::size_t t, std::size_t total_epochs) {
  if (total_epochs == 0) throw InvalidArgument("cosine_lr needs total_epochs > 0");
  if (t > total_epochs) throw InvalidArgument("cosine_lr epoch beyond schedule");
  if (t == total_epochs) return 0.0;
  const double frac = static_cast<double>(t) / static_cast<double>(total_epochs);
  return eta0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd-momentum";
}

void OptimizerConfig::validate() const {
  if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw InvalidArgument("adam epsilon must be positive");
}

void sgd_momentum_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity, double eta, double decay,
                       double momentum) {
  check_same_shape(params, grads);
  check_same_shape(params, velocity);
  const double shrink = 1.0 - eta * decay;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto w = params.layers[l].weights.values();
    auto gw = grads.layers[l].weights.values();
    auto vw = velocity.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      vw[i] = momentum * vw[i] + gw[i];
      w[i] = shrink * w[i] - eta * vw[i];
    }
    auto& b = params.layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    auto& vb = velocity.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      vb[i] = momentum * vb[i] + gb[i];
      b[i] -= eta * vb[i];
    }
  }
}

AdamState make_adam_state(const ModelParams& params) { return AdamState{params.zeros_like(), params.zeros_like(), 0}; }

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double eta, const AdamHyper& hyper,
               double decay) {
  check_same_shape(params, grads);
  check_same_shape(params, state.first);
  check_same_shape(params, state.second);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);

  auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v,
                    double decay_here) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + decay_here * p[i];
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= eta * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights.values(), grads.layers[l].weights.values(), state.first.layers[l].weights.values(),
           state.second.layers[l].weights.values(), decay);
    update(params.layers[l].bias, grads.layers[l].bias, state.first.layers[l].bias, state.second.layers[l].bias, 0.0);
  }
}

TrainResult train_model(const OpenClosedSplit& split, ModelParams initial, const OptimizerConfig& opt,
                        const RegStack& stack, RngStream rng) {
  opt.validate();
  stack.validate();
  const auto start = std::chrono::steady_clock::now();
  const MlpSpec spec = initial.spec();
  spec.validate();
  const std::size_t classes = split.closed_class_count();
  if (split.closed_train.empty()) throw EmptyInput("closed_train");
  if (spec.class_count() != classes) throw DimensionMismatch(classes, spec.class_count());
  if (spec.input_width() != split.closed_train.input_width()) {
    throw DimensionMismatch(spec.input_width(), split.closed_train.input_width());
  }

  TrainResult result{std::move(initial), {}};
  ModelParams& params = result.params;
  const double decay = stack.decay_coefficient(params.weight_count());

  RngStream batch_rng = rng.derive("batches");
  RngStream reg_rng = rng.derive("regularize");
  ModelParams velocity = params.zeros_like();
  AdamState adam = make_adam_state(params);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const double eta = cosine_lr(opt.eta0, epoch, opt.epochs);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& idx : batch_indices(split.closed_train.size(), opt.batch_size, true, batch_rng)) {
      const Batch batch = make_batch(split.closed_train, idx);
      // Mixing needs a partner; a trailing single-example batch trains unmixed.
      RegStack effective = stack;
      if (batch.size() < 2) effective.mix_mode = MixMode::None;
      const StackedBatch stacked = apply_stack(effective, batch, classes, reg_rng);
      auto lg = backward(params, stacked.inputs, stacked.targets);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
      if (opt.kind == OptimizerKind::SgdMomentum) {
        sgd_momentum_step(params, lg.grad, velocity, eta, decay, opt.momentum);
      } else {
        adam_step(params, lg.grad, adam, eta, opt.adam, decay);
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(seen);
    if (!std::isfinite(epoch_loss) || epoch_loss > 1e6) throw Divergence(epoch, epoch_loss);
    result.report.epoch_loss.push_back(epoch_loss);
    if (split.closed_val.empty()) {
      result.report.epoch_val_accuracy.push_back(std::nullopt);
    } else {
      result.report.epoch_val_accuracy.push_back(closed_accuracy(params, split.closed_val));
    }
  }
  result.report.final_ssw = ssw(params);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train_model(const OpenClosedSplit& split, const MlpSpec& spec, const OptimizerConfig& opt,
                        const RegStack& stack, RngStream rng) {
  return train_model(split, init_model(spec, rng.derive("init")), opt, stack, rng);
}

FeatureMatrix extract_penultimate(const ModelParams& params, const Dataset& ds) {
  if (params.layers.empty()) throw InvalidArgument("model has no layers");
  if (!ds.empty() && ds.input_width() != params.layers.front().weights.cols()) {
    throw DimensionMismatch(params.layers.front().weights.cols(), ds.input_width());
  }
  const std::size_t width = params.layers.back().weights.cols();
  std::vector<double> values;
  values.reserve(ds.size() * width);
  std::vector<std::int32_t> labels;
  labels.reserve(ds.size());
  for_each_chunk(ds, [&](const Batch& batch, std::size_t) {
    const auto acts = forward_batch(params, batch.inputs);
    for (double v : acts.penultimate().values()) values.push_back(static_cast<double>(static_cast<float>(v)));
    labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());
  });
  return FeatureMatrix(width, std::move(values), std::move(labels));
}

double ssw(const ModelParams& params) {
  double total = 0.0;
  for (const auto& layer : params.layers) {
    for (double w : layer.weights.values()) total += w * w;
  }
  return total;
}

double closed_accuracy(const ModelParams& params, const Dataset& ds) {
  if (ds.empty()) throw EmptyInput("closed_accuracy");
  std::size_t correct = 0;
  for_each_chunk(ds, [&](const Batch& batch, std::size_t) {
    const auto acts = forward_batch(params, batch.inputs);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (static_cast<std::int32_t>(argmax_lowest(acts.logits().row(b))) == batch.labels[b]) ++correct;
    }
  });
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace osrlab
