#include "osrlab/regularize.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace osrlab {

void SmoothingConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("smoothing alpha must lie in [0, 1)");
  if (class_count < 1) throw InvalidArgument("smoothing needs at least one class");
}

RealVector smooth_targets(std::span<const double> target, const SmoothingConfig& cfg) {
  cfg.validate();
  if (target.size() != cfg.class_count) throw DimensionMismatch(cfg.class_count, target.size());
  const double u = 1.0 / static_cast<double>(cfg.class_count);
  RealVector out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) out[i] = (1.0 - cfg.alpha) * target[i] + cfg.alpha * u;
  return out;
}

double cross_entropy(std::span<const double> target, std::span<const double> pred) {
  if (target.size() != pred.size()) throw DimensionMismatch(target.size(), pred.size());
  double h = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target[i] == 0.0) continue;
    if (!(pred[i] > 0.0)) throw InvalidArgument("cross entropy undefined for zero predicted probability");
    h -= target[i] * std::log(pred[i]);
  }
  return h;
}

double kl_uniform_to(std::span<const double> pred) {
  if (pred.empty()) throw EmptyInput("kl_uniform_to");
  const double u = 1.0 / static_cast<double>(pred.size());
  const double log_u = std::log(u);
  double kl = 0.0;
  for (double p : pred) {
    if (!(p > 0.0)) throw InvalidArgument("KL divergence undefined for zero predicted probability");
    kl += u * (log_u - std::log(p));
  }
  return kl;
}

double uniform_entropy(std::size_t class_count) { return std::log(static_cast<double>(class_count)); }

LabelSmoothingLoss label_smoothing_loss(std::span<const double> pred, std::span<const double> onehot,
                                        const SmoothingConfig& cfg) {
  cfg.validate();
  if (pred.size() != cfg.class_count) throw DimensionMismatch(cfg.class_count, pred.size());
  for (double p : pred) {
    if (!(p > 0.0)) throw InvalidArgument("label smoothing loss needs strictly positive predictions");
  }
  const RealVector smoothed = smooth_targets(onehot, cfg);
  LabelSmoothingLoss loss;
  loss.smoothed_cross_entropy = cross_entropy(smoothed, pred);
  loss.regularized_loss = cross_entropy(onehot, pred) + cfg.alpha / (1.0 - cfg.alpha) * kl_uniform_to(pred);
  return loss;
}

double l2_penalty(std::span<const double> weights, double lambda, std::size_t n_weights) {
  if (n_weights == 0) throw InvalidArgument("l2_penalty needs n_weights > 0");
  double ssq = 0.0;
  for (double w : weights) ssq += w * w;
  return lambda / (2.0 * static_cast<double>(n_weights)) * ssq;
}

double weight_decay_update(double w, double grad, double eta, double lambda_over_n) {
  return (1.0 - eta * lambda_over_n) * w - eta * grad;
}

double CutBox::ratio() const {
  const std::size_t total = image_width * image_height;
  if (total == 0) return 0.0;
  return static_cast<double>(area()) / static_cast<double>(total);
}

Matrix one_hot(std::span<const std::int32_t> labels, std::size_t class_count) {
  Matrix out(labels.size(), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " outside " + std::to_string(class_count) + " classes");
    }
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

namespace {

void check_partner(std::span<const std::size_t> partner, std::size_t rows) {
  if (partner.size() != rows) throw DimensionMismatch(rows, partner.size());
  std::vector<bool> seen(rows, false);
  for (std::size_t p : partner) {
    if (p >= rows || seen[p]) throw InvalidArgument("mix partner list is not a permutation");
    seen[p] = true;
  }
}

// Weights are passed separately so a ratio r lands on the partner exactly,
// not as 1 - (1 - r).
void blend_rows(Matrix& out, const Matrix& src, std::span<const std::size_t> partner, double self_weight,
                double partner_weight) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    auto dst = out.row(i);
    auto a = src.row(i);
    auto b = src.row(partner[i]);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = self_weight * a[j] + partner_weight * b[j];
  }
}

}  // namespace

MixedBatch apply_mixup(const Matrix& inputs, const Matrix& targets, const MixPlan& plan) {
  if (inputs.rows() != targets.rows()) throw DimensionMismatch(inputs.rows(), targets.rows());
  if (!(plan.lambda >= 0.0 && plan.lambda <= 1.0)) throw InvalidArgument("mixup lambda outside [0, 1]");
  check_partner(plan.partner, inputs.rows());
  MixedBatch out{Matrix(inputs.rows(), inputs.cols()), Matrix(targets.rows(), targets.cols())};
  blend_rows(out.inputs, inputs, plan.partner, plan.lambda, 1.0 - plan.lambda);
  blend_rows(out.targets, targets, plan.partner, plan.lambda, 1.0 - plan.lambda);
  return out;
}

std::pair<MixedBatch, MixPlan> mixup_batch(const Batch& batch, const Matrix& targets, RngStream& rng) {
  if (batch.size() < 2) throw InvalidArgument("mixup needs a batch of at least 2 examples");
  MixPlan plan;
  plan.lambda = rng.uniform();
  plan.partner = rng.permutation(batch.size());
  auto mixed = apply_mixup(batch.inputs, targets, plan);
  return {std::move(mixed), std::move(plan)};
}

CutBox cut_box_from(std::size_t width, std::size_t height, double lambda, double cx, double cy) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("cutmix lambda outside [0, 1]");
  const double side = std::sqrt(1.0 - lambda);
  const double cut_w = static_cast<double>(width) * side;
  const double cut_h = static_cast<double>(height) * side;
  auto clip = [](double v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp(std::llround(v), 0LL, static_cast<long long>(hi)));
  };
  const std::size_t x0 = clip(cx - cut_w / 2.0, width);
  const std::size_t x1 = clip(cx + cut_w / 2.0, width);
  const std::size_t y0 = clip(cy - cut_h / 2.0, height);
  const std::size_t y1 = clip(cy + cut_h / 2.0, height);
  return CutBox{x0, y0, x1 - x0, y1 - y0, width, height};
}

MixedBatch apply_cutmix(const Matrix& inputs, const Matrix& targets, const ImageShape& shape,
                        std::span<const std::size_t> partner, const CutBox& box) {
  if (inputs.rows() != targets.rows()) throw DimensionMismatch(inputs.rows(), targets.rows());
  if (inputs.cols() != shape.pixels()) throw DimensionMismatch(shape.pixels(), inputs.cols());
  if (box.image_width != shape.width || box.image_height != shape.height) {
    throw InvalidArgument("cut box was built for a different image size");
  }
  if (box.x0 + box.w > shape.width || box.y0 + box.h > shape.height) throw InvalidArgument("cut box outside image");
  check_partner(partner, inputs.rows());

  MixedBatch out{inputs, Matrix(targets.rows(), targets.cols())};
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    auto dst = out.inputs.row(i);
    auto src = inputs.row(partner[i]);
    for (std::size_t c = 0; c < shape.channels; ++c) {
      for (std::size_t y = box.y0; y < box.y0 + box.h; ++y) {
        const std::size_t base = (c * shape.height + y) * shape.width;
        for (std::size_t x = box.x0; x < box.x0 + box.w; ++x) dst[base + x] = src[base + x];
      }
    }
  }
  const double r = box.ratio();
  blend_rows(out.targets, targets, partner, 1.0 - r, r);
  return out;
}

CutMixResult cutmix_batch_detailed(const Batch& batch, const Matrix& targets, RngStream& rng) {
  if (!batch.image_shape) throw InvalidArgument("cutmix requires image-shaped payloads");
  if (batch.size() < 2) throw InvalidArgument("cutmix needs a batch of at least 2 examples");
  const auto& shape = *batch.image_shape;
  const double lambda = rng.uniform();
  const double cx = rng.uniform(0.0, static_cast<double>(shape.width));
  const double cy = rng.uniform(0.0, static_cast<double>(shape.height));
  CutBox box = cut_box_from(shape.width, shape.height, lambda, cx, cy);
  auto partner = rng.permutation(batch.size());
  auto mixed = apply_cutmix(batch.inputs, targets, shape, partner, box);
  return {std::move(mixed), box, std::move(partner)};
}

std::pair<MixedBatch, CutBox> cutmix_batch(const Batch& batch, const Matrix& targets, RngStream& rng) {
  auto r = cutmix_batch_detailed(batch, targets, rng);
  return {std::move(r.batch), r.box};
}

std::string_view to_string(MixMode mode) {
  switch (mode) {
    case MixMode::None: return "none";
    case MixMode::Mixup: return "mixup";
    case MixMode::CutMix: return "cutmix";
  }
  return "unknown";
}

double RegStack::decay_coefficient(std::size_t n_weights) const {
  if (!weight_decay) return 0.0;
  if (n_weights == 0) throw InvalidArgument("weight decay needs a model with weights");
  return weight_decay->lambda_times_n / static_cast<double>(n_weights);
}

void RegStack::validate() const {
  if (weight_decay && !(weight_decay->lambda_times_n > 0.0)) throw InvalidArgument("weight decay constant must be positive");
  if (smoothing_alpha && !(*smoothing_alpha >= 0.0 && *smoothing_alpha < 1.0)) {
    throw InvalidArgument("smoothing alpha must lie in [0, 1)");
  }
}

RegStack parse_stack_name(std::string_view name) {
  RegStack stack;
  if (name == "Base") return stack;
  if (name.empty()) throw InvalidArgument("empty regularizer stack name");
  std::size_t start = 0;
  bool mixup = false, cutmix = false;
  while (start <= name.size()) {
    const std::size_t plus = name.find('+', start);
    std::string_view token = name.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == "L2") {
      stack.weight_decay = WeightDecay{};
    } else if (token == "LS") {
      stack.smoothing_alpha = 0.1;
    } else if (token == "MU") {
      mixup = true;
    } else if (token == "CM") {
      cutmix = true;
    } else {
      throw InvalidArgument("unknown regularizer '" + std::string(token) + "' in stack '" + std::string(name) + "'");
    }
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  if (mixup && cutmix) throw InvalidArgument("mixup and cutmix cannot share a stack");
  stack.mix_mode = mixup ? MixMode::Mixup : (cutmix ? MixMode::CutMix : MixMode::None);
  return stack;
}

StackedBatch apply_stack(const RegStack& stack, const Batch& batch, std::size_t class_count, RngStream& rng) {
  stack.validate();
  StackedBatch out;
  const Matrix targets = one_hot(batch.labels, class_count);

  switch (stack.mix_mode) {
    case MixMode::None:
      out.inputs = batch.inputs;
      out.targets = targets;
      break;
    case MixMode::Mixup: {
      auto [mixed, plan] = mixup_batch(batch, targets, rng);
      out.inputs = std::move(mixed.inputs);
      out.targets = std::move(mixed.targets);
      out.mix_plan = std::move(plan);
      break;
    }
    case MixMode::CutMix: {
      auto r = cutmix_batch_detailed(batch, targets, rng);
      out.inputs = std::move(r.batch.inputs);
      out.targets = std::move(r.batch.targets);
      out.cut_box = r.box;
      out.mix_plan = MixPlan{std::move(r.partner), 1.0 - r.box.ratio()};
      break;
    }
  }

  if (stack.smoothing_alpha) {
    const SmoothingConfig cfg{*stack.smoothing_alpha, class_count};
    for (std::size_t i = 0; i < out.targets.rows(); ++i) {
      const RealVector smoothed = smooth_targets(out.targets.row(i), cfg);
      std::copy(smoothed.begin(), smoothed.end(), out.targets.row(i).begin());
    }
#ifndef NDEBUG
    // Smoothing is affine with weights summing to 1, so it commutes with mixing.
    if (out.mix_plan) {
      Matrix smoothed_first = targets;
      for (std::size_t i = 0; i < smoothed_first.rows(); ++i) {
        const RealVector s = smooth_targets(smoothed_first.row(i), cfg);
        std::copy(s.begin(), s.end(), smoothed_first.row(i).begin());
      }
      const Matrix reordered = apply_mixup(Matrix(targets.rows(), 1), smoothed_first, *out.mix_plan).targets;
      for (std::size_t j = 0; j < reordered.size(); ++j) {
        assert(std::abs(reordered.values()[j] - out.targets.values()[j]) < 1e-12);
      }
    }
#endif
  }

  if (stack.weight_decay) out.decay_constant = stack.weight_decay->lambda_times_n;
  return out;
}

}  // namespace osrlab
