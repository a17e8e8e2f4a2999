#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osrlab/data.hpp"
#include "osrlab/numerics.hpp"

namespace osrlab {

struct SmoothingConfig {
  double alpha = 0.1;
  std::size_t class_count = 2;

  void validate() const;
};

/// q' = (1 - alpha) q + alpha u with u uniform over K classes.
RealVector smooth_targets(std::span<const double> target, const SmoothingConfig& cfg);

/// Cross entropy H(q, p) = -sum q_i ln p_i. Rejects p with zero entries where q > 0.
double cross_entropy(std::span<const double> target, std::span<const double> pred);

/// D_KL(u || p) for the uniform u over p.size() classes.
double kl_uniform_to(std::span<const double> pred);

/// Entropy of the uniform distribution over K classes, ln K.
double uniform_entropy(std::size_t class_count);

// Both forms of the smoothed loss for one example.
//
//   smoothed_cross_entropy = H(q', p)
//   regularized_loss       = H(q, p) + alpha / (1 - alpha) * D_KL(u || p)
//
// They are related by
//   H(q', p) = (1 - alpha) * regularized_loss + alpha * H(u)
// so regularized_loss = (H(q', p) - alpha H(u)) / (1 - alpha).
struct LabelSmoothingLoss {
  double smoothed_cross_entropy = 0.0;
  double regularized_loss = 0.0;
};

LabelSmoothingLoss label_smoothing_loss(std::span<const double> pred, std::span<const double> onehot,
                                        const SmoothingConfig& cfg);

/// (lambda / 2N) * sum w_i^2 over weight scalars (biases excluded by the caller).
double l2_penalty(std::span<const double> weights, double lambda, std::size_t n_weights);

/// One scalar step of w <- (1 - eta * lambda_over_n) w - eta * grad.
double weight_decay_update(double w, double grad, double eta, double lambda_over_n);

struct MixPlan {
  std::vector<std::size_t> partner;  // row i is blended with row partner[i]
  double lambda = 1.0;
};

struct CutBox {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;
  std::size_t image_width = 0;
  std::size_t image_height = 0;

  std::size_t area() const { return w * h; }
  /// Realized pasted fraction w*h / (W*H).
  double ratio() const;
  bool contains(std::size_t x, std::size_t y) const { return x >= x0 && x < x0 + w && y >= y0 && y < y0 + h; }
};

struct MixedBatch {
  Matrix inputs;
  Matrix targets;  // one probability row per example
};

/// One-hot target rows for `labels` over K classes.
Matrix one_hot(std::span<const std::int32_t> labels, std::size_t class_count);

/// Blend rows with a fixed plan: x' = lambda x_i + (1 - lambda) x_partner(i),
/// targets likewise.
MixedBatch apply_mixup(const Matrix& inputs, const Matrix& targets, const MixPlan& plan);

/// Draws lambda ~ Uniform(0, 1) and a random partner permutation, then blends.
std::pair<MixedBatch, MixPlan> mixup_batch(const Batch& batch, const Matrix& targets, RngStream& rng);

/// Clipped box from a nominal W sqrt(1-lambda) x H sqrt(1-lambda) size at
/// center (cx, cy).
CutBox cut_box_from(std::size_t width, std::size_t height, double lambda, double cx, double cy);

/// Pastes the partner's pixels inside `box` (all channels) and weights the
/// targets by the realized box ratio r: (1 - r) y_i + r y_partner(i).
MixedBatch apply_cutmix(const Matrix& inputs, const Matrix& targets, const ImageShape& shape,
                        std::span<const std::size_t> partner, const CutBox& box);

struct CutMixResult {
  MixedBatch batch;
  CutBox box;
  std::vector<std::size_t> partner;
};

std::pair<MixedBatch, CutBox> cutmix_batch(const Batch& batch, const Matrix& targets, RngStream& rng);
CutMixResult cutmix_batch_detailed(const Batch& batch, const Matrix& targets, RngStream& rng);

enum class MixMode { None, Mixup, CutMix };

std::string_view to_string(MixMode mode);

struct WeightDecay {
  double lambda_times_n = 1100.0;
};

// Enabled regularizers for one training run. Weight decay resolves to a
// per-step coefficient C / N with N the model's weight count.
struct RegStack {
  std::optional<WeightDecay> weight_decay;
  std::optional<double> smoothing_alpha;
  MixMode mix_mode = MixMode::None;

  bool empty() const { return !weight_decay && !smoothing_alpha && mix_mode == MixMode::None; }
  double decay_coefficient(std::size_t n_weights) const;
  void validate() const;
};

/// Parses a stack name made of '+'-joined tokens from {L2, LS, MU, CM}, or
/// "Base" for the empty stack. Throws InvalidArgument on unknown tokens or
/// when both MU and CM are requested.
RegStack parse_stack_name(std::string_view name);

struct StackedBatch {
  Matrix inputs;
  Matrix targets;
  double decay_constant = 0.0;  // C, or 0 when weight decay is off
  std::optional<MixPlan> mix_plan;
  std::optional<CutBox> cut_box;
};

/// Mix (one mode), then smooth the blended targets, then hand the weight
/// decay constant to the optimizer.
StackedBatch apply_stack(const RegStack& stack, const Batch& batch, std::size_t class_count, RngStream& rng);

}  // namespace osrlab
