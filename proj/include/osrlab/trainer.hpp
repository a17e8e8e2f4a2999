#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "osrlab/data.hpp"
#include "osrlab/features.hpp"
#include "osrlab/numerics.hpp"
#include "osrlab/regularize.hpp"

namespace osrlab {

// Layer widths from input to output: input, hidden..., penultimate, classes.
// Hidden layers use the rectifier; the last hidden layer is the feature
// layer every open-set metric reads.
struct MlpSpec {
  std::vector<std::size_t> widths;

  std::size_t input_width() const { return widths.front(); }
  std::size_t class_count() const { return widths.back(); }
  std::size_t penultimate_width() const { return widths[widths.size() - 2]; }
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct ModelParams {
  std::vector<DenseLayer> layers;

  MlpSpec spec() const;
  /// Count of weight scalars, biases excluded.
  std::size_t weight_count() const;
  /// Same-shaped parameters filled with zero.
  ModelParams zeros_like() const;

  bool operator==(const ModelParams&) const = default;
};

/// He-style init: weights ~ N(0, 2 / fan_in), biases zero.
ModelParams init_model(const MlpSpec& spec, RngStream rng);

struct ForwardResult {
  RealVector penultimate;
  RealVector logits;
  RealVector probabilities;
};

ForwardResult forward(const ModelParams& params, std::span<const double> input);

/// Numerically stable softmax.
RealVector softmax(std::span<const double> logits);

struct LossAndGradient {
  double loss = 0.0;  // mean cross entropy over the batch
  ModelParams grad;
};

/// Mean batch cross entropy against probability-row targets.
double batch_loss(const ModelParams& params, const Matrix& inputs, const Matrix& targets);

/// Gradient of batch_loss with respect to every weight and bias.
LossAndGradient backward(const ModelParams& params, const Matrix& inputs, const Matrix& targets);

/// eta0 * (1 + cos(pi t / T)) / 2.
double cosine_lr(double eta0, std::size_t t, std::size_t total_epochs);

enum class OptimizerKind { SgdMomentum, Adam };

std::string_view to_string(OptimizerKind kind);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::SgdMomentum;
  double eta0 = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  AdamHyper adam;

  void validate() const;
};

/// v <- momentum v + g; weights w <- (1 - eta decay) w - eta v; biases
/// b <- b - eta v (never decayed).
void sgd_momentum_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity, double eta, double decay,
                       double momentum);

struct AdamState {
  ModelParams first;
  ModelParams second;
  std::size_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

/// Bias-corrected Adam. Weight decay, when nonzero, enters as decay * w
/// added to the weight gradients (biases untouched).
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double eta, const AdamHyper& hyper,
               double decay = 0.0);

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<std::optional<double>> epoch_val_accuracy;
  double final_ssw = 0.0;
  double wall_seconds = 0.0;  // informational; excluded from determinism checks
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Trains from `initial` for opt.epochs epochs. Throws Divergence when the
/// epoch loss is non-finite or above 1e6.
TrainResult train_model(const OpenClosedSplit& split, ModelParams initial, const OptimizerConfig& opt,
                        const RegStack& stack, RngStream rng);

/// Initializes from rng.derive("init") and trains.
TrainResult train_model(const OpenClosedSplit& split, const MlpSpec& spec, const OptimizerConfig& opt,
                        const RegStack& stack, RngStream rng);

/// Penultimate features for every example, in order. Values are rounded to
/// float32 precision, the storage precision of features.
FeatureMatrix extract_penultimate(const ModelParams& params, const Dataset& ds);

/// Sum of squared weights, biases excluded.
double ssw(const ModelParams& params);

/// Fraction of examples whose argmax logit (lowest index on ties) equals the label.
double closed_accuracy(const ModelParams& params, const Dataset& ds);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace osrlab
