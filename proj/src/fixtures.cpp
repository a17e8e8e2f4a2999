#include "osrlab/expcli.hpp"

namespace osrlab {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Batch random_batch(RngStream& rng, std::size_t n, std::size_t width, std::size_t classes,
                   std::optional<ImageShape> shape) {
  Batch b{Matrix(n, width), {}, shape};
  for (std::size_t i = 0; i < n; ++i) {
    // float-representable inputs so single-precision replays are exact
    for (std::size_t j = 0; j < width; ++j) b.inputs(i, j) = static_cast<float>(rng.uniform());
    b.labels.push_back(static_cast<std::int32_t>(rng.index(classes)));
  }
  return b;
}

}  // namespace

json regularizer_fixtures(std::uint64_t seed, std::size_t cases_per_kind) {
  RngStream root(seed);
  json out;
  out["artifact_version"] = kArtifactVersion;
  out["seed"] = seed;
  out["tolerance"] = 1e-12;

  json mixup = json::array();
  RngStream mix_rng = root.derive("mixup");
  for (std::size_t c = 0; c < cases_per_kind; ++c) {
    const std::size_t n = 2 + mix_rng.index(5), width = 1 + mix_rng.index(6), k = 2 + mix_rng.index(4);
    Batch batch = random_batch(mix_rng, n, width, k, std::nullopt);
    const Matrix targets = one_hot(batch.labels, k);
    auto [mixed, plan] = mixup_batch(batch, targets, mix_rng);
    mixup.push_back({{"inputs", matrix_json(batch.inputs)},
                     {"targets", matrix_json(targets)},
                     {"lambda", plan.lambda},
                     {"partner", plan.partner},
                     {"expected_inputs", matrix_json(mixed.inputs)},
                     {"expected_targets", matrix_json(mixed.targets)}});
  }
  out["mixup"] = mixup;

  json cutmix = json::array();
  RngStream cut_rng = root.derive("cutmix");
  for (std::size_t c = 0; c < cases_per_kind; ++c) {
    const ImageShape shape{1 + cut_rng.index(3), 2 + cut_rng.index(7), 2 + cut_rng.index(7)};
    const std::size_t n = 2 + cut_rng.index(4), k = 2 + cut_rng.index(4);
    Batch batch = random_batch(cut_rng, n, shape.pixels(), k, shape);
    const Matrix targets = one_hot(batch.labels, k);
    auto result = cutmix_batch_detailed(batch, targets, cut_rng);
    cutmix.push_back({{"shape", {shape.channels, shape.height, shape.width}},
                      {"inputs", matrix_json(batch.inputs)},
                      {"targets", matrix_json(targets)},
                      {"partner", result.partner},
                      {"box", {{"x0", result.box.x0}, {"y0", result.box.y0}, {"w", result.box.w}, {"h", result.box.h}}},
                      {"ratio", result.box.ratio()},
                      {"expected_inputs", matrix_json(result.batch.inputs)},
                      {"expected_targets", matrix_json(result.batch.targets)}});
  }
  out["cutmix"] = cutmix;

  json smoothing = json::array();
  RngStream ls_rng = root.derive("smoothing");
  for (std::size_t c = 0; c < cases_per_kind; ++c) {
    const std::size_t k = 2 + ls_rng.index(9);
    const double alpha = ls_rng.uniform(0.0, 0.5);
    std::vector<double> target(k, 0.0);
    target[ls_rng.index(k)] = 1.0;
    smoothing.push_back({{"target", target},
                         {"alpha", alpha},
                         {"expected", smooth_targets(target, SmoothingConfig{alpha, k})}});
  }
  out["smoothing"] = smoothing;
  return out;
}

}  // namespace osrlab
