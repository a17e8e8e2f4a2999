#include "osrlab/osrmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace osrlab {

PrototypeSet compute_prototypes(const FeatureMatrix& train_features, std::size_t class_count) {
  if (class_count < 1) throw InvalidArgument("prototypes need at least one class");
  const std::size_t width = train_features.width();
  std::vector<RealVector> sums(class_count, RealVector(width, 0.0));
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t r = 0; r < train_features.rows(); ++r) {
    const std::int32_t label = train_features.label(r);
    if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
      throw InvalidArgument("training feature label " + std::to_string(label) + " outside closed classes");
    }
    auto row = train_features.row(r);
    auto& sum = sums[static_cast<std::size_t>(label)];
    for (std::size_t j = 0; j < width; ++j) sum[j] += row[j];
    ++counts[static_cast<std::size_t>(label)];
  }
  PrototypeSet set;
  for (std::size_t k = 0; k < class_count; ++k) {
    if (counts[k] == 0) throw InvalidArgument("class " + std::to_string(k) + " has no training features");
    for (double& v : sums[k]) v /= static_cast<double>(counts[k]);
    set.prototypes.push_back(std::move(sums[k]));
  }
  return set;
}

double fd_bin_width(std::span<const double> pooled_distances) {
  if (pooled_distances.empty()) throw EmptyInput("fd_bin_width");
  if (pooled_distances.size() < 2) throw InvalidArgument("fd_bin_width needs at least 2 values");
  const double span = *std::max_element(pooled_distances.begin(), pooled_distances.end());
  if (!(span > 0.0)) throw InvalidArgument("fd_bin_width: all distances are zero");
  const double n = static_cast<double>(pooled_distances.size());
  const double width = 2.0 * interquartile_range(pooled_distances) * std::cbrt(1.0 / n);
  if (!(width > 0.0) || width > span) return span / 50.0;
  return width;
}

std::size_t HistogramBins::bin_of(double value) const {
  const double pos = std::floor((value - origin) / width);
  if (!(pos > 0.0)) return 0;
  return std::min(count - 1, static_cast<std::size_t>(pos));
}

double DistanceHistogramPair::overlap_area() const {
  double area = 0.0;
  for (std::size_t i = 0; i < closed_density.size(); ++i) area += std::min(closed_density[i], open_density[i]) * bins.width;
  return std::clamp(area, 0.0, 1.0);
}

DistanceHistogramPair build_histogram_pair(std::span<const double> closed, std::span<const double> open,
                                           const HistogramBins& bins) {
  if (closed.empty()) throw EmptyInput("closed distance sample");
  if (open.empty()) throw EmptyInput("open distance sample");
  if (!(bins.width > 0.0) || bins.count == 0) throw InvalidArgument("histogram bins need positive width and count");
  DistanceHistogramPair pair{bins, std::vector<double>(bins.count, 0.0), std::vector<double>(bins.count, 0.0)};
  auto fill = [&](std::span<const double> sample, std::vector<double>& density) {
    for (double d : sample) density[bins.bin_of(d)] += 1.0;
    const double scale = 1.0 / (static_cast<double>(sample.size()) * bins.width);
    for (double& h : density) h *= scale;
  };
  fill(closed, pair.closed_density);
  fill(open, pair.open_density);
  return pair;
}

std::optional<HistogramBins> overlap_bins(std::span<const double> closed, std::span<const double> open) {
  std::vector<double> pooled(closed.begin(), closed.end());
  pooled.insert(pooled.end(), open.begin(), open.end());
  require_finite(pooled, "distance sample");
  const double span = pooled.empty() ? 0.0 : *std::max_element(pooled.begin(), pooled.end());
  if (!(span > 0.0)) return std::nullopt;
  const double width = fd_bin_width(pooled);
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(span / width)));
  return HistogramBins{0.0, width, count};
}

double distance_overlap(std::span<const double> closed, std::span<const double> open) {
  if (closed.empty()) throw EmptyInput("closed distance sample");
  if (open.empty()) throw EmptyInput("open distance sample");
  const auto bins = overlap_bins(closed, open);
  if (!bins) return 1.0;
  return build_histogram_pair(closed, open, *bins).overlap_area();
}

namespace {

std::vector<double> distances_to(const FeatureMatrix& features, std::span<const double> point) {
  std::vector<double> d(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) d[r] = euclidean_distance(features.row(r), point);
  return d;
}

FeatureMatrix rows_with_label(const FeatureMatrix& features, std::int32_t label) {
  FeatureMatrix out(features.width());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (features.label(r) == label) out.push_back(features.row(r), label);
  }
  return out;
}

}  // namespace

double class_overlap(const FeatureMatrix& closed_of_class, const FeatureMatrix& open, std::span<const double> prototype) {
  if (closed_of_class.empty()) throw EmptyInput("closed features of class");
  if (open.empty()) throw EmptyInput("open features");
  return distance_overlap(distances_to(closed_of_class, prototype), distances_to(open, prototype));
}

double mean_overlap(std::span<const double> per_class) {
  if (per_class.empty()) throw EmptyInput("mean_overlap");
  double sum = 0.0;
  for (double v : per_class) sum += v;
  return sum / static_cast<double>(per_class.size());
}

std::vector<double> min_distance_scores(const FeatureMatrix& features, const PrototypeSet& prototypes) {
  if (prototypes.prototypes.empty()) throw EmptyInput("prototype set");
  if (features.width() != prototypes.width()) throw DimensionMismatch(prototypes.width(), features.width());
  std::vector<double> scores(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    double best = euclidean_distance(features.row(r), prototypes.prototypes.front());
    for (std::size_t k = 1; k < prototypes.prototypes.size(); ++k) {
      best = std::min(best, euclidean_distance(features.row(r), prototypes.prototypes[k]));
    }
    scores[r] = best;
  }
  return scores;
}

RocResult roc_auroc(std::span<const double> closed_scores, std::span<const double> open_scores) {
  if (closed_scores.empty()) throw EmptyInput("closed scores");
  if (open_scores.empty()) throw EmptyInput("open scores");
  require_finite(closed_scores, "closed scores");
  require_finite(open_scores, "open scores");

  struct Scored {
    double score;
    bool open;
  };
  std::vector<Scored> all;
  all.reserve(closed_scores.size() + open_scores.size());
  for (double s : closed_scores) all.push_back({s, false});
  for (double s : open_scores) all.push_back({s, true});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  const double n_closed = static_cast<double>(closed_scores.size());
  const double n_open = static_cast<double>(open_scores.size());
  RocResult result;
  result.curve.points.push_back({0.0, 0.0});
  std::size_t fp = 0, tp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].score;
    // Every example tied at this threshold flips together.
    for (; i < all.size() && all[i].score == threshold; ++i) (all[i].open ? tp : fp) += 1;
    result.curve.points.push_back({static_cast<double>(fp) / n_closed, static_cast<double>(tp) / n_open});
  }
  result.auroc = trapezoid_area(result.curve.points);
  return result;
}

double auroc_pairwise_oracle(std::span<const double> closed_scores, std::span<const double> open_scores) {
  if (closed_scores.empty()) throw EmptyInput("closed scores");
  if (open_scores.empty()) throw EmptyInput("open scores");
  double wins = 0.0;
  for (double o : open_scores) {
    for (double c : closed_scores) {
      if (o > c) {
        wins += 1.0;
      } else if (o == c) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(open_scores.size()) * static_cast<double>(closed_scores.size()));
}

namespace {

bool zero_norm(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

CosineTables cosine_tables(const PrototypeSet& prototypes, const FeatureMatrix& closed_test, const FeatureMatrix& open) {
  const std::size_t k = prototypes.class_count();
  if (k < 2) throw InvalidArgument("cosine tables need at least 2 prototypes");
  for (const auto& p : prototypes.prototypes) {
    if (zero_norm(p)) throw ZeroNorm();
  }
  CosineTables t;

  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      sum += cosine_similarity(prototypes.prototypes[i], prototypes.prototypes[j]);
      ++pairs;
    }
  }
  t.prototype_pairs = sum / static_cast<double>(pairs);

  sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < closed_test.rows(); ++r) {
    const auto label = closed_test.label(r);
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw InvalidArgument("closed test label outside prototypes");
    if (zero_norm(closed_test.row(r))) {
      ++t.zero_norm_skipped;
      continue;
    }
    sum += cosine_similarity(closed_test.row(r), prototypes.prototypes[static_cast<std::size_t>(label)]);
    ++n;
  }
  t.closed_to_target = n > 0 ? sum / static_cast<double>(n) : 0.0;

  sum = 0.0;
  n = 0;
  for (std::size_t r = 0; r < open.rows(); ++r) {
    if (zero_norm(open.row(r))) {
      ++t.zero_norm_skipped;
      continue;
    }
    for (const auto& p : prototypes.prototypes) {
      sum += cosine_similarity(open.row(r), p);
      ++n;
    }
  }
  t.open_to_prototypes = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return t;
}

OsrReport evaluate_features(const EvalFeatures& features, std::size_t class_count) {
  const std::size_t width = features.closed_train.width();
  if (features.closed_test.width() != width) throw DimensionMismatch(width, features.closed_test.width());
  if (features.open_test.width() != width) throw DimensionMismatch(width, features.open_test.width());
  if (features.closed_test.empty()) throw EmptyInput("closed test features");
  if (features.open_test.empty()) throw EmptyInput("open test features");

  const PrototypeSet prototypes = compute_prototypes(features.closed_train, class_count);
  OsrReport report;
  for (std::size_t k = 0; k < class_count; ++k) {
    const FeatureMatrix members = rows_with_label(features.closed_test, static_cast<std::int32_t>(k));
    if (members.empty()) throw InvalidArgument("closed test set has no examples of class " + std::to_string(k));
    report.class_overlaps.push_back(class_overlap(members, features.open_test, prototypes.prototypes[k]));
  }
  report.mean_overlap = mean_overlap(report.class_overlaps);

  const auto closed_scores = min_distance_scores(features.closed_test, prototypes);
  const auto open_scores = min_distance_scores(features.open_test, prototypes);
  auto roc = roc_auroc(closed_scores, open_scores);
  report.auroc = roc.auroc;
  report.roc = std::move(roc.curve);
  report.cosine = cosine_tables(prototypes, features.closed_test, features.open_test);
  return report;
}

EvalFeatures extract_eval_features(const ModelParams& params, const OpenClosedSplit& split) {
  return EvalFeatures{extract_penultimate(params, split.closed_train), extract_penultimate(params, split.closed_test),
                      extract_penultimate(params, split.open_test)};
}

OsrReport evaluate_model(const ModelParams& params, const OpenClosedSplit& split) {
  OsrReport report = evaluate_features(extract_eval_features(params, split), split.closed_class_count());
  report.closed_accuracy = closed_accuracy(params, split.closed_test);
  report.ssw = ssw(params);
  return report;
}

}  // namespace osrlab
