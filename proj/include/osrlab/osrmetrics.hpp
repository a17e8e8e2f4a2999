#pragma once

#include <optional>
#include <span>
#include <vector>

#include "osrlab/data.hpp"
#include "osrlab/features.hpp"
#include "osrlab/numerics.hpp"
#include "osrlab/trainer.hpp"

namespace osrlab {

// Per-class mean penultimate vectors, built from closed-train features only.
struct PrototypeSet {
  std::vector<RealVector> prototypes;
  DatasetRole source = DatasetRole::ClosedTrain;

  std::size_t class_count() const { return prototypes.size(); }
  std::size_t width() const { return prototypes.empty() ? 0 : prototypes.front().size(); }
};

/// Mean feature vector of each class 0..K-1. Throws if any class has no rows.
PrototypeSet compute_prototypes(const FeatureMatrix& train_features, std::size_t class_count);

/// Freedman-Diaconis width 2 IQR n^(-1/3) for a sample of nonnegative
/// distances. Falls back to max/50 when IQR is zero or the width would exceed
/// the histogram span [0, max]. Throws when every value is zero.
double fd_bin_width(std::span<const double> pooled_distances);

struct HistogramBins {
  double origin = 0.0;
  double width = 1.0;
  std::size_t count = 1;

  /// Bins are [origin + i w, origin + (i+1) w); values past the last edge
  /// land in the last bin, values below origin in the first.
  std::size_t bin_of(double value) const;
};

struct DistanceHistogramPair {
  HistogramBins bins;
  std::vector<double> closed_density;
  std::vector<double> open_density;

  /// Sum over bins of min(closed, open) * width.
  double overlap_area() const;
};

/// Density-normalized histograms of both samples on shared bins.
DistanceHistogramPair build_histogram_pair(std::span<const double> closed, std::span<const double> open,
                                           const HistogramBins& bins);

/// Bins spanning [0, max pooled distance] at the Freedman-Diaconis width of
/// the pooled sample. Returns nullopt when every distance is zero.
std::optional<HistogramBins> overlap_bins(std::span<const double> closed, std::span<const double> open);

/// Area of overlap between closed and open distance distributions, in [0, 1].
/// Degenerate all-zero distances count as identical populations (overlap 1).
double distance_overlap(std::span<const double> closed, std::span<const double> open);

/// Distances of both populations to `prototype`, then distance_overlap.
double class_overlap(const FeatureMatrix& closed_of_class, const FeatureMatrix& open, std::span<const double> prototype);

double mean_overlap(std::span<const double> per_class);

/// Minimum Euclidean distance from each row to any prototype.
std::vector<double> min_distance_scores(const FeatureMatrix& features, const PrototypeSet& prototypes);

struct RocCurve {
  std::vector<Point2> points;  // (false-positive rate, true-positive rate), from (0,0) to (1,1)
};

struct RocResult {
  RocCurve curve;
  double auroc = 0.0;
};

/// Open-set examples are positives; a score at or above the threshold is
/// flagged open. Thresholds sweep every distinct score from high to low.
RocResult roc_auroc(std::span<const double> closed_scores, std::span<const double> open_scores);

/// P(open > closed) + P(open == closed) / 2 by exhaustive pair enumeration.
double auroc_pairwise_oracle(std::span<const double> closed_scores, std::span<const double> open_scores);

struct CosineTables {
  double prototype_pairs = 0.0;    // mean cosine over unordered prototype pairs
  double closed_to_target = 0.0;   // closed test example vs its own prototype
  double open_to_prototypes = 0.0; // every open example vs every prototype
  std::size_t zero_norm_skipped = 0;
};

/// Zero-norm feature vectors have no direction; they are skipped and counted
/// in zero_norm_skipped. A zero-norm prototype throws ZeroNorm.
CosineTables cosine_tables(const PrototypeSet& prototypes, const FeatureMatrix& closed_test, const FeatureMatrix& open);

struct OsrReport {
  std::optional<double> closed_accuracy;
  std::vector<double> class_overlaps;
  double mean_overlap = 0.0;
  double auroc = 0.0;
  RocCurve roc;
  CosineTables cosine;
  std::optional<double> ssw;
};

struct EvalFeatures {
  FeatureMatrix closed_train;
  FeatureMatrix closed_test;
  FeatureMatrix open_test;
};

/// Prototypes from closed_train, then overlap, AUROC and cosine tables.
/// Accuracy and SSW are filled in by callers that have a model.
OsrReport evaluate_features(const EvalFeatures& features, std::size_t class_count);

/// Features of closed-train, closed-test and open-test under `params`.
EvalFeatures extract_eval_features(const ModelParams& params, const OpenClosedSplit& split);

/// Full report for a trained model: features, metrics, closed-test accuracy and SSW.
OsrReport evaluate_model(const ModelParams& params, const OpenClosedSplit& split);

}  // namespace osrlab
