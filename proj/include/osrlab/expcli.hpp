#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "osrlab/data.hpp"
#include "osrlab/features.hpp"
#include "osrlab/osrmetrics.hpp"
#include "osrlab/regularize.hpp"
#include "osrlab/trainer.hpp"

namespace osrlab {

// ---------------------------------------------------------------------------
// Feature dumps (OSRF)
//
// Little-endian: magic "OSRF", u32 version (1), u32 n, u32 d, u8 role tag
// (0 closed-train, 1 closed-val, 2 closed-test, 3 open-test), then n records
// of i32 label followed by d float32 features. Open-set records carry label -1.

inline constexpr std::uint32_t kFeatureDumpVersion = 1;

struct FeatureDump {
  std::uint32_t version = kFeatureDumpVersion;
  DatasetRole role = DatasetRole::ClosedTrain;
  std::uint32_t width = 0;
  std::vector<std::int32_t> labels;
  std::vector<float> features;  // row-major, labels.size() x width

  std::size_t rows() const { return labels.size(); }
  void validate() const;
  bool operator==(const FeatureDump&) const = default;
};

class FeatureDumpError : public Error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, TrailingData, BadRole, Io };

  FeatureDumpError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void write_features(const FeatureDump& dump, const std::filesystem::path& path);
FeatureDump read_features(const std::filesystem::path& path);

/// Encode/decode without touching the filesystem.
std::string encode_features(const FeatureDump& dump);
FeatureDump decode_features(const std::string& bytes);

/// Dump of extracted features; open-test labels are replaced with -1.
FeatureDump make_dump(const FeatureMatrix& features, DatasetRole role);
FeatureMatrix to_feature_matrix(const FeatureDump& dump);

/// Prototype evaluation of externally produced dumps. Accuracy and SSW stay
/// absent. Throws InvalidArgument on role, width or label-space mismatch.
OsrReport eval_external(const FeatureDump& closed_train, const FeatureDump& closed_test, const FeatureDump& open);

// ---------------------------------------------------------------------------
// Experiment configuration

class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& what) : InvalidArgument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExternalDumpPaths {
  std::filesystem::path closed_train;
  std::filesystem::path closed_test;
  std::filesystem::path open_test;
};

struct DatasetConfig {
  enum class Kind { Gaussian, GradientImages, External };
  Kind kind = Kind::Gaussian;
  GaussianMixtureSpec gaussian;
  GradientImageSpec images;
  ExternalDumpPaths external;
};

struct NamedStack {
  std::string name;
  RegStack stack;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::size_t closed_classes = 8;
  SplitFractions fractions;
  std::vector<std::size_t> hidden_widths{64, 64, 32};
  OptimizerConfig optimizer;
  double weight_decay_constant = 1100.0;
  double smoothing_alpha = 0.1;
  std::vector<NamedStack> stacks;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 777;
  std::size_t threads = 1;
  bool save_checkpoints = false;
  bool dump_features = false;
  std::filesystem::path output_dir = "osr_out";

  void validate() const;
};

/// Parses and validates. Unknown keys and ill-typed values throw ConfigError
/// naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form with every default spelled out; parse_config(to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// FNV-1a of the canonical config with output_dir and threads removed, so
/// where a run writes and how many workers it uses do not change its identity.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Experiment grid and report document

inline constexpr const char* kArtifactVersion = "osrlab 1.0.0";

struct CellResult {
  std::string stack;
  std::uint64_t seed = 0;
  std::optional<OsrReport> report;  // absent when the cell failed
  std::optional<TrainReport> training;
  std::optional<ModelParams> model;  // kept in memory only, never serialized
  std::string error;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 with one value
  std::size_t count = 0;
};

struct StackSummary {
  std::string stack;
  std::map<std::string, MetricSummary> metrics;  // keyed by metric name
};

struct ReportDocument {
  std::vector<CellResult> cells;  // stack-major: cells[stack * seeds + seed]
  std::vector<StackSummary> summaries;
  nlohmann::json config;  // canonical config
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> seeds;
  std::string artifact_version = kArtifactVersion;
};

/// Metric names used in summaries and tables, in table order.
const std::vector<std::string>& summary_metric_names();

/// Scalar value of a named metric from one report (nullopt when absent).
std::optional<double> metric_value(const OsrReport& report, const std::string& name);

/// Per-stack means and sample standard deviations over successful cells.
std::vector<StackSummary> summarize(const std::vector<CellResult>& cells, const std::vector<std::string>& stack_names);

/// Full synthetic data set for `cfg`, generated from the dataset seed.
Dataset build_dataset(const ExperimentConfig& cfg);

/// Per-seed split; shared by every stack for that seed.
OpenClosedSplit build_split(const ExperimentConfig& cfg, const Dataset& full, std::uint64_t seed);

MlpSpec model_spec(const ExperimentConfig& cfg, std::size_t input_width);

/// Trains and evaluates every (stack, seed) cell. A diverging cell is
/// recorded as failed without stopping the others.
ReportDocument run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ReportDocument& doc);
ReportDocument report_from_json(const nlohmann::json& doc);
nlohmann::json osr_report_to_json(const OsrReport& report);
OsrReport osr_report_from_json(const nlohmann::json& j);

/// Writes report.json, summary and per-metric CSV tables, an accuracy-vs-AUROC
/// scatter plot and per-stack ROC plots (SVG). Returns the files written.
std::vector<std::filesystem::path> write_report(const ReportDocument& doc, const std::filesystem::path& dir);

/// Reference vectors for batch-level regularizers: mixup blends, CutMix
/// pastes and smoothed targets, each with its inputs and expected output.
/// Consumers replaying them should match to 1e-12.
nlohmann::json regularizer_fixtures(std::uint64_t seed, std::size_t cases_per_kind = 20);

/// Shortest round-trip text form of a double, as used in every emitted file.
std::string format_number(double v);

}  // namespace osrlab
