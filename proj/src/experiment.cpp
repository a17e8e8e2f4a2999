#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "osrlab/expcli.hpp"

namespace osrlab {

using nlohmann::json;

const std::vector<std::string>& summary_metric_names() {
  static const std::vector<std::string> names{"closed_accuracy",     "mean_overlap",         "auroc",
                                              "cos_prototype_pairs", "cos_closed_to_target", "cos_open_to_prototypes",
                                              "ssw"};
  return names;
}

std::optional<double> metric_value(const OsrReport& report, const std::string& name) {
  if (name == "closed_accuracy") return report.closed_accuracy;
  if (name == "mean_overlap") return report.mean_overlap;
  if (name == "auroc") return report.auroc;
  if (name == "cos_prototype_pairs") return report.cosine.prototype_pairs;
  if (name == "cos_closed_to_target") return report.cosine.closed_to_target;
  if (name == "cos_open_to_prototypes") return report.cosine.open_to_prototypes;
  if (name == "ssw") return report.ssw;
  throw InvalidArgument("unknown metric '" + name + "'");
}

std::vector<StackSummary> summarize(const std::vector<CellResult>& cells, const std::vector<std::string>& stack_names) {
  std::vector<StackSummary> out;
  for (const auto& stack : stack_names) {
    StackSummary summary{stack, {}};
    for (const auto& metric : summary_metric_names()) {
      std::vector<double> values;
      for (const auto& cell : cells) {
        if (cell.stack != stack || !cell.report) continue;
        if (auto v = metric_value(*cell.report, metric)) values.push_back(*v);
      }
      if (values.empty()) continue;
      MetricSummary m;
      m.count = values.size();
      for (double v : values) m.mean += v;
      m.mean /= static_cast<double>(m.count);
      if (m.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.stddev = std::sqrt(ss / static_cast<double>(m.count - 1));
      }
      summary.metrics[metric] = m;
    }
    out.push_back(std::move(summary));
  }
  return out;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::Gaussian:
      return generate_gaussian_mixture(cfg.dataset.gaussian, RngStream(cfg.dataset.gaussian.seed));
    case DatasetConfig::Kind::GradientImages:
      return generate_gradient_images(cfg.dataset.images, RngStream(cfg.dataset.images.seed));
    case DatasetConfig::Kind::External:
      break;
  }
  throw InvalidArgument("external datasets are evaluated with eval-external, not trained");
}

namespace {

RngStream seed_stream(const ExperimentConfig& cfg, std::uint64_t seed) { return RngStream(cfg.master_seed).derive(seed); }

}  // namespace

OpenClosedSplit build_split(const ExperimentConfig& cfg, const Dataset& full, std::uint64_t seed) {
  return build_open_closed_split(full, cfg.closed_classes, cfg.fractions, seed_stream(cfg, seed).derive("split"));
}

MlpSpec model_spec(const ExperimentConfig& cfg, std::size_t input_width) {
  MlpSpec spec;
  spec.widths.push_back(input_width);
  spec.widths.insert(spec.widths.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
  spec.widths.push_back(cfg.closed_classes);
  spec.validate();
  return spec;
}

ReportDocument run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset full = build_dataset(cfg);
  const MlpSpec spec = model_spec(cfg, full.input_width());

  // Split and initial weights depend only on the seed, so every stack starts
  // from the same point for a given seed.
  struct SeedSetup {
    OpenClosedSplit split;
    ModelParams init;
  };
  std::vector<SeedSetup> setups;
  for (std::uint64_t seed : cfg.seeds) {
    setups.push_back({build_split(cfg, full, seed), init_model(spec, seed_stream(cfg, seed).derive("init"))});
  }

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<CellResult> cells(cfg.stacks.size() * n_seeds);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const std::size_t stack_idx = i / n_seeds;
      const std::size_t seed_idx = i % n_seeds;
      CellResult& cell = cells[i];
      cell.stack = cfg.stacks[stack_idx].name;
      cell.seed = cfg.seeds[seed_idx];
      const SeedSetup& setup = setups[seed_idx];
      try {
        RngStream rng = seed_stream(cfg, cell.seed).derive(static_cast<std::uint64_t>(stack_idx));
        auto trained = train_model(setup.split, setup.init, cfg.optimizer, cfg.stacks[stack_idx].stack, rng);
        cell.training = trained.report;
        cell.report = evaluate_model(trained.params, setup.split);
        cell.model = std::move(trained.params);
      } catch (const std::exception& e) {
        cell.report.reset();
        cell.model.reset();
        cell.error = e.what();
      }
    }
  };

  const std::size_t threads = std::min(cfg.threads, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ReportDocument doc;
  std::vector<std::string> names;
  for (const auto& s : cfg.stacks) names.push_back(s.name);
  doc.summaries = summarize(cells, names);
  doc.cells = std::move(cells);
  doc.config = config_to_json(cfg);
  doc.config_hash = config_hash(cfg);
  doc.seeds = cfg.seeds;
  return doc;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JSON

json osr_report_to_json(const OsrReport& r) {
  json j;
  j["closed_accuracy"] = r.closed_accuracy ? json(*r.closed_accuracy) : json(nullptr);
  j["class_overlaps"] = r.class_overlaps;
  j["mean_overlap"] = r.mean_overlap;
  j["auroc"] = r.auroc;
  json roc = json::array();
  for (const auto& p : r.roc.points) roc.push_back({p.x, p.y});
  j["roc"] = roc;
  j["cosine"] = {{"prototype_pairs", r.cosine.prototype_pairs},
                 {"closed_to_target", r.cosine.closed_to_target},
                 {"open_to_prototypes", r.cosine.open_to_prototypes},
                 {"zero_norm_skipped", r.cosine.zero_norm_skipped}};
  j["ssw"] = r.ssw ? json(*r.ssw) : json(nullptr);
  return j;
}

namespace {

std::optional<double> optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json train_report_to_json(const TrainReport& t) {
  json val = json::array();
  for (const auto& v : t.epoch_val_accuracy) val.push_back(v ? json(*v) : json(nullptr));
  return {{"epoch_loss", t.epoch_loss}, {"epoch_val_accuracy", val}, {"final_ssw", t.final_ssw}};
}

TrainReport train_report_from_json(const json& j) {
  TrainReport t;
  t.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  for (const auto& v : j.at("epoch_val_accuracy")) t.epoch_val_accuracy.push_back(optional_number(v));
  t.final_ssw = j.at("final_ssw").get<double>();
  return t;
}

}  // namespace

OsrReport osr_report_from_json(const json& j) {
  OsrReport r;
  r.closed_accuracy = optional_number(j.at("closed_accuracy"));
  r.class_overlaps = j.at("class_overlaps").get<std::vector<double>>();
  r.mean_overlap = j.at("mean_overlap").get<double>();
  r.auroc = j.at("auroc").get<double>();
  for (const auto& p : j.at("roc")) r.roc.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  const json& c = j.at("cosine");
  r.cosine.prototype_pairs = c.at("prototype_pairs").get<double>();
  r.cosine.closed_to_target = c.at("closed_to_target").get<double>();
  r.cosine.open_to_prototypes = c.at("open_to_prototypes").get<double>();
  r.cosine.zero_norm_skipped = c.at("zero_norm_skipped").get<std::size_t>();
  r.ssw = optional_number(j.at("ssw"));
  return r;
}

json report_to_json(const ReportDocument& doc) {
  json j;
  j["artifact_version"] = doc.artifact_version;
  j["config"] = doc.config;
  j["config_hash"] = doc.config_hash;
  j["seeds"] = doc.seeds;
  json cells = json::array();
  for (const auto& cell : doc.cells) {
    json c{{"stack", cell.stack}, {"seed", cell.seed}, {"status", cell.report ? "ok" : "failed"}};
    if (!cell.error.empty()) c["error"] = cell.error;
    if (cell.report) c["report"] = osr_report_to_json(*cell.report);
    if (cell.training) c["training"] = train_report_to_json(*cell.training);
    cells.push_back(std::move(c));
  }
  j["cells"] = cells;
  json summaries = json::array();
  for (const auto& s : doc.summaries) {
    json metrics = json::object();
    for (const auto& [name, m] : s.metrics) metrics[name] = {{"mean", m.mean}, {"stddev", m.stddev}, {"count", m.count}};
    summaries.push_back({{"stack", s.stack}, {"metrics", metrics}});
  }
  j["summaries"] = summaries;
  return j;
}

ReportDocument report_from_json(const json& j) {
  ReportDocument doc;
  try {
    doc.artifact_version = j.at("artifact_version").get<std::string>();
    doc.config = j.at("config");
    doc.config_hash = j.at("config_hash").get<std::uint64_t>();
    doc.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& c : j.at("cells")) {
      CellResult cell;
      cell.stack = c.at("stack").get<std::string>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      if (c.contains("error")) cell.error = c.at("error").get<std::string>();
      if (c.contains("report")) cell.report = osr_report_from_json(c.at("report"));
      if (c.contains("training")) cell.training = train_report_from_json(c.at("training"));
      doc.cells.push_back(std::move(cell));
    }
    for (const auto& s : j.at("summaries")) {
      StackSummary summary{s.at("stack").get<std::string>(), {}};
      for (const auto& [name, m] : s.at("metrics").items()) {
        summary.metrics[name] = {m.at("mean").get<double>(), m.at("stddev").get<double>(), m.at("count").get<std::size_t>()};
      }
      doc.summaries.push_back(std::move(summary));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report document: ") + e.what());
  }
  return doc;
}

}  // namespace osrlab
