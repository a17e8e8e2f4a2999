#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "osrlab/expcli.hpp"

namespace fs = std::filesystem;
using namespace osrlab;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

void print_summary(const OsrReport& r) {
  if (r.closed_accuracy) std::printf("closed_accuracy        %s\n", format_number(*r.closed_accuracy).c_str());
  std::printf("mean_overlap           %s\n", format_number(r.mean_overlap).c_str());
  std::printf("auroc                  %s\n", format_number(r.auroc).c_str());
  std::printf("cos_prototype_pairs    %s\n", format_number(r.cosine.prototype_pairs).c_str());
  std::printf("cos_closed_to_target   %s\n", format_number(r.cosine.closed_to_target).c_str());
  std::printf("cos_open_to_prototypes %s\n", format_number(r.cosine.open_to_prototypes).c_str());
  if (r.ssw) std::printf("ssw                    %s\n", format_number(*r.ssw).c_str());
  if (r.cosine.zero_norm_skipped > 0) {
    std::fprintf(stderr, "warning: %zu zero-norm feature vectors skipped in cosine tables\n", r.cosine.zero_norm_skipped);
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << j.dump(2) << '\n';
}

std::string cell_stem(const CellResult& cell) {
  std::string stack = cell.stack;
  for (char& c : stack) {
    if (c == '+') c = '_';
  }
  return stack + "_seed" + std::to_string(cell.seed);
}

int cmd_train(const fs::path& config_path, std::optional<fs::path> out, std::optional<std::size_t> threads) {
  ExperimentConfig cfg = load_config(config_path);
  if (out) cfg.output_dir = *out;
  if (threads) cfg.threads = *threads;
  cfg.validate();
  if (cfg.dataset.kind == DatasetConfig::Kind::External) {
    throw ConfigError("dataset.kind", "external dumps are evaluated with eval-external");
  }

  ReportDocument doc = run_experiment(cfg);
  const auto written = write_report(doc, cfg.output_dir);

  std::size_t failed = 0;
  for (const auto& cell : doc.cells) {
    if (!cell.report) {
      ++failed;
      std::fprintf(stderr, "cell %s seed %llu failed: %s\n", cell.stack.c_str(),
                   static_cast<unsigned long long>(cell.seed), cell.error.c_str());
    }
  }

  if (cfg.save_checkpoints || cfg.dump_features) {
    const Dataset full = build_dataset(cfg);
    std::map<std::uint64_t, OpenClosedSplit> splits;
    for (const auto& cell : doc.cells) {
      if (!cell.model) continue;
      if (cfg.save_checkpoints) {
        fs::create_directories(cfg.output_dir / "checkpoints");
        save_checkpoint(*cell.model, cfg.output_dir / "checkpoints" / (cell_stem(cell) + ".osrm"));
      }
      if (cfg.dump_features) {
        auto it = splits.find(cell.seed);
        if (it == splits.end()) it = splits.emplace(cell.seed, build_split(cfg, full, cell.seed)).first;
        const EvalFeatures f = extract_eval_features(*cell.model, it->second);
        const fs::path dir = cfg.output_dir / "features";
        fs::create_directories(dir);
        write_features(make_dump(f.closed_train, DatasetRole::ClosedTrain), dir / (cell_stem(cell) + "_closed_train.osrf"));
        write_features(make_dump(f.closed_test, DatasetRole::ClosedTest), dir / (cell_stem(cell) + "_closed_test.osrf"));
        write_features(make_dump(f.open_test, DatasetRole::OpenTest), dir / (cell_stem(cell) + "_open_test.osrf"));
      }
    }
  }

  for (const auto& s : doc.summaries) {
    auto get = [&](const char* name) {
      auto it = s.metrics.find(name);
      return it == s.metrics.end() ? std::string("-") : format_number(it->second.mean);
    };
    std::printf("%-12s acc %s  auroc %s  overlap %s\n", s.stack.c_str(), get("closed_accuracy").c_str(),
                get("auroc").c_str(), get("mean_overlap").c_str());
  }
  std::printf("wrote %zu files to %s\n", written.size(), cfg.output_dir.string().c_str());
  if (failed == doc.cells.size()) return kRuntime;
  return kOk;
}

int cmd_eval(const fs::path& config_path, const fs::path& checkpoint, std::uint64_t seed, std::optional<fs::path> out) {
  const ExperimentConfig cfg = load_config(config_path);
  const Dataset full = build_dataset(cfg);
  const OpenClosedSplit split = build_split(cfg, full, seed);
  const ModelParams params = load_checkpoint(checkpoint);
  if (params.spec() != model_spec(cfg, full.input_width())) {
    throw InvalidArgument("checkpoint architecture does not match the config");
  }
  const OsrReport report = evaluate_model(params, split);
  print_summary(report);
  if (out) write_json(*out / "eval.json", osr_report_to_json(report));
  return kOk;
}

int cmd_eval_external(std::optional<fs::path> config_path, ExternalDumpPaths paths, std::optional<fs::path> out) {
  if (config_path) {
    const ExperimentConfig cfg = load_config(*config_path);
    if (cfg.dataset.kind != DatasetConfig::Kind::External) {
      throw ConfigError("dataset.kind", "eval-external needs a config of kind external");
    }
    paths = cfg.dataset.external;
  }
  if (paths.closed_train.empty() || paths.closed_test.empty() || paths.open_test.empty()) {
    throw InvalidArgument("eval-external needs --config or all of --closed-train, --closed-test and --open");
  }
  const OsrReport report =
      eval_external(read_features(paths.closed_train), read_features(paths.closed_test), read_features(paths.open_test));
  print_summary(report);
  if (out) write_json(*out / "external_report.json", osr_report_to_json(report));
  return kOk;
}

int cmd_report(std::optional<fs::path> config_path, std::optional<fs::path> in, const fs::path& out) {
  if (!in) in = out / "report.json";
  std::ifstream is(*in);
  if (!is) throw Error("cannot read " + in->string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
  const ReportDocument doc = report_from_json(j);
  if (config_path) {
    const ExperimentConfig cfg = load_config(*config_path);
    if (config_hash(cfg) != doc.config_hash) {
      throw InvalidArgument("report was produced by a different config (hash mismatch)");
    }
  }
  const auto written = write_report(doc, out);
  std::printf("wrote %zu files to %s\n", written.size(), out.string().c_str());
  return kOk;
}

bool is_validation(const FeatureDumpError& e) { return e.kind() != FeatureDumpError::Kind::Io; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-set recognition experiments with prototype-distance metrics"};
  app.require_subcommand(1);

  fs::path config;
  std::optional<fs::path> out;
  std::optional<std::size_t> threads;
  auto* train = app.add_subcommand("train", "Train every (stack, seed) cell and write the report");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  train->add_option("--out", out, "Output directory (overrides output_dir)");
  train->add_option("--threads", threads, "Worker threads (overrides threads)");

  fs::path checkpoint;
  std::uint64_t seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint on the config's split for one seed");
  eval->add_option("--config", config, "Experiment config (JSON)")->required();
  eval->add_option("--checkpoint", checkpoint, "OSRM checkpoint")->required();
  eval->add_option("--seed", seed, "Seed whose split to evaluate on")->required();
  eval->add_option("--out", out, "Directory for eval.json");

  std::optional<fs::path> ext_config;
  ExternalDumpPaths paths;
  auto* ext = app.add_subcommand("eval-external", "Evaluate OSRF feature dumps produced elsewhere");
  ext->add_option("--config", ext_config, "Config of dataset kind external");
  ext->add_option("--closed-train", paths.closed_train, "Closed-train dump");
  ext->add_option("--closed-test", paths.closed_test, "Closed-test dump");
  ext->add_option("--open", paths.open_test, "Open-test dump");
  ext->add_option("--out", out, "Directory for external_report.json");

  std::optional<fs::path> report_config;
  std::optional<fs::path> report_in;
  fs::path report_out;
  auto* report = app.add_subcommand("report", "Regenerate tables and plots from report.json");
  report->add_option("--config", report_config, "Experiment config; checked against the report's config hash");
  report->add_option("--in", report_in, "report.json written by train (default: <out>/report.json)");
  report->add_option("--out", report_out, "Output directory")->required();

  fs::path fixtures_out;
  std::uint64_t fixtures_seed = 0;
  auto* fixtures = app.add_subcommand("export-fixtures", "Write regularizer reference vectors as JSON");
  fixtures->add_option("--out", fixtures_out, "Output JSON file")->required();
  fixtures->add_option("--seed", fixtures_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train) return cmd_train(config, out, threads);
    if (*eval) return cmd_eval(config, checkpoint, seed, out);
    if (*ext) return cmd_eval_external(ext_config, paths, out);
    if (*report) return cmd_report(report_config, report_in, report_out);
    if (*fixtures) {
      write_json(fixtures_out, regularizer_fixtures(fixtures_seed));
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kValidation;
  } catch (const FeatureDumpError& e) {
    std::fprintf(stderr, "feature dump error: %s\n", e.what());
    return is_validation(e) ? kValidation : kRuntime;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kRuntime;
}
