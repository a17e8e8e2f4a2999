#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include "osrlab/expcli.hpp"

namespace osrlab {

using nlohmann::json;

namespace {

// Walks one JSON object, tracking the dotted path for diagnostics and
// rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "required field is missing");
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    return as_unsigned(obj_.at(key), field(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<ObjectReader> object(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return ObjectReader(obj_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  static std::uint64_t as_unsigned(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(where, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<std::uint64_t> unsigned_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "expected an array");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(ObjectReader::as_unsigned(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

DatasetConfig::Kind parse_kind(const std::string& s, const std::string& where) {
  if (s == "gaussian") return DatasetConfig::Kind::Gaussian;
  if (s == "images") return DatasetConfig::Kind::GradientImages;
  if (s == "external") return DatasetConfig::Kind::External;
  throw ConfigError(where, "unknown dataset kind '" + s + "' (expected gaussian, images or external)");
}

std::string kind_name(DatasetConfig::Kind k) {
  switch (k) {
    case DatasetConfig::Kind::Gaussian: return "gaussian";
    case DatasetConfig::Kind::GradientImages: return "images";
    case DatasetConfig::Kind::External: return "external";
  }
  return "gaussian";
}

void rethrow_as_config(const std::string& field, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (stacks.empty()) throw ConfigError("stacks", "at least one regularizer stack is required");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  std::set<std::string> names;
  for (const auto& s : stacks) {
    if (!names.insert(s.name).second) throw ConfigError("stacks", "duplicate stack name '" + s.name + "'");
    rethrow_as_config("stacks", [&] { s.stack.validate(); });
  }
  std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
  if (unique_seeds.size() != seeds.size()) throw ConfigError("seeds", "duplicate seed");
  if (hidden_widths.empty()) throw ConfigError("model.hidden", "at least one hidden layer is required");
  rethrow_as_config("optimizer", [&] { optimizer.validate(); });
  if (!(weight_decay_constant > 0.0)) throw ConfigError("regularizers.weight_decay_constant", "must be positive");
  if (!(smoothing_alpha >= 0.0 && smoothing_alpha < 1.0)) throw ConfigError("regularizers.smoothing_alpha", "must lie in [0, 1)");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  switch (dataset.kind) {
    case DatasetConfig::Kind::Gaussian:
      rethrow_as_config("dataset", [&] { dataset.gaussian.validate(); });
      if (closed_classes >= dataset.gaussian.total_classes) throw ConfigError("split.closed_classes", "must be below total_classes");
      break;
    case DatasetConfig::Kind::GradientImages:
      rethrow_as_config("dataset", [&] { dataset.images.validate(); });
      if (closed_classes >= dataset.images.total_classes) throw ConfigError("split.closed_classes", "must be below total_classes");
      break;
    case DatasetConfig::Kind::External:
      if (dataset.external.closed_train.empty() || dataset.external.closed_test.empty() || dataset.external.open_test.empty()) {
        throw ConfigError("dataset", "external datasets need closed_train, closed_test and open_test paths");
      }
      break;
  }
  if (closed_classes < 2) throw ConfigError("split.closed_classes", "must be >= 2");
  if (!(fractions.train > 0.0) || fractions.val < 0.0 || fractions.test <= 0.0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split", "fractions must be nonnegative, train and test positive, and sum to 1");
  }
  for (const auto& s : stacks) {
    if (s.stack.mix_mode == MixMode::CutMix && dataset.kind != DatasetConfig::Kind::GradientImages) {
      throw ConfigError("stacks", "stack '" + s.name + "' uses CutMix, which needs an image dataset");
    }
  }
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  ObjectReader root(doc, "");

  if (auto ds = root.object("dataset")) {
    cfg.dataset.kind = parse_kind(ds->string("kind", "gaussian"), ds->field("kind"));
    switch (cfg.dataset.kind) {
      case DatasetConfig::Kind::Gaussian: {
        auto& g = cfg.dataset.gaussian;
        g.total_classes = ds->unsigned_int("total_classes", g.total_classes);
        g.dims = ds->unsigned_int("dims", g.dims);
        g.per_class_count = ds->unsigned_int("per_class_count", g.per_class_count);
        g.center_scale = ds->number("center_scale", g.center_scale);
        g.cluster_scale = ds->number("cluster_scale", g.cluster_scale);
        g.seed = ds->unsigned_int("seed", g.seed);
        break;
      }
      case DatasetConfig::Kind::GradientImages: {
        auto& im = cfg.dataset.images;
        im.total_classes = ds->unsigned_int("total_classes", im.total_classes);
        im.per_class_count = ds->unsigned_int("per_class_count", im.per_class_count);
        im.shape.channels = ds->unsigned_int("channels", im.shape.channels);
        im.shape.height = ds->unsigned_int("height", im.shape.height);
        im.shape.width = ds->unsigned_int("width", im.shape.width);
        im.noise = ds->number("noise", im.noise);
        im.seed = ds->unsigned_int("seed", im.seed);
        break;
      }
      case DatasetConfig::Kind::External: {
        auto& ex = cfg.dataset.external;
        ex.closed_train = ds->string("closed_train", "");
        ex.closed_test = ds->string("closed_test", "");
        ex.open_test = ds->string("open_test", "");
        break;
      }
    }
    ds->finish();
  }

  if (auto sp = root.object("split")) {
    cfg.closed_classes = sp->unsigned_int("closed_classes", cfg.closed_classes);
    cfg.fractions.train = sp->number("train", cfg.fractions.train);
    cfg.fractions.val = sp->number("val", cfg.fractions.val);
    cfg.fractions.test = sp->number("test", cfg.fractions.test);
    sp->finish();
  }

  if (auto m = root.object("model")) {
    if (m->has("hidden")) {
      auto widths = unsigned_list(m->at("hidden"), m->field("hidden"));
      cfg.hidden_widths.assign(widths.begin(), widths.end());
    }
    m->finish();
  }

  if (auto o = root.object("optimizer")) {
    auto& opt = cfg.optimizer;
    const std::string kind = o->string("kind", std::string(to_string(opt.kind)));
    if (kind == "sgd-momentum") {
      opt.kind = OptimizerKind::SgdMomentum;
    } else if (kind == "adam") {
      opt.kind = OptimizerKind::Adam;
    } else {
      throw ConfigError(o->field("kind"), "unknown optimizer '" + kind + "' (expected sgd-momentum or adam)");
    }
    opt.eta0 = o->number("eta0", opt.eta0);
    opt.momentum = o->number("momentum", opt.momentum);
    opt.epochs = o->unsigned_int("epochs", opt.epochs);
    opt.batch_size = o->unsigned_int("batch_size", opt.batch_size);
    opt.adam.beta1 = o->number("beta1", opt.adam.beta1);
    opt.adam.beta2 = o->number("beta2", opt.adam.beta2);
    opt.adam.epsilon = o->number("epsilon", opt.adam.epsilon);
    o->finish();
  }

  if (auto r = root.object("regularizers")) {
    cfg.weight_decay_constant = r->number("weight_decay_constant", cfg.weight_decay_constant);
    cfg.smoothing_alpha = r->number("smoothing_alpha", cfg.smoothing_alpha);
    r->finish();
  }

  const json& stacks = root.at("stacks");
  if (!stacks.is_array()) throw ConfigError("stacks", "expected an array of stack names");
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const std::string where = "stacks[" + std::to_string(i) + "]";
    if (!stacks[i].is_string()) throw ConfigError(where, "expected a stack name string");
    NamedStack named{stacks[i].get<std::string>(), {}};
    rethrow_as_config(where, [&] { named.stack = parse_stack_name(named.name); });
    cfg.stacks.push_back(std::move(named));
  }

  cfg.seeds = unsigned_list(root.at("seeds"), "seeds");
  cfg.master_seed = root.unsigned_int("master_seed", cfg.master_seed);
  cfg.threads = root.unsigned_int("threads", cfg.threads);
  cfg.save_checkpoints = root.boolean("save_checkpoints", cfg.save_checkpoints);
  cfg.dump_features = root.boolean("dump_features", cfg.dump_features);
  cfg.output_dir = root.string("output_dir", cfg.output_dir.string());
  root.finish();

  for (auto& s : cfg.stacks) {
    if (s.stack.weight_decay) s.stack.weight_decay->lambda_times_n = cfg.weight_decay_constant;
    if (s.stack.smoothing_alpha) s.stack.smoothing_alpha = cfg.smoothing_alpha;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("<file>", "cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  json ds;
  ds["kind"] = kind_name(cfg.dataset.kind);
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::Gaussian: {
      const auto& g = cfg.dataset.gaussian;
      ds["total_classes"] = g.total_classes;
      ds["dims"] = g.dims;
      ds["per_class_count"] = g.per_class_count;
      ds["center_scale"] = g.center_scale;
      ds["cluster_scale"] = g.cluster_scale;
      ds["seed"] = g.seed;
      break;
    }
    case DatasetConfig::Kind::GradientImages: {
      const auto& im = cfg.dataset.images;
      ds["total_classes"] = im.total_classes;
      ds["per_class_count"] = im.per_class_count;
      ds["channels"] = im.shape.channels;
      ds["height"] = im.shape.height;
      ds["width"] = im.shape.width;
      ds["noise"] = im.noise;
      ds["seed"] = im.seed;
      break;
    }
    case DatasetConfig::Kind::External:
      ds["closed_train"] = cfg.dataset.external.closed_train.string();
      ds["closed_test"] = cfg.dataset.external.closed_test.string();
      ds["open_test"] = cfg.dataset.external.open_test.string();
      break;
  }
  j["dataset"] = ds;
  j["split"] = {{"closed_classes", cfg.closed_classes},
                {"train", cfg.fractions.train},
                {"val", cfg.fractions.val},
                {"test", cfg.fractions.test}};
  j["model"] = {{"hidden", cfg.hidden_widths}};
  const auto& opt = cfg.optimizer;
  j["optimizer"] = {{"kind", std::string(to_string(opt.kind))},
                    {"eta0", opt.eta0},
                    {"momentum", opt.momentum},
                    {"epochs", opt.epochs},
                    {"batch_size", opt.batch_size},
                    {"beta1", opt.adam.beta1},
                    {"beta2", opt.adam.beta2},
                    {"epsilon", opt.adam.epsilon}};
  j["regularizers"] = {{"weight_decay_constant", cfg.weight_decay_constant}, {"smoothing_alpha", cfg.smoothing_alpha}};
  json names = json::array();
  for (const auto& s : cfg.stacks) names.push_back(s.name);
  j["stacks"] = names;
  j["seeds"] = cfg.seeds;
  j["master_seed"] = cfg.master_seed;
  j["threads"] = cfg.threads;
  j["save_checkpoints"] = cfg.save_checkpoints;
  j["dump_features"] = cfg.dump_features;
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return config_to_json(a) == config_to_json(b); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  return fnv1a64(j.dump());
}

}  // namespace osrlab
