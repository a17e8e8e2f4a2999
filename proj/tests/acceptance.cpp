// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "osrlab/expcli.hpp"

using namespace osrlab;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void auroc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1001);
  double worst = 0.0, worst_rank = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<int> n(1, 50), levels(2, 8);
    const int lv = levels(gen);
    std::uniform_int_distribution<int> level(0, lv);
    std::vector<double> c(static_cast<std::size_t>(n(gen))), o(static_cast<std::size_t>(n(gen)));
    // few distinct levels force ties within and across the two samples
    for (double& v : c) v = 0.25 * level(gen);
    for (double& v : o) v = 0.25 * level(gen) + 0.25;
    const double a = roc_auroc(c, o).auroc;
    worst = std::max(worst, std::abs(a - auroc_pairwise_oracle(c, o)));
    worst_rank = std::max(worst_rank, std::abs(a - oracle::auroc_ranks(c, o)));
  }
  const double secs = seconds_since(t0);
  report(worst <= 1e-9 && worst_rank <= 1e-9 && secs < 5.0, "AUROC oracle equivalence",
         fmt("200 tied instances, max |diff| pairwise %.2e, rank %.2e (tol 1e-9), %.3f s (limit 5 s)", worst,
             worst_rank, secs));
}

void smoothing_identity() {
  std::mt19937_64 gen(1002);
  const double alphas[] = {0.05, 0.1, 0.3};
  const std::size_t ks[] = {2, 10, 100};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double alpha = alphas[t % 3];
    const std::size_t k = ks[(t / 3) % 3];
    const auto p = oracle::random_simplex(gen, k);
    std::vector<double> q;
    if (t % 2 == 0) {
      q.assign(k, 0.0);
      q[std::uniform_int_distribution<std::size_t>(0, k - 1)(gen)] = 1.0;
    } else {
      q = oracle::random_simplex(gen, k);
    }
    const double direct = cross_entropy(smooth_targets(q, SmoothingConfig{alpha, k}), p);
    double h_qp = 0.0, kl = 0.0;
    const double u = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      h_qp -= q[i] * std::log(p[i]);
      kl += u * std::log(u / p[i]);
    }
    const double decomposed = (1.0 - alpha) * h_qp + alpha * (kl + std::log(static_cast<double>(k)));
    worst = std::max(worst, std::abs(direct - decomposed));
  }
  report(worst <= 1e-9, "Label smoothing cross-entropy identity",
         fmt("1000 cases, alpha in {0.05,0.1,0.3}, K in {2,10,100}, max |diff| %.2e (tol 1e-9)", worst));
}

void weight_decay_equivalence() {
  const MlpSpec spec{{4, 6, 5, 3}};
  auto fused = init_model(spec, RngStream(1003));
  auto explicit_gd = fused;
  auto velocity = fused.zeros_like();
  RngStream rng(1004);
  std::mt19937_64 gen(1005);
  const double c = 1100.0;
  const std::size_t n = fused.weight_count();
  const double eta = 0.01;
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    Matrix x(8, 4), t(8, 3);
    for (double& v : x.values()) v = rng.normal();
    for (std::size_t r = 0; r < 8; ++r) {
      const auto q = oracle::random_simplex(gen, 3);
      std::copy(q.begin(), q.end(), t.row(r).begin());
    }
    sgd_momentum_step(fused, backward(fused, x, t).grad, velocity, eta, c / static_cast<double>(n), 0.0);

    // explicit descent on L + (C / 2N) sum w^2: the penalty adds (C / N) w to each weight gradient
    const auto g = backward(explicit_gd, x, t).grad;
    for (std::size_t l = 0; l < explicit_gd.layers.size(); ++l) {
      auto w = explicit_gd.layers[l].weights.values();
      const auto gw = g.layers[l].weights.values();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * (gw[i] + c / static_cast<double>(n) * w[i]);
      for (std::size_t i = 0; i < explicit_gd.layers[l].bias.size(); ++i) {
        explicit_gd.layers[l].bias[i] -= eta * g.layers[l].bias[i];
      }
    }
    for (std::size_t l = 0; l < fused.layers.size(); ++l) {
      const auto a = fused.layers[l].weights.values(), b = explicit_gd.layers[l].weights.values();
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      for (std::size_t i = 0; i < fused.layers[l].bias.size(); ++i) {
        worst = std::max(worst, std::abs(fused.layers[l].bias[i] - explicit_gd.layers[l].bias[i]));
      }
    }
  }
  report(worst <= 1e-12, "Weight decay equals explicit L2 descent",
         fmt("100 steps, momentum 0, C=1100, N=%zu, max coordinate |diff| %.2e (tol 1e-12)", n, worst));
}

void gradient_check() {
  RngStream rng(1006);
  std::mt19937_64 gen(1007);
  std::size_t coords = 0, passed = 0, smooth = 0, smooth_passed = 0;
  double worst_smooth = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t hidden = 1 + rng.index(2);  // 2 or 3 weight layers
    std::vector<std::size_t> widths{1 + rng.index(8)};
    for (std::size_t d = 0; d < hidden; ++d) widths.push_back(2 + rng.index(7));
    widths.push_back(2 + rng.index(7));
    const auto params = init_model(MlpSpec{widths}, rng.derive(static_cast<std::uint64_t>(trial)));
    Matrix x(1 + rng.index(6), widths.front()), t(x.rows(), widths.back());
    for (double& v : x.values()) v = rng.normal();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto q = oracle::random_simplex(gen, widths.back());
      std::copy(q.begin(), q.end(), t.row(r).begin());
    }
    const auto r = oracle::gradient_check(params, x, t, 1e-3, 1e-4);
    coords += r.coordinates;
    passed += r.passed;
    smooth += r.smooth;
    smooth_passed += r.smooth_passed;
    worst_smooth = std::max(worst_smooth, r.worst_smooth_relative_error);
  }
  const double smooth_rate = static_cast<double>(smooth_passed) / static_cast<double>(smooth);
  const double all_rate = static_cast<double>(passed) / static_cast<double>(coords);
  report(smooth_rate > 0.99, "Gradient check",
         fmt("50 nets, h=1e-3, rel err < 1e-4 on %zu/%zu kink-free coordinates (%.2f%%, need > 99%%), "
             "worst %.2e; %zu/%zu (%.2f%%) counting probes that cross a rectifier kink",
             smooth_passed, smooth, 100.0 * smooth_rate, worst_smooth, passed, coords, 100.0 * all_rate));
}

void cutmix_exactness() {
  RngStream rng(1008);
  std::size_t checked = 0, mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const ImageShape shape{1 + rng.index(3), 2 + rng.index(15), 2 + rng.index(15)};
    const std::size_t n = 2 + rng.index(4);
    Batch b{Matrix(n, shape.pixels()), {}, shape};
    for (std::size_t i = 0; i < n; ++i) {
      b.labels.push_back(static_cast<std::int32_t>(i));
      for (double& v : b.inputs.row(i)) v = static_cast<double>(i + 1);  // row tag marks pixel provenance
    }
    const auto r = cutmix_batch_detailed(b, one_hot(b.labels, n), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = r.partner[i];
      if (j == i) continue;  // self-paste leaves the row unchanged
      std::size_t pasted = 0;
      for (double v : r.batch.inputs.row(i)) pasted += v == static_cast<double>(j + 1) ? 1 : 0;
      const double fraction = static_cast<double>(pasted) / static_cast<double>(shape.pixels());
      ++checked;
      if (r.batch.targets(i, j) != fraction || r.batch.targets(i, i) != 1.0 - fraction) ++mismatches;
    }
  }
  report(mismatches == 0 && checked > 0, "CutMix exactness",
         fmt("100 images/boxes, %zu mixed rows, %zu weight != pasted/total pixel count", checked, mismatches));
}

void overlap_endpoints() {
  RngStream rng(1009);
  double worst_identical = 0.0, worst_separated = 0.0;
  std::size_t separated_cases = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(2 + rng.index(300));
    for (double& v : a) v = std::abs(rng.normal()) * rng.uniform(0.1, 5.0);
    worst_identical = std::max(worst_identical, std::abs(distance_overlap(a, a) - 1.0));

    std::vector<double> lo(2 + rng.index(200)), hi(2 + rng.index(200));
    const double top = rng.uniform(0.5, 2.0), gap = rng.uniform(1.0, 10.0);
    for (double& v : lo) v = rng.uniform(0.0, top);
    for (double& v : hi) v = top + gap + rng.uniform(0.0, top);
    const auto bins = overlap_bins(lo, hi);
    if (!bins) continue;
    const double lo_max = *std::max_element(lo.begin(), lo.end());
    const double hi_min = *std::min_element(hi.begin(), hi.end());
    if (hi_min - lo_max <= bins->width) continue;
    ++separated_cases;
    worst_separated = std::max(worst_separated, distance_overlap(lo, hi));
  }
  report(worst_identical <= 1e-9 && worst_separated == 0.0 && separated_cases >= 50, "Overlap endpoints",
         fmt("identical: max |overlap-1| %.2e (tol 1e-9); %zu separated by > 1 bin: max overlap %.3g (need 0)",
             worst_identical, separated_cases, worst_separated));
}

const CellResult* find_cell(const ReportDocument& doc, const std::string& stack, std::uint64_t seed) {
  for (const auto& c : doc.cells) {
    if (c.stack == stack && c.seed == seed) return &c;
  }
  return nullptr;
}

double stack_mean(const ReportDocument& doc, const std::string& stack, const std::string& metric) {
  for (const auto& s : doc.summaries) {
    if (s.stack == stack) {
      const auto it = s.metrics.find(metric);
      return it == s.metrics.end() ? NAN : it->second.mean;
    }
  }
  return NAN;
}

void directional(const ExperimentConfig& cfg, const ReportDocument& doc, double secs) {
  bool ok = secs < 300.0;
  std::size_t failed_cells = 0;
  for (const auto& c : doc.cells) failed_cells += c.report ? 0 : 1;
  ok = ok && failed_cells == 0;
  std::string detail;
  const double base_auroc = stack_mean(doc, "Base", "auroc");
  const double base_overlap = stack_mean(doc, "Base", "mean_overlap");
  detail += fmt("Base auroc %.4f overlap %.4f", base_auroc, base_overlap);
  for (const char* s : {"L2", "LS", "MU"}) {
    const double a = stack_mean(doc, s, "auroc"), o = stack_mean(doc, s, "mean_overlap");
    ok = ok && a > base_auroc && o < base_overlap;
    detail += fmt("; %s %.4f %.4f", s, a, o);
  }
  const double base_cos = stack_mean(doc, "Base", "cos_prototype_pairs");
  const double ls_cos = stack_mean(doc, "LS", "cos_prototype_pairs");
  ok = ok && ls_cos < base_cos;
  detail += fmt("; prototype cosine LS %.4f vs Base %.4f; %zu seeds, %zu failed cells, %.1f s (limit 300 s)",
                ls_cos, base_cos, cfg.seeds.size(), failed_cells, secs);
  report(ok, "Directional result: L2, LS, MU beat Base on AUROC and overlap", detail);
}

void ssw_ordering(const ExperimentConfig& cfg, const ReportDocument& doc) {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : cfg.seeds) {
    const auto* base = find_cell(doc, "Base", seed);
    const auto* l2 = find_cell(doc, "L2", seed);
    if (!base || !l2 || !base->training || !l2->training) {
      ok = false;
      detail += fmt("seed %llu missing; ", static_cast<unsigned long long>(seed));
      continue;
    }
    const double b = base->training->final_ssw, l = l2->training->final_ssw;
    ok = ok && l < b;
    detail += fmt("seed %llu L2 %.2f < Base %.2f; ", static_cast<unsigned long long>(seed), l, b);
  }
  report(ok, "SSW lower under weight decay on every seed", detail.substr(0, detail.size() - 2));
}

void determinism(const ExperimentConfig& cfg, const ReportDocument& first) {
  const std::string a = report_to_json(first).dump();
  const std::string b = report_to_json(run_experiment(cfg)).dump();
  report(a == b, "End-to-end determinism", fmt("second run of the default config, %zu vs %zu bytes, %s", a.size(),
                                                b.size(), a == b ? "identical" : "different"));
}

void rotation_invariance(const ExperimentConfig& cfg, const ReportDocument& doc) {
  const Dataset full = build_dataset(cfg);
  double worst = 0.0;
  std::size_t cells = 0;
  for (const char* stack : {"Base", "LS"}) {
    const auto* cell = find_cell(doc, stack, cfg.seeds.front());
    if (!cell || !cell->model) continue;
    const auto f = extract_eval_features(*cell->model, build_split(cfg, full, cell->seed));
    const std::size_t width = f.closed_train.width();
    const auto q = oracle::random_orthogonal(width, 1010);
    auto rotate = [&](const FeatureMatrix& m) {
      FeatureMatrix out(width);
      for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(oracle::apply(q, m.row(r)), m.label(r));
      return out;
    };
    const std::size_t k = cfg.closed_classes;
    const auto a = evaluate_features(f, k);
    const auto b = evaluate_features({rotate(f.closed_train), rotate(f.closed_test), rotate(f.open_test)}, k);
    for (double d : {a.auroc - b.auroc, a.mean_overlap - b.mean_overlap,
                     a.cosine.prototype_pairs - b.cosine.prototype_pairs,
                     a.cosine.closed_to_target - b.cosine.closed_to_target,
                     a.cosine.open_to_prototypes - b.cosine.open_to_prototypes}) {
      worst = std::max(worst, std::abs(d));
    }
    ++cells;
  }
  report(cells == 2 && worst <= 1e-6, "Rotation invariance",
         fmt("trained features of %zu cells, max |diff| over AUROC, overlap, cosine tables %.2e (tol 1e-6)", cells,
             worst));
}

}  // namespace

int main() {
  auroc_oracle();
  smoothing_identity();
  weight_decay_equivalence();
  gradient_check();
  cutmix_exactness();
  overlap_endpoints();

  const auto cfg = load_config(std::string(OSRLAB_SOURCE_DIR) + "/configs/default.json");
  const auto t0 = std::chrono::steady_clock::now();
  const auto doc = run_experiment(cfg);
  const double secs = seconds_since(t0);
  directional(cfg, doc, secs);
  ssw_ordering(cfg, doc);
  determinism(cfg, doc);
  rotation_invariance(cfg, doc);

  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
