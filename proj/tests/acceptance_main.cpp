// Acceptance harness: one pass/fail line per criterion, nonzero exit on
// any failure. Criteria 8 and 9 drive the installed command-line binary so
// the whole contract (flags, exit codes, artifact bytes) is what is tested.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "detectors.hpp"
#include "evaluation.hpp"
#include "features.hpp"
#include "mann_kendall.hpp"
#include "models/mlp.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "stats.hpp"
#include "test_util.hpp"

namespace {

using namespace fdx;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_criterion(int criterion, const std::function<std::string()>& body) {
  try {
    report(criterion, true, body());
  } catch (const std::exception& e) {
    report(criterion, false, e.what());
  }
}

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

void expect(bool ok, const std::string& message) {
  if (!ok) fail(message);
}

std::string scenario_path(const char* name) {
  return std::string(FDX_SCENARIO_DIR) + "/" + name;
}

void cli(const std::string& args) {
  const std::string cmd = std::string(FDX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  expect(rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0,
         "command failed (exit " + std::to_string(rc == -1 ? -1 : WEXITSTATUS(rc)) +
             "): " + args);
}

void expect_same_bytes(const std::string& a, const std::string& b, const std::string& what) {
  expect(std::filesystem::exists(a) && std::filesystem::exists(b),
         what + ": missing output file");
  expect(fdx::test::slurp(a) == fdx::test::slurp(b), what + ": bytes differ");
}

// ---------------------------------------------------------------------------
// Criterion 1: the trend test against an O(n^2) oracle.

struct BruteForce {
  double s = 0.0;
  double var_s = 0.0;
  double z = 0.0;
  double p_pos = 0.0;
};

BruteForce brute_force_trend(const std::vector<double>& v) {
  const std::size_t n = v.size();
  BruteForce r;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (v[j] > v[i]) r.s += 1.0;
      else if (v[j] < v[i]) r.s -= 1.0;
    }
  }
  std::map<double, double> ties;
  for (double x : v) ties[x] += 1.0;
  const double dn = static_cast<double>(n);
  double var = dn * (dn - 1.0) * (2.0 * dn + 5.0);
  for (const auto& [value, t] : ties) {
    (void)value;
    if (t > 1.0) var -= t * (t - 1.0) * (2.0 * t + 5.0);
  }
  r.var_s = var / 18.0;
  if (r.var_s > 0.0 && r.s > 0.0) r.z = (r.s - 1.0) / std::sqrt(r.var_s);
  else if (r.var_s > 0.0 && r.s < 0.0) r.z = (r.s + 1.0) / std::sqrt(r.var_s);
  else r.z = 0.0;
  r.p_pos = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

std::string criterion_1() {
  const auto start = Clock::now();
  Rng rng(20260822);
  double max_p_diff = 0.0;
  double max_rev_diff = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + rng.below(47);  // 4..50
    std::vector<double> v(n);
    if (trial % 2 == 0) {
      for (auto& x : v) x = static_cast<double>(rng.below(6));  // heavy ties
    } else {
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    }
    const MannKendallResult got = mann_kendall(v);
    const BruteForce want = brute_force_trend(v);
    expect(static_cast<double>(got.s) == want.s,
           "S mismatch on trial " + std::to_string(trial));
    expect(std::abs(got.var_s - want.var_s) < 1e-9, "variance mismatch");
    max_p_diff = std::max(max_p_diff, std::abs(got.p_pos - want.p_pos));

    std::vector<double> rev(v.rbegin(), v.rend());
    const double sum = mann_kendall(v).p_pos + mann_kendall(rev).p_pos;
    max_rev_diff = std::max(max_rev_diff, std::abs(sum - 1.0));
  }
  expect(max_p_diff < 1e-12, "p-value drift " + std::to_string(max_p_diff));
  expect(max_rev_diff < 1e-12, "reversal identity drift " + std::to_string(max_rev_diff));
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  expect(secs < 10.0, "oracle sweep too slow: " + std::to_string(secs) + " s");
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "1000 random sequences match the O(n^2) oracle (max p drift %.2e, %.2f s)",
                max_p_diff, secs);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 2: trend-certainty window behavior.

std::string criterion_2() {
  std::vector<double> rising(144);
  for (std::size_t i = 0; i < rising.size(); ++i) {
    rising[i] = 0.5 + static_cast<double>(i) / 143.0;  // 0.5 .. 1.5
  }
  WindowStats up = window_stats(rising);
  expect(up.tc == 1, "strictly increasing window should be trend-certain");

  std::vector<double> flat(144, 1.2);
  WindowStats fl = window_stats(flat);
  expect(fl.tc == 0, "constant window must not be trend-certain");

  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> quiet(144);
    for (auto& x : quiet) x = rng.uniform(0.0, 0.999);
    WindowStats q = window_stats(quiet);
    expect(q.tc == 0 && q.var == 0.0, "sub-threshold window must be exactly (0, 0.0)");
  }
  return "rising window certain, constant window not, quiet windows exactly (0, 0.0)";
}

// ---------------------------------------------------------------------------
// Criterion 3: F-beta formula pins and range property.

std::string criterion_3() {
  expect(std::abs(f_beta(0.992, 0.789, 0.5) - 0.9434) < 1e-4, "F_0.5 pin mismatch");
  expect(std::abs(f_beta(0.992, 0.789, 1.0) - 0.8789) < 1e-4, "F_1 pin mismatch");
  Rng rng(33);
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform(1e-6, 1.0);
    const double r = rng.uniform(1e-6, 1.0);
    const double beta = rng.uniform(0.05, 5.0);
    const double f = f_beta(p, r, beta);
    expect(f >= std::min(p, r) - 1e-12 && f <= std::max(p, r) + 1e-12,
           "F_beta left [min(P,R), max(P,R)]");
  }
  return "formula pins 0.9434 / 0.8789 hold; F_beta bounded by P and R on 10^4 pairs";
}

// ---------------------------------------------------------------------------
// Criterion 4: analytic MLP gradients vs central finite differences.

std::string criterion_4() {
  Rng rng(4242);
  ClassifierConfig config;
  config.kind = ModelKind::Mlp;
  config.seed = 4242;
  config.mlp.hidden_layers = {5};
  config.mlp.scale_features = false;
  config.class_weights = {1.0, 2.0, 1.5};

  const std::vector<int> sizes = {6, 5, 3};
  std::vector<MlpLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    MlpLayer layer;
    layer.w.assign(static_cast<std::size_t>(sizes[l + 1]),
                   std::vector<double>(static_cast<std::size_t>(sizes[l])));
    layer.b.assign(static_cast<std::size_t>(sizes[l + 1]), 0.0);
    for (auto& row : layer.w) {
      for (auto& w : row) w = rng.uniform(-0.8, 0.8);
    }
    for (auto& b : layer.b) b = rng.uniform(-0.3, 0.3);
    layers.push_back(std::move(layer));
  }
  MlpModel model(config, layers, MinMaxScaler{}, false);

  std::vector<std::array<double, kFeatureCount>> x(8);
  std::vector<int> y(8);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (auto& v : x[i]) v = rng.uniform(-1.5, 1.5);
    y[i] = static_cast<int>(rng.below(3));
  }

  const MlpModel::BatchGradients analytic = model.loss_and_gradients(x, y);
  const double eps = 1e-5;
  double max_rel = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t o = 0; o < layers[l].w.size(); ++o) {
      for (std::size_t in = 0; in <= layers[l].w[o].size(); ++in) {
        auto perturbed = layers;
        double* slot = in < layers[l].w[o].size() ? &perturbed[l].w[o][in]
                                                  : &perturbed[l].b[o];
        const double base = *slot;
        *slot = base + eps;
        model.set_layers(perturbed);
        const double up = model.loss_and_gradients(x, y).loss;
        *slot = base - eps;
        model.set_layers(perturbed);
        const double down = model.loss_and_gradients(x, y).loss;
        *slot = base;
        const double numeric = (up - down) / (2.0 * eps);
        const double exact = in < layers[l].w[o].size() ? analytic.grads[l].w[o][in]
                                                        : analytic.grads[l].b[o];
        const double rel =
            std::abs(exact - numeric) / std::max(1e-8, std::abs(exact) + std::abs(numeric));
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  model.set_layers(layers);
  expect(max_rel < 1e-4, "gradient error " + std::to_string(max_rel));
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "analytic gradients match central differences (max rel err %.2e)", max_rel);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 5: stratified fold balance.

std::string criterion_5() {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(5));  // 2..6
    std::vector<int> labels(static_cast<std::size_t>(k) * 3 + rng.below(400));
    for (auto& l : labels) l = static_cast<int>(rng.below(3));
    for (int c = 0; c < 3; ++c) {
      auto count = std::count(labels.begin(), labels.end(), c);
      for (auto add = count; add < k; ++add) labels.push_back(c);
    }
    auto folds = stratified_kfold(labels, k, 1000 + static_cast<std::uint64_t>(trial));
    for (int c = 0; c < 3; ++c) {
      std::vector<std::int64_t> counts;
      for (const auto& fold : folds) {
        std::int64_t n = 0;
        for (std::size_t idx : fold) {
          if (labels[idx] == c) ++n;
        }
        counts.push_back(n);
      }
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      expect(*hi - *lo <= 1, "class " + std::to_string(c) + " is dealt unevenly");
    }
  }
  bool threw = false;
  try {
    stratified_kfold(std::vector<int>{0, 0, 0, 1, 1}, 3, 1);
  } catch (const ValidationError&) {
    threw = true;
  }
  expect(threw, "a class smaller than k must raise an error");
  return "100 random label vectors deal every class within 1 across folds; thin class rejected";
}

// ---------------------------------------------------------------------------
// Criterion 6: forward fill limit and idempotence.

std::string criterion_6() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v;
  v.push_back(2.5);
  for (int i = 0; i < 20; ++i) v.push_back(nan);
  v.push_back(7.0);
  forward_fill(v, 18);
  for (int i = 1; i <= 18; ++i) {
    expect(v[static_cast<std::size_t>(i)] == 2.5,
           "step " + std::to_string(i) + " should carry the last observation");
  }
  expect(v[19] == 0.0 && v[20] == 0.0, "steps past the limit must drop to 0.0");
  expect(v[21] == 7.0, "the next observation must be untouched");

  Rng rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> once(300);
    for (auto& x : once) x = rng.below(4) == 0 ? nan : rng.uniform(0.0, 2.0);
    std::vector<double> twice = once;
    forward_fill(once, 18);
    forward_fill(twice, 18);
    forward_fill(twice, 18);
    for (std::size_t i = 0; i < once.size(); ++i) {
      expect(once[i] == twice[i], "filling twice must equal filling once");
    }
  }
  return "20-step gap fills 18 then 0.0; double fill equals single fill";
}

// ---------------------------------------------------------------------------
// Criterion 7: calibration of the healthy fleet and the score/p equivalence.

std::string criterion_7() {
  ScenarioSpec spec = read_scenario(scenario_path("healthy_fleet.json"));
  SimulationOutput out = generate_fleet(spec);
  expect(out.records.size() >= 100000,
         "healthy fleet too small: " + std::to_string(out.records.size()));
  std::size_t above = 0;
  for (const auto& r : out.records) {
    if (r.score > 1.0) ++above;
  }
  const double fraction = static_cast<double>(above) / static_cast<double>(out.records.size());
  expect(fraction >= 0.0005 && fraction <= 0.002,
         "healthy exceedance fraction " + std::to_string(fraction));

  const DetectorCalibration cal = make_calibration(DetectorKind::Bbcv, 1.0, 0.001);
  Rng rng(77);
  int hot = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 10 + rng.below(191);  // 10..200
    std::vector<double> history(n);
    const double slope = trial % 2 == 0 ? rng.uniform(0.0, 2.0) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      history[i] = std::abs(rng.gaussian()) * 0.3 +
                   slope * static_cast<double>(i) / static_cast<double>(n);
    }
    const double score = bbcv_trend_score(history, cal);
    const bool significant = mann_kendall(history).p_pos < 0.001;
    expect((score > 1.0) == significant,
           "score/p-value disagreement on trial " + std::to_string(trial));
    if (significant) ++hot;
  }
  expect(hot > 100 && hot < 900, "equivalence sweep is one-sided: " + std::to_string(hot));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "healthy fraction above 1.0 = %.5f; score>1 iff p<0.001 on 1000 histories "
                "(%d significant)",
                fraction, hot);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 8: the bundled transfer experiment, end to end through the CLI.

double headline_f(const nlohmann::json& report, const std::string& model) {
  for (const auto& m : report.at("models")) {
    if (m.at("model") == model) return m.at("aggregate").at("f_beta").get<double>();
  }
  fail("report lacks model " + model);
}

std::string criterion_8() {
  const auto start = Clock::now();
  fdx::test::TempDir tmp("acc8");
  fdx::test::spit(tmp.file("config.json"),
                  R"({"seed": 42, "classifiers": [{"kind": "mlp"}]})");

  auto run_once = [&](const std::string& tag) {
    const std::string dir = tmp.file(tag);
    cli("simulate --scenario " + scenario_path("table1.json") + " --seed 42 --out " + dir +
        "/sim");
    cli("evaluate --config " + tmp.file("config.json") + " --seed 42 --scores " + dir +
        "/sim/scores.csv --frames " + dir + "/sim/frames.json --split " + dir +
        "/sim/split.json --out " + dir + "/report.json --md " + dir + "/report.md");
    return dir + "/report.json";
  };

  const std::string first = run_once("a");
  const std::string second = run_once("b");
  expect_same_bytes(first, second, "transfer report");

  const auto report = nlohmann::json::parse(fdx::test::slurp(first));
  expect(report.at("mode") == "transfer", "report mode should be transfer");
  const double mlp = headline_f(report, "mlp");
  const double baseline = headline_f(report, "above_one");
  expect(mlp >= 0.85, "network F_0.5 below threshold: " + std::to_string(mlp));
  expect(mlp > baseline, "network F_0.5 " + std::to_string(mlp) +
                             " does not beat the rule baseline " + std::to_string(baseline));
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  expect(secs < 300.0, "transfer experiment too slow: " + std::to_string(secs) + " s");
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "network F_0.5 %.4f >= 0.85 and beats rule baseline %.4f; "
                "bit-identical reruns (%.0f s)",
                mlp, baseline, secs);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-stable stages under rerun and different thread caps.

std::string criterion_9() {
  fdx::test::TempDir tmp("acc9");
  fdx::test::spit(
      tmp.file("config.json"),
      R"({"seed": 7, "window": 72, "stride": 6, "k_folds": 2,
          "classifiers": [{"kind": "above_one"}, {"kind": "mlp", "epochs": 40}]})");
  const std::string cfg = " --config " + tmp.file("config.json") + " --seed 7";
  const std::vector<std::pair<std::string, std::string>> variants = {
      {"t1a", " --threads 1"}, {"t1b", " --threads 1"}, {"t8", " --threads 8"}};

  // Stage commands are templated on a variant directory; the canonical
  // variant's outputs feed the next stage for every variant, so each stage
  // is compared on identical inputs.
  const std::string canon = tmp.file("t1a");
  std::vector<std::pair<std::string, std::function<std::string(const std::string&)>>> stages =
      {
          {"simulate",
           [&](const std::string& d) {
             return "simulate --scenario " + scenario_path("twin_smoke.json") +
                    " --out " + d + "/sim";
           }},
          {"detect",
           [&](const std::string& d) {
             return "detect --raw " + canon + "/sim/raw --scores " + d +
                    "/scores.csv --calibration " + d + "/calibration.json";
           }},
          {"preprocess",
           [&](const std::string& d) {
             return "preprocess --scores " + canon + "/scores.csv --frames " + canon +
                    "/sim/frames.json --split " + canon + "/sim/split.json --out " + d +
                    "/base.csv";
           }},
          {"featurize",
           [&](const std::string& d) {
             return "featurize --base " + canon + "/base.csv --out " + d + "/features.csv";
           }},
          {"train",
           [&](const std::string& d) {
             return "train --features " + canon + "/features.csv --model mlp --out " + d +
                    "/model.json";
           }},
          {"cv",
           [&](const std::string& d) {
             return "cv --features " + canon + "/features.csv --out " + d +
                    "/cv.json --md " + d + "/cv.md";
           }},
          {"evaluate",
           [&](const std::string& d) {
             return "evaluate --scores " + canon + "/scores.csv --frames " + canon +
                    "/sim/frames.json --split " + canon + "/sim/split.json --out " + d +
                    "/ev.json --md " + d + "/ev.md";
           }},
          {"report",
           [&](const std::string& d) {
             return "report --in " + canon + "/cv.json --out " + d + "/rep.md";
           }},
      };
  const std::map<std::string, std::vector<std::string>> artifacts = {
      {"simulate",
       {"sim/raw/wind.csv", "sim/raw/tuples.csv", "sim/raw/vibration.bin",
        "sim/frames.json", "sim/split.json"}},
      {"detect", {"scores.csv", "calibration.json"}},
      {"preprocess", {"base.csv"}},
      {"featurize", {"features.csv"}},
      {"train", {"model.json"}},
      {"cv", {"cv.json", "cv.md"}},
      {"evaluate", {"ev.json", "ev.md"}},
      {"report", {"rep.md"}},
  };

  for (const auto& [stage_name, command] : stages) {
    for (const auto& [tag, threads] : variants) {
      const std::string dir = tmp.file(tag);
      std::filesystem::create_directories(dir);
      cli(command(dir) + cfg + threads);
    }
    for (const std::string& artifact : artifacts.at(stage_name)) {
      expect_same_bytes(tmp.file("t1a/" + artifact), tmp.file("t1b/" + artifact),
                        stage_name + " rerun of " + artifact);
      expect_same_bytes(tmp.file("t1a/" + artifact), tmp.file("t8/" + artifact),
                        stage_name + " thread cap 8 on " + artifact);
    }
  }
  return "all 8 stages byte-identical across reruns and --threads 1 vs 8";
}

}  // namespace

int main() {
  ::unsetenv("FDX_SEED");  // keep an inherited environment from shifting results
  run_criterion(1, criterion_1);
  run_criterion(2, criterion_2);
  run_criterion(3, criterion_3);
  run_criterion(4, criterion_4);
  run_criterion(5, criterion_5);
  run_criterion(6, criterion_6);
  run_criterion(7, criterion_7);
  run_criterion(8, criterion_8);
  run_criterion(9, criterion_9);
  if (g_failures != 0) {
    std::printf("%d criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
