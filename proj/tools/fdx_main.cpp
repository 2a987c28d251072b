#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fdx/fdx.h"

namespace {

int map_status(fdx_status s) {
  switch (s) {
    case FDX_OK: return 0;
    case FDX_ERR_VALIDATION: return 2;
    default: return 1;
  }
}

struct ContextGuard {
  fdx_context* ctx;
  ContextGuard() : ctx(fdx_context_new()) {}
  ~ContextGuard() { fdx_context_free(ctx); }
  ContextGuard(const ContextGuard&) = delete;
  ContextGuard& operator=(const ContextGuard&) = delete;
};

int fail(fdx_context* ctx, fdx_status s) {
  std::fprintf(stderr, "error: %s\n", fdx_last_error(ctx));
  return map_status(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-fleet fault diagnosis pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fdx_version()));

  std::string config_path;
  std::uint64_t seed = 0;
  int threads = -1;
  app.add_option("--config", config_path, "JSON configuration file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Master seed override");
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware default)");

  // Every subcommand owns its option variables outright. Sharing a string
  // between subcommands lets one subcommand's default_val leak into another's
  // dispatch (a default is written at setup time, not at parse time).
  std::string sim_scenario, sim_out;
  std::string det_raw, det_scores, det_calibration;
  std::string pre_scores, pre_frames, pre_split, pre_out;
  std::string fea_base, fea_out;
  std::string tra_features, tra_model, tra_out;
  std::string cv_features, cv_scores, cv_frames, cv_out, cv_md;
  std::string eva_train, eva_test, eva_scores, eva_frames, eva_split;
  std::string eva_model, eva_out, eva_md;
  std::string rep_in, rep_out;
  std::string run_scenario, run_out;

  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic fleet dataset");
  sim->add_option("--scenario", sim_scenario, "Scenario description")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();

  CLI::App* det = app.add_subcommand("detect", "Score raw sensor streams");
  det->add_option("--raw", det_raw, "Directory with raw sensor streams")->required();
  det->add_option("--scores", det_scores, "Anomaly score CSV to write")
      ->default_val("scores.csv");
  det->add_option("--calibration", det_calibration, "Calibration JSON to write");

  CLI::App* pre = app.add_subcommand("preprocess", "Build the per-entity score table");
  pre->add_option("--scores", pre_scores, "Anomaly score CSV")->required();
  pre->add_option("--frames", pre_frames, "Fault frame JSON")->required();
  pre->add_option("--split", pre_split, "Train/test split JSON (fit on train units)");
  pre->add_option("--out", pre_out, "Base table CSV to write")->default_val("base.csv");

  CLI::App* fea = app.add_subcommand("featurize", "Derive trend features");
  fea->add_option("--base", fea_base, "Base table CSV")->required();
  fea->add_option("--out", fea_out, "Feature CSV to write")
      ->default_val("features.csv");

  CLI::App* tra = app.add_subcommand("train", "Fit one classifier");
  tra->add_option("--features", tra_features, "Feature CSV")->required();
  tra->add_option("--model", tra_model, "above_one, random_forest, gbm, or mlp")
      ->required();
  tra->add_option("--out", tra_out, "Model file to write")->default_val("model.json");

  CLI::App* cv = app.add_subcommand("cv", "Cross-validate the configured classifiers");
  cv->add_option("--features", cv_features, "Feature CSV input");
  cv->add_option("--scores", cv_scores, "Anomaly score CSV input");
  cv->add_option("--frames", cv_frames, "Fault frame JSON input");
  cv->add_option("--out", cv_out, "Report JSON to write")->default_val("report.json");
  cv->add_option("--md", cv_md, "Also write a Markdown summary here");

  CLI::App* eva = app.add_subcommand("evaluate", "Train/test transfer evaluation");
  eva->add_option("--train", eva_train, "Training feature CSV");
  eva->add_option("--test", eva_test, "Test feature CSV");
  eva->add_option("--scores", eva_scores, "Anomaly score CSV input");
  eva->add_option("--frames", eva_frames, "Fault frame JSON input");
  eva->add_option("--split", eva_split, "Train/test split JSON");
  eva->add_option("--model", eva_model, "Evaluate a single classifier by name");
  eva->add_option("--out", eva_out, "Report JSON to write")->default_val("report.json");
  eva->add_option("--md", eva_md, "Also write a Markdown summary here");

  CLI::App* rep = app.add_subcommand("report", "Render a report JSON as Markdown");
  rep->add_option("--in", rep_in, "Report JSON")->required();
  rep->add_option("--out", rep_out, "Markdown file to write")->default_val("report.md");

  CLI::App* run = app.add_subcommand("run", "Simulate, detect, and evaluate end to end");
  run->add_option("--scenario", run_scenario, "Scenario description")->required();
  run->add_option("--out", run_out, "Output directory")->required();

  for (CLI::App* sub : {sim, det, pre, fea, tra, cv, eva, rep, run}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::fputs(app.help().c_str(), stdout);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::fputs(app.help("", CLI::AppFormatMode::All).c_str(), stdout);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::printf("%s\n", fdx_version());
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fputs(app.help().c_str(), stderr);
    return 2;
  }

  ContextGuard guard;
  fdx_context* ctx = guard.ctx;
  if (ctx == nullptr) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }

  fdx_status st;
  if (!config_path.empty()) {
    st = fdx_load_config(ctx, config_path.c_str());
    if (st != FDX_OK) return fail(ctx, st);
  }
  int env_applied = 0;
  std::uint64_t env_seed = 0;
  st = fdx_seed_from_env(ctx, &env_applied, &env_seed);
  if (st != FDX_OK) return fail(ctx, st);
  const bool seed_given = seed_opt->count() > 0;
  if (seed_given) {
    st = fdx_set_seed(ctx, seed);
    if (st != FDX_OK) return fail(ctx, st);
  }
  if (threads >= 0) {
    st = fdx_set_threads(ctx, threads);
    if (st != FDX_OK) return fail(ctx, st);
  }
  const int has_override = seed_given || env_applied != 0;
  const std::uint64_t override_value = seed_given ? seed : env_seed;

  auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };

  st = FDX_OK;
  if (sim->parsed()) {
    st = fdx_simulate(ctx, sim_scenario.c_str(), has_override, override_value,
                      sim_out.c_str());
  } else if (det->parsed()) {
    st = fdx_detect(ctx, det_raw.c_str(), det_scores.c_str(), opt(det_calibration));
  } else if (pre->parsed()) {
    st = fdx_preprocess(ctx, pre_scores.c_str(), pre_frames.c_str(), opt(pre_split),
                        pre_out.c_str());
  } else if (fea->parsed()) {
    st = fdx_featurize(ctx, fea_base.c_str(), fea_out.c_str());
  } else if (tra->parsed()) {
    st = fdx_train(ctx, tra_features.c_str(), tra_model.c_str(), tra_out.c_str());
  } else if (cv->parsed()) {
    st = fdx_cross_validate(ctx, opt(cv_features), opt(cv_scores), opt(cv_frames),
                            cv_out.c_str(), opt(cv_md));
  } else if (eva->parsed()) {
    st = fdx_evaluate(ctx, opt(eva_train), opt(eva_test), opt(eva_scores),
                      opt(eva_frames), opt(eva_split), opt(eva_model),
                      eva_out.c_str(), opt(eva_md));
  } else if (rep->parsed()) {
    st = fdx_report(ctx, rep_in.c_str(), rep_out.c_str());
  } else if (run->parsed()) {
    st = fdx_run(ctx, run_scenario.c_str(), has_override, override_value,
                 run_out.c_str());
  }
  if (st != FDX_OK) return fail(ctx, st);
  return 0;
}
