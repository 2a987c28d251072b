#include "fdx/fdx.h"

#include <cstring>
#include <functional>
#include <span>
#include <string>

#include "common.hpp"
#include "mann_kendall.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"

struct fdx_context {
  fdx::RunConfig cfg = fdx::default_run_config();
  std::string last_error;
};

namespace {

constexpr const char* kVersion = "1.0.0";

std::string arg(const char* p) { return p == nullptr ? std::string() : std::string(p); }

void require(bool ok, const char* message) {
  if (!ok) throw fdx::ValidationError(message);
}

fdx_status guarded(fdx_context* ctx, const std::function<void()>& fn) {
  if (ctx == nullptr) return FDX_ERR_VALIDATION;
  ctx->last_error.clear();
  try {
    fn();
    return FDX_OK;
  } catch (const fdx::ValidationError& e) {
    ctx->last_error = e.what();
    return FDX_ERR_VALIDATION;
  } catch (const fdx::IoError& e) {
    ctx->last_error = e.what();
    return FDX_ERR_IO;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return FDX_ERR_RUNTIME;
  } catch (...) {
    ctx->last_error = "unknown error";
    return FDX_ERR_RUNTIME;
  }
}

void apply_threads(const fdx_context* ctx) { fdx::set_thread_cap(ctx->cfg.threads); }

}  // namespace

extern "C" {

const char* fdx_version(void) { return kVersion; }

fdx_context* fdx_context_new(void) {
  try {
    return new fdx_context();
  } catch (...) {
    return nullptr;
  }
}

void fdx_context_free(fdx_context* ctx) { delete ctx; }

const char* fdx_last_error(const fdx_context* ctx) {
  return ctx == nullptr ? "" : ctx->last_error.c_str();
}

fdx_status fdx_load_config(fdx_context* ctx, const char* path) {
  return guarded(ctx, [&] {
    require(path != nullptr && *path != '\0', "config path is required");
    ctx->cfg = fdx::load_run_config(arg(path));
  });
}

fdx_status fdx_set_seed(fdx_context* ctx, uint64_t seed) {
  return guarded(ctx, [&] { fdx::apply_seed(ctx->cfg, seed); });
}

fdx_status fdx_seed_from_env(fdx_context* ctx, int* applied, uint64_t* value) {
  return guarded(ctx, [&] {
    if (applied != nullptr) *applied = 0;
    auto seed = fdx::seed_from_env();
    if (!seed) return;
    fdx::apply_seed(ctx->cfg, *seed);
    if (applied != nullptr) *applied = 1;
    if (value != nullptr) *value = *seed;
  });
}

fdx_status fdx_set_threads(fdx_context* ctx, int threads) {
  return guarded(ctx, [&] {
    require(threads >= 0, "threads must be >= 0");
    ctx->cfg.threads = threads;
    fdx::set_thread_cap(threads);
  });
}

fdx_status fdx_config_json(fdx_context* ctx, char* buf, size_t cap, size_t* needed) {
  return guarded(ctx, [&] {
    const std::string text = ctx->cfg.to_json().dump(2) + "\n";
    if (needed != nullptr) *needed = text.size() + 1;
    if (buf == nullptr || cap == 0) return;
    const size_t n = text.size() + 1 <= cap ? text.size() : cap - 1;
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
    require(text.size() + 1 <= cap, "config buffer is too small");
  });
}

fdx_status fdx_simulate(fdx_context* ctx, const char* scenario_path,
                        int has_seed_override, uint64_t seed_override,
                        const char* out_dir) {
  return guarded(ctx, [&] {
    require(scenario_path != nullptr && *scenario_path != '\0',
            "simulate: scenario path is required");
    require(out_dir != nullptr && *out_dir != '\0', "simulate: output directory is required");
    apply_threads(ctx);
    std::optional<uint64_t> seed;
    if (has_seed_override != 0) seed = seed_override;
    fdx::run_simulate(arg(scenario_path), seed, arg(out_dir));
  });
}

fdx_status fdx_detect(fdx_context* ctx, const char* raw_dir, const char* scores_out,
                      const char* calibration_out) {
  return guarded(ctx, [&] {
    require(raw_dir != nullptr && *raw_dir != '\0', "detect: raw directory is required");
    require(scores_out != nullptr && *scores_out != '\0',
            "detect: scores output path is required");
    apply_threads(ctx);
    fdx::run_detect(ctx->cfg, arg(raw_dir), arg(scores_out), arg(calibration_out));
  });
}

fdx_status fdx_preprocess(fdx_context* ctx, const char* scores_path,
                          const char* frames_path, const char* split_path,
                          const char* base_out) {
  return guarded(ctx, [&] {
    require(scores_path != nullptr && *scores_path != '\0',
            "preprocess: scores path is required");
    require(frames_path != nullptr && *frames_path != '\0',
            "preprocess: frames path is required");
    require(base_out != nullptr && *base_out != '\0',
            "preprocess: output path is required");
    apply_threads(ctx);
    fdx::run_preprocess(ctx->cfg, arg(scores_path), arg(frames_path), arg(split_path),
                        arg(base_out));
  });
}

fdx_status fdx_featurize(fdx_context* ctx, const char* base_path,
                         const char* features_out) {
  return guarded(ctx, [&] {
    require(base_path != nullptr && *base_path != '\0', "featurize: base path is required");
    require(features_out != nullptr && *features_out != '\0',
            "featurize: output path is required");
    apply_threads(ctx);
    fdx::run_featurize(ctx->cfg, arg(base_path), arg(features_out));
  });
}

fdx_status fdx_train(fdx_context* ctx, const char* features_path,
                     const char* model_name, const char* model_out) {
  return guarded(ctx, [&] {
    require(features_path != nullptr && *features_path != '\0',
            "train: features path is required");
    require(model_name != nullptr && *model_name != '\0', "train: model name is required");
    require(model_out != nullptr && *model_out != '\0', "train: output path is required");
    apply_threads(ctx);
    fdx::run_train(ctx->cfg, arg(features_path), arg(model_name), arg(model_out));
  });
}

fdx_status fdx_cross_validate(fdx_context* ctx, const char* features_path,
                              const char* scores_path, const char* frames_path,
                              const char* report_json_out, const char* report_md_out) {
  return guarded(ctx, [&] {
    require(report_json_out != nullptr && *report_json_out != '\0',
            "cv: report output path is required");
    apply_threads(ctx);
    fdx::run_cv(ctx->cfg, arg(features_path), arg(scores_path), arg(frames_path),
                arg(report_json_out), arg(report_md_out));
  });
}

fdx_status fdx_evaluate(fdx_context* ctx, const char* train_path, const char* test_path,
                        const char* scores_path, const char* frames_path,
                        const char* split_path, const char* model_name,
                        const char* report_json_out, const char* report_md_out) {
  return guarded(ctx, [&] {
    require(report_json_out != nullptr && *report_json_out != '\0',
            "evaluate: report output path is required");
    apply_threads(ctx);
    fdx::run_evaluate(ctx->cfg, arg(train_path), arg(test_path), arg(scores_path),
                      arg(frames_path), arg(split_path), arg(model_name),
                      arg(report_json_out), arg(report_md_out));
  });
}

fdx_status fdx_report(fdx_context* ctx, const char* report_json_path,
                      const char* markdown_out) {
  return guarded(ctx, [&] {
    require(report_json_path != nullptr && *report_json_path != '\0',
            "report: input path is required");
    require(markdown_out != nullptr && *markdown_out != '\0',
            "report: output path is required");
    fdx::run_report(arg(report_json_path), arg(markdown_out));
  });
}

fdx_status fdx_run(fdx_context* ctx, const char* scenario_path, int has_seed_override,
                   uint64_t seed_override, const char* out_dir) {
  return guarded(ctx, [&] {
    require(scenario_path != nullptr && *scenario_path != '\0',
            "run: scenario path is required");
    require(out_dir != nullptr && *out_dir != '\0', "run: output directory is required");
    apply_threads(ctx);
    std::optional<uint64_t> seed;
    if (has_seed_override != 0) seed = seed_override;
    fdx::run_end_to_end(ctx->cfg, arg(scenario_path), seed, arg(out_dir));
  });
}

fdx_status fdx_mann_kendall(const double* values, size_t n, double* s, double* var_s,
                            double* z, double* p_pos) {
  if (values == nullptr && n > 0) return FDX_ERR_VALIDATION;
  try {
    fdx::MannKendallResult r = fdx::mann_kendall(std::span<const double>(values, n));
    if (s != nullptr) *s = static_cast<double>(r.s);
    if (var_s != nullptr) *var_s = r.var_s;
    if (z != nullptr) *z = r.z;
    if (p_pos != nullptr) *p_pos = r.p_pos;
    return FDX_OK;
  } catch (const fdx::ValidationError&) {
    return FDX_ERR_VALIDATION;
  } catch (...) {
    return FDX_ERR_RUNTIME;
  }
}

fdx_status fdx_f_beta(double precision, double recall, double beta, double* out) {
  if (out == nullptr) return FDX_ERR_VALIDATION;
  try {
    *out = fdx::f_beta(precision, recall, beta);
    return FDX_OK;
  } catch (const fdx::ValidationError&) {
    return FDX_ERR_VALIDATION;
  } catch (...) {
    return FDX_ERR_RUNTIME;
  }
}

}  // extern "C"
