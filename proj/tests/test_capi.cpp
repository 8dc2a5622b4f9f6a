#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <reno/reno.h>

#include "support.hpp"

using testsupport::TempDir;

namespace {

const char* kConfigText =
    "[generator]\n"
    "kind = colorfield\n"
    "noise_dim = 16\n"
    "image_height = 6\n"
    "image_width = 6\n"
    "[optimizer]\n"
    "steps = 6\n"
    "seeds = 2\n";

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(reno_status_name(RENO_OK)) == "ok");
  CHECK(std::string(reno_status_name(RENO_STATUS_CONFIG)) == "config_error");
  CHECK(std::string(reno_status_name(RENO_STATUS_NUMERIC)) == "numeric_error");
  CHECK(reno_version() != nullptr);
}

TEST_CASE("generator lifecycle through the C surface") {
  reno_generator* g = nullptr;
  REQUIRE(reno_generator_create("mlp", 16, 6, 6, 7, &g) == RENO_OK);
  REQUIRE(g != nullptr);

  TempDir dir("capi_gen");
  std::string path = dir.file("weights.rnog");
  CHECK(reno_generator_save(g, path.c_str()) == RENO_OK);

  reno_generator* loaded = nullptr;
  CHECK(reno_generator_load(path.c_str(), &loaded) == RENO_OK);
  reno_generator_free(loaded);
  reno_generator_free(g);

  reno_generator* bad = nullptr;
  CHECK(reno_generator_create("diffusion", 16, 6, 6, 7, &bad) ==
        RENO_STATUS_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(reno_last_error()).find("diffusion") != std::string::npos);
  CHECK(reno_generator_create(nullptr, 16, 6, 6, 7, &bad) == RENO_STATUS_INVALID_ARGUMENT);
  CHECK(reno_generator_load(dir.file("nope.rnog").c_str(), &bad) == RENO_STATUS_IO);
}

TEST_CASE("an optimization run through the C surface") {
  reno_generator* g = nullptr;
  REQUIRE(reno_generator_create("mlp", 16, 6, 6, 3, &g) == RENO_OK);
  reno_criterion* c = nullptr;
  REQUIRE(reno_criterion_create_default(0.01, &c) == RENO_OK);

  reno_opt_config config;
  reno_opt_config_defaults(&config);
  CHECK(config.steps == 50);
  CHECK(config.learning_rate == 5.0);
  CHECK(config.momentum == 0.9);
  CHECK(config.clip_norm == 0.1);
  config.steps = 8;
  config.seed = 5;

  reno_run_result* result = nullptr;
  REQUIRE(reno_optimize(g, c, "a capi test prompt", &config, &result) == RENO_OK);

  size_t rows = 0;
  CHECK(reno_result_row_count(result, &rows) == RENO_OK);
  CHECK(rows == 9);

  double best = 0.0;
  REQUIRE(reno_result_best_reward(result, &best) == RENO_OK);
  double max_r = -1e300;
  for (size_t t = 0; t < rows; ++t) {
    double r = 0.0;
    REQUIRE(reno_result_reward_at(result, t, &r) == RENO_OK);
    if (r > max_r) max_r = r;
  }
  CHECK(best == max_r);

  int32_t best_iter = -1;
  CHECK(reno_result_best_iteration(result, &best_iter) == RENO_OK);
  CHECK(best_iter >= 0);
  CHECK(best_iter < static_cast<int32_t>(rows));

  const double* data = nullptr;
  int32_t h = 0, w = 0, ch = 0;
  REQUIRE(reno_result_image(result, &data, &h, &w, &ch) == RENO_OK);
  CHECK(h == 6);
  CHECK(w == 6);
  CHECK(ch == 3);
  for (int i = 0; i < h * w * ch; ++i) {
    CHECK(data[i] >= 0.0);
    CHECK(data[i] <= 1.0);
  }

  TempDir dir("capi_run");
  CHECK(reno_result_write_ppm(result, dir.file("best.ppm").c_str()) == RENO_OK);
  CHECK(std::filesystem::file_size(dir.file("best.ppm")) > 0);

  double out_of_range = 0.0;
  CHECK(reno_result_reward_at(result, rows, &out_of_range) == RENO_STATUS_INVALID_ARGUMENT);

  reno_result_free(result);
  reno_criterion_free(c);
  reno_generator_free(g);
}

TEST_CASE("custom criterion assembly") {
  reno_criterion* c = nullptr;
  REQUIRE(reno_criterion_create(0.0, &c) == RENO_OK);
  CHECK(reno_criterion_add_term(c, "proto_align", -2.0, 2.0, 1.0, 11) == RENO_OK);
  CHECK(reno_criterion_add_color_term(c, 'r', 1.0, 6, 6) == RENO_OK);
  CHECK(reno_criterion_add_term(c, "unknown_kind", 0.0, 1.0, 1.0, 0) ==
        RENO_STATUS_INVALID_ARGUMENT);
  CHECK(reno_criterion_add_term(c, "proto_align", 2.0, -2.0, 1.0, 0) ==
        RENO_STATUS_INVALID_ARGUMENT);

  reno_generator* g = nullptr;
  REQUIRE(reno_generator_create("colorfield", 12, 6, 6, 1, &g) == RENO_OK);
  reno_opt_config config;
  reno_opt_config_defaults(&config);
  config.steps = 4;
  reno_run_result* result = nullptr;
  CHECK(reno_optimize(g, c, "custom criterion", &config, &result) == RENO_OK);
  reno_result_free(result);
  reno_criterion_free(c);
  reno_generator_free(g);
}

TEST_CASE("experiments from config files") {
  TempDir dir("capi_exp");
  std::string cfg_path = dir.file("exp.cfg");
  testsupport::spit(cfg_path, kConfigText);

  reno_experiment* exp = nullptr;
  REQUIRE(reno_experiment_load(cfg_path.c_str(), nullptr, 0, &exp) == RENO_OK);

  std::string out_dir = dir.file("out");
  CHECK(reno_experiment_run(exp, out_dir.c_str(), -1) == RENO_OK);
  CHECK(std::filesystem::exists(out_dir + "/best.ppm"));
  CHECK(std::filesystem::exists(out_dir + "/trajectory.csv"));
  CHECK(std::filesystem::exists(out_dir + "/summary.json"));

  std::string loo_dir = dir.file("loo");
  CHECK(reno_experiment_loo(exp, "proto_align", 2, 2, loo_dir.c_str()) == RENO_OK);
  CHECK(std::filesystem::exists(loo_dir + "/loo.csv"));
  CHECK(std::filesystem::exists(loo_dir + "/loo_summary.json"));

  CHECK(reno_experiment_loo(exp, "missing_term", 2, 1, loo_dir.c_str()) ==
        RENO_STATUS_INVALID_ARGUMENT);

  std::string ablate_dir = dir.file("ablate");
  CHECK(reno_experiment_ablate(exp, 1, 2, ablate_dir.c_str()) == RENO_OK);
  CHECK(std::filesystem::exists(ablate_dir + "/ablation.csv"));

  std::string sweep_dir = dir.file("sweep");
  CHECK(reno_experiment_sweep(exp, sweep_dir.c_str(), -1, 2) == RENO_OK);
  CHECK(std::filesystem::exists(sweep_dir + "/sweep_summary.json"));
  reno_experiment_free(exp);

  // overrides reach the engine
  const char* overrides[] = {"optimizer.steps=2"};
  REQUIRE(reno_experiment_load(cfg_path.c_str(), overrides, 1, &exp) == RENO_OK);
  std::string out2 = dir.file("out2");
  CHECK(reno_experiment_run(exp, out2.c_str(), -1) == RENO_OK);
  std::string csv = testsupport::slurp(out2 + "/trajectory.csv");
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = csv.find("\r\n", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == 1 + 3);
  reno_experiment_free(exp);

  // schema violations map to the config status
  testsupport::spit(cfg_path, "[generator]\nkind = warp\n");
  reno_experiment* bad = nullptr;
  CHECK(reno_experiment_load(cfg_path.c_str(), nullptr, 0, &bad) == RENO_STATUS_CONFIG);
  CHECK(std::string(reno_last_error()).find("generator.kind") != std::string::npos);
}
