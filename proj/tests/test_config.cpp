#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "reno/config.hpp"
#include "reno/errors.hpp"
#include "support.hpp"

using namespace reno;

namespace {

const char* kMinimal = "[generator]\nkind = mlp\n";

const char* kFull = R"cfg(
# full experiment description
[generator]
kind = colorfield
noise_dim = 48
image_height = 12
image_width = 16
weight_seed = 21

[prompt]
text = a tiled mosaic of teal and amber

[criterion]
terms = proto_align, edge_smooth, color_r
lambda_reg = 0.02
term.proto_align.weight = 2.0
term.proto_align.range = -1, 3
term.proto_align.seed = 77
term.color_r.weight = 0.5

[optimizer]
steps = 12
learning_rate = 4.5
momentum = 0.8
clip_norm = 0.2
seeds = 3, 5, 8
nesterov = true

[output]
directory = results
emit_every = 4
formats = ppm, csv
)cfg";

ConfigError capture(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError");
  return ConfigError("", "");
}

}  // namespace

TEST_CASE("minimal config uses the documented defaults") {
  ExperimentConfig cfg = parse_config_text(kMinimal);
  CHECK(cfg.generator_kind == GeneratorKind::kMlp);
  CHECK(cfg.noise_dim == 64);
  CHECK(cfg.image_height == 32);
  CHECK(cfg.image_width == 32);
  CHECK(cfg.weight_seed == 1);
  CHECK(cfg.prompt_text.empty());
  REQUIRE(cfg.terms.size() == 4);
  CHECK(cfg.terms[0].name == "proto_align");
  CHECK(cfg.terms[1].name == "brightness_taste");
  CHECK(cfg.terms[2].name == "edge_smooth");
  CHECK(cfg.terms[3].name == "prompt_match");
  CHECK(cfg.lambda_reg == 0.01);
  CHECK(cfg.steps == 50);
  CHECK(cfg.resolved_learning_rate() == 5.0);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.clip_norm == 0.1);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK_FALSE(cfg.nesterov);
  CHECK(cfg.output_directory == "out");
  CHECK(cfg.emit_every == 0);
}

TEST_CASE("the large-image default learning rate is 10") {
  ExperimentConfig small = parse_config_text(kMinimal);
  CHECK(small.resolved_learning_rate() == 5.0);

  ExperimentConfig big = parse_config_text(
      "[generator]\nkind = mlp\nimage_height = 64\nimage_width = 64\n");
  CHECK(big.resolved_learning_rate() == 10.0);

  ExperimentConfig pinned = parse_config_text(
      "[generator]\nkind = mlp\nimage_height = 64\n[optimizer]\nlearning_rate = 5\n");
  CHECK(pinned.resolved_learning_rate() == 5.0);
}

TEST_CASE("a full config parses field by field") {
  ExperimentConfig cfg = parse_config_text(kFull);
  CHECK(cfg.generator_kind == GeneratorKind::kColorField);
  CHECK(cfg.noise_dim == 48);
  CHECK(cfg.image_height == 12);
  CHECK(cfg.image_width == 16);
  CHECK(cfg.weight_seed == 21);
  CHECK(cfg.prompt_text == "a tiled mosaic of teal and amber");

  REQUIRE(cfg.terms.size() == 3);
  CHECK(cfg.terms[0].name == "proto_align");
  CHECK(cfg.terms[0].weight == 2.0);
  CHECK(cfg.terms[0].lo == -1.0);
  CHECK(cfg.terms[0].hi == 3.0);
  CHECK(cfg.terms[0].seed == 77);
  CHECK(cfg.terms[1].name == "edge_smooth");
  CHECK(cfg.terms[1].weight == 0.05);
  CHECK(cfg.terms[2].name == "color_r");
  CHECK(cfg.terms[2].kind == RewardKind::kColorChannel);
  CHECK(cfg.terms[2].weight == 0.5);
  CHECK(cfg.terms[2].lo == -2.0 * 12 * 16);
  CHECK(cfg.terms[2].hi == 12 * 16);

  CHECK(cfg.lambda_reg == 0.02);
  CHECK(cfg.steps == 12);
  CHECK(cfg.resolved_learning_rate() == 4.5);
  CHECK(cfg.momentum == 0.8);
  CHECK(cfg.clip_norm == 0.2);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(cfg.nesterov);
  CHECK(cfg.output_directory == "results");
  CHECK(cfg.emit_every == 4);
  CHECK(cfg.formats == std::vector<std::string>{"ppm", "csv"});
}

TEST_CASE("missing generator.kind names the field") {
  ConfigError e = capture("[optimizer]\nsteps = 5\n");
  CHECK(e.field() == "generator.kind");
}

TEST_CASE("unknown sections and keys are hard errors") {
  CHECK(capture("[generators]\nkind = mlp\n").field() == "generators");
  CHECK(capture("[generator]\nkind = mlp\nnoise = 3\n").field() == "generator.noise");
  CHECK(capture("[generator]\nkind = mlp\n[optimizer]\nlr = 2\n").field() == "optimizer.lr");
  CHECK(capture("[generator]\nkind = mlp\n[criterion]\nterm.x = 1\n").field() ==
        "criterion.term.x");
}

TEST_CASE("value validation errors carry paths") {
  CHECK(capture("[generator]\nkind = vae\n").field() == "generator.kind");
  CHECK(capture("[generator]\nkind = mlp\nnoise_dim = 1\n").field() == "generator.noise_dim");
  CHECK(capture("[generator]\nkind = mlp\n[optimizer]\nmomentum = 1.0\n").field() ==
        "optimizer.momentum");
  CHECK(capture("[generator]\nkind = mlp\n[optimizer]\nsteps = -2\n").field() ==
        "optimizer.steps");
  CHECK(capture("[generator]\nkind = mlp\n[criterion]\nterms = proto_align, proto_align\n")
            .field() == "criterion.terms");
  CHECK(capture("[generator]\nkind = mlp\n[criterion]\nterms = fancy\n").field() ==
        "criterion.terms");
  CHECK(capture("[generator]\nkind = mlp\n[criterion]\nterm.prompt_match.range = 2, 1\n")
            .field() == "criterion.term.prompt_match.range");
  CHECK(capture("[generator]\nkind = mlp\n[criterion]\n"
                "term.edge_smooth.weight = 1\nterms = proto_align\n")
            .field() == "criterion.term.edge_smooth.weight");
  CHECK(capture("[generator]\nkind = mlp\n[output]\nformats = ppm, bmp\n").field() ==
        "output.formats");
  CHECK(capture("[generator]\nkind = mlp\nkind = linear\n").field() == "generator.kind");
  CHECK(capture("[generator]\nkind = mlp\n[optimizer]\nseeds = 1\nseed = 2\n").field() ==
        "optimizer.seed");
}

TEST_CASE("overrides apply on top of the file and are validated") {
  ExperimentConfig cfg = parse_config_text(kMinimal, {"optimizer.seed=42"});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{42});

  cfg = parse_config_text(kMinimal, {"optimizer.seeds=2, 4", "generator.noise_dim=16"});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{2, 4});
  CHECK(cfg.noise_dim == 16);

  CHECK_THROWS_AS(parse_config_text(kMinimal, {"optimizer.warp=9"}), ConfigError);
  CHECK_THROWS_AS(parse_config_text(kMinimal, {"no_equals"}), ConfigError);
}

TEST_CASE("load_config reads files and reports missing ones") {
  testsupport::TempDir dir("cfg");
  std::string path = dir.file("exp.cfg");
  testsupport::spit(path, kMinimal);
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.generator_kind == GeneratorKind::kMlp);
  CHECK_THROWS_AS(load_config(dir.file("missing.cfg")), ConfigError);
}

TEST_CASE("built criterion honors masks") {
  ExperimentConfig cfg = parse_config_text(kMinimal);
  CriterionSpec full = cfg.build_criterion();
  REQUIRE(full.terms.size() == 4);
  CHECK(full.terms[1].weight == 5.0);

  CriterionSpec masked = cfg.build_masked_criterion({true, false, true, false});
  CHECK(masked.terms.size() == 4);
  CHECK(masked.terms[0].weight == 1.0);
  CHECK(masked.terms[1].weight == 0.0);
  CHECK(masked.terms[2].weight == 0.05);
  CHECK(masked.terms[3].weight == 0.0);
}
