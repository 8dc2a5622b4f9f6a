#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reno/criteria.hpp"
#include "reno/generator.hpp"
#include "reno/optimizer.hpp"

namespace reno {

struct TermConfig {
  std::string name;
  RewardKind kind = RewardKind::kProtoAlign;
  Channel channel = Channel::kR;  // color terms
  double weight = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t seed = 0;
};

// Parsed and validated experiment description. The config file is a flat
// sectioned key-value format ([generator]/[prompt]/[criterion]/[optimizer]/
// [output]); unknown sections or keys are hard errors. See the README for the
// full schema. generator.kind is the only required key.
struct ExperimentConfig {
  GeneratorKind generator_kind = GeneratorKind::kMlp;
  std::size_t noise_dim = 64;
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::uint64_t weight_seed = 1;

  std::string prompt_text;

  std::vector<TermConfig> terms;
  double lambda_reg = 0.01;

  int steps = 50;
  std::optional<double> learning_rate;  // unset: 5.0, or 10.0 for large images
  double momentum = 0.9;
  double clip_norm = 0.1;
  std::vector<std::uint64_t> seeds = {1};
  bool nesterov = false;

  std::string output_directory = "out";
  int emit_every = 0;
  std::vector<std::string> formats = {"ppm", "csv", "json"};

  double resolved_learning_rate() const;
  GeneratorSpec build_generator() const;
  PromptEmbedding build_prompt() const;
  CriterionSpec build_criterion() const;
  // Criterion with weights zeroed where mask is false (term order preserved).
  CriterionSpec build_masked_criterion(const std::vector<bool>& active) const;
  OptimizerConfig optimizer_config(std::uint64_t seed) const;
};

// Both throw ConfigError carrying the offending field path.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

}  // namespace reno
