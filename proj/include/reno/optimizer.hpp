#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "reno/criteria.hpp"
#include "reno/generator.hpp"
#include "reno/tensor.hpp"

namespace reno {

struct OptimizerConfig {
  int steps = 50;                // m; the loop evaluates t = 0..m inclusive
  double learning_rate = 5.0;    // 10.0 recommended for large-image runs
  double momentum = 0.9;
  double clip_norm = 0.1;
  double lambda_reg = 0.01;      // mirrors CriterionSpec.lambda_reg, which is
                                 // authoritative when a criterion is given
  std::uint64_t seed = 0;
  bool nesterov = false;         // lookahead-gradient variant, non-default
};

// d >= 2; deterministic in seed (Marsaglia polar over mt19937_64, see rng).
NoiseVector sample_standard_normal(std::size_t d, std::uint64_t seed);

// Norm-clips g to max_norm: unchanged when ||g|| <= max_norm, rescaled to
// max_norm otherwise. Zero stays zero; non-finite entries raise DomainError.
std::vector<double> grad_norm_clip(std::vector<double> g, double max_norm);

double l2_norm(const std::vector<double>& v);

// One evaluation of the criterion at a noise point: forward value, logging
// quantities and the gradient of the full objective w.r.t. the noise.
struct ObjectiveEval {
  ad::Tensor image;
  double objective = 0.0;
  double reward_total = 0.0;
  std::vector<double> per_term;
  double k_eps = 0.0;
  std::vector<double> grad;
};

// The optimizer drives any objective with this interface; the standard one
// wraps a generator, prompt and criterion. A fresh tape is built per call.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual ObjectiveEval evaluate(const std::vector<double>& eps) const = 0;
  virtual std::vector<std::string> term_names() const { return {}; }
  // Best-iterate selection uses the reward-based score R_t; reward-free
  // criteria (no positively weighted term) fall back to the full objective.
  virtual bool select_on_objective() const { return false; }
};

class CriterionObjective : public Objective {
 public:
  // The generator, prompt and criterion must outlive this object.
  CriterionObjective(const GeneratorSpec& g, const PromptEmbedding& p,
                     const CriterionSpec& spec);

  ObjectiveEval evaluate(const std::vector<double>& eps) const override;
  std::vector<std::string> term_names() const override;
  bool select_on_objective() const override { return select_on_objective_; }

 private:
  const GeneratorSpec* generator_;
  const PromptEmbedding* prompt_;
  const CriterionSpec* criterion_;
  bool select_on_objective_;
};

struct BestState {
  ad::Tensor image;
  double reward = -std::numeric_limits<double>::infinity();
  int iteration = -1;
  NoiseVector eps;
  bool valid = false;
};

struct OptimizerState {
  NoiseVector eps;               // eps_t
  std::vector<double> velocity;  // v_{t-1}, initialized to zeros
  int t = 0;
  BestState best;
};

OptimizerState init_optimizer_state(std::size_t noise_dim, const OptimizerConfig& config);

struct IterationRow {
  int t = 0;
  double reward_total = 0.0;
  std::vector<double> per_term;
  double k_eps = 0.0;
  double grad_pre_norm = 0.0;
  double grad_post_norm = 0.0;
  double eps_norm = 0.0;
  bool is_new_best = false;
};

struct RunRecord {
  std::vector<std::string> term_names;
  std::vector<IterationRow> rows;  // exactly steps + 1 rows, t = 0..m
  BestState best;
  double wall_time_seconds = 0.0;
  OptimizerConfig config;
  std::size_t noise_dim = 0;
};

// One iteration of the ascent loop, in order: generate, score, gradient of
// lambda_reg*K + R, norm clip, velocity update, noise update, best tracking
// (strict improvement, pre-update noise). Returns the logged row.
IterationRow reno_step(OptimizerState& state, const OptimizerConfig& config,
                       const Objective& objective);

RunRecord reno_run(const Objective& objective, std::size_t noise_dim,
                   const OptimizerConfig& config);
RunRecord reno_run(const GeneratorSpec& g, const PromptEmbedding& p, const CriterionSpec& spec,
                   const OptimizerConfig& config);

}  // namespace reno
