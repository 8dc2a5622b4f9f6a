#include "reno/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "reno/errors.hpp"
#include "reno/rng.hpp"

namespace reno {

NoiseVector sample_standard_normal(std::size_t d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_standard_normal: d must be >= 2");
  return NoiseVector{rng::normal_vector(d, seed), seed};
}

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<double> grad_norm_clip(std::vector<double> g, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("grad_norm_clip: max_norm must be > 0");
  for (double x : g) {
    if (!std::isfinite(x)) throw DomainError("grad_norm_clip: non-finite gradient entry");
  }
  double norm = l2_norm(g);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (double& x : g) x *= scale;
  }
  return g;
}

CriterionObjective::CriterionObjective(const GeneratorSpec& g, const PromptEmbedding& p,
                                       const CriterionSpec& spec)
    : generator_(&g), prompt_(&p), criterion_(&spec) {
  select_on_objective_ =
      std::none_of(spec.terms.begin(), spec.terms.end(),
                   [](const RewardTerm& t) { return t.weight > 0.0; });
}

ObjectiveEval CriterionObjective::evaluate(const std::vector<double>& eps) const {
  ad::Tape tape;
  ad::Tensor eps_leaf = tape.leaf(ad::Tensor::vector(eps));
  ObjectiveParts parts = full_objective(tape, *criterion_, *generator_, eps_leaf, *prompt_);
  ad::Gradients grads = tape.backward(parts.objective);

  ObjectiveEval eval;
  eval.image = parts.image;
  eval.image.node = ad::Tensor::kNoNode;  // the tape dies with this call
  eval.objective = parts.objective.scalar_value();
  eval.reward_total = parts.reward_total;
  eval.per_term = parts.per_term;
  eval.k_eps = parts.k_eps;
  eval.grad = grads.wrt(eps_leaf).data;
  return eval;
}

std::vector<std::string> CriterionObjective::term_names() const {
  std::vector<std::string> names;
  names.reserve(criterion_->terms.size());
  for (const RewardTerm& t : criterion_->terms) names.push_back(t.name);
  return names;
}

OptimizerState init_optimizer_state(std::size_t noise_dim, const OptimizerConfig& config) {
  OptimizerState state;
  state.eps = sample_standard_normal(noise_dim, config.seed);
  state.velocity.assign(noise_dim, 0.0);
  return state;
}

namespace {

void validate_config(const OptimizerConfig& config) {
  if (config.steps < 0) throw std::invalid_argument("optimizer: steps must be >= 0");
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("optimizer: learning_rate must be > 0");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw std::invalid_argument("optimizer: momentum must lie in [0, 1)");
  }
  if (!(config.clip_norm > 0.0)) throw std::invalid_argument("optimizer: clip_norm must be > 0");
  if (config.lambda_reg < 0.0) {
    throw std::invalid_argument("optimizer: lambda_reg must be >= 0");
  }
}

}  // namespace

IterationRow reno_step(OptimizerState& state, const OptimizerConfig& config,
                       const Objective& objective) {
  std::vector<double> eval_point = state.eps.values;
  if (config.nesterov) {
    for (std::size_t i = 0; i < eval_point.size(); ++i) {
      eval_point[i] += config.momentum * state.velocity[i];
    }
  }

  ObjectiveEval eval;
  try {
    eval = objective.evaluate(eval_point);
  } catch (const DomainError& e) {
    throw NumericError(state.t, {}, std::string("objective evaluation failed: ") + e.what());
  }
  if (!std::isfinite(eval.objective)) {
    throw NumericError(state.t, eval.per_term, "non-finite objective value");
  }
  for (double g : eval.grad) {
    if (!std::isfinite(g)) {
      throw NumericError(state.t, eval.per_term, "non-finite gradient entry");
    }
  }

  IterationRow row;
  row.t = state.t;
  row.reward_total = eval.reward_total;
  row.per_term = eval.per_term;
  row.k_eps = eval.k_eps;
  row.eps_norm = l2_norm(eval_point);
  row.grad_pre_norm = l2_norm(eval.grad);

  std::vector<double> clipped = grad_norm_clip(std::move(eval.grad), config.clip_norm);
  row.grad_post_norm = l2_norm(clipped);

  double selection = objective.select_on_objective() ? eval.objective : eval.reward_total;
  row.is_new_best = selection > state.best.reward;
  if (row.is_new_best) {
    state.best.image = eval.image;
    state.best.reward = selection;
    state.best.iteration = state.t;
    state.best.eps = NoiseVector{eval_point, state.eps.seed};
    state.best.valid = true;
  }

  for (std::size_t i = 0; i < state.velocity.size(); ++i) {
    state.velocity[i] = config.momentum * state.velocity[i] +
                        config.learning_rate * clipped[i];
    state.eps.values[i] += state.velocity[i];
  }
  state.t += 1;
  return row;
}

RunRecord reno_run(const Objective& objective, std::size_t noise_dim,
                   const OptimizerConfig& config) {
  validate_config(config);
  auto start = std::chrono::steady_clock::now();

  RunRecord record;
  record.config = config;
  record.noise_dim = noise_dim;
  record.term_names = objective.term_names();
  record.rows.reserve(static_cast<std::size_t>(config.steps) + 1);

  OptimizerState state = init_optimizer_state(noise_dim, config);
  for (int t = 0; t <= config.steps; ++t) {
    record.rows.push_back(reno_step(state, config, objective));
  }
  record.best = state.best;

  record.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

RunRecord reno_run(const GeneratorSpec& g, const PromptEmbedding& p, const CriterionSpec& spec,
                   const OptimizerConfig& config) {
  CriterionObjective objective(g, p, spec);
  return reno_run(objective, g.noise_dim, config);
}

}  // namespace reno
